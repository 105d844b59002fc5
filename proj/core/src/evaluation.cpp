#include "pdflood/evaluation.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"

namespace pdflood {

namespace {

using nlohmann::json;

struct Tally {
    double abs_err_sum = 0.0;
    long mae_cells = 0;
    long covered = 0;
    long tp = 0, fp = 0, fn = 0, tn = 0;
    long n_cells = 0;
};

EvalReport finalize(const Tally& tally, bool probabilistic, double threshold) {
    if (tally.n_cells == 0) {
        throw InputError("evaluate: no valid cells in common");
    }
    EvalReport report;
    report.threshold = threshold;
    report.n_cells = tally.n_cells;
    report.mae = tally.mae_cells > 0 ? tally.abs_err_sum / tally.mae_cells : 0.0;
    if (probabilistic) {
        report.coverage95 = static_cast<double>(tally.covered) / tally.n_cells;
    }
    const long wet = tally.tp + tally.fn;
    const long dry = tally.tn + tally.fp;
    report.accuracy = static_cast<double>(tally.tp + tally.tn) / tally.n_cells;
    report.recall_flooded = wet > 0 ? static_cast<double>(tally.tp) / wet : 1.0;
    report.recall_dry = dry > 0 ? static_cast<double>(tally.tn) / dry : 1.0;
    return report;
}

template <typename MeanAt, typename FlagAt, typename CoveredAt>
Tally tally_cells(const Grid& reference, const Grid& truth, MaeDomain domain,
                  double threshold, MeanAt mean_at, FlagAt flag_at, CoveredAt covered_at) {
    if (!reference.same_layout(truth)) {
        throw AlignmentError("evaluate: product and truth grids do not align");
    }
    Tally tally;
    for (std::size_t c = 0; c < truth.size(); ++c) {
        if (truth.is_nodata_at(c) || reference.is_nodata_at(c)) continue;
        ++tally.n_cells;
        const double predicted = mean_at(c);
        const double actual = truth[c];
        if (domain == MaeDomain::kAllCells || predicted > 0.0 || actual > 0.0) {
            tally.abs_err_sum += std::fabs(predicted - actual);
            ++tally.mae_cells;
        }
        const bool truth_wet = actual > threshold;
        const bool flagged = flag_at(c);
        if (truth_wet && flagged) ++tally.tp;
        if (truth_wet && !flagged) ++tally.fn;
        if (!truth_wet && flagged) ++tally.fp;
        if (!truth_wet && !flagged) ++tally.tn;
        if (covered_at(c)) ++tally.covered;
    }
    return tally;
}

} // namespace

EvalReport evaluate(const DownscaleResult& result, const Grid& truth, double threshold,
                    MaeDomain domain) {
    const Tally tally = tally_cells(
        result.mean, truth, domain, threshold,
        [&](std::size_t c) { return result.mean[c]; },
        [&](std::size_t c) { return result.prob_exceed[c] > 0.5; },
        [&](std::size_t c) {
            return truth[c] >= result.lower95[c] && truth[c] <= result.upper95[c];
        });
    return finalize(tally, /*probabilistic=*/true, threshold);
}

EvalReport evaluate(const Grid& deterministic, const Grid& truth, double threshold,
                    MaeDomain domain) {
    const Tally tally = tally_cells(
        deterministic, truth, domain, threshold,
        [&](std::size_t c) { return deterministic[c]; },
        [&](std::size_t c) { return deterministic[c] > threshold; },
        [](std::size_t) { return false; });
    return finalize(tally, /*probabilistic=*/false, threshold);
}

namespace {

json report_to_json(const EvalReport& report) {
    json j;
    j["mae"] = report.mae;
    j["coverage95"] = report.coverage95 ? json(*report.coverage95) : json(nullptr);
    j["accuracy"] = report.accuracy;
    j["recall_flooded"] = report.recall_flooded;
    j["recall_dry"] = report.recall_dry;
    j["n_cells"] = report.n_cells;
    j["threshold"] = report.threshold;
    return j;
}

} // namespace

std::string to_json(const EvalReport& report) { return report_to_json(report).dump(2); }

std::string compare_reports(std::span<const std::pair<std::string, EvalReport>> reports) {
    if (reports.size() < 2) {
        throw InputError("compare_reports: need at least 2 reports");
    }
    json out;
    for (const auto& [name, report] : reports) {
        out["reports"][name] = report_to_json(report);
    }

    const auto flag_best = [&](const std::string& metric, bool lower_is_better,
                               auto getter) {
        double best = lower_is_better ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity();
        bool any = false;
        for (const auto& [name, report] : reports) {
            const auto value = getter(report);
            if (!value) continue;
            any = true;
            best = lower_is_better ? std::min(best, *value) : std::max(best, *value);
        }
        if (!any) return;
        auto& winners = out["best"][metric] = json::array();
        for (const auto& [name, report] : reports) {
            const auto value = getter(report);
            if (value && *value == best) winners.push_back(name);
        }
    };

    using Opt = std::optional<double>;
    flag_best("mae", true, [](const EvalReport& r) { return Opt(r.mae); });
    flag_best("coverage95", false, [](const EvalReport& r) { return r.coverage95; });
    flag_best("accuracy", false, [](const EvalReport& r) { return Opt(r.accuracy); });
    flag_best("recall_flooded", false,
              [](const EvalReport& r) { return Opt(r.recall_flooded); });
    flag_best("recall_dry", false, [](const EvalReport& r) { return Opt(r.recall_dry); });
    return out.dump(2);
}

} // namespace pdflood
