#include "pdflood/downscale.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

namespace pdflood {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
    }
    return out;
}

double csv_double(const std::string& token, const std::filesystem::path& path, int line_no) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw InputError(path.string() + ":" + std::to_string(line_no) +
                         ": non-numeric CSV field '" + token + "'");
    }
    return v;
}

/// Runs fn(begin, end) over [0, n) split across `threads` workers.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
    if (threads <= 1 || n < 1024) {
        fn(0, n);
        return;
    }
    const auto workers = static_cast<std::size_t>(threads);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

Grid coarse_water_surface(const GridPair& pair, const Grid& coarse_depth) {
    if (!coarse_depth.same_layout(pair.coarse)) {
        throw AlignmentError("coarse depth grid does not match the pair's coarse grid");
    }
    Grid wse = pair.coarse;
    for (std::size_t c = 0; c < wse.size(); ++c) {
        if (wse.is_nodata_at(c) || coarse_depth.is_nodata_at(c)) {
            wse[c] = wse.nodata();
            continue;
        }
        wse[c] = pair.coarse[c] + coarse_depth[c];
    }
    return wse;
}

bool wet_parent(const GridPair& pair, const Grid& coarse_depth, double wet_threshold,
                int fi, int fj) {
    const CellIndex p = pair.coarse_parent(fi, fj);
    return !coarse_depth.is_nodata(p.row, p.col) &&
           coarse_depth(p.row, p.col) > wet_threshold;
}

} // namespace

std::vector<HighWaterMark> read_hwm_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open high-water-mark file: " + path.string());
    }
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) {
        throw InputError(path.string() + ": empty high-water-mark file");
    }
    ++line_no;
    const auto header = split_csv(line);
    if (header.size() != 3 || header[0] != "x" || header[1] != "y" ||
        header[2] != "depth_m") {
        throw InputError(path.string() + ": expected header 'x,y,depth_m'");
    }
    std::vector<HighWaterMark> marks;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 3) {
            throw InputError(path.string() + ":" + std::to_string(line_no) +
                             ": expected 3 CSV fields");
        }
        HighWaterMark m{csv_double(fields[0], path, line_no),
                        csv_double(fields[1], path, line_no),
                        csv_double(fields[2], path, line_no)};
        if (!(m.depth >= 0.0) || !std::isfinite(m.depth)) {
            throw InputError(path.string() + ":" + std::to_string(line_no) +
                             ": depth must be finite and >= 0");
        }
        marks.push_back(m);
    }
    return marks;
}

Grid downscale_deterministic(const GridPair& pair, const Grid& coarse_depth,
                             NodataPolicy policy) {
    const Grid wse = coarse_water_surface(pair, coarse_depth);
    Grid result = pair.fine;
    for (int i = 0; i < pair.fine.nrows(); ++i) {
        for (int j = 0; j < pair.fine.ncols(); ++j) {
            if (pair.fine.is_nodata(i, j)) {
                result(i, j) = result.nodata();
                continue;
            }
            const double wse_here =
                bilinear(wse, pair.fine.center_x(j), pair.fine.center_y(i), policy);
            result(i, j) = std::max(wse_here - pair.fine(i, j), 0.0);
        }
    }
    return result;
}

double estimate_sigma(const Grid& fine_y_d, std::span<const HighWaterMark> marks) {
    if (marks.size() < 3) {
        throw InputError("estimate_sigma: need at least 3 high-water marks, got " +
                         std::to_string(marks.size()));
    }
    double sum_sq = 0.0;
    bool any_nonzero = false;
    for (const auto& mark : marks) {
        const CellIndex cell = cell_of(fine_y_d, mark.x, mark.y);
        if (fine_y_d.is_nodata(cell.row, cell.col)) {
            throw InputError("estimate_sigma: mark falls on a nodata cell");
        }
        const double residual = mark.depth - fine_y_d(cell.row, cell.col);
        if (residual != 0.0) any_nonzero = true;
        sum_sq += residual * residual;
    }
    if (!any_nonzero) {
        throw NumericError(
            "estimate_sigma: all residuals are exactly zero; the t law degenerates. "
            "Enable the sigma floor to proceed.");
    }
    return std::sqrt(sum_sq / static_cast<double>(marks.size() - 1));
}

double downscale_dry_mean(const CostField& cost_field, const Grid& fine_y_d,
                          const Grid& fine_elev, CellIndex v) {
    if (!fine_y_d.same_layout(fine_elev) ||
        cost_field.accumulated.size() != fine_elev.size()) {
        throw AlignmentError("downscale_dry_mean: grids do not align");
    }
    if (!fine_elev.in_bounds(v.row, v.col)) {
        throw InputError("downscale_dry_mean: cell outside the grid");
    }
    const std::size_t cell = fine_elev.linear(v.row, v.col);
    if (!cost_field.reachable_at(cell)) return 0.0;
    const auto source = static_cast<std::size_t>(cost_field.source_at(cell));
    const double rise = fine_elev[cell] - fine_elev[source];
    return std::max(fine_y_d[source] - rise, 0.0);
}

DownscaleResult run_pdflood(const GridPair& pair, const Grid& coarse_depth,
                            std::span<const HighWaterMark> hwms,
                            const DownscaleConfig& config) {
    if (!(config.threshold > 0.0)) {
        throw InputError("run_pdflood: threshold must be > 0");
    }

    const auto sources = flood_sources(pair, coarse_depth, config.wet_threshold);
    if (sources.empty()) {
        throw InputError("run_pdflood: no wet coarse cells");
    }

    DownscaleResult result;
    const Grid fine_y_d =
        downscale_deterministic(pair, coarse_depth, config.bilinear_nodata);
    result.cost_field = cost_distance(pair.fine, sources);

    // sigma from the marks that fall inside wet coarse cells
    std::vector<HighWaterMark> usable;
    for (const auto& mark : hwms) {
        const CellIndex cell = cell_of(pair.fine, mark.x, mark.y);
        if (wet_parent(pair, coarse_depth, config.wet_threshold, cell.row, cell.col)) {
            usable.push_back(mark);
        } else {
            std::ostringstream msg;
            msg << "high-water mark at (" << mark.x << ", " << mark.y
                << ") lies in a dry coarse cell; excluded from sigma";
            result.warnings.push_back(msg.str());
        }
    }
    result.n_hwms_used = static_cast<int>(usable.size());

    double sigma = 0.0;
    int dof = 0;
    if (config.fixed_sigma) {
        sigma = *config.fixed_sigma;
        dof = config.fixed_dof.value_or(
            usable.size() >= 3 ? static_cast<int>(usable.size()) - 1 : 2);
        if (!(sigma > 0.0)) throw InputError("run_pdflood: fixed sigma must be > 0");
        if (dof < 2) throw InputError("run_pdflood: fixed dof must be >= 2");
    } else {
        if (config.sigma_floor_enabled) {
            try {
                sigma = estimate_sigma(fine_y_d, usable);
            } catch (const NumericError&) {
                sigma = 0.0; // all-zero residuals; the floor takes over
            }
            sigma = std::max(sigma, config.sigma_floor);
        } else {
            sigma = estimate_sigma(fine_y_d, usable);
        }
        dof = static_cast<int>(usable.size()) - 1;
    }
    result.sigma_hat = sigma;
    result.dof = dof;

    bool any_dry_coarse = false;
    for (std::size_t c = 0; c < coarse_depth.size() && !any_dry_coarse; ++c) {
        any_dry_coarse = !coarse_depth.is_nodata_at(c) &&
                         !(coarse_depth[c] > config.wet_threshold);
    }
    if (config.fixed_pi_curve) {
        result.pi_curve = *config.fixed_pi_curve;
    } else if (any_dry_coarse) {
        result.pi_curve =
            fit_pi(build_bins(coarse_depth, pair.coarse, config.bins_k, config.wet_threshold),
                   config.pi);
    }
    // with every coarse cell wet there are no mixture cells and the curve
    // stays unused

    const int nrows = pair.fine.nrows();
    const int ncols = pair.fine.ncols();
    const std::size_t n = pair.fine.size();
    result.mean = Grid(nrows, ncols, pair.fine.cellsize(), pair.fine.origin_x(),
                       pair.fine.origin_y(), 0.0, pair.fine.nodata());
    result.lower95 = result.mean;
    result.upper95 = result.mean;
    result.prob_exceed = result.mean;
    result.per_cell_law.assign(n, TPredictive{});

    parallel_for(n, config.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            const CellIndex v = pair.fine.cell_at(c);
            if (pair.fine.is_nodata_at(c)) {
                result.mean[c] = result.mean.nodata();
                result.lower95[c] = result.lower95.nodata();
                result.upper95[c] = result.upper95.nodata();
                result.prob_exceed[c] = result.prob_exceed.nodata();
                result.per_cell_law[c] = MixturePredictive{0.0, {0.0, sigma, dof}};
                continue;
            }
            if (wet_parent(pair, coarse_depth, config.wet_threshold, v.row, v.col)) {
                const TPredictive law{fine_y_d[c], sigma, dof};
                result.per_cell_law[c] = law;
                result.mean[c] = clamped_mean(law);
                result.lower95[c] = clamped_quantile(law, 0.025);
                result.upper95[c] = clamped_quantile(law, 0.975);
                result.prob_exceed[c] = exceed_prob(law, config.threshold);
            } else {
                const double y_a = downscale_dry_mean(result.cost_field, fine_y_d, pair.fine, v);
                const double pi = result.cost_field.reachable_at(c)
                                      ? pi_at(result.pi_curve, pair.fine[c])
                                      : 0.0;
                const MixturePredictive law{pi, {y_a, sigma, dof}};
                result.per_cell_law[c] = law;
                result.mean[c] = mixture_mean(law);
                result.lower95[c] = mixture_quantile(law, 0.025);
                result.upper95[c] = mixture_quantile(law, 0.975);
                result.prob_exceed[c] = mixture_exceed_prob(law, config.threshold);
            }
        }
    });
    return result;
}

Grid run_costgrow_baseline(const GridPair& pair, const Grid& coarse_depth,
                           const DownscaleConfig& config) {
    const auto sources = flood_sources(pair, coarse_depth, config.wet_threshold);
    if (sources.empty()) {
        throw InputError("run_costgrow_baseline: no wet coarse cells");
    }
    const Grid fine_y_d =
        downscale_deterministic(pair, coarse_depth, config.bilinear_nodata);
    const CostField field = cost_distance(pair.fine, sources);

    Grid out(pair.fine.nrows(), pair.fine.ncols(), pair.fine.cellsize(),
             pair.fine.origin_x(), pair.fine.origin_y(), 0.0, pair.fine.nodata());
    for (std::size_t c = 0; c < out.size(); ++c) {
        const CellIndex v = pair.fine.cell_at(c);
        if (pair.fine.is_nodata_at(c)) {
            out[c] = out.nodata();
            continue;
        }
        if (wet_parent(pair, coarse_depth, config.wet_threshold, v.row, v.col)) {
            out[c] = fine_y_d[c];
        } else {
            out[c] = downscale_dry_mean(field, fine_y_d, pair.fine, v);
        }
    }
    return out;
}

} // namespace pdflood
