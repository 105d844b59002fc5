// pdflood: batch CLI for the probabilistic flood downscaling toolkit.
//
// Subcommands: downscale, baseline, calibrate, synth, evaluate.
// Exit codes: 0 success, 2 input error, 3 numerical failure.
// Human-readable summaries go to stdout, machine outputs to files, and every
// failure prints a single-line JSON object {"code", "message"} on stderr.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdflood/downscale.hpp"
#include "pdflood/emulation.hpp"
#include "pdflood/evaluation.hpp"
#include "pdflood/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pdflood;

namespace {

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("config parse error in " + path + ": " + e.what());
    }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw InputError("config field '" + key + "' has the wrong type");
    }
}

std::string require_path(const json& j, const std::string& key,
                         const std::string& cli_value) {
    std::string value = cli_value.empty() ? get_or<std::string>(j, key, "") : cli_value;
    if (value.empty()) throw InputError("missing required input: " + key);
    if (!fs::exists(value)) throw InputError(key + " does not exist: " + value);
    return value;
}

DownscaleConfig downscale_config(const json& cfg) {
    DownscaleConfig config;
    config.threshold = get_or(cfg, "threshold", config.threshold);
    config.wet_threshold = get_or(cfg, "wet_threshold", config.wet_threshold);
    config.bins_k = get_or(cfg, "bins_k", config.bins_k);
    config.threads = get_or(cfg, "threads", config.threads);
    config.sigma_floor_enabled = get_or(cfg, "sigma_floor_enabled", config.sigma_floor_enabled);
    config.sigma_floor = get_or(cfg, "sigma_floor", config.sigma_floor);
    if (cfg.contains("gp")) {
        const json& gp = cfg.at("gp");
        config.pi.lengthscale = get_or(gp, "lengthscale", config.pi.lengthscale);
        config.pi.variance = get_or(gp, "variance", config.pi.variance);
        config.pi.nugget = get_or(gp, "nugget", config.pi.nugget);
        config.pi.refine_mle = get_or(gp, "refine_mle", config.pi.refine_mle);
    }
    if (get_or(cfg, "bilinear_renormalize_nodata", false)) {
        config.bilinear_nodata = NodataPolicy::kRenormalize;
    }
    return config;
}

struct LoadedInputs {
    GridPair pair;
    Grid coarse_depth;
};

LoadedInputs load_inputs(const json& cfg, const std::string& fine_dem,
                         const std::string& coarse_dem, const std::string& coarse_depth) {
    const Grid fine = read_ascii_grid(require_path(cfg, "fine_dem", fine_dem));
    const Grid coarse = read_ascii_grid(require_path(cfg, "coarse_dem", coarse_dem));
    const Grid depth = read_ascii_grid(require_path(cfg, "coarse_depth", coarse_depth));
    GridPair pair(fine, coarse);
    const int factor = get_or(cfg, "factor", pair.factor);
    if (factor != pair.factor) {
        throw AlignmentError("configured factor " + std::to_string(factor) +
                             " does not match the DEM ratio " + std::to_string(pair.factor));
    }
    if (!depth.same_layout(pair.coarse)) {
        throw AlignmentError("coarse depth grid does not align with the coarse DEM");
    }
    return {std::move(pair), depth};
}

fs::path prepare_output_dir(const json& cfg, const std::string& flag_value) {
    std::string dir = flag_value.empty() ? get_or<std::string>(cfg, "output_dir", "")
                                         : flag_value;
    if (dir.empty()) throw InputError("missing required output_dir");
    fs::create_directories(dir);
    return dir;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

int run_downscale(const json& cfg, const std::string& fine_dem,
                  const std::string& coarse_dem, const std::string& coarse_depth,
                  const std::string& hwm_csv, const std::string& out_dir) {
    const auto start = std::chrono::steady_clock::now();
    auto inputs = load_inputs(cfg, fine_dem, coarse_dem, coarse_depth);
    const auto hwms = read_hwm_csv(require_path(cfg, "hwm_csv", hwm_csv));
    const DownscaleConfig config = downscale_config(cfg);
    const fs::path dir = prepare_output_dir(cfg, out_dir);

    const DownscaleResult result =
        run_pdflood(inputs.pair, inputs.coarse_depth, hwms, config);

    write_ascii_grid(result.mean, dir / "mean.asc");
    write_ascii_grid(result.lower95, dir / "lower95.asc");
    write_ascii_grid(result.upper95, dir / "upper95.asc");
    write_ascii_grid(result.prob_exceed, dir / "prob_exceed.asc");

    json metrics;
    metrics["sigma_hat"] = result.sigma_hat;
    metrics["dof"] = result.dof;
    metrics["n_hwms_used"] = result.n_hwms_used;
    metrics["n_hwms_excluded"] = static_cast<int>(hwms.size()) - result.n_hwms_used;
    metrics["threshold"] = config.threshold;
    metrics["wet_threshold"] = config.wet_threshold;
    metrics["factor"] = inputs.pair.factor;
    metrics["pi_degenerate"] = result.pi_curve.degenerate();
    metrics["e_lo"] = result.pi_curve.e_lo();
    metrics["e_hi"] = result.pi_curve.e_hi();
    metrics["warnings"] = result.warnings;
    write_json_file(dir / "metrics.json", metrics);

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("downscale: %dx%d fine grid, sigma_hat=%.6f m, dof=%d, %d/%zu marks used\n",
                inputs.pair.fine.nrows(), inputs.pair.fine.ncols(), result.sigma_hat,
                result.dof, result.n_hwms_used, hwms.size());
    for (const auto& w : result.warnings) std::printf("warning: %s\n", w.c_str());
    std::printf("outputs in %s (%.2fs)\n", dir.string().c_str(), seconds);
    return 0;
}

int run_baseline(const json& cfg, const std::string& fine_dem,
                 const std::string& coarse_dem, const std::string& coarse_depth,
                 const std::string& out_dir) {
    auto inputs = load_inputs(cfg, fine_dem, coarse_dem, coarse_depth);
    const DownscaleConfig config = downscale_config(cfg);
    const fs::path dir = prepare_output_dir(cfg, out_dir);
    const Grid baseline = run_costgrow_baseline(inputs.pair, inputs.coarse_depth, config);
    write_ascii_grid(baseline, dir / "baseline.asc");
    std::printf("baseline: wrote %s\n", (dir / "baseline.asc").string().c_str());
    return 0;
}

int run_calibrate(const json& cfg, const std::string& design_csv,
                  const std::string& obs_csv, const std::string& out_path,
                  std::optional<std::uint64_t> seed_flag) {
    DesignSet design = read_design_csv(require_path(cfg, "design_csv", design_csv));
    read_obs_csv(require_path(cfg, "obs_csv", obs_csv), design);

    McmcConfig mcmc;
    if (cfg.contains("mcmc")) {
        const json& m = cfg.at("mcmc");
        mcmc.iterations = get_or(m, "iterations", mcmc.iterations);
        mcmc.burn_in = get_or(m, "burn_in", mcmc.burn_in);
        mcmc.target_accept = get_or(m, "target_accept", mcmc.target_accept);
        mcmc.use_emulator_variance =
            get_or(m, "use_emulator_variance", mcmc.use_emulator_variance);
    }
    if (seed_flag) {
        mcmc.seed = *seed_flag;
    } else if (cfg.contains("seed")) {
        mcmc.seed = cfg.at("seed").get<std::uint64_t>();
    } else {
        throw InputError("calibrate requires a seed (config \"seed\" or --seed)");
    }

    const CalibrationRun run = calibrate(design, mcmc);

    json posterior;
    posterior["theta_star"] = run.theta_star;
    posterior["credible_interval"] = {run.credible_interval[0], run.credible_interval[1]};
    posterior["acceptance_rate"] = run.acceptance_rate;
    posterior["sigma_eps"] = run.sigma_eps;
    posterior["seed"] = run.seed;
    posterior["n_samples"] = run.posterior_samples.size();
    posterior["delta_hat"] = run.delta_hat;

    const std::string out = out_path.empty()
                                ? get_or<std::string>(cfg, "output", "posterior.json")
                                : out_path;
    if (const fs::path parent = fs::path(out).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    write_json_file(out, posterior);
    std::printf("calibrate: theta_star=%.6f, 95%% CI [%.6f, %.6f], acceptance %.3f\n",
                run.theta_star, run.credible_interval[0], run.credible_interval[1],
                run.acceptance_rate);
    std::printf("posterior written to %s\n", out.c_str());
    return 0;
}

int run_synth(const json& cfg, const std::string& out_dir,
              std::optional<std::uint64_t> seed_flag) {
    ValleySpec spec;
    if (cfg.contains("valley")) {
        const json& v = cfg.at("valley");
        spec.nrows = get_or(v, "nrows", spec.nrows);
        spec.ncols = get_or(v, "ncols", spec.ncols);
        spec.cellsize = get_or(v, "cellsize", spec.cellsize);
        spec.channel_row = get_or(v, "channel_row", spec.nrows / 2);
        spec.cross_slope = get_or(v, "cross_slope", spec.cross_slope);
        spec.base_elev = get_or(v, "base_elev", spec.base_elev);
        spec.noise_amp = get_or(v, "noise_amp", spec.noise_amp);
        spec.seed = get_or(v, "seed", spec.seed);
    }
    const double water = get_or(cfg, "water_surface", kDefaultWaterSurface);
    const double coarse_water =
        get_or(cfg, "coarse_water_surface", kDefaultCoarseWaterSurface);
    const int factor = get_or(cfg, "factor", kDefaultFactor);
    const int hwm_count = get_or(cfg, "hwm_count", kDefaultHwmCount);
    const double hwm_noise = get_or(cfg, "hwm_noise_sd", kDefaultHwmNoiseSd);
    std::uint64_t hwm_seed = kDefaultHwmSeed;
    if (seed_flag) {
        hwm_seed = *seed_flag;
    } else if (cfg.contains("seed")) {
        hwm_seed = cfg.at("seed").get<std::uint64_t>();
    }

    const fs::path dir = prepare_output_dir(cfg, out_dir);

    const Grid fine_elev = make_valley(spec);
    const auto channel = row_cells(fine_elev, spec.channel_row);
    const FloodTruth truth = bathtub_flood(fine_elev, channel, water);
    const Grid coarse_elev = aggregate(fine_elev, factor);
    const Grid coarse_depth = coarse_flood(fine_elev, factor, channel, coarse_water);
    const auto hwms = sample_hwms(truth, hwm_count, hwm_noise, hwm_seed);

    write_ascii_grid(fine_elev, dir / "fine_dem.asc");
    write_ascii_grid(coarse_elev, dir / "coarse_dem.asc");
    write_ascii_grid(coarse_depth, dir / "coarse_depth.asc");
    write_ascii_grid(truth.depth, dir / "truth.asc");
    {
        std::ofstream out(dir / "hwm.csv");
        out << "x,y,depth_m\n";
        char buffer[128];
        for (const auto& m : hwms) {
            std::snprintf(buffer, sizeof(buffer), "%.17g,%.17g,%.17g\n", m.x, m.y, m.depth);
            out << buffer;
        }
    }
    json scenario;
    scenario["valley"] = {{"nrows", spec.nrows},       {"ncols", spec.ncols},
                          {"cellsize", spec.cellsize}, {"channel_row", spec.channel_row},
                          {"cross_slope", spec.cross_slope}, {"base_elev", spec.base_elev},
                          {"noise_amp", spec.noise_amp},     {"seed", spec.seed}};
    scenario["water_surface"] = water;
    scenario["coarse_water_surface"] = coarse_water;
    scenario["factor"] = factor;
    scenario["hwm_count"] = hwm_count;
    scenario["hwm_noise_sd"] = hwm_noise;
    scenario["seed"] = hwm_seed;
    write_json_file(dir / "scenario.json", scenario);

    long wet = 0;
    for (auto m : truth.wet_mask) wet += m;
    std::printf("synth: %dx%d valley, truth W=%.2f m (%ld wet cells), fixtures in %s\n",
                spec.nrows, spec.ncols, water, wet, dir.string().c_str());
    return 0;
}

int run_evaluate(const json& cfg, const std::string& truth_path,
                 const std::string& product_dir, const std::string& deterministic_path,
                 const std::string& out_path) {
    const Grid truth = read_ascii_grid(require_path(cfg, "truth", truth_path));
    const double threshold = get_or(cfg, "threshold", 0.3);
    const bool wet_union = get_or(cfg, "mae_wet_union", false);
    const MaeDomain domain = wet_union ? MaeDomain::kWetUnion : MaeDomain::kAllCells;

    std::string prob_dir = product_dir.empty()
                               ? get_or<std::string>(cfg, "product_dir", "")
                               : product_dir;
    std::string det = deterministic_path.empty()
                          ? get_or<std::string>(cfg, "deterministic", "")
                          : deterministic_path;

    std::optional<EvalReport> probabilistic;
    std::optional<EvalReport> deterministic;
    if (!prob_dir.empty()) {
        const fs::path dir = prob_dir;
        DownscaleResult result;
        result.mean = read_ascii_grid(dir / "mean.asc");
        result.lower95 = read_ascii_grid(dir / "lower95.asc");
        result.upper95 = read_ascii_grid(dir / "upper95.asc");
        result.prob_exceed = read_ascii_grid(dir / "prob_exceed.asc");
        probabilistic = evaluate(result, truth, threshold, domain);
    }
    if (!det.empty()) {
        if (!fs::exists(det)) throw InputError("deterministic grid does not exist: " + det);
        deterministic = evaluate(read_ascii_grid(det), truth, threshold, domain);
    }
    if (!probabilistic && !deterministic) {
        throw InputError("evaluate needs product_dir and/or deterministic");
    }

    // both products given: emit the side-by-side comparison instead
    std::string serialized;
    if (probabilistic && deterministic) {
        const std::vector<std::pair<std::string, EvalReport>> reports = {
            {"pdflood", *probabilistic}, {"baseline", *deterministic}};
        serialized = compare_reports(reports);
    } else {
        serialized = to_json(probabilistic ? *probabilistic : *deterministic);
    }
    std::printf("%s\n", serialized.c_str());
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw InputError("cannot write " + out_path);
        out << serialized << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PDFlood: probabilistic downscaling of riverine flood projections"};
    app.require_subcommand(1);

    std::string config_path, fine_dem, coarse_dem, coarse_depth, hwm_csv, out_dir;
    std::string design_csv, obs_csv, out_path, truth_path, product_dir, deterministic_path;
    std::optional<std::uint64_t> seed_flag;
    int threads_flag = 0;

    auto* downscale_cmd =
        app.add_subcommand("downscale", "probabilistic downscaling of a coarse projection");
    downscale_cmd->add_option("--config", config_path, "JSON config file");
    downscale_cmd->add_option("--fine-dem", fine_dem, "fine DEM (.asc)");
    downscale_cmd->add_option("--coarse-dem", coarse_dem, "coarse DEM (.asc)");
    downscale_cmd->add_option("--coarse-depth", coarse_depth, "coarse depth grid (.asc)");
    downscale_cmd->add_option("--hwm", hwm_csv, "high-water-mark CSV");
    downscale_cmd->add_option("--out", out_dir, "output directory");
    downscale_cmd->add_option("--threads", threads_flag, "worker thread cap");

    auto* baseline_cmd =
        app.add_subcommand("baseline", "deterministic CostGrow-style downscaling");
    baseline_cmd->add_option("--config", config_path, "JSON config file");
    baseline_cmd->add_option("--fine-dem", fine_dem, "fine DEM (.asc)");
    baseline_cmd->add_option("--coarse-dem", coarse_dem, "coarse DEM (.asc)");
    baseline_cmd->add_option("--coarse-depth", coarse_depth, "coarse depth grid (.asc)");
    baseline_cmd->add_option("--out", out_dir, "output directory");

    auto* calibrate_cmd =
        app.add_subcommand("calibrate", "GP emulation-calibration of channel roughness");
    calibrate_cmd->add_option("--config", config_path, "JSON config file");
    calibrate_cmd->add_option("--design", design_csv, "design CSV (theta,loc_1..loc_n)");
    calibrate_cmd->add_option("--obs", obs_csv, "observations CSV (z_1..z_n)");
    calibrate_cmd->add_option("--out", out_path, "posterior JSON path");
    calibrate_cmd->add_option("--seed", seed_flag, "MCMC seed");

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic flood scenario");
    synth_cmd->add_option("--config", config_path, "JSON config file");
    synth_cmd->add_option("--out", out_dir, "output directory");
    synth_cmd->add_option("--seed", seed_flag, "high-water-mark sampling seed");

    auto* evaluate_cmd =
        app.add_subcommand("evaluate", "score a product against a truth grid");
    evaluate_cmd->add_option("--config", config_path, "JSON config file");
    evaluate_cmd->add_option("--truth", truth_path, "truth grid (.asc)");
    evaluate_cmd->add_option("--product", product_dir, "probabilistic product directory");
    evaluate_cmd->add_option("--deterministic", deterministic_path, "deterministic grid");
    evaluate_cmd->add_option("--out", out_path, "report JSON path");

    CLI11_PARSE(app, argc, argv);

    const auto fail = [](const char* code, const std::string& message, int status) {
        json err;
        err["code"] = code;
        err["message"] = message;
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return status;
    };

    try {
        json cfg = load_config(config_path);
        if (threads_flag > 0) cfg["threads"] = threads_flag;
        if (downscale_cmd->parsed()) {
            return run_downscale(cfg, fine_dem, coarse_dem, coarse_depth, hwm_csv, out_dir);
        }
        if (baseline_cmd->parsed()) {
            return run_baseline(cfg, fine_dem, coarse_dem, coarse_depth, out_dir);
        }
        if (calibrate_cmd->parsed()) {
            return run_calibrate(cfg, design_csv, obs_csv, out_path, seed_flag);
        }
        if (synth_cmd->parsed()) {
            return run_synth(cfg, out_dir, seed_flag);
        }
        if (evaluate_cmd->parsed()) {
            return run_evaluate(cfg, truth_path, product_dir, deterministic_path, out_path);
        }
        return fail("E_INPUT", "no subcommand", 2);
    } catch (const AlignmentError& e) {
        return fail("E_ALIGN", e.what(), 2);
    } catch (const InputError& e) {
        return fail("E_INPUT", e.what(), 2);
    } catch (const NumericError& e) {
        return fail("E_NUMERIC", e.what(), 3);
    } catch (const std::exception& e) {
        return fail("E_INTERNAL", e.what(), 3);
    }
}
