#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pdflood/cost_distance.hpp"
#include "pdflood/flood_probability.hpp"
#include "pdflood/grid.hpp"
#include "pdflood/student_t.hpp"

namespace pdflood {

/// A point observation of maximum flood depth.
struct HighWaterMark {
    double x = 0.0;     ///< meters
    double y = 0.0;     ///< meters
    double depth = 0.0; ///< meters, >= 0
};

/// Reads high-water marks from CSV with header x,y,depth_m.
std::vector<HighWaterMark> read_hwm_csv(const std::filesystem::path& path);

struct DownscaleConfig {
    double threshold = 0.3;      ///< exceedance depth for prob_exceed, meters
    double wet_threshold = 0.0;  ///< coarse depth above which a cell is wet
    int bins_k = 8;
    PiCurveConfig pi;
    NodataPolicy bilinear_nodata = NodataPolicy::kError;
    bool sigma_floor_enabled = false;
    double sigma_floor = 0.01;   ///< meters, applied only when enabled
    int threads = 1;

    /// Overrides for held-fixed re-runs (sensitivity and property checks):
    /// skip re-estimating sigma / refitting pi and reuse the given ones.
    std::optional<double> fixed_sigma;
    std::optional<int> fixed_dof;
    std::optional<PiCurve> fixed_pi_curve;
};

using CellLaw = std::variant<TPredictive, MixturePredictive>;

/// Everything run_pdflood produces: summary grids, the per-cell laws, and
/// the intermediate products tests and diagnostics want.
struct DownscaleResult {
    Grid mean;
    Grid lower95;
    Grid upper95;
    Grid prob_exceed;
    std::vector<CellLaw> per_cell_law; ///< indexed by fine linear cell index
    double sigma_hat = 0.0;
    int dof = 0;
    CostField cost_field;
    PiCurve pi_curve;
    int n_hwms_used = 0;
    std::vector<std::string> warnings;
};

/// Deterministic downscaled depth for every fine cell:
/// Y_D(v) = max(bilinear(Y_L + E_L at v) - E_H(v), 0).
/// Fine nodata cells stay nodata.
Grid downscale_deterministic(const GridPair& pair, const Grid& coarse_depth,
                             NodataPolicy policy = NodataPolicy::kError);

/// sqrt( sum (Z(u_i) - Y_D(cell(u_i)))^2 / (n - 1) ) over the given marks.
/// No mean-centering: Y_D is the model mean. Throws InputError for n < 3 and
/// NumericError when every residual is exactly zero (enable the sigma floor
/// to proceed with degenerate observations).
double estimate_sigma(const Grid& fine_y_d, std::span<const HighWaterMark> marks);

/// Adjusted depth for a fine cell outside the flooded area, fed by its
/// least-cost source v': Y_A(v) = max(Y_D(v') - (E_H(v) - E_H(v')), 0).
/// Unreachable cells get 0.
double downscale_dry_mean(const CostField& cost_field, const Grid& fine_y_d,
                          const Grid& fine_elev, CellIndex v);

/// Full probabilistic downscaling pass. Fine cells inside wet coarse cells
/// get the t law T(Y_D, sigma, n-1); cells inside dry coarse cells get the
/// zero-inflated mixture with pi(E_H) and location Y_A. Marks falling inside
/// dry coarse cells are excluded from sigma (warning recorded); at least 3
/// must remain.
DownscaleResult run_pdflood(const GridPair& pair, const Grid& coarse_depth,
                            std::span<const HighWaterMark> hwms,
                            const DownscaleConfig& config = {});

/// Deterministic CostGrow-style baseline: Y_D inside the flooded area, Y_A
/// outside, 0 where unreachable. No distributions, no observations.
Grid run_costgrow_baseline(const GridPair& pair, const Grid& coarse_depth,
                           const DownscaleConfig& config = {});

} // namespace pdflood
