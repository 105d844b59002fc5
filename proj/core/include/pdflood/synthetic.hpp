#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pdflood/downscale.hpp"
#include "pdflood/grid.hpp"

namespace pdflood {

/// Parameters of the procedural V-valley terrain. The defaults describe the
/// desk-scale benchmark scenario shared by the CLI synth command and the
/// acceptance suite.
struct ValleySpec {
    int nrows = 200;
    int ncols = 200;
    double cellsize = 5.0;    ///< meters
    int channel_row = 100;
    double cross_slope = 0.04; ///< meters of rise per row away from the channel
    double base_elev = 20.0;   ///< meters, channel elevation before noise
    double noise_amp = 0.6;    ///< bound on |noise|, meters
    std::uint64_t seed = 99;
};

/// Benchmark scenario companions to the ValleySpec defaults. The coarse
/// projection runs slightly high, standing in for the systematic bias a
/// low-resolution model carries relative to the fine truth.
inline constexpr double kDefaultWaterSurface = 21.6;        ///< truth W, meters
inline constexpr double kDefaultCoarseWaterSurface = 21.7;  ///< coarse-run W
inline constexpr int kDefaultFactor = 2;
inline constexpr int kDefaultHwmCount = 5;
inline constexpr double kDefaultHwmNoiseSd = 0.05; ///< meters
inline constexpr std::uint64_t kDefaultHwmSeed = 42;

/// Ground truth from the connected-bathtub flood oracle.
struct FloodTruth {
    double water_surface = 0.0;      ///< W, meters
    Grid depth;                      ///< max(W - E, 0) on reached cells, else 0
    std::vector<std::uint8_t> wet_mask;
};

/// V-shaped valley with smooth seeded noise:
/// E(i, j) = base_elev + cross_slope * |i - channel_row| + noise(i, j).
/// The noise is a sum of seeded sinusoids with |noise| <= noise_amp, so the
/// terrain stays smooth and the flooded region contiguous. Bit-reproducible
/// for a fixed seed.
Grid make_valley(const ValleySpec& spec);

/// Linear indices of every cell in one row (the synthetic channel).
std::vector<std::size_t> row_cells(const Grid& grid, int row);

/// Flood-fill from the channel across 8-connected cells with E < W;
/// depth = W - E on reached cells, 0 elsewhere (enclosed pits stay dry).
/// Throws InputError when no channel cell lies below W.
FloodTruth bathtub_flood(const Grid& elev, std::span<const std::size_t> channel_cells,
                         double water_surface);

/// The low-resolution projection surrogate: aggregate the elevation, map the
/// channel cells to their coarse parents, and run the bathtub at coarse
/// scale. Distinct from aggregating fine depths. Returns the coarse depth grid.
Grid coarse_flood(const Grid& fine_elev, int factor,
                  std::span<const std::size_t> fine_channel_cells, double water_surface);

/// k high-water marks at distinct wet cells, sampled uniformly with seeded
/// draws; observed depth = truth + N(0, noise_sd^2) clamped at 0. Marks sit
/// at cell centers.
std::vector<HighWaterMark> sample_hwms(const FloodTruth& truth, int k, double noise_sd,
                                       std::uint64_t seed);

/// Analytic stand-in for a hydraulic model run at roughness theta:
/// depth_i = alpha_i + beta_i * log(theta) with published per-cell constants
///   alpha(i, j) = 6.0 + 0.02 * i + 0.01 * j
///   beta(i, j)  = 0.8 + 0.1 * ((i + j) % 5)
/// Monotone increasing in theta at every location. theta must lie in
/// (0.01, 0.1).
std::vector<double> toy_forward_model(double theta, std::span<const CellIndex> locations);

/// The alpha/beta constants behind toy_forward_model, for oracle tests.
double toy_alpha(CellIndex cell);
double toy_beta(CellIndex cell);

} // namespace pdflood
