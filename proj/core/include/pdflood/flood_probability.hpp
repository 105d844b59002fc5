#pragma once

#include <vector>

#include "pdflood/grid.hpp"

namespace pdflood {

/// Equal-width elevation bins over [e_lo, e_hi] with per-bin wet proportions.
/// e_lo is the lowest elevation of any dry coarse cell and e_hi the highest
/// elevation of any wet coarse cell; only cells between them are binned.
struct ElevationBins {
    double e_lo = 0.0;
    double e_hi = 0.0;
    int k = 0;
    std::vector<double> midpoints;   ///< k entries
    std::vector<double> proportions; ///< wet fraction per bin; 0 where empty
    std::vector<int> counts;         ///< cells per bin; empty bins carry 0

    double bin_width() const { return k > 0 ? (e_hi - e_lo) / k : 0.0; }
    /// Perfectly separable terrain: every wet cell lies below every dry one.
    bool degenerate() const { return k == 0; }
};

struct PiCurveConfig {
    double lengthscale = 0.0; ///< 0 -> 2 * bin width
    double variance = 0.0;    ///< 0 -> sample variance of the proportions
    double nugget = 1e-4;
    bool refine_mle = false;  ///< maximize marginal likelihood from the defaults
};

/// The flooding-probability curve pi(E): GP posterior mean through the bin
/// (midpoint, proportion) pairs, clamped to [0, 1], pinned to 1 at or below
/// e_lo and 0 at or above e_hi. Immutable once fitted; evaluation is
/// thread-safe.
class PiCurve {
public:
    double e_lo() const { return bins_.e_lo; }
    double e_hi() const { return bins_.e_hi; }
    const ElevationBins& bins() const { return bins_; }
    bool degenerate() const { return degenerate_; }
    double lengthscale() const { return lengthscale_; }
    double variance() const { return variance_; }
    double nugget() const { return nugget_; }

    double evaluate(double elevation) const;

private:
    friend PiCurve fit_pi(const ElevationBins&, const PiCurveConfig&);

    ElevationBins bins_;
    bool degenerate_ = false;
    double lengthscale_ = 0.0;
    double variance_ = 0.0;
    double nugget_ = 0.0;
    double mean_offset_ = 0.0;
    std::vector<double> train_x_;  ///< midpoints of nonempty bins
    std::vector<double> weights_;  ///< K^{-1} (y - mean)
};

/// Bins the coarse cells by elevation and counts the wet fraction per bin.
/// A coarse cell is wet when its depth exceeds wet_threshold (strict).
/// Perfectly separable terrain yields degenerate bins (k == 0) with e_lo and
/// e_hi still recorded. Throws InputError when there are no wet or no dry
/// cells, or k < 2.
ElevationBins build_bins(const Grid& coarse_depth, const Grid& coarse_elev, int k = 8,
                         double wet_threshold = 0.0);

/// Fits the GP through the nonempty bins (proportions centered by their mean
/// before regression). Degenerate bins produce the pure step curve
/// 1{E < e_lo} with no GP. Throws InputError with fewer than 2 nonempty bins.
PiCurve fit_pi(const ElevationBins& bins, const PiCurveConfig& config = {});

/// pi at an elevation: 1 at or below e_lo, 0 at or above e_hi, the clamped
/// GP mean between.
double pi_at(const PiCurve& curve, double elevation);

} // namespace pdflood
