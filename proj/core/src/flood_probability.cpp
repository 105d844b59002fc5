#include "pdflood/flood_probability.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "nelder_mead.hpp"

namespace pdflood {

namespace {

double se_kernel(double a, double b, double variance, double lengthscale) {
    const double d = a - b;
    return variance * std::exp(-0.5 * d * d / (lengthscale * lengthscale));
}

Eigen::MatrixXd kernel_matrix(const std::vector<double>& x, double variance,
                              double lengthscale, double nugget) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = se_kernel(x[i], x[j], variance, lengthscale);
            k(i, j) = v;
            k(j, i) = v;
        }
        k(i, i) += nugget;
    }
    return k;
}

double log_marginal_likelihood(const std::vector<double>& x, const Eigen::VectorXd& y,
                               double variance, double lengthscale, double nugget) {
    const Eigen::MatrixXd k = kernel_matrix(x, variance, lengthscale, nugget);
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Eigen::VectorXd alpha = llt.solve(y);
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < k.rows(); ++i) log_det += std::log(llt.matrixL()(i, i));
    return -0.5 * y.dot(alpha) - log_det - 0.5 * y.size() * std::log(2.0 * M_PI);
}

} // namespace

ElevationBins build_bins(const Grid& coarse_depth, const Grid& coarse_elev, int k,
                         double wet_threshold) {
    if (!coarse_depth.same_layout(coarse_elev)) {
        throw AlignmentError("build_bins: depth and elevation grids do not align");
    }
    if (k < 2) {
        throw InputError("build_bins: need at least 2 bins");
    }

    double e_lo = std::numeric_limits<double>::infinity();  // lowest dry
    double e_hi = -std::numeric_limits<double>::infinity(); // highest wet
    bool any_wet = false, any_dry = false;
    for (std::size_t c = 0; c < coarse_depth.size(); ++c) {
        if (coarse_depth.is_nodata_at(c) || coarse_elev.is_nodata_at(c)) continue;
        const double e = coarse_elev[c];
        if (coarse_depth[c] > wet_threshold) {
            any_wet = true;
            e_hi = std::max(e_hi, e);
        } else {
            any_dry = true;
            e_lo = std::min(e_lo, e);
        }
    }
    if (!any_wet) throw InputError("build_bins: no wet coarse cells");
    if (!any_dry) throw InputError("build_bins: no dry coarse cells");

    ElevationBins bins;
    bins.e_lo = e_lo;
    bins.e_hi = e_hi;
    if (e_lo >= e_hi) {
        // Perfectly separable: wetness is already the step 1{E < e_lo}.
        bins.k = 0;
        return bins;
    }

    bins.k = k;
    bins.midpoints.resize(k);
    bins.proportions.assign(k, 0.0);
    bins.counts.assign(k, 0);
    const double width = (e_hi - e_lo) / k;
    for (int b = 0; b < k; ++b) bins.midpoints[b] = e_lo + (b + 0.5) * width;

    std::vector<int> wet(k, 0);
    for (std::size_t c = 0; c < coarse_depth.size(); ++c) {
        if (coarse_depth.is_nodata_at(c) || coarse_elev.is_nodata_at(c)) continue;
        const double e = coarse_elev[c];
        if (e < e_lo || e > e_hi) continue;
        const int b = std::min(static_cast<int>((e - e_lo) / width), k - 1);
        bins.counts[b] += 1;
        if (coarse_depth[c] > wet_threshold) wet[b] += 1;
    }
    for (int b = 0; b < k; ++b) {
        if (bins.counts[b] > 0) {
            bins.proportions[b] = static_cast<double>(wet[b]) / bins.counts[b];
        }
    }
    return bins;
}

PiCurve fit_pi(const ElevationBins& bins, const PiCurveConfig& config) {
    PiCurve curve;
    curve.bins_ = bins;
    if (bins.degenerate()) {
        curve.degenerate_ = true;
        return curve;
    }

    std::vector<double> x;
    std::vector<double> y;
    for (int b = 0; b < bins.k; ++b) {
        if (bins.counts[b] == 0) continue;
        x.push_back(bins.midpoints[b]);
        y.push_back(bins.proportions[b]);
    }
    if (x.size() < 2) {
        throw InputError("fit_pi: need at least 2 nonempty bins");
    }

    const double mean =
        std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double variance = 0.0;
    for (double v : y) variance += (v - mean) * (v - mean);
    variance /= static_cast<double>(y.size());
    if (variance < 1e-12) variance = 1e-12;

    double lengthscale = config.lengthscale > 0.0 ? config.lengthscale : 2.0 * bins.bin_width();
    if (config.variance > 0.0) variance = config.variance;
    double nugget = config.nugget >= 0.0 ? config.nugget : 1e-4;

    Eigen::VectorXd yc(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) yc(static_cast<Eigen::Index>(i)) = y[i] - mean;

    if (config.refine_mle) {
        const auto objective = [&](const std::vector<double>& logs) {
            return -log_marginal_likelihood(x, yc, std::exp(logs[0]), std::exp(logs[1]), nugget);
        };
        auto fit = detail::nelder_mead(objective, {std::log(variance), std::log(lengthscale)}, 0.7);
        if (std::isfinite(fit.value)) {
            variance = std::exp(fit.x[0]);
            lengthscale = std::exp(fit.x[1]);
        }
    }

    Eigen::MatrixXd k = kernel_matrix(x, variance, lengthscale, nugget);
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    double effective_nugget = nugget;
    while (llt.info() != Eigen::Success) {
        // jitter escalation for nearly singular kernels at tiny nuggets
        effective_nugget = std::max(effective_nugget * 10.0, 1e-12);
        if (effective_nugget > 1e-2 * variance + 1e-6) {
            throw NumericError("fit_pi: kernel matrix is not positive definite");
        }
        k = kernel_matrix(x, variance, lengthscale, effective_nugget);
        llt.compute(k);
    }
    Eigen::VectorXd alpha = llt.solve(yc);
    alpha += llt.solve(yc - k * alpha); // one refinement step

    curve.lengthscale_ = lengthscale;
    curve.variance_ = variance;
    curve.nugget_ = effective_nugget;
    curve.mean_offset_ = mean;
    curve.train_x_ = std::move(x);
    curve.weights_.assign(alpha.data(), alpha.data() + alpha.size());
    return curve;
}

double PiCurve::evaluate(double elevation) const {
    if (!std::isfinite(elevation)) {
        throw InputError("pi_at: elevation must be finite");
    }
    if (degenerate_) {
        // separable terrain: wetness is exactly the indicator 1{E < e_lo}
        return elevation < bins_.e_lo ? 1.0 : 0.0;
    }
    if (elevation <= bins_.e_lo) return 1.0;
    if (elevation >= bins_.e_hi) return 0.0;
    double value = mean_offset_;
    for (std::size_t i = 0; i < train_x_.size(); ++i) {
        value += weights_[i] * se_kernel(elevation, train_x_[i], variance_, lengthscale_);
    }
    return std::clamp(value, 0.0, 1.0);
}

double pi_at(const PiCurve& curve, double elevation) { return curve.evaluate(elevation); }

} // namespace pdflood
