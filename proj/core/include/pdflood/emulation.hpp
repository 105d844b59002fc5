#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "pdflood/errors.hpp"

namespace pdflood {

/// The calibrated parameter's plausible range (channel roughness).
constexpr double kThetaLower = 0.01;
constexpr double kThetaUpper = 0.1;

/// Computer-model runs at p design points plus the n point observations.
struct DesignSet {
    std::vector<double> thetas;  ///< p design values, strictly inside the range
    std::vector<double> outputs; ///< p x n, row-major by design point
    std::vector<double> obs;     ///< n observed depths

    std::size_t n_designs() const { return thetas.size(); }
    std::size_t n_locations() const { return obs.size(); }
    double output(std::size_t design, std::size_t location) const {
        return outputs[design * n_locations() + location];
    }
};

/// Throws InputError unless p >= 4, thetas are distinct and strictly inside
/// the range, and the output matrix matches p x n with n >= 1.
void validate_design(const DesignSet& design);

/// Reads the design CSV (header theta,loc_1,...,loc_n; one row per design).
DesignSet read_design_csv(const std::filesystem::path& path);

/// Reads the observations CSV (header z_1,...,z_n; a single data row) into
/// design.obs; the width must match the design's locations.
void read_obs_csv(const std::filesystem::path& path, DesignSet& design);

struct EmulatorConfig {
    double min_nugget = 1e-10;
    std::optional<double> fixed_nugget; ///< pin the nugget instead of fitting it
    int multistarts = 4;
};

/// One-dimensional GP over theta for a single observation location:
/// squared-exponential kernel plus nugget, zero mean on centered outputs,
/// hyperparameters from maximum likelihood. Immutable once fitted.
class Emulator1D {
public:
    double predict_mean(double theta) const;
    /// Latent predictive variance (no nugget), clamped at 0.
    double predict_var(double theta) const;

    double signal_variance() const { return signal_var_; }
    double lengthscale() const { return lengthscale_; }
    double nugget() const { return nugget_; }

private:
    friend std::vector<Emulator1D> fit_emulators(const DesignSet&, const EmulatorConfig&);

    std::vector<double> train_x_;
    std::vector<double> weights_; ///< K^{-1} (y - mean)
    std::vector<double> chol_;    ///< lower Cholesky factor of K, row-major
    double mean_ = 0.0;
    double signal_var_ = 1.0;
    double lengthscale_ = 1.0;
    double nugget_ = 1e-10;
};

/// Fits one emulator per observation location. Hyperparameters are picked by
/// multi-start simplex search on the log marginal likelihood; if every start
/// fails, a 20x20 log-grid over (lengthscale, variance) is scanned instead.
std::vector<Emulator1D> fit_emulators(const DesignSet& design,
                                      const EmulatorConfig& config = {});

/// Per-location discrepancy: the average of Y(theta_j, s_i) - Z(s_i) over the
/// three designs with the smallest MAE against the observations (ties toward
/// the smaller design index). Requires p >= 3.
std::vector<double> estimate_discrepancy(const DesignSet& design);

struct McmcConfig {
    int iterations = 20000;
    int burn_in = 5000;
    std::uint64_t seed = 0;
    double target_accept = 0.35;
    double initial_step = 0.5;
    bool use_emulator_variance = true;
    /// Inject a discrepancy vector instead of estimating it from the design.
    std::optional<std::vector<double>> fixed_delta;
};

/// A finished calibration: fitted emulators, discrepancy, posterior draws,
/// and the posterior-mean point estimate theta_star.
struct CalibrationRun {
    DesignSet design;
    std::vector<Emulator1D> emulators;
    std::vector<double> delta_hat;
    std::vector<double> posterior_samples; ///< theta scale, after burn-in
    double theta_star = 0.0;
    double sigma_eps = 0.0; ///< posterior mean of the observation-error sd
    double acceptance_rate = 0.0;
    std::array<double, 2> credible_interval{0.0, 0.0}; ///< central 95%
    std::uint64_t seed = 0;
};

/// Random-walk Metropolis on the logit-transformed parameter, jointly with
/// log sigma_eps (half-normal prior scaled to the best-design residual
/// spread). The proposal scale adapts toward target_accept during burn-in
/// and is frozen afterwards; the recorded acceptance rate covers the
/// post-burn-in draws and must land in [0.05, 0.95] or a NumericError is
/// thrown. Deterministic for a fixed seed.
CalibrationRun calibrate(const DesignSet& design, const McmcConfig& mcmc = {},
                         const EmulatorConfig& emulator_config = {});

} // namespace pdflood
