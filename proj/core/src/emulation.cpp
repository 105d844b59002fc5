#include "pdflood/emulation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "nelder_mead.hpp"
#include "pdflood/rng.hpp"

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

// pinned_pivot_floor > 0 additionally rejects fits whose smallest Cholesky
// pivot squared falls below it. Used when the nugget is pinned near zero:
// once the kernel part collapses to the nugget floor the GP stops
// interpolating, which is the one property a pinned tiny nugget asks for.
double neg_log_marginal(const std::vector<double>& x, const Eigen::VectorXd& y,
                        double variance, double lengthscale, double nugget,
                        double pinned_pivot_floor = 0.0) {
    if (!(variance > 0.0) || !(lengthscale > 0.0) || !(nugget > 0.0)) {
        return std::numeric_limits<double>::infinity();
    }
    const Eigen::MatrixXd k = kernel_matrix(x, variance, lengthscale, nugget);
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    // conditioning guard: at tiny nuggets the likelihood otherwise rewards
    // collapsing eigenvalues
    double d_min = std::numeric_limits<double>::infinity(), d_max = 0.0;
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
        const double d = llt.matrixL()(i, i);
        d_min = std::min(d_min, d);
        d_max = std::max(d_max, d);
    }
    if ((d_max / d_min) * (d_max / d_min) > 1e10) {
        return std::numeric_limits<double>::infinity();
    }
    if (pinned_pivot_floor > 0.0) {
        const double lambda_min =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues().minCoeff();
        if (lambda_min < pinned_pivot_floor) {
            return std::numeric_limits<double>::infinity();
        }
    }
    const Eigen::VectorXd alpha = llt.solve(y);
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < k.rows(); ++i) log_det += std::log(llt.matrixL()(i, i));
    return 0.5 * y.dot(alpha) + log_det + 0.5 * y.size() * std::log(2.0 * M_PI);
}

std::vector<double> design_maes(const DesignSet& design) {
    const std::size_t p = design.n_designs();
    const std::size_t n = design.n_locations();
    std::vector<double> maes(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += std::fabs(design.output(j, i) - design.obs[i]);
        }
        maes[j] = sum / static_cast<double>(n);
    }
    return maes;
}

double csv_double_field(const std::string& token, const std::filesystem::path& path,
                        int line_no) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw InputError(path.string() + ":" + std::to_string(line_no) +
                         ": non-numeric CSV field '" + token + "'");
    }
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
    }
    return out;
}

} // namespace

void validate_design(const DesignSet& design) {
    const std::size_t p = design.n_designs();
    const std::size_t n = design.n_locations();
    if (p < 4) {
        throw InputError("design: need at least 4 design points, got " + std::to_string(p));
    }
    if (n < 1) {
        throw InputError("design: need at least 1 observation location");
    }
    if (design.outputs.size() != p * n) {
        throw InputError("design: output matrix does not match p x n");
    }
    for (std::size_t j = 0; j < p; ++j) {
        const double t = design.thetas[j];
        if (!(t > kThetaLower && t < kThetaUpper)) {
            throw InputError("design: theta outside the open range (0.01, 0.1)");
        }
        for (std::size_t l = j + 1; l < p; ++l) {
            if (design.thetas[l] == t) {
                throw InputError("design: duplicate theta values");
            }
        }
    }
}

DesignSet read_design_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open design file: " + path.string());
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) throw InputError(path.string() + ": empty design file");
    ++line_no;
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "theta") {
        throw InputError(path.string() + ": expected header 'theta,loc_1,...,loc_n'");
    }
    const std::size_t n = header.size() - 1;

    DesignSet design;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != n + 1) {
            throw InputError(path.string() + ":" + std::to_string(line_no) +
                             ": expected " + std::to_string(n + 1) + " fields");
        }
        design.thetas.push_back(csv_double_field(fields[0], path, line_no));
        for (std::size_t i = 0; i < n; ++i) {
            design.outputs.push_back(csv_double_field(fields[i + 1], path, line_no));
        }
    }
    design.obs.assign(n, 0.0); // placeholder until read_obs_csv fills it
    return design;
}

void read_obs_csv(const std::filesystem::path& path, DesignSet& design) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open observations file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw InputError(path.string() + ": empty observations file");
    const auto header = split_csv_line(line);
    if (header.empty() || header[0].rfind("z_", 0) != 0) {
        throw InputError(path.string() + ": expected header 'z_1,...,z_n'");
    }
    if (!std::getline(in, line)) {
        throw InputError(path.string() + ": missing observation row");
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
        throw InputError(path.string() + ": observation row width does not match header");
    }
    if (fields.size() != design.n_locations()) {
        throw InputError(path.string() + ": observation count does not match the design");
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
        design.obs[i] = csv_double_field(fields[i], path, 2);
    }
}

double Emulator1D::predict_mean(double theta) const {
    double value = mean_;
    for (std::size_t i = 0; i < train_x_.size(); ++i) {
        value += weights_[i] * se_kernel(theta, train_x_[i], signal_var_, lengthscale_);
    }
    return value;
}

double Emulator1D::predict_var(double theta) const {
    const std::size_t m = train_x_.size();
    std::vector<double> kstar(m);
    for (std::size_t i = 0; i < m; ++i) {
        kstar[i] = se_kernel(theta, train_x_[i], signal_var_, lengthscale_);
    }
    // forward-solve L v = k*; var = k(x,x) - v.v
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i) {
        double sum = kstar[i];
        for (std::size_t j = 0; j < i; ++j) sum -= chol_[i * m + j] * v[j];
        v[i] = sum / chol_[i * m + i];
    }
    const double quad = std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
    return std::max(signal_var_ - quad, 0.0);
}

std::vector<Emulator1D> fit_emulators(const DesignSet& design, const EmulatorConfig& config) {
    validate_design(design);
    const std::size_t p = design.n_designs();
    const std::size_t n = design.n_locations();
    const double span = kThetaUpper - kThetaLower;

    std::vector<Emulator1D> emulators(n);
    for (std::size_t loc = 0; loc < n; ++loc) {
        Eigen::VectorXd y(static_cast<Eigen::Index>(p));
        double mean = 0.0;
        for (std::size_t j = 0; j < p; ++j) mean += design.output(j, loc);
        mean /= static_cast<double>(p);
        for (std::size_t j = 0; j < p; ++j) {
            y(static_cast<Eigen::Index>(j)) = design.output(j, loc) - mean;
        }
        double y_var = y.squaredNorm() / static_cast<double>(p);
        if (y_var < 1e-12) y_var = 1e-12;

        const bool fit_nugget = !config.fixed_nugget.has_value();
        double best_var = y_var;
        double best_len = span / 3.0;
        double best_nugget = config.fixed_nugget.value_or(1e-6 * y_var + 1e-12);
        double best_value = std::numeric_limits<double>::infinity();

        const auto objective = [&](const std::vector<double>& logs) {
            const double variance = std::exp(logs[0]);
            const double lengthscale = std::exp(logs[1]);
            const double nugget = fit_nugget
                                      ? std::max(std::exp(logs[2]), config.min_nugget)
                                      : *config.fixed_nugget;
            if (lengthscale < 1e-3 * span || lengthscale > 1e2 * span) {
                return std::numeric_limits<double>::infinity();
            }
            const double pivot_floor = fit_nugget ? 0.0 : 1e3 * nugget;
            return neg_log_marginal(design.thetas, y, variance, lengthscale, nugget,
                                    pivot_floor);
        };

        const double len_starts[] = {span / 10.0, span / 3.0, span, span / 30.0};
        const int starts = std::max(1, std::min<int>(config.multistarts, 4));
        for (int s = 0; s < starts; ++s) {
            std::vector<double> x0 = {std::log(y_var), std::log(len_starts[s])};
            if (fit_nugget) x0.push_back(std::log(1e-4 * y_var + 1e-12));
            const auto fit = detail::nelder_mead(objective, x0, 1.0, 400, 1e-10);
            if (fit.value < best_value) {
                best_value = fit.value;
                best_var = std::exp(fit.x[0]);
                best_len = std::exp(fit.x[1]);
                if (fit_nugget) {
                    best_nugget = std::max(std::exp(fit.x[2]), config.min_nugget);
                }
            }
        }

        if (!std::isfinite(best_value)) {
            // fallback: coarse 20x20 log-grid over (lengthscale, variance)
            const double grid_nugget = config.fixed_nugget.value_or(1e-8 * y_var + 1e-12);
            for (int a = 0; a < 20; ++a) {
                for (int b = 0; b < 20; ++b) {
                    const double lengthscale =
                        span * std::exp(std::log(1e-2) + (std::log(1e2) - std::log(1e-2)) * a / 19.0);
                    const double variance =
                        y_var * std::exp(std::log(1e-3) + (std::log(1e3) - std::log(1e-3)) * b / 19.0);
                    const double value =
                        neg_log_marginal(design.thetas, y, variance, lengthscale, grid_nugget);
                    if (value < best_value) {
                        best_value = value;
                        best_var = variance;
                        best_len = lengthscale;
                        best_nugget = grid_nugget;
                    }
                }
            }
            if (!std::isfinite(best_value)) {
                throw NumericError("fit_emulators: no viable hyperparameters found");
            }
        }

        Eigen::MatrixXd k = kernel_matrix(design.thetas, best_var, best_len, best_nugget);
        Eigen::LLT<Eigen::MatrixXd> llt(k);
        while (llt.info() != Eigen::Success) {
            best_nugget = std::max(best_nugget * 10.0, 1e-12);
            if (best_nugget > best_var) {
                throw NumericError("fit_emulators: covariance factorization failed");
            }
            k = kernel_matrix(design.thetas, best_var, best_len, best_nugget);
            llt.compute(k);
        }
        Eigen::VectorXd alpha = llt.solve(y);
        alpha += llt.solve(y - k * alpha); // one refinement step

        Emulator1D& em = emulators[loc];
        em.train_x_ = design.thetas;
        em.weights_.assign(alpha.data(), alpha.data() + alpha.size());
        em.mean_ = mean;
        em.signal_var_ = best_var;
        em.lengthscale_ = best_len;
        em.nugget_ = best_nugget;
        const Eigen::MatrixXd lower = llt.matrixL();
        em.chol_.resize(p * p, 0.0);
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                em.chol_[i * p + j] =
                    lower(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
        }
    }
    return emulators;
}

std::vector<double> estimate_discrepancy(const DesignSet& design) {
    const std::size_t p = design.n_designs();
    const std::size_t n = design.n_locations();
    if (p < 3) {
        throw InputError("estimate_discrepancy: need at least 3 design points");
    }
    if (design.outputs.size() != p * n || n < 1) {
        throw InputError("estimate_discrepancy: malformed design");
    }

    const std::vector<double> maes = design_maes(design);
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return maes[a] < maes[b]; });

    std::vector<double> delta(n, 0.0);
    for (std::size_t r = 0; r < 3; ++r) {
        const std::size_t j = order[r];
        for (std::size_t i = 0; i < n; ++i) {
            delta[i] += design.output(j, i) - design.obs[i];
        }
    }
    for (double& d : delta) d /= 3.0;
    return delta;
}

CalibrationRun calibrate(const DesignSet& design, const McmcConfig& mcmc,
                         const EmulatorConfig& emulator_config) {
    validate_design(design);
    if (mcmc.iterations <= mcmc.burn_in || mcmc.burn_in < 0) {
        throw InputError("calibrate: iterations must exceed burn_in >= 0");
    }

    CalibrationRun run;
    run.design = design;
    run.seed = mcmc.seed;
    run.emulators = fit_emulators(design, emulator_config);
    if (mcmc.fixed_delta) {
        if (mcmc.fixed_delta->size() != design.n_locations()) {
            throw InputError("calibrate: fixed_delta length does not match the design");
        }
        run.delta_hat = *mcmc.fixed_delta;
    } else {
        run.delta_hat = estimate_discrepancy(design);
    }

    const std::size_t n = design.n_locations();
    const double span = kThetaUpper - kThetaLower;

    // Half-normal scale for sigma_eps: spread of the best design's residuals.
    const std::vector<double> maes = design_maes(design);
    const std::size_t best_design = static_cast<std::size_t>(
        std::min_element(maes.begin(), maes.end()) - maes.begin());
    double resid_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        resid_mean += design.output(best_design, i) - design.obs[i];
    }
    resid_mean /= static_cast<double>(n);
    double resid_var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = design.output(best_design, i) - design.obs[i] - resid_mean;
        resid_var += r * r;
    }
    resid_var = n > 1 ? resid_var / static_cast<double>(n - 1) : resid_var;
    const double prior_scale = std::max(std::sqrt(resid_var), 1e-6);

    const auto sigmoid = [](double u) { return 1.0 / (1.0 + std::exp(-u)); };
    const auto theta_of = [&](double u) { return kThetaLower + span * sigmoid(u); };

    const auto log_post = [&](double u, double log_sigma) {
        const double theta = theta_of(u);
        const double s = sigmoid(u);
        const double sigma_eps = std::exp(log_sigma);
        // uniform prior on theta -> logit Jacobian; half-normal on sigma_eps
        // -> log-scale Jacobian
        double lp = std::log(s) + std::log1p(-s);
        lp += -0.5 * sigma_eps * sigma_eps / (prior_scale * prior_scale) + log_sigma;
        for (std::size_t i = 0; i < n; ++i) {
            const double m = run.emulators[i].predict_mean(theta) + run.delta_hat[i];
            const double var =
                (mcmc.use_emulator_variance ? run.emulators[i].predict_var(theta) : 0.0) +
                sigma_eps * sigma_eps;
            const double r = design.obs[i] - m;
            lp += -0.5 * (std::log(2.0 * M_PI * var) + r * r / var);
        }
        return lp;
    };

    // Start at the best design point.
    const double theta0 =
        std::clamp(design.thetas[best_design], kThetaLower + 1e-6 * span,
                   kThetaUpper - 1e-6 * span);
    double u = std::log((theta0 - kThetaLower) / (kThetaUpper - theta0));
    double log_sigma = std::log(prior_scale);
    double lp = log_post(u, log_sigma);

    Rng rng(mcmc.seed);
    double step = mcmc.initial_step;
    long accepted_post = 0;
    run.posterior_samples.reserve(static_cast<std::size_t>(mcmc.iterations - mcmc.burn_in));
    std::vector<double> sigma_samples;
    sigma_samples.reserve(run.posterior_samples.capacity());

    for (int it = 0; it < mcmc.iterations; ++it) {
        const double u_prop = u + step * rng.normal();
        const double ls_prop = log_sigma + 0.5 * step * rng.normal();
        const double lp_prop = log_post(u_prop, ls_prop);
        const bool accept = std::log(rng.uniform01() + 1e-300) < lp_prop - lp;
        if (accept) {
            u = u_prop;
            log_sigma = ls_prop;
            lp = lp_prop;
        }
        if (it < mcmc.burn_in) {
            // Robbins-Monro adaptation toward the target acceptance rate
            const double gamma = 1.0 / std::sqrt(1.0 + it);
            step *= std::exp(gamma * ((accept ? 1.0 : 0.0) - mcmc.target_accept));
            step = std::clamp(step, 1e-4, 1e2);
        } else {
            if (accept) ++accepted_post;
            run.posterior_samples.push_back(theta_of(u));
            sigma_samples.push_back(std::exp(log_sigma));
        }
    }

    const auto n_kept = static_cast<double>(run.posterior_samples.size());
    run.acceptance_rate = accepted_post / n_kept;
    if (run.acceptance_rate < 0.05 || run.acceptance_rate > 0.95) {
        throw NumericError("calibrate: acceptance rate " +
                           std::to_string(run.acceptance_rate) +
                           " outside [0.05, 0.95] after adaptation");
    }

    run.theta_star = std::accumulate(run.posterior_samples.begin(),
                                     run.posterior_samples.end(), 0.0) / n_kept;
    run.sigma_eps = std::accumulate(sigma_samples.begin(), sigma_samples.end(), 0.0) / n_kept;

    std::vector<double> sorted = run.posterior_samples;
    std::sort(sorted.begin(), sorted.end());
    const auto quantile = [&](double q) {
        const double pos = q * (sorted.size() - 1);
        const auto left = static_cast<std::size_t>(pos);
        const std::size_t right = std::min(left + 1, sorted.size() - 1);
        const double frac = pos - static_cast<double>(left);
        return sorted[left] * (1.0 - frac) + sorted[right] * frac;
    };
    run.credible_interval = {quantile(0.025), quantile(0.975)};
    return run;
}

} // namespace pdflood
