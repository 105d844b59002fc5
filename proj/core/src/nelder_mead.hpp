#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace pdflood::detail {

struct NelderMeadResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    bool converged = false;
};

/// Downhill simplex minimization. Objectives may return non-finite values;
/// those vertices are treated as worst. Used for small (<= 4 dim) GP
/// hyperparameter searches, so no restarts or adaptive parameters.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> start, double step,
                                    int max_iter = 400, double tol = 1e-9) {
    const std::size_t dim = start.size();
    const auto safe_f = [&](const std::vector<double>& x) {
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };

    std::vector<std::vector<double>> simplex(dim + 1, start);
    std::vector<double> values(dim + 1);
    for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += step;
    for (std::size_t i = 0; i <= dim; ++i) values[i] = safe_f(simplex[i]);

    NelderMeadResult result;
    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<std::size_t> order(dim + 1);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[dim > 0 ? dim - 1 : 0];

        if (std::fabs(values[worst] - values[best]) <=
            tol * (std::fabs(values[best]) + tol)) {
            result.converged = true;
            break;
        }

        std::vector<double> centroid(dim, 0.0);
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == worst) continue;
            for (std::size_t d = 0; d < dim; ++d) centroid[d] += simplex[i][d];
        }
        for (double& c : centroid) c /= static_cast<double>(dim);

        const auto blend = [&](double coef) {
            std::vector<double> x(dim);
            for (std::size_t d = 0; d < dim; ++d) {
                x[d] = centroid[d] + coef * (simplex[worst][d] - centroid[d]);
            }
            return x;
        };

        auto reflected = blend(-1.0);
        const double fr = safe_f(reflected);
        if (fr < values[order[0]]) {
            auto expanded = blend(-2.0);
            const double fe = safe_f(expanded);
            if (fe < fr) {
                simplex[worst] = std::move(expanded);
                values[worst] = fe;
            } else {
                simplex[worst] = std::move(reflected);
                values[worst] = fr;
            }
        } else if (fr < values[second_worst]) {
            simplex[worst] = std::move(reflected);
            values[worst] = fr;
        } else {
            auto contracted = blend(0.5);
            const double fc = safe_f(contracted);
            if (fc < values[worst]) {
                simplex[worst] = std::move(contracted);
                values[worst] = fc;
            } else {
                // shrink toward best
                for (std::size_t i = 0; i <= dim; ++i) {
                    if (i == best) continue;
                    for (std::size_t d = 0; d < dim; ++d) {
                        simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
                    }
                    values[i] = safe_f(simplex[i]);
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i <= dim; ++i) {
        if (values[i] < values[best]) best = i;
    }
    result.x = simplex[best];
    result.value = values[best];
    return result;
}

} // namespace pdflood::detail
