#pragma once

#include "pdflood/errors.hpp"

namespace pdflood {

/// Density of the standard Student-t distribution with dof degrees of freedom.
double t_pdf(double x, int dof);

/// CDF of the standard Student-t distribution, evaluated through the
/// regularized incomplete beta function. Absolute accuracy better than 1e-10.
double t_cdf(double x, int dof);

/// Inverse CDF; satisfies t_cdf(t_quantile(p, dof), dof) == p within 1e-9
/// and t_quantile(1 - p) == -t_quantile(p) exactly. Requires 0 < p < 1.
double t_quantile(double p, int dof);

/// Shifted/scaled Student-t law for the flood height at one cell, clamped at
/// zero: max(location + scale * T(dof), 0).
struct TPredictive {
    double location = 0.0; ///< meters
    double scale = 1.0;    ///< meters, > 0
    int dof = 2;           ///< n - 1, >= 2
};

/// Zero-inflated law: (1 - pi) point mass at zero + pi * TPredictive.
struct MixturePredictive {
    double pi = 0.0; ///< probability the cell floods
    TPredictive t;
};

/// Mean of the zero-clamped law. With a = -location/scale:
///   E = location * (1 - F(a)) + scale * f(a) * (dof + a^2) / (dof - 1).
double clamped_mean(const TPredictive& law);

/// Quantile of the zero-clamped law: max(location + scale * t_quantile(p), 0).
double clamped_quantile(const TPredictive& law, double p);

/// P(max(location + scale*T, 0) > depth) for depth > 0.
double exceed_prob(const TPredictive& law, double depth);

double mixture_mean(const MixturePredictive& law);

/// Smallest q >= 0 with F(q) >= p where
/// F(q) = (1 - pi) + pi * F_t((q - location)/scale); 0 whenever p <= F(0).
double mixture_quantile(const MixturePredictive& law, double p);

/// pi * P(location + scale*T > depth) for depth > 0.
double mixture_exceed_prob(const MixturePredictive& law, double depth);

/// Throws InputError unless scale > 0 and dof >= 2.
void validate(const TPredictive& law);

/// Additionally requires 0 <= pi <= 1.
void validate(const MixturePredictive& law);

} // namespace pdflood
