#include "pdflood/student_t.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace pdflood {

namespace {

// Continued-fraction part of the regularized incomplete beta function
// (modified Lentz); valid for x < (a+1)/(a+b+2).
double beta_cf(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-16;
    constexpr int kMaxIter = 500;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw NumericError("incomplete beta continued fraction did not converge");
}

// Regularized incomplete beta I_x(a, b).
double ibeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

void require_dof(int dof, int minimum, const char* what) {
    if (dof < minimum) {
        throw InputError(std::string(what) + ": dof must be >= " +
                         std::to_string(minimum) + ", got " + std::to_string(dof));
    }
}

} // namespace

double t_pdf(double x, int dof) {
    require_dof(dof, 1, "t_pdf");
    const double nu = dof;
    const double log_c = std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) -
                         0.5 * std::log(nu * M_PI);
    return std::exp(log_c - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
}

double t_cdf(double x, int dof) {
    require_dof(dof, 1, "t_cdf");
    if (x == 0.0) return 0.5;
    const double nu = dof;
    const double tail = 0.5 * ibeta(nu / 2.0, 0.5, nu / (nu + x * x));
    return x > 0.0 ? 1.0 - tail : tail;
}

double t_quantile(double p, int dof) {
    require_dof(dof, 1, "t_quantile");
    if (!(p > 0.0 && p < 1.0)) {
        throw InputError("t_quantile: p must lie strictly in (0, 1)");
    }
    if (p == 0.5) return 0.0;
    if (p > 0.5) return -t_quantile(1.0 - p, dof); // exact symmetry

    // p < 0.5: root of F(x) - p on x < 0. Bracket by doubling, then
    // safeguarded Newton.
    double hi = 0.0;
    double lo = -1.0;
    while (t_cdf(lo, dof) > p) {
        hi = lo;
        lo *= 2.0;
        if (lo < -1e300) throw NumericError("t_quantile: bracketing failed");
    }
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double f = t_cdf(x, dof) - p;
        if (f > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        const double dfdx = t_pdf(x, dof);
        double step = dfdx > 0.0 ? f / dfdx : 0.0;
        double next = x - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi); // bisect fallback
        if (std::fabs(f) < 1e-13 && std::fabs(next - x) <= 1e-12 * (1.0 + std::fabs(x))) {
            return next;
        }
        x = next;
    }
    return x;
}

void validate(const TPredictive& law) {
    if (!(law.scale > 0.0) || !std::isfinite(law.scale)) {
        throw InputError("TPredictive: scale must be positive and finite");
    }
    if (law.dof < 2) {
        throw InputError("TPredictive: dof must be >= 2, got " + std::to_string(law.dof));
    }
    if (!std::isfinite(law.location)) {
        throw InputError("TPredictive: location must be finite");
    }
}

void validate(const MixturePredictive& law) {
    validate(law.t);
    if (!(law.pi >= 0.0 && law.pi <= 1.0)) {
        throw InputError("MixturePredictive: pi must lie in [0, 1]");
    }
}

double clamped_mean(const TPredictive& law) {
    validate(law);
    const double mu = law.location;
    const double sigma = law.scale;
    const double nu = law.dof;
    const double a = -mu / sigma;
    const double partial = t_pdf(a, law.dof) * (nu + a * a) / (nu - 1.0);
    return mu * (1.0 - t_cdf(a, law.dof)) + sigma * partial;
}

double clamped_quantile(const TPredictive& law, double p) {
    validate(law);
    return std::max(law.location + law.scale * t_quantile(p, law.dof), 0.0);
}

double exceed_prob(const TPredictive& law, double depth) {
    validate(law);
    if (!(depth > 0.0)) {
        throw InputError("exceed_prob: depth must be > 0 (the clamp mass sits at 0)");
    }
    return 1.0 - t_cdf((depth - law.location) / law.scale, law.dof);
}

double mixture_mean(const MixturePredictive& law) {
    validate(law);
    if (law.pi == 0.0) return 0.0;
    return law.pi * clamped_mean(law.t);
}

double mixture_quantile(const MixturePredictive& law, double p) {
    validate(law);
    if (!(p > 0.0 && p < 1.0)) {
        throw InputError("mixture_quantile: p must lie strictly in (0, 1)");
    }
    const double mass_at_zero =
        (1.0 - law.pi) + law.pi * t_cdf(-law.t.location / law.t.scale, law.t.dof);
    if (p <= mass_at_zero) return 0.0;
    const double pt = (p - (1.0 - law.pi)) / law.pi;
    return law.t.location + law.t.scale * t_quantile(pt, law.t.dof);
}

double mixture_exceed_prob(const MixturePredictive& law, double depth) {
    validate(law);
    if (!(depth > 0.0)) {
        throw InputError("mixture_exceed_prob: depth must be > 0");
    }
    if (law.pi == 0.0) return 0.0;
    return law.pi * (1.0 - t_cdf((depth - law.t.location) / law.t.scale, law.t.dof));
}

} // namespace pdflood
