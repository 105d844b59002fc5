#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pdflood/student_t.hpp"
#include "support/oracles.hpp"

using namespace pdflood;

TEST_CASE("t_cdf symmetry") {
    CHECK(t_cdf(0.0, 4) == doctest::Approx(0.5));
    for (int dof : {1, 2, 4, 10, 30}) {
        for (double x : {0.1, 0.75, 2.0, 5.0, 20.0}) {
            CHECK(t_cdf(x, dof) + t_cdf(-x, dof) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(t_cdf(0.0, 0), InputError);
}

TEST_CASE("t_cdf agrees with adaptive quadrature of the density") {
    // the textbook anchor point first: F(2.7764, 4) ~ 0.975
    CHECK(t_cdf(2.7764, 4) == doctest::Approx(0.975).epsilon(1e-4));
    for (int dof : {1, 2, 3, 4, 7, 15, 30}) {
        for (double x : {-4.0, -1.3, -0.2, 0.4, 1.0, 2.7764, 6.0}) {
            const double expected = oracles::t_cdf_quadrature(x, dof);
            CHECK(std::fabs(t_cdf(x, dof) - expected) < 1e-10);
        }
    }
}

TEST_CASE("t_quantile basics") {
    CHECK(t_quantile(0.5, 7) == 0.0);
    CHECK(t_quantile(0.975, 4) == doctest::Approx(2.7764).epsilon(1e-3));
    CHECK(t_quantile(0.975, 4) ==
          doctest::Approx(oracles::t_quantile_bisect(0.975, 4.0)).epsilon(1e-8));
    for (int dof : {2, 5, 12}) {
        // exact mirror where 1 - p is exactly representable
        for (double p : {0.0625, 0.125, 0.25}) {
            CHECK(t_quantile(p, dof) == -t_quantile(1.0 - p, dof));
        }
        for (double p : {0.01, 0.2, 0.49, 0.7, 0.999}) {
            CHECK(t_quantile(p, dof) ==
                  doctest::Approx(-t_quantile(1.0 - p, dof)).epsilon(1e-9));
        }
    }
    CHECK_THROWS_AS(t_quantile(0.0, 4), InputError);
    CHECK_THROWS_AS(t_quantile(1.0, 4), InputError);
}

TEST_CASE("cdf and quantile are mutual inverses") {
    for (int dof = 2; dof <= 30; ++dof) {
        for (double p : {1e-6, 1e-3, 0.025, 0.3, 0.5, 0.8, 0.975, 1.0 - 1e-3, 1.0 - 1e-6}) {
            const double q = t_quantile(p, dof);
            CHECK(std::fabs(t_cdf(q, dof) - p) < 1e-9);
        }
    }
}

TEST_CASE("clamped_mean closed form") {
    SUBCASE("zero location, unit scale, dof 4: f(0) * 4/3 = 0.5") {
        CHECK(clamped_mean({0.0, 1.0, 4}) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("clamp inactive when location >> scale") {
        CHECK(clamped_mean({10.0, 0.1, 4}) == doctest::Approx(10.0).epsilon(1e-7));
    }
    SUBCASE("mass entirely clamped") {
        CHECK(clamped_mean({-10.0, 0.1, 4}) == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
    }
    SUBCASE("validation") {
        CHECK_THROWS_AS(clamped_mean({0.0, 1.0, 1}), InputError);
        CHECK_THROWS_AS(clamped_mean({0.0, 0.0, 4}), InputError);
    }
}

TEST_CASE("clamped_mean against a 1e7-draw Monte-Carlo oracle") {
    oracles::McRng rng(12345);
    const TPredictive law{0.0, 1.0, 4};
    const auto mc = oracles::mc_mean(
        [&] { return std::max(law.location + law.scale * rng.student_t(law.dof), 0.0); },
        10'000'000);
    const double got = clamped_mean(law);
    CHECK(std::fabs(got - mc.mean) < 3.0 * mc.standard_error);
}

TEST_CASE("exceed_prob") {
    CHECK(exceed_prob({0.3, 0.5, 4}, 0.3) == doctest::Approx(0.5));
    const double sigma = 0.17;
    const double location = 0.3 + 2.7764 * sigma;
    CHECK(exceed_prob({location, sigma, 4}, 0.3) == doctest::Approx(0.975).epsilon(1e-3));
    CHECK(exceed_prob({-100.0, 0.1, 4}, 0.3) == doctest::Approx(0.0));
    CHECK_THROWS_AS(exceed_prob({0.3, 0.5, 4}, 0.0), InputError);
    CHECK_THROWS_AS(exceed_prob({0.3, 0.5, 4}, -1.0), InputError);
}

TEST_CASE("exceed_prob monotonicity") {
    const TPredictive law{0.7, 0.4, 5};
    double previous = 1.0;
    for (double d = 0.05; d < 3.0; d += 0.05) {
        const double p = exceed_prob(law, d);
        CHECK(p <= previous);
        previous = p;
    }
    // increasing in location
    double prev_p = 0.0;
    for (double loc = -1.0; loc < 2.0; loc += 0.1) {
        const double p = exceed_prob({loc, 0.4, 5}, 0.3);
        CHECK(p >= prev_p);
        prev_p = p;
    }
}

TEST_CASE("mixture_mean") {
    CHECK(mixture_mean({0.0, {5.0, 1.0, 4}}) == 0.0);
    CHECK(mixture_mean({1.0, {10.0, 0.1, 4}}) == doctest::Approx(10.0).epsilon(1e-7));
    CHECK(mixture_mean({0.5, {0.0, 1.0, 4}}) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(mixture_mean({1.5, {0.0, 1.0, 4}}), InputError);
}

TEST_CASE("mixture_quantile") {
    // pi 0.5 puts at least half the mass at zero, so the 2.5% quantile is 0
    CHECK(mixture_quantile({0.5, {3.0, 1.0, 4}}, 0.025) == 0.0);
    CHECK(mixture_quantile({1.0, {2.0, 1.0, 4}}, 0.975) ==
          doctest::Approx(2.0 + 2.7764).epsilon(1e-3));
    CHECK(mixture_quantile({0.01, {5.0, 1.0, 4}}, 0.975) == 0.0);
    CHECK_THROWS_AS(mixture_quantile({0.5, {3.0, 1.0, 4}}, 1.0), InputError);
}

TEST_CASE("mixture_exceed_prob") {
    CHECK(mixture_exceed_prob({0.0, {5.0, 1.0, 4}}, 0.3) == 0.0);
    const MixturePredictive full{1.0, {0.8, 0.3, 4}};
    CHECK(mixture_exceed_prob(full, 0.3) == doctest::Approx(exceed_prob(full.t, 0.3)));
    CHECK(mixture_exceed_prob({0.4, {0.3, 0.5, 4}}, 0.3) == doctest::Approx(0.2));
    CHECK_THROWS_AS(mixture_exceed_prob({0.4, {0.3, 0.5, 4}}, 0.0), InputError);
}

TEST_CASE("fuzzed laws agree with a 1e6-draw Monte-Carlo sampler") {
    // Fuzz ranges keep the Monte-Carlo informative: standardized positions
    // within +-3.5 (tail mass stays above ~2e-4 for every dof), pi floored at
    // 0.05, and mean checks restricted to dof >= 5 where the clamped
    // variable's fourth moment exists so the empirical SE is trustworthy.
    // The deep-clamp and pi ~ 0 regimes are pinned by the exact-value cases
    // above.
    oracles::McRng fuzz(777);
    constexpr long kDraws = 1'000'000;
    int mean_checks = 0;

    for (int set = 0; set < 120; ++set) {
        const double scale = 0.05 + 1.95 * fuzz.uniform01();
        const double clamp_pos = -3.5 + 7.0 * fuzz.uniform01();
        const double location = -clamp_pos * scale;
        const int dof = 3 + static_cast<int>(fuzz.uniform01() * 27.9);
        const double pi = 0.05 + 0.95 * fuzz.uniform01();
        const double depth_pos = -3.5 + 7.0 * fuzz.uniform01();
        const double depth = std::max(location + depth_pos * scale, 0.01);
        const double p = set % 3 == 0 ? 0.025 : (set % 3 == 1 ? 0.975 : 0.5);

        const TPredictive t_law{location, scale, dof};
        const MixturePredictive mix{pi, t_law};

        oracles::McRng rng(1000 + static_cast<std::uint64_t>(set));
        std::vector<double> draws(kDraws);
        for (auto& d : draws) {
            const double t = std::max(location + scale * rng.student_t(dof), 0.0);
            d = rng.uniform01() < pi ? t : 0.0;
        }

        if (dof >= 5) {
            // mixture mean within 4 SE
            double sum = 0.0, sum_sq = 0.0;
            for (double d : draws) {
                sum += d;
                sum_sq += d * d;
            }
            const double mc_mean = sum / kDraws;
            const double mc_var = std::max(sum_sq / kDraws - mc_mean * mc_mean, 0.0);
            const double se = std::sqrt(mc_var / kDraws);
            CHECK(std::fabs(mixture_mean(mix) - mc_mean) <= 4.0 * se + 1e-9);

            // clamped mean through a fresh stream
            oracles::McRng rng2(5000 + static_cast<std::uint64_t>(set));
            const auto clamped = oracles::mc_mean(
                [&] { return std::max(location + scale * rng2.student_t(dof), 0.0); },
                kDraws / 4);
            CHECK(std::fabs(clamped_mean(t_law) - clamped.mean) <=
                  4.0 * clamped.standard_error + 1e-9);
            ++mean_checks;
        }

        // quantile: the empirical CDF at the reported quantile matches p
        const double q = mixture_quantile(mix, p);
        long below = 0;
        for (double d : draws) below += d <= q ? 1 : 0;
        const double cdf_hat = static_cast<double>(below) / kDraws;
        const double cdf_se = std::sqrt(p * (1.0 - p) / kDraws);
        if (q > 0.0) {
            CHECK(std::fabs(cdf_hat - p) <= 4.0 * cdf_se + 1e-9);
        } else {
            CHECK(cdf_hat >= p - 4.0 * cdf_se);
        }

        // exceedance within 4 SE of the empirical Bernoulli fraction
        long above = 0;
        for (double d : draws) above += d > depth ? 1 : 0;
        const double frac = static_cast<double>(above) / kDraws;
        const double frac_se = std::sqrt(std::max(frac * (1.0 - frac), 1e-12) / kDraws);
        CHECK(std::fabs(mixture_exceed_prob(mix, depth) - frac) <= 4.0 * frac_se + 1e-9);
    }
    CHECK(mean_checks >= 100);
}
