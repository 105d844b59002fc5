#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pdflood/flood_probability.hpp"
#include "pdflood/synthetic.hpp"
#include "support/oracles.hpp"

using namespace pdflood;

namespace {

// elevation ramp with wet cells wherever depth > 0
struct RampCase {
    Grid depth;
    Grid elev;
};

// nrows*ncols cells with elevations spread over [lo, hi]; a cell is wet iff
// its elevation is below the waterline, except `pockets` dry cells pushed
// below it to create an overlap window.
RampCase make_ramp(int nrows, int ncols, double lo, double hi, double waterline,
                   int pockets) {
    RampCase rc{Grid(nrows, ncols, 10.0), Grid(nrows, ncols, 10.0)};
    const int n = nrows * ncols;
    std::mt19937_64 rng(17);
    for (int c = 0; c < n; ++c) {
        const double e = lo + (hi - lo) * (c + 0.5) / n;
        rc.elev[static_cast<std::size_t>(c)] = e;
        rc.depth[static_cast<std::size_t>(c)] = e < waterline ? waterline - e : 0.0;
    }
    // dry pockets below the waterline widen [e_lo, e_hi]
    for (int k = 0; k < pockets; ++k) {
        const auto c = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
        if (rc.elev[c] < waterline - 0.05) rc.depth[c] = 0.0;
    }
    return rc;
}

} // namespace

TEST_CASE("build_bins splits the window into equal-width bins") {
    // lowest dry at 21.9, highest wet at 25.1, k = 8 -> width 0.4 and
    // midpoints 22.1, 22.5, ..., 24.9
    Grid depth(1, 4, 10.0);
    Grid elev(1, 4, 10.0);
    elev(0, 0) = 21.9;
    depth(0, 0) = 0.0; // lowest dry
    elev(0, 1) = 25.1;
    depth(0, 1) = 0.7; // highest wet
    elev(0, 2) = 23.0;
    depth(0, 2) = 0.4;
    elev(0, 3) = 24.0;
    depth(0, 3) = 0.0;
    const ElevationBins bins = build_bins(depth, elev, 8);
    CHECK(bins.e_lo == doctest::Approx(21.9));
    CHECK(bins.e_hi == doctest::Approx(25.1));
    CHECK(bins.bin_width() == doctest::Approx(0.4));
    REQUIRE(bins.k == 8);
    for (int b = 0; b < 8; ++b) {
        CHECK(bins.midpoints[static_cast<std::size_t>(b)] ==
              doctest::Approx(22.1 + 0.4 * b));
    }
}

TEST_CASE("build_bins proportions") {
    const RampCase rc = make_ramp(10, 10, 20.0, 24.0, 22.0, 12);
    const ElevationBins bins = build_bins(rc.depth, rc.elev, 8);
    REQUIRE(!bins.degenerate());

    // direct counting oracle over the same window
    std::vector<int> total(8, 0), wet(8, 0);
    const double width = (bins.e_hi - bins.e_lo) / 8.0;
    for (std::size_t c = 0; c < rc.depth.size(); ++c) {
        const double e = rc.elev[c];
        if (e < bins.e_lo || e > bins.e_hi) continue;
        const int b = std::min(static_cast<int>((e - bins.e_lo) / width), 7);
        total[static_cast<std::size_t>(b)] += 1;
        if (rc.depth[c] > 0.0) wet[static_cast<std::size_t>(b)] += 1;
    }
    for (int b = 0; b < 8; ++b) {
        CHECK(bins.counts[static_cast<std::size_t>(b)] == total[static_cast<std::size_t>(b)]);
        if (total[static_cast<std::size_t>(b)] > 0) {
            CHECK(bins.proportions[static_cast<std::size_t>(b)] ==
                  doctest::Approx(static_cast<double>(wet[static_cast<std::size_t>(b)]) /
                                  total[static_cast<std::size_t>(b)]));
        }
    }
}

TEST_CASE("build_bins error paths") {
    Grid depth(1, 4, 10.0);
    Grid elev(1, 4, 10.0);
    for (int j = 0; j < 4; ++j) elev(0, j) = 20.0 + j;
    SUBCASE("no wet cells") { CHECK_THROWS_AS(build_bins(depth, elev, 8), InputError); }
    SUBCASE("no dry cells") {
        for (int j = 0; j < 4; ++j) depth(0, j) = 1.0;
        CHECK_THROWS_AS(build_bins(depth, elev, 8), InputError);
    }
    SUBCASE("k too small") {
        depth(0, 0) = 1.0;
        CHECK_THROWS_AS(build_bins(depth, elev, 1), InputError);
    }
}

TEST_CASE("perfectly separable terrain degenerates to a step") {
    // every wet cell strictly below every dry cell
    Grid depth(1, 4, 10.0);
    Grid elev(1, 4, 10.0);
    elev(0, 0) = 20.0;
    depth(0, 0) = 2.0;
    elev(0, 1) = 20.5;
    depth(0, 1) = 1.5;
    elev(0, 2) = 22.0;
    elev(0, 3) = 23.0;
    const ElevationBins bins = build_bins(depth, elev, 8);
    CHECK(bins.degenerate());
    CHECK(bins.e_lo == doctest::Approx(22.0));
    CHECK(bins.e_hi == doctest::Approx(20.5));

    const PiCurve curve = fit_pi(bins);
    CHECK(curve.degenerate());
    // the step is 1{E < e_lo}
    CHECK(pi_at(curve, 19.0) == 1.0);
    CHECK(pi_at(curve, 21.0) == 1.0);
    CHECK(pi_at(curve, 22.0) == 0.0);
    CHECK(pi_at(curve, 25.0) == 0.0);
}

TEST_CASE("fit_pi constant proportions produce a constant curve") {
    ElevationBins bins;
    bins.e_lo = 20.0;
    bins.e_hi = 24.0;
    bins.k = 4;
    bins.midpoints = {20.5, 21.5, 22.5, 23.5};
    bins.proportions = {1.0, 1.0, 1.0, 1.0};
    bins.counts = {5, 5, 5, 5};
    const PiCurve curve = fit_pi(bins);
    for (double e : {20.1, 21.0, 22.7, 23.9}) {
        CHECK(pi_at(curve, e) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("fit_pi interpolates the bin proportions as nugget -> 0") {
    ElevationBins bins;
    bins.e_lo = 21.9;
    bins.e_hi = 25.1;
    bins.k = 8;
    bins.counts.assign(8, 10);
    bins.proportions = {1.0, 1.0, 0.8, 0.4, 0.1, 0.0, 0.0, 0.0};
    for (int b = 0; b < 8; ++b) bins.midpoints.push_back(22.1 + 0.4 * b);

    PiCurveConfig config;
    config.nugget = 1e-10;
    const PiCurve curve = fit_pi(bins, config);
    for (int b = 0; b < 8; ++b) {
        CHECK(pi_at(curve, bins.midpoints[static_cast<std::size_t>(b)]) ==
              doctest::Approx(bins.proportions[static_cast<std::size_t>(b)])
                  .epsilon(1e-6)
                  .scale(1.0));
    }
}

TEST_CASE("fit_pi matches an independent dense linear-algebra oracle") {
    ElevationBins bins;
    bins.e_lo = 21.9;
    bins.e_hi = 25.1;
    bins.k = 8;
    bins.counts.assign(8, 10);
    bins.proportions = {1.0, 1.0, 0.8, 0.4, 0.1, 0.0, 0.0, 0.0};
    for (int b = 0; b < 8; ++b) bins.midpoints.push_back(22.1 + 0.4 * b);

    PiCurveConfig config; // defaults: lengthscale 2*width, sample variance, 1e-4 nugget
    const PiCurve curve = fit_pi(bins, config);

    // the oracle solves the same centered kernel system by Gauss-Jordan
    const double mean = (1.0 + 1.0 + 0.8 + 0.4 + 0.1) / 8.0;
    std::vector<double> yc;
    for (double p : bins.proportions) yc.push_back(p - mean);
    double variance = 0.0;
    for (double v : yc) variance += v * v;
    variance /= 8.0;
    const auto reference =
        oracles::gp_reference_mean(bins.midpoints, yc, bins.midpoints, variance,
                                   2.0 * bins.bin_width(), 1e-4);
    for (int b = 0; b < 8; ++b) {
        const double expected =
            std::clamp(mean + reference[static_cast<std::size_t>(b)], 0.0, 1.0);
        CHECK(pi_at(curve, bins.midpoints[static_cast<std::size_t>(b)]) ==
              doctest::Approx(expected).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("empty bins are excluded from the GP conditioning") {
    ElevationBins bins;
    bins.e_lo = 20.0;
    bins.e_hi = 24.0;
    bins.k = 4;
    bins.midpoints = {20.5, 21.5, 22.5, 23.5};
    bins.proportions = {1.0, 0.0, 0.6, 0.2}; // second bin is empty
    bins.counts = {10, 0, 10, 10};
    PiCurveConfig config;
    config.nugget = 1e-10;
    const PiCurve curve = fit_pi(bins, config);
    // conditioned midpoints interpolate; the empty bin's zero is ignored and
    // the curve bridges its window instead of dipping to 0
    CHECK(pi_at(curve, 20.5) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(pi_at(curve, 22.5) == doctest::Approx(0.6).epsilon(1e-5));
    CHECK(pi_at(curve, 23.5) == doctest::Approx(0.2).epsilon(1e-5));
    CHECK(pi_at(curve, 21.5) > 0.3);
}

TEST_CASE("optional MLE refinement keeps a sane curve") {
    ElevationBins bins;
    bins.e_lo = 21.9;
    bins.e_hi = 25.1;
    bins.k = 8;
    bins.counts.assign(8, 20);
    bins.proportions = {1.0, 0.95, 0.8, 0.55, 0.3, 0.12, 0.05, 0.0};
    for (int b = 0; b < 8; ++b) bins.midpoints.push_back(22.1 + 0.4 * b);

    PiCurveConfig refined;
    refined.refine_mle = true;
    const PiCurve curve = fit_pi(bins, refined);
    CHECK(curve.lengthscale() > 0.0);
    CHECK(curve.variance() > 0.0);
    // still roughly tracks the data and stays within range
    for (int b = 0; b < 8; ++b) {
        const double value = pi_at(curve, bins.midpoints[static_cast<std::size_t>(b)]);
        CHECK(value >= 0.0);
        CHECK(value <= 1.0);
        CHECK(std::fabs(value - bins.proportions[static_cast<std::size_t>(b)]) < 0.2);
    }
}

TEST_CASE("fit_pi requires two nonempty bins") {
    ElevationBins bins;
    bins.e_lo = 20.0;
    bins.e_hi = 24.0;
    bins.k = 4;
    bins.midpoints = {20.5, 21.5, 22.5, 23.5};
    bins.proportions = {1.0, 0.0, 0.0, 0.0};
    bins.counts = {5, 0, 0, 0};
    CHECK_THROWS_AS(fit_pi(bins), InputError);
}

TEST_CASE("pi boundary values and range") {
    const RampCase rc = make_ramp(12, 12, 20.0, 24.0, 22.0, 20);
    const ElevationBins bins = build_bins(rc.depth, rc.elev, 8);
    const PiCurve curve = fit_pi(bins);

    CHECK(pi_at(curve, bins.e_lo - 1.0) == 1.0);
    CHECK(pi_at(curve, bins.e_lo) == 1.0);
    CHECK(pi_at(curve, bins.e_hi) == 0.0);
    CHECK(pi_at(curve, bins.e_hi + 1.0) == 0.0);
    CHECK_THROWS_AS(pi_at(curve, std::nan("")), InputError);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> elevation(15.0, 30.0);
    for (int k = 0; k < 10000; ++k) {
        const double pi = pi_at(curve, elevation(rng));
        CHECK(pi >= 0.0);
        CHECK(pi <= 1.0);
    }
}

TEST_CASE("step-terrain curve stays near the true indicator") {
    // wetness = 1{E < W} exactly, with dry pockets supplying the overlap
    const RampCase rc = make_ramp(40, 40, 20.0, 24.0, 22.0, 160);
    const ElevationBins bins = build_bins(rc.depth, rc.elev, 8);
    REQUIRE(!bins.degenerate());
    const PiCurve curve = fit_pi(bins);

    double total_dev = 0.0;
    int checked = 0;
    for (int b = 0; b < bins.k; ++b) {
        if (bins.counts[static_cast<std::size_t>(b)] == 0) continue;
        const double mid = bins.midpoints[static_cast<std::size_t>(b)];
        const double truth = mid < 22.0 ? 1.0 : 0.0;
        total_dev += std::fabs(pi_at(curve, mid) - truth);
        ++checked;
    }
    REQUIRE(checked > 0);
    CHECK(total_dev / checked <= 0.15);
}

TEST_CASE("resolution consistency on the synthetic valley") {
    // proportions binned from the fine truth and from the coarse projection
    // stay within 0.1 of each other for well-populated bins
    ValleySpec spec;
    spec.nrows = 200;
    spec.ncols = 200;
    spec.cross_slope = 0.04;
    spec.noise_amp = 0.35;
    spec.seed = 2021;
    const Grid fine_elev = make_valley(spec);
    const auto channel = row_cells(fine_elev, spec.channel_row);
    const double waterline = 21.6;

    const FloodTruth fine_truth = bathtub_flood(fine_elev, channel, waterline);
    const Grid coarse_depth = coarse_flood(fine_elev, 2, channel, waterline);
    const Grid coarse_elev = aggregate(fine_elev, 2);

    const ElevationBins fine_bins = build_bins(fine_truth.depth, fine_elev, 8);
    REQUIRE(!fine_bins.degenerate());

    // evaluate the coarse proportions over the fine window so bins align
    std::vector<int> total(8, 0), wet(8, 0);
    const double width = fine_bins.bin_width();
    for (std::size_t c = 0; c < coarse_depth.size(); ++c) {
        const double e = coarse_elev[c];
        if (e < fine_bins.e_lo || e > fine_bins.e_hi) continue;
        const int b = std::min(static_cast<int>((e - fine_bins.e_lo) / width), 7);
        total[static_cast<std::size_t>(b)] += 1;
        if (coarse_depth[c] > 0.0) wet[static_cast<std::size_t>(b)] += 1;
    }
    for (int b = 0; b < 8; ++b) {
        if (fine_bins.counts[static_cast<std::size_t>(b)] < 30 ||
            total[static_cast<std::size_t>(b)] < 30) {
            continue;
        }
        const double coarse_prop = static_cast<double>(wet[static_cast<std::size_t>(b)]) /
                                   total[static_cast<std::size_t>(b)];
        CHECK(std::fabs(fine_bins.proportions[static_cast<std::size_t>(b)] - coarse_prop) <=
              0.1);
    }
}
