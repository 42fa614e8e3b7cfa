#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "conewalk/ergodics.hpp"

#include "helpers.hpp"

#include <cmath>
#include <numeric>

using namespace conewalk;
using namespace conewalk::testing;

namespace {

DiffusionModel rbm1(double b = -1.0, double s = 1.0) {
    return DiffusionModel(1, AffineDrift{vec1(b), Mat::Zero(1, 1)},
                          ConstantSigma{Mat::Constant(1, 1, s)}, std::max(std::abs(s), 1.0), 1.0);
}

PolyhedralCone half_line() { return build_cone({vec1(1)}, {vec1(1)}); }

SetSpec interval01() {
    SetSpec set;
    set.kind = SetSpec::Kind::box;
    set.lo = vec1(0.0);
    set.hi = vec1(1.0);
    return set;
}

}  // namespace

TEST_CASE("hitting time is zero when the start is already inside") {
    const auto estimates = estimate_hitting_time(rbm1(), half_line(), interval01(), {vec1(0.5)},
                                                 16, 1e-2, 50.0, 1);
    REQUIRE(estimates.size() == 1);
    CHECK(estimates[0].mean == 0.0);
    CHECK(estimates[0].stderr_mean == 0.0);
    CHECK(estimates[0].censored == 0);
}

TEST_CASE("hitting times are finite, ordered in |x|, and stderr shrinks") {
    const DiffusionModel model = rbm1();
    const PolyhedralCone line = half_line();
    const SetSpec target = interval01();

    const auto estimates = estimate_hitting_time(model, line, target,
                                                 {vec1(2.0), vec1(4.0), vec1(8.0)}, 400, 1e-2,
                                                 200.0, 33);
    REQUIRE(estimates.size() == 3);
    for (const auto& est : estimates) {
        CHECK_FALSE(est.all_censored);
        CHECK(est.censored <= 4);  // 1% censoring budget
        CHECK(est.mean > 0.0);
        CHECK(est.mean < 200.0);
    }
    CHECK(estimates[0].mean < estimates[1].mean);
    CHECK(estimates[1].mean < estimates[2].mean);

    // Quadrupling the sample count roughly halves the standard error.
    const auto small = estimate_hitting_time(model, line, target, {vec1(4.0)}, 300, 1e-2, 200.0, 7);
    const auto large = estimate_hitting_time(model, line, target, {vec1(4.0)}, 1200, 1e-2, 200.0, 7);
    const double shrink = large[0].stderr_mean / small[0].stderr_mean;
    CHECK(shrink > 0.5 * 0.7);
    CHECK(shrink < 0.5 * 1.3);
}

TEST_CASE("hitting time estimates are identical serial and parallel") {
    const auto serial = estimate_hitting_time(rbm1(), half_line(), interval01(), {vec1(3.0)}, 64,
                                              1e-2, 100.0, 11, ExecPolicy::serial);
    const auto parallel = estimate_hitting_time(rbm1(), half_line(), interval01(), {vec1(3.0)}, 64,
                                                1e-2, 100.0, 11, ExecPolicy::parallel);
    CHECK(serial[0].mean == parallel[0].mean);
    CHECK(serial[0].stderr_mean == parallel[0].stderr_mean);
    CHECK(serial[0].censored == parallel[0].censored);
}

TEST_CASE("unreachable targets censor every path and flag the result") {
    SetSpec far;
    far.kind = SetSpec::Kind::ball;
    far.center = vec1(500.0);
    far.radius = 0.25;
    const auto estimates =
        estimate_hitting_time(rbm1(), half_line(), far, {vec1(1.0)}, 16, 1e-2, 5.0, 3);
    CHECK(estimates[0].all_censored);
    CHECK(estimates[0].censored == 16);
    CHECK(estimates[0].mean == 5.0);
}

TEST_CASE("occupation histogram of a constant path puts all mass in one bin") {
    const DiffusionModel still = rbm1(0.0, 0.0);
    const SimPath path = simulate_path(vec1(1.3), still, half_line(), 2.0, 0.1, 5);
    const OccupationHistogram hist = occupation_measure(path, vec1(0.0), vec1(4.0), {8});
    CHECK(hist.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hist.mass[2] == doctest::Approx(1.0));  // 1.3 lies in bin [1.0, 1.5)
    CHECK(hist.out_of_box_mass == 0.0);

    CHECK_THROWS_AS(occupation_measure(path, vec1(4.0), vec1(0.0), {8}), Error);
    CHECK_THROWS_AS(occupation_measure(path, vec1(0.0), vec1(4.0), {0}), Error);
}

TEST_CASE("histogram mass accounting includes out-of-box time") {
    const DiffusionModel model = rbm1();
    const SimPath path = simulate_path(vec1(3.0), model, half_line(), 20.0, 1e-2, 17);
    const OccupationHistogram hist = occupation_measure(path, vec1(0.0), vec1(1.0), {4});
    CHECK(hist.total_mass() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(hist.out_of_box_mass > 0.0);
    CHECK(hist.elapsed == doctest::Approx(20.0));
}

TEST_CASE("histogram bins are permutation consistent across axes") {
    Vec b0 = vec2(-1, -0.5);
    const PolyhedralCone orthant = build_cone({vec2(1, 0), vec2(0, 1)}, {vec2(1, 0), vec2(0, 1)});
    const DiffusionModel model(2, AffineDrift{b0, Mat::Zero(2, 2)},
                               ConstantSigma{Mat::Identity(2, 2)}, 1.0, 1.0);
    const SimPath path = simulate_path(vec2(1, 1), model, orthant, 30.0, 1e-2, 23);

    // Swap the two coordinates of the same path and the box.
    SimPath swapped = path;
    for (Vec& x : swapped.grid.values) std::swap(x(0), x(1));
    const OccupationHistogram a = occupation_measure(path, vec2(0, 0), vec2(3, 2), {6, 4});
    const OccupationHistogram b = occupation_measure(swapped, vec2(0, 0), vec2(2, 3), {4, 6});
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 4; ++j) {
            CHECK(a.mass[a.flat_index({i, j})] == b.mass[b.flat_index({j, i})]);
        }
    }
}

TEST_CASE("long-run occupation approaches the analytic exponential density") {
    const DiffusionModel model = rbm1();
    const SimPath path = simulate_path(vec1(0.5), model, half_line(), 400.0, 1e-3, 90210);
    const int bins = 20;
    const OccupationHistogram hist = occupation_measure(path, vec1(0.0), vec1(4.0), {bins});

    // Stationary density 2 exp(-2y): compare bin masses, sup error normalized
    // by the largest analytic bin mass.
    const double width = 4.0 / bins;
    double sup_err = 0.0, max_mass = 0.0;
    for (int i = 0; i < bins; ++i) {
        const double lo = i * width;
        const double analytic = std::exp(-2.0 * lo) - std::exp(-2.0 * (lo + width));
        max_mass = std::max(max_mass, analytic);
        sup_err = std::max(sup_err, std::abs(hist.mass[static_cast<std::size_t>(i)] - analytic));
    }
    CHECK(sup_err / max_mass <= 0.15);
}

TEST_CASE("invariant measure estimate matches the analytic mean and scaling") {
    const PolyhedralCone line = half_line();
    const InvariantEstimate base = estimate_invariant_measure(
        rbm1(-1.0, 1.0), line, vec1(0.5), 20.0, 1520.0, 1e-3, vec1(0.0), vec1(4.0), {40}, 5);
    CHECK(base.mean(0) > 0.45);
    CHECK(base.mean(0) < 0.55);
    CHECK(base.half_discrepancy < 0.1);
    CHECK(base.histogram.total_mass() == doctest::Approx(1.0).epsilon(1e-9));

    // sigma doubled: stationary mean sigma^2/(2|b|) quadruples to 2.
    const InvariantEstimate wide = estimate_invariant_measure(
        rbm1(-1.0, 2.0), line, vec1(0.5), 20.0, 1520.0, 1e-3, vec1(0.0), vec1(12.0), {40}, 5);
    CHECK(wide.mean(0) > 1.8);
    CHECK(wide.mean(0) < 2.2);

    CHECK_THROWS_AS(estimate_invariant_measure(rbm1(), line, vec1(0.5), 10.0, 5.0, 1e-3,
                                               vec1(0.0), vec1(4.0), {40}, 5),
                    Error);
}

TEST_CASE("deterministic drift diagnostic reduces to the descent inequality") {
    // sigma = 0, drift -1, delta = 1: the exact 1-D hitting time is T(x) = x and
    // every block satisfies the descent with equality, nu_bar = 0.
    const DiffusionModel det = rbm1(-1.0, 0.0);
    const double h = 1e-3;
    const double Delta = 0.01;
    const SimPath path = simulate_path(vec1(21.0), det, half_line(), 20.0, h, 2);
    const auto exact = [](const Vec& z) { return z(0); };
    const DriftDiagnostic diag = lyapunov_drift_diagnostic(path, Delta, 2.0, 1.0, 0.0, exact, "exact-1d");
    CHECK(diag.scored_count == 2000);
    CHECK(diag.violation_count == 0);
    for (const DriftBlock& block : diag.blocks) {
        if (!block.scored) continue;
        CHECK(block.nu_bar == 0.0);
        CHECK(block.slack <= 1e-9);
        CHECK(block.slack >= -1e-9);  // equality in the deterministic reduction
    }
}

TEST_CASE("blocks that touch the small ball are skipped") {
    const DiffusionModel det = rbm1(-1.0, 0.0);
    const SimPath path = simulate_path(vec1(1.0), det, half_line(), 2.0, 1e-3, 2);
    const auto exact = [](const Vec& z) { return z(0); };
    const DriftDiagnostic diag =
        lyapunov_drift_diagnostic(path, 0.1, 2.0, 1.0, 0.5, exact, "exact-1d");
    CHECK(diag.scored_count < static_cast<int>(diag.blocks.size()));
    CHECK(diag.violation_count == 0);
    for (const DriftBlock& block : diag.blocks) {
        if (block.t_start > 0.6) CHECK_FALSE(block.scored);
    }

    CHECK_THROWS_AS(lyapunov_drift_diagnostic(path, 0.0015, 2.0, 1.0, 0.0, exact, "bad-delta"),
                    Error);
}

TEST_CASE("stochastic drift diagnostic has no violations with the exact estimator") {
    const DiffusionModel model = rbm1();
    const SimPath path = simulate_path(vec1(2.0), model, half_line(), 40.0, 1e-3, 314);
    const auto exact = [](const Vec& z) { return z(0); };  // delta = 1
    const DriftDiagnostic diag =
        lyapunov_drift_diagnostic(path, 0.02, 2.0, 1.0, 0.0, exact, "exact-1d");
    CHECK(diag.scored_count > 500);
    CHECK(diag.violation_count == 0);
}

TEST_CASE("exponential moment bound arithmetic and monte carlo comparison") {
    const DiffusionModel model = rbm1();
    const PolyhedralCone line = half_line();

    const ExpMomentResult one = exp_moment_check(model, line, vec1(2.0), 1.0, 0.1, 1, 2000, 1e-3, 8);
    CHECK(one.bound == doctest::Approx(2.0 * std::sqrt(2.0) * std::exp(0.1)).epsilon(1e-12));
    CHECK(one.pass);
    CHECK(one.estimate < one.bound);
    CHECK(one.estimate > 1.0);

    // Two blocks: the bound squares.
    const ExpMomentResult two = exp_moment_check(model, line, vec1(2.0), 1.0, 0.1, 2, 500, 1e-3, 8);
    CHECK(two.bound == doctest::Approx(one.bound * one.bound).epsilon(1e-12));

    // kappa -> 0: the estimate approaches 1, far below 2 sqrt(2).
    const ExpMomentResult tiny =
        exp_moment_check(model, line, vec1(2.0), 1e-8, 0.1, 1, 200, 1e-3, 8);
    CHECK(tiny.estimate == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(tiny.pass);

    const ExpMomentResult serial = exp_moment_check(model, line, vec1(2.0), 1.0, 0.1, 1, 256, 1e-3,
                                                    21, ExecPolicy::serial);
    const ExpMomentResult parallel = exp_moment_check(model, line, vec1(2.0), 1.0, 0.1, 1, 256,
                                                      1e-3, 21, ExecPolicy::parallel);
    CHECK(serial.log_estimate == parallel.log_estimate);
}

TEST_CASE("huge exponents stay finite in log space") {
    const ExpMomentResult result =
        exp_moment_check(rbm1(), half_line(), vec1(2.0), 200.0, 0.1, 4, 64, 1e-3, 13);
    CHECK(std::isfinite(result.log_estimate));
    CHECK(std::isfinite(result.log_bound));
    CHECK(result.log_estimate > 0.0);
    // The comparison itself runs in log space even when exp() would overflow.
    CHECK(result.pass == (result.log_estimate <=
                          result.log_bound + std::log1p(3.0 * result.stderr_fraction)));
}

TEST_CASE("exp moment bound is monotone in its parameters") {
    const auto log_bound = [](double kappa, double Delta, double gamma, int k, int blocks) {
        return blocks * (std::log(2.0 * std::sqrt(2.0)) +
                         static_cast<double>(k) * k * kappa * kappa * gamma * gamma * Delta);
    };
    CHECK(log_bound(1.0, 0.1, 1.0, 1, 1) < log_bound(2.0, 0.1, 1.0, 1, 1));
    CHECK(log_bound(1.0, 0.1, 1.0, 1, 1) < log_bound(1.0, 0.2, 1.0, 1, 1));
    CHECK(log_bound(1.0, 0.1, 1.0, 1, 1) < log_bound(1.0, 0.1, 2.0, 1, 1));
    CHECK(log_bound(1.0, 0.1, 1.0, 1, 1) < log_bound(1.0, 0.1, 1.0, 2, 1));
    CHECK(log_bound(1.0, 0.1, 1.0, 1, 1) < log_bound(1.0, 0.1, 1.0, 1, 2));
}

TEST_CASE("tightness table endpoints and monotonicity") {
    const DiffusionModel model = rbm1();
    const TrajectoryEnsemble ensemble =
        simulate_ensemble({vec1(0.5)}, model, half_line(), 100.0, 1e-2, 200, 424242);
    const auto rows = tightness_diagnostic(ensemble, {0.0, 1.0, 2.0, 4.0, 1e9});
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].max_frequency == 1.0);   // M0 = 0
    CHECK(rows[4].max_frequency == 0.0);   // beyond every observed sup
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].max_frequency <= rows[i - 1].max_frequency);
    }
    // Block suprema follow the level hitting times, not the pointwise tail:
    // E tau_4 = (e^8-1)/2 - 4 ~ 1486, so a 36-length block crosses level 4 with
    // probability ~ 1 - exp(-36/1486) ~ 0.024.
    CHECK(rows[3].max_frequency <= 0.05);
    CHECK(rows[2].max_frequency <= 0.85);
}
