#ifndef CONEWALK_ERGODICS_HPP
#define CONEWALK_ERGODICS_HPP

#include "conewalk/diffusion.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace conewalk {

struct HittingTimeEstimate {
    Vec start;
    double mean = 0.0;
    double stderr_mean = 0.0;
    int censored = 0;
    int n = 0;
    bool all_censored = false;
};

/// Monte Carlo mean of the first entry time into the target set, one estimate
/// per start point. Paths that never enter by t_cap are counted at t_cap and
/// reported as censored (a lower-bias flag, never an exception).
std::vector<HittingTimeEstimate> estimate_hitting_time(
    const DiffusionModel& model, const PolyhedralCone& cone, const SetSpec& target,
    const std::vector<Vec>& x_list, int n_paths, double h, double t_cap, std::uint64_t seed,
    ExecPolicy policy = ExecPolicy::parallel);

/// Time-normalized occupation of axis-aligned bins, piecewise constant in time.
struct OccupationHistogram {
    Vec lo, hi;
    std::vector<int> bins;     // per axis
    std::vector<double> mass;  // normalized, row-major with the last axis fastest
    double out_of_box_mass = 0.0;
    double elapsed = 0.0;

    std::size_t flat_size() const;
    std::size_t flat_index(const std::vector<int>& multi) const;
    double total_mass() const;
    /// Center of a bin along one axis.
    double bin_center(int axis, int index) const;
};

OccupationHistogram occupation_measure(const SimPath& path, const Vec& lo, const Vec& hi,
                                       const std::vector<int>& bins);

struct InvariantEstimate {
    OccupationHistogram histogram;
    Vec mean;
    Vec second_moment;
    Vec half_mean_first;   // time average over the first post-burn-in half
    Vec half_mean_second;  // and over the second half
    double half_discrepancy = 0.0;
    double burn_in = 0.0;
    double horizon = 0.0;
};

/// Single long trajectory time-average: discards the burn-in, accumulates the
/// occupation histogram and first/second moments, and reports the half-vs-half
/// mean discrepancy as a stationarity diagnostic.
InvariantEstimate estimate_invariant_measure(const DiffusionModel& model,
                                             const PolyhedralCone& cone, const Vec& x0,
                                             double burn_in, double horizon, double h,
                                             const Vec& lo, const Vec& hi,
                                             const std::vector<int>& bins, std::uint64_t seed);

struct DriftBlock {
    double t_start = 0.0;
    double value_before = 0.0;  // estimator at the block start
    double value_after = 0.0;   // estimator at the block end
    // Max magnitude of the in-block partial sums of the recorded noise terms.
    // The continuous running sup between grid points is not observable, so this
    // is biased low by O(sqrt(h)).
    double nu_bar = 0.0;
    double slack = 0.0;  // value_after - ((value_before - Delta)^+ + K C nu_bar)
    bool scored = false;
};

struct DriftDiagnostic {
    double block_length = 0.0;
    std::string estimator_id;
    std::vector<DriftBlock> blocks;
    int scored_count = 0;
    int violation_count = 0;  // blocks with slack > 0 (beyond rounding)
};

/// Scores the pathwise descent inequality
///   T(X(u+Delta)) <= (T(X(u)) - Delta)^+ + K (4K^3/delta) nu_bar
/// block by block along a simulated path. Only blocks that stay outside the
/// ball of radius r_A are scored. Delta must be a multiple of the path step.
DriftDiagnostic lyapunov_drift_diagnostic(const SimPath& path, double Delta, double K,
                                          double delta, double r_A,
                                          const std::function<double(const Vec&)>& estimator,
                                          const std::string& estimator_id);

struct ExpMomentResult {
    double estimate = 0.0;
    double bound = 0.0;
    double log_estimate = 0.0;
    double log_bound = 0.0;
    double stderr_fraction = 0.0;
    int samples = 0;
    bool pass = false;
};

/// Monte Carlo estimate of E[exp(kappa sum_i nu_i)] over `blocks` consecutive
/// length-Delta blocks against the closed-form bound
/// [2 sqrt(2) exp(k^2 kappa^2 gamma^2 Delta)]^blocks, computed in log space.
/// Passes when estimate <= bound (1 + 3 stderr_fraction).
ExpMomentResult exp_moment_check(const DiffusionModel& model, const PolyhedralCone& cone,
                                 const Vec& x0, double kappa, double Delta, int blocks,
                                 int n_paths, double h, std::uint64_t seed,
                                 ExecPolicy policy = ExecPolicy::parallel);

struct TightnessRow {
    double M0 = 0.0;
    double max_frequency = 0.0;  // max over time blocks of P(sup |X| >= M0)
};

/// Empirical tail table from ensemble block suprema; decreasing in M0.
std::vector<TightnessRow> tightness_diagnostic(const TrajectoryEnsemble& ensemble,
                                               const std::vector<double>& M0_grid);

}  // namespace conewalk

#endif
