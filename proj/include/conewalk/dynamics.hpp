#ifndef CONEWALK_DYNAMICS_HPP
#define CONEWALK_DYNAMICS_HPP

#include "conewalk/geometry.hpp"
#include "conewalk/skorokhod.hpp"
#include "conewalk/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace conewalk {

/// Runs kernels serially or with OpenMP over independent work items. Results
/// are aggregated in item order either way, so the choice never changes output.
enum class ExecPolicy { serial, parallel };

/// Explicit constrained stepping z_{m+1} = project(z_m + h_m v(t_m)); the exact
/// Skorokhod map of the sampled piecewise-linear integral path.
PathGrid integrate_constrained_ode(const Vec& x, const std::function<Vec(double)>& velocity,
                                   const std::vector<double>& times, const PolyhedralCone& cone);

/// K^2 |x|^2 / (K |x| + delta t): the decay bound satisfied by every trajectory
/// driven by a C(delta)-valued control.
double decay_envelope(double x_norm, double K, double delta, double t);

/// 4 K^2 |x| / delta: upper bound on the hitting time to the origin.
double hitting_time_upper(double x_norm, double K, double delta);

/// Two-sided bracket on the worst-case origin hitting time T(x).
struct HittingBracket {
    double lower = 0.0;
    double upper = 0.0;
    Vec best_control;  // sampled constant control attaining the lower bound
    int samples = 0;
};

/// Lower bound: max over sampled constant controls v in C(delta) of the first
/// grid time the integrated trajectory enters the ball |z| <= eps_hit, with
/// eps_hit = 1e-6 (1+|x|). Upper bound: 4K^2|x|/delta. Controls are sampled as
/// delta-insets of the extreme rays plus random conic combinations.
HittingBracket hitting_time_bracket(const Vec& x, const PolyhedralCone& cone,
                                    const GeneratedCone& drift_cone, double K, double delta,
                                    int n_controls, double grid_h, std::uint64_t seed,
                                    ExecPolicy policy = ExecPolicy::parallel);

/// Samples `count` constant controls with dist(v, boundary C) >= delta (the
/// first `count` of a deterministic sequence given the seed).
std::vector<Vec> sample_inset_controls(const GeneratedCone& drift_cone, double delta, int count,
                                       std::uint64_t seed);

/// Checks the dynamic programming inequality along a trajectory:
/// estimator(z(t_m)) <= (estimator(z(t_0)) - (t_m - t_0))^+ + tol at every grid
/// time.
bool check_dpp(const PathGrid& trajectory, const std::function<double(const Vec&)>& estimator,
               double tol);

}  // namespace conewalk

#endif
