#ifndef CONEWALK_SKOROKHOD_HPP
#define CONEWALK_SKOROKHOD_HPP

#include "conewalk/geometry.hpp"
#include "conewalk/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace conewalk {

/// Result of one complementarity projection query.
struct Projection {
    Vec point;                // the constrained point
    Vec alpha;                // per-face pushing coefficients, >= 0
    std::vector<int> active;  // faces with alpha > 0, ascending
};

/// Projects y onto the cone along the constraint directions: finds
/// phi = y + sum alpha_i d_i with alpha >= 0, <phi, n_i> >= 0 and
/// alpha_i <phi, n_i> = 0, by enumerating active sets and picking the
/// complementary solution with minimal total pushing (lexicographically
/// smallest active set on ties). Returns y unchanged when y is already in the
/// domain. Throws ProjectionError when no complementary solution exists.
Projection project_point(const Vec& y, const PolyhedralCone& cone);

/// Directional projection of the velocity v at x: the same complementarity
/// system restricted to the faces active at x. Interior points return v.
Vec project_velocity(const Vec& x, const Vec& v, const PolyhedralCone& cone);

/// Discrete Skorokhod decomposition on a grid: constrained path phi, pushing
/// path eta = phi - psi, its running total variation, and the per-step
/// per-face pushing coefficients.
struct SkorokhodDecomposition {
    std::vector<double> times;
    std::vector<Vec> psi;
    std::vector<Vec> phi;
    std::vector<Vec> eta;
    std::vector<double> total_variation;
    std::vector<Vec> push_records;  // push_records[m] has one coefficient per face; [0] is zero
};

/// Recursively applies project_point to the increments of psi. This is the
/// exact Skorokhod map for the piecewise-constant interpolant sampled on the
/// grid. Requires psi(t_0) in the domain.
SkorokhodDecomposition apply_skorokhod_map(const PathGrid& psi, const PolyhedralCone& cone);

/// Closed form for the 1-D half-line with normal reflection:
/// phi(t_m) = psi(t_m) + max(0, max_{j<=m} -psi(t_j)).
PathGrid one_d_reflection_oracle(const PathGrid& psi);

struct SpCheckItem {
    bool pass = true;
    double max_violation = 0.0;
};

/// Pass/fail per defining property of a Skorokhod problem solution:
///   [0] phi = psi + eta
///   [1] phi stays in the domain
///   [2] finite pushing accumulation, nondecreasing
///   [3] pushing only while phi is on the boundary
///   [4] push increments lie in the cone of active directions
struct SpChecklist {
    std::array<SpCheckItem, 5> items;
    bool all_pass() const {
        for (const auto& item : items) {
            if (!item.pass) return false;
        }
        return true;
    }
};

SpChecklist verify_sp_solution(const SkorokhodDecomposition& dec, const PolyhedralCone& cone,
                               double tol = 1e-8);

/// Randomized lower bound on the sup-norm Lipschitz constant of the Skorokhod
/// map: max over path pairs of sup|Gamma(psi1)-Gamma(psi2)| / sup|psi1-psi2|.
/// Deterministic given the seed. The true constant can only be larger.
double estimate_lipschitz(const PolyhedralCone& cone, int trials, std::uint64_t seed);

}  // namespace conewalk

#endif
