#ifndef CONEWALK_TEST_HELPERS_HPP
#define CONEWALK_TEST_HELPERS_HPP

#include "conewalk/geometry.hpp"
#include "conewalk/rng.hpp"
#include "conewalk/types.hpp"

#include <vector>

namespace conewalk::testing {

inline Vec vec1(double a) {
    Vec v(1);
    v << a;
    return v;
}

inline Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

inline Vec vec3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

/// Orthant cone in k dimensions with directions d_i = normalize(e_i + p_i)
/// where p_i is a random tangent perturbation of size at most `obliqueness`.
/// Small perturbations keep the reflection data in the regular class.
inline PolyhedralCone random_orthant_cone(int k, double obliqueness, RandomStream& rng,
                                          std::optional<double> lipschitz_K = std::nullopt) {
    std::vector<Vec> normals, directions;
    for (int i = 0; i < k; ++i) {
        Vec n = Vec::Zero(k);
        n(i) = 1.0;
        Vec d = n;
        for (int j = 0; j < k; ++j) {
            if (j != i) d(j) += rng.uniform_in(-obliqueness, obliqueness);
        }
        normals.push_back(n);
        directions.push_back(d.normalized());
    }
    return build_cone(normals, directions, lipschitz_K);
}

/// Random point of the orthant with a random subset of coordinates pinned to
/// the boundary (so active sets of every size get exercised).
inline Vec random_orthant_point(int k, RandomStream& rng, double scale = 2.0,
                                double boundary_prob = 0.4) {
    Vec x(k);
    for (int i = 0; i < k; ++i) {
        x(i) = rng.uniform() < boundary_prob ? 0.0 : rng.uniform_in(0.0, scale);
    }
    return x;
}

/// Gaussian random walk grid started at x0.
inline PathGrid random_walk(const Vec& x0, int steps, double dt, double incr_scale,
                            RandomStream& rng) {
    PathGrid psi;
    psi.times.resize(static_cast<std::size_t>(steps + 1));
    psi.values.resize(static_cast<std::size_t>(steps + 1));
    psi.values[0] = x0;
    psi.times[0] = 0.0;
    for (int m = 1; m <= steps; ++m) {
        psi.times[static_cast<std::size_t>(m)] = m * dt;
        psi.values[static_cast<std::size_t>(m)] =
            psi.values[static_cast<std::size_t>(m - 1)] +
            incr_scale * rng.normal_vec(static_cast<int>(x0.size()));
    }
    return psi;
}

}  // namespace conewalk::testing

#endif
