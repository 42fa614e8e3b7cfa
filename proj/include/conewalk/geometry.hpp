#ifndef CONEWALK_GEOMETRY_HPP
#define CONEWALK_GEOMETRY_HPP

#include "conewalk/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace conewalk {

/// One constrained face: inward unit normal and the unit direction the pushing
/// term acts along, with <direction, normal> > 0.
struct Face {
    Vec normal;
    Vec direction;
};

/// The domain: a convex polyhedral cone with vertex at the origin, given as the
/// intersection of half spaces {<x, n_i> >= 0}. Immutable after construction;
/// safe to share across threads.
class PolyhedralCone {
public:
    PolyhedralCone(int dimension, std::vector<Face> faces, std::optional<double> lipschitz_K,
                   double boundary_tol);

    int dimension() const { return dimension_; }
    const std::vector<Face>& faces() const { return faces_; }
    int face_count() const { return static_cast<int>(faces_.size()); }

    bool has_lipschitz_constant() const { return lipschitz_K_.has_value(); }
    /// Throws GeometryError when the constant is marked "to estimate".
    double lipschitz_constant() const;

    double boundary_tolerance() const { return boundary_tol_; }

    /// min_i <x, n_i>; positive inside, negative outside.
    double wall_margin(const Vec& x) const;
    bool contains(const Vec& x) const;

private:
    int dimension_;
    std::vector<Face> faces_;
    std::optional<double> lipschitz_K_;
    double boundary_tol_;
};

/// Normalizes the face data and validates the acuteness requirement
/// <d_i, n_i> > 0. lipschitz_K, when given, must be >= 1.
PolyhedralCone build_cone(const std::vector<Vec>& normals, const std::vector<Vec>& directions,
                          std::optional<double> lipschitz_K = std::nullopt,
                          double boundary_tol = 1e-9);

/// Indices i with <x, n_i> <= tol*(1+|x|). Throws GeometryError when x lies
/// deeply outside the cone (margin below -10*tol*(1+|x|)).
std::vector<int> active_set(const Vec& x, const PolyhedralCone& cone);

/// The drift cone C = { -sum alpha_i d_i : alpha_i >= 0 } in dual description.
/// facet_normals are inward unit normals: C = { v : <v, f_j> >= 0 for all j }.
class GeneratedCone {
public:
    GeneratedCone(std::vector<Vec> generators, std::vector<Vec> facet_normals,
                  bool full_dimensional, bool degenerate_lineality);

    const std::vector<Vec>& generators() const { return generators_; }
    const std::vector<Vec>& facet_normals() const { return facet_normals_; }
    bool full_dimensional() const { return full_dimensional_; }
    bool degenerate_lineality() const { return degenerate_lineality_; }
    int dimension() const { return generators_.empty() ? 0 : static_cast<int>(generators_.front().size()); }

    /// True when C(delta) = { v in C : dist(v, boundary C) >= delta } is nonempty
    /// for some (hence every) delta > 0.
    bool inset_nonempty() const { return full_dimensional_; }

private:
    std::vector<Vec> generators_;
    std::vector<Vec> facet_normals_;
    bool full_dimensional_;
    bool degenerate_lineality_;
};

/// Facet enumeration over (k-1)-subsets of the generators; intended for the
/// small instances this library targets (k <= 8, N <= 16).
GeneratedCone dual_description(const PolyhedralCone& cone);

/// Membership through the facet description when available, otherwise through a
/// nonnegative-combination solve.
bool in_cone(const Vec& v, const GeneratedCone& gcone);

/// dist(v, boundary C) for v in C. Returns 0 for v outside C (inside flag set
/// false) and 0 whenever C is not full dimensional. +infinity when C is the
/// whole space.
double dist_to_cone_boundary(const Vec& v, const GeneratedCone& gcone, bool* inside = nullptr);

/// Nonnegative least squares min |G beta - target| over beta >= 0
/// (Lawson-Hanson active set).
struct NnlsResult {
    Vec coefficients;
    double residual;
};
NnlsResult nonneg_combination(const std::vector<Vec>& generators, const Vec& target);

struct ConditionWitness {
    Vec point;
    double value;
};

/// Outcome of one model condition check. A failing report carries at least one
/// witness point.
struct ConditionReport {
    std::string condition_id;
    bool pass = false;
    std::vector<ConditionWitness> witnesses;
    double margin = 0.0;    // min over probes of (measured - threshold)
    double measured = 0.0;  // extremal measured value over the probes
    double threshold = 0.0;
};

/// Deterministic quasi-random points of the cone with radii in (r_min, r_max];
/// always includes a probe at radius r_max. Throws GeometryError when no
/// interior direction can be found.
std::vector<Vec> sample_cone_points(const PolyhedralCone& cone, double r_min, double r_max,
                                    int count, std::uint64_t seed);

/// Drift-cone condition: dist(b(x), boundary C) >= delta at every probe point of
/// G with |x| in (r_A, r_max].
ConditionReport check_drift_condition(const std::function<Vec(const Vec&)>& drift,
                                      const PolyhedralCone& cone, const GeneratedCone& drift_cone,
                                      double delta, double r_A, int probes, double r_max,
                                      std::uint64_t seed);

/// Uniform nondegeneracy: smallest eigenvalue of sigma(x) sigma(x)' >= c_floor
/// over probe points of G with |x| <= r_max.
ConditionReport check_nondegeneracy(const std::function<Mat(const Vec&)>& sigma,
                                    const PolyhedralCone& cone, double c_floor, int probes,
                                    double r_max, std::uint64_t seed);

}  // namespace conewalk

#endif
