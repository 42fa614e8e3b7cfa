#include "conewalk/geometry.hpp"

#include "conewalk/log.hpp"
#include "conewalk/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace conewalk {

namespace {

constexpr double kUnitTol = 1e-12;
constexpr double kFacetTol = 1e-10;

Vec normalized_or_throw(const Vec& v, const std::string& what, int index) {
    const double n = v.norm();
    if (!(n > 0.0) || !v.allFinite()) {
        throw GeometryError(what + "[" + std::to_string(index) + "] is zero or nonfinite");
    }
    return v / n;
}

}  // namespace

PolyhedralCone::PolyhedralCone(int dimension, std::vector<Face> faces,
                               std::optional<double> lipschitz_K, double boundary_tol)
    : dimension_(dimension),
      faces_(std::move(faces)),
      lipschitz_K_(lipschitz_K),
      boundary_tol_(boundary_tol) {
    if (dimension_ < 1) throw GeometryError("cone dimension must be positive");
    if (faces_.empty()) throw GeometryError("cone needs at least one face");
    if (boundary_tol_ <= 0.0) throw GeometryError("boundary tolerance must be positive");
    for (std::size_t i = 0; i < faces_.size(); ++i) {
        const Face& f = faces_[i];
        if (f.normal.size() != dimension_ || f.direction.size() != dimension_) {
            throw GeometryError("faces[" + std::to_string(i) + "]: dimension mismatch");
        }
        if (std::abs(f.normal.norm() - 1.0) > kUnitTol || std::abs(f.direction.norm() - 1.0) > kUnitTol) {
            throw GeometryError("faces[" + std::to_string(i) + "]: vectors must be unit length");
        }
        if (!(f.direction.dot(f.normal) > 0.0)) {
            throw GeometryError("faces[" + std::to_string(i) +
                                "]: direction not acute with normal (<d,n> <= 0)");
        }
    }
    if (lipschitz_K_ && !(*lipschitz_K_ >= 1.0)) {
        throw GeometryError("lipschitz_K must be >= 1");
    }
}

double PolyhedralCone::lipschitz_constant() const {
    if (!lipschitz_K_) throw GeometryError("lipschitz constant not configured (marked to estimate)");
    return *lipschitz_K_;
}

double PolyhedralCone::wall_margin(const Vec& x) const {
    double margin = std::numeric_limits<double>::infinity();
    for (const Face& f : faces_) margin = std::min(margin, f.normal.dot(x));
    return margin;
}

bool PolyhedralCone::contains(const Vec& x) const {
    return wall_margin(x) >= -boundary_tol_ * (1.0 + x.norm());
}

PolyhedralCone build_cone(const std::vector<Vec>& normals, const std::vector<Vec>& directions,
                          std::optional<double> lipschitz_K, double boundary_tol) {
    if (normals.empty() || directions.empty()) throw GeometryError("face lists must be nonempty");
    if (normals.size() != directions.size()) {
        throw GeometryError("normals and directions have different lengths");
    }
    const int k = static_cast<int>(normals.front().size());
    std::vector<Face> faces;
    faces.reserve(normals.size());
    for (std::size_t i = 0; i < normals.size(); ++i) {
        if (normals[i].size() != k || directions[i].size() != k) {
            throw GeometryError("faces[" + std::to_string(i) + "]: dimension mismatch");
        }
        Face face{normalized_or_throw(normals[i], "normals", static_cast<int>(i)),
                  normalized_or_throw(directions[i], "directions", static_cast<int>(i))};
        if (!(face.direction.dot(face.normal) > 0.0)) {
            throw GeometryError("faces[" + std::to_string(i) +
                                "]: direction not acute with normal (<d,n> <= 0)");
        }
        faces.push_back(std::move(face));
    }
    return PolyhedralCone(k, std::move(faces), lipschitz_K, boundary_tol);
}

std::vector<int> active_set(const Vec& x, const PolyhedralCone& cone) {
    const double scale = cone.boundary_tolerance() * (1.0 + x.norm());
    std::vector<int> active;
    for (int i = 0; i < cone.face_count(); ++i) {
        const double m = cone.faces()[static_cast<std::size_t>(i)].normal.dot(x);
        if (m < -10.0 * scale) {
            throw GeometryError("active_set: point lies outside the domain (face " +
                                std::to_string(i) + ", margin " + format_double(m) + ")");
        }
        if (m <= scale) active.push_back(i);
    }
    return active;
}

GeneratedCone::GeneratedCone(std::vector<Vec> generators, std::vector<Vec> facet_normals,
                             bool full_dimensional, bool degenerate_lineality)
    : generators_(std::move(generators)),
      facet_normals_(std::move(facet_normals)),
      full_dimensional_(full_dimensional),
      degenerate_lineality_(degenerate_lineality) {}

namespace {

// All (k-1)-subsets of {0..n-1}, emitted in lexicographic order.
void for_each_subset(int n, int size, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> idx(static_cast<std::size_t>(size));
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == size) {
            fn(idx);
            return;
        }
        for (int i = start; i < n; ++i) {
            idx[static_cast<std::size_t>(depth)] = i;
            rec(i + 1, depth + 1);
        }
    };
    if (size == 0) {
        fn({});
        return;
    }
    rec(0, 0);
}

bool contains_line(const std::vector<Vec>& generators) {
    // C contains a line iff some -g_i is a nonnegative combination of the g's.
    for (std::size_t i = 0; i < generators.size(); ++i) {
        const NnlsResult r = nonneg_combination(generators, -generators[i]);
        if (r.residual <= 1e-9) return true;
    }
    return false;
}

}  // namespace

GeneratedCone dual_description(const PolyhedralCone& cone) {
    const int k = cone.dimension();
    const int n = cone.face_count();
    std::vector<Vec> generators;
    generators.reserve(static_cast<std::size_t>(n));
    for (const Face& f : cone.faces()) generators.push_back(-f.direction);

    Mat gmat(k, n);
    for (int j = 0; j < n; ++j) gmat.col(j) = generators[static_cast<std::size_t>(j)];
    Eigen::JacobiSVD<Mat> svd(gmat);
    const double rank_tol = 1e-10 * svd.singularValues()(0);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i) {
        if (svd.singularValues()(i) > rank_tol) ++rank;
    }
    const bool full_dim = (rank == k);
    const bool lineality = contains_line(generators);

    if (!full_dim) {
        log(LogLevel::info, "dual_description: generator set is rank deficient; "
                            "membership falls back to nonnegative-combination solves");
        return GeneratedCone(std::move(generators), {}, false, lineality);
    }

    std::vector<Vec> facets;
    if (k == 1) {
        // All generators share one sign here (mixed signs imply lineality and rank
        // arguments above would still report full_dim; handle both cases).
        const bool has_pos = std::any_of(generators.begin(), generators.end(),
                                         [](const Vec& g) { return g(0) > 0.0; });
        const bool has_neg = std::any_of(generators.begin(), generators.end(),
                                         [](const Vec& g) { return g(0) < 0.0; });
        if (has_pos != has_neg) {
            Vec f(1);
            f(0) = has_pos ? 1.0 : -1.0;
            facets.push_back(f);
        }
        // has_pos && has_neg: C is the whole line, no facets.
    } else {
        for_each_subset(n, k - 1, [&](const std::vector<int>& subset) {
            Mat rows(k - 1, k);
            for (int r = 0; r < k - 1; ++r) {
                rows.row(r) = generators[static_cast<std::size_t>(subset[static_cast<std::size_t>(r)])];
            }
            Eigen::JacobiSVD<Mat> sub_svd(rows, Eigen::ComputeFullV);
            const auto& sv = sub_svd.singularValues();
            const double tol = 1e-10 * std::max(1.0, sv.size() > 0 ? sv(0) : 1.0);
            int sub_rank = 0;
            for (int i = 0; i < sv.size(); ++i) {
                if (sv(i) > tol) ++sub_rank;
            }
            if (sub_rank != k - 1) return;  // null space not one dimensional
            Vec f = sub_svd.matrixV().col(k - 1);
            double lo = 0.0, hi = 0.0;
            for (const Vec& g : generators) {
                const double s = f.dot(g);
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
            if (lo >= -kFacetTol) {
                // keep f as is
            } else if (hi <= kFacetTol) {
                f = -f;
            } else {
                return;  // not a supporting hyperplane
            }
            for (const Vec& existing : facets) {
                if ((existing - f).norm() < 1e-9) return;
            }
            facets.push_back(std::move(f));
        });
    }

    for (const Vec& f : facets) {
        for (const Vec& g : generators) {
            if (f.dot(g) < -kFacetTol) {
                throw GeometryError("dual_description: facet validation failed");
            }
        }
    }
    return GeneratedCone(std::move(generators), std::move(facets), true, lineality);
}

bool in_cone(const Vec& v, const GeneratedCone& gcone) {
    if (static_cast<int>(v.size()) != gcone.dimension()) {
        throw GeometryError("in_cone: dimension mismatch");
    }
    const double tol = 1e-10 * (1.0 + v.norm());
    if (gcone.full_dimensional() && !gcone.facet_normals().empty()) {
        for (const Vec& f : gcone.facet_normals()) {
            if (v.dot(f) < -tol) return false;
        }
        return true;
    }
    if (gcone.full_dimensional() && gcone.facet_normals().empty()) {
        return true;  // whole space
    }
    const NnlsResult r = nonneg_combination(gcone.generators(), v);
    return r.residual <= 1e-8 * (1.0 + v.norm());
}

double dist_to_cone_boundary(const Vec& v, const GeneratedCone& gcone, bool* inside) {
    const bool member = in_cone(v, gcone);
    if (inside != nullptr) *inside = member;
    if (!member) return 0.0;
    if (!gcone.full_dimensional()) return 0.0;
    if (gcone.facet_normals().empty()) return std::numeric_limits<double>::infinity();
    double d = std::numeric_limits<double>::infinity();
    for (const Vec& f : gcone.facet_normals()) d = std::min(d, v.dot(f));
    return std::max(d, 0.0);
}

NnlsResult nonneg_combination(const std::vector<Vec>& generators, const Vec& target) {
    const int n = static_cast<int>(generators.size());
    if (n == 0) throw GeometryError("nonneg_combination: no generators");
    const int k = static_cast<int>(target.size());
    Mat g(k, n);
    for (int j = 0; j < n; ++j) g.col(j) = generators[static_cast<std::size_t>(j)];

    // Lawson-Hanson active set iteration; deterministic tie break by lowest index.
    Vec beta = Vec::Zero(n);
    std::vector<bool> in_p(static_cast<std::size_t>(n), false);
    Vec resid = target;
    const double w_tol = 1e-12 * (1.0 + target.norm());
    for (int outer = 0; outer < 8 * n + 16; ++outer) {
        Vec w = g.transpose() * resid;
        int pick = -1;
        double best = w_tol;
        for (int j = 0; j < n; ++j) {
            if (!in_p[static_cast<std::size_t>(j)] && w(j) > best) {
                best = w(j);
                pick = j;
            }
        }
        if (pick < 0) break;
        in_p[static_cast<std::size_t>(pick)] = true;

        for (int inner = 0; inner < 8 * n + 16; ++inner) {
            std::vector<int> p;
            for (int j = 0; j < n; ++j) {
                if (in_p[static_cast<std::size_t>(j)]) p.push_back(j);
            }
            Mat gp(k, static_cast<int>(p.size()));
            for (std::size_t c = 0; c < p.size(); ++c) gp.col(static_cast<int>(c)) = g.col(p[c]);
            Vec z = gp.completeOrthogonalDecomposition().solve(target);
            bool all_pos = true;
            for (int c = 0; c < z.size(); ++c) {
                if (z(c) <= 0.0) {
                    all_pos = false;
                    break;
                }
            }
            if (all_pos) {
                beta.setZero();
                for (std::size_t c = 0; c < p.size(); ++c) beta(p[c]) = z(static_cast<int>(c));
                break;
            }
            double alpha = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < p.size(); ++c) {
                const double zc = z(static_cast<int>(c));
                if (zc <= 0.0) {
                    const double bc = beta(p[c]);
                    if (bc - zc > 0.0) alpha = std::min(alpha, bc / (bc - zc));
                }
            }
            if (!std::isfinite(alpha)) alpha = 0.0;
            for (std::size_t c = 0; c < p.size(); ++c) {
                beta(p[c]) += alpha * (z(static_cast<int>(c)) - beta(p[c]));
            }
            for (int j = 0; j < n; ++j) {
                if (in_p[static_cast<std::size_t>(j)] && beta(j) <= 1e-14) {
                    in_p[static_cast<std::size_t>(j)] = false;
                    beta(j) = 0.0;
                }
            }
        }
        resid = target - g * beta;
    }
    return NnlsResult{beta, (target - g * beta).norm()};
}

std::vector<Vec> sample_cone_points(const PolyhedralCone& cone, double r_min, double r_max,
                                    int count, std::uint64_t seed) {
    if (count < 1) throw GeometryError("sample_cone_points: count must be >= 1");
    if (!(r_max > r_min) || r_max <= 0.0) {
        throw GeometryError("sample_cone_points: need r_max > r_min and r_max > 0");
    }
    const int k = cone.dimension();
    RandomStream rng(seed, /*stream=*/0x5a);

    // Interior reference direction: mean of inward normals, refined by random
    // search when that fails.
    Vec interior = Vec::Zero(k);
    for (const Face& f : cone.faces()) interior += f.normal;
    if (interior.norm() > 0) interior.normalize();
    double best_margin = interior.norm() > 0 ? cone.wall_margin(interior) : -1.0;
    for (int attempt = 0; attempt < 512 && best_margin <= 1e-9; ++attempt) {
        Vec cand = rng.normal_vec(k);
        if (cand.norm() == 0.0) continue;
        cand.normalize();
        const double m = cone.wall_margin(cand);
        if (m > best_margin) {
            best_margin = m;
            interior = cand;
        }
    }
    if (best_margin <= 1e-9) {
        throw GeometryError("sample_cone_points: no interior direction found (empty interior?)");
    }

    std::vector<Vec> points;
    points.reserve(static_cast<std::size_t>(count));
    const double lo = std::max(r_min, 0.0);
    for (int i = 0; i < count; ++i) {
        // Stratified radii over (r_min, r_max]; the last probe sits exactly at r_max.
        double radius;
        if (i + 1 == count) {
            radius = r_max;
        } else {
            const double t = (static_cast<double>(i) + rng.uniform()) / static_cast<double>(count);
            radius = lo + (r_max - lo) * t;
            if (radius <= lo) radius = std::nextafter(lo, r_max);
        }
        Vec dir;
        bool found = false;
        for (int attempt = 0; attempt < 4096; ++attempt) {
            const double mix = 0.25 + 0.75 * rng.uniform();
            Vec cand = mix * interior + (1.0 - mix) * rng.normal_vec(k);
            const double nrm = cand.norm();
            if (nrm == 0.0) continue;
            cand /= nrm;
            if (cone.wall_margin(cand) >= 0.0) {
                dir = cand;
                found = true;
                break;
            }
        }
        if (!found) dir = interior;
        points.push_back(radius * dir);
    }
    return points;
}

ConditionReport check_drift_condition(const std::function<Vec(const Vec&)>& drift,
                                      const PolyhedralCone& cone, const GeneratedCone& drift_cone,
                                      double delta, double r_A, int probes, double r_max,
                                      std::uint64_t seed) {
    if (!(delta > 0.0)) throw GeometryError("check_drift_condition: delta must be positive");
    if (r_A < 0.0) throw GeometryError("check_drift_condition: r_A must be >= 0");
    if (probes < 1) throw GeometryError("check_drift_condition: probes must be >= 1");

    ConditionReport report;
    report.condition_id = "drift-cone";
    report.threshold = delta;
    if (!drift_cone.inset_nonempty()) {
        report.pass = false;
        report.margin = -delta;
        report.measured = 0.0;
        report.witnesses.push_back({Vec::Zero(cone.dimension()), 0.0});
        log(LogLevel::warn, "drift-cone check: C is not full dimensional, C(delta) is empty");
        return report;
    }

    const auto points = sample_cone_points(cone, r_A, r_max, probes, seed);
    double min_dist = std::numeric_limits<double>::infinity();
    for (const Vec& x : points) {
        Vec b;
        try {
            b = drift(x);
        } catch (const std::exception& e) {
            throw GeometryError(std::string("drift evaluation failed at probe |x|=") +
                                format_double(x.norm()) + ": " + e.what());
        }
        const double d = dist_to_cone_boundary(b, drift_cone);
        if (d < min_dist) min_dist = d;
        if (d < delta && report.witnesses.size() < 16) {
            report.witnesses.push_back({x, d});
        }
    }
    report.measured = min_dist;
    report.margin = min_dist - delta;
    report.pass = report.margin >= 0.0;
    return report;
}

ConditionReport check_nondegeneracy(const std::function<Mat(const Vec&)>& sigma,
                                    const PolyhedralCone& cone, double c_floor, int probes,
                                    double r_max, std::uint64_t seed) {
    if (probes < 1) throw GeometryError("check_nondegeneracy: probes must be >= 1");
    const auto points = sample_cone_points(cone, 0.0, r_max, probes, seed);

    ConditionReport report;
    report.condition_id = "nondegeneracy";
    report.threshold = c_floor;
    double min_eig = std::numeric_limits<double>::infinity();
    for (const Vec& x : points) {
        const Mat s = sigma(x);
        if (s.rows() != s.cols() || s.rows() != cone.dimension()) {
            throw GeometryError("check_nondegeneracy: sigma(x) is not k x k");
        }
        Eigen::SelfAdjointEigenSolver<Mat> eig(s * s.transpose());
        const double lambda = eig.eigenvalues().minCoeff();
        if (lambda < min_eig) min_eig = lambda;
        if (lambda < c_floor && report.witnesses.size() < 16) {
            report.witnesses.push_back({x, lambda});
        }
    }
    report.measured = min_eig;
    report.margin = min_eig - c_floor;
    report.pass = report.margin >= 0.0;
    return report;
}

}  // namespace conewalk
