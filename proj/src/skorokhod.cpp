#include "conewalk/skorokhod.hpp"

#include "conewalk/rng.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace conewalk {

namespace {

constexpr double kAlphaTol = 1e-12;

struct LcpCandidate {
    double total_push = std::numeric_limits<double>::infinity();
    std::vector<int> active;
    Vec alpha;  // full length N
    Vec point;
};

// Enumerates subsets of `candidates`, solving the equality system on each
// subset and keeping complementary solutions that are feasible on `check`.
// Feasibility margins are <phi, n_i> >= -feas_tol for i in `check`.
void enumerate_active_sets(const Vec& y, const PolyhedralCone& cone,
                           const std::vector<int>& candidates, const std::vector<int>& check,
                           double feas_tol, LcpCandidate& best) {
    const int c = static_cast<int>(candidates.size());
    const int n = cone.face_count();
    for (std::uint32_t mask = 0; mask < (1u << c); ++mask) {
        std::vector<int> subset;
        for (int j = 0; j < c; ++j) {
            if (mask & (1u << j)) subset.push_back(candidates[static_cast<std::size_t>(j)]);
        }
        const int s = static_cast<int>(subset.size());
        Vec alpha_s;
        if (s > 0) {
            Mat m(s, s);
            Vec q(s);
            for (int r = 0; r < s; ++r) {
                const Vec& nr = cone.faces()[static_cast<std::size_t>(subset[static_cast<std::size_t>(r)])].normal;
                q(r) = -nr.dot(y);
                for (int col = 0; col < s; ++col) {
                    m(r, col) = nr.dot(cone.faces()[static_cast<std::size_t>(subset[static_cast<std::size_t>(col)])].direction);
                }
            }
            Eigen::FullPivLU<Mat> lu(m);
            lu.setThreshold(1e-10);
            if (!lu.isInvertible()) continue;
            alpha_s = lu.solve(q);
            bool ok = true;
            for (int r = 0; r < s; ++r) {
                if (alpha_s(r) < -kAlphaTol * (1.0 + std::abs(q(r)))) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
        }
        Vec phi = y;
        Vec alpha_full = Vec::Zero(n);
        for (int r = 0; r < s; ++r) {
            const double a = std::max(alpha_s(r), 0.0);
            alpha_full(subset[static_cast<std::size_t>(r)]) = a;
            phi += a * cone.faces()[static_cast<std::size_t>(subset[static_cast<std::size_t>(r)])].direction;
        }
        bool feasible = true;
        for (int i : check) {
            if (cone.faces()[static_cast<std::size_t>(i)].normal.dot(phi) < -feas_tol) {
                feasible = false;
                break;
            }
        }
        if (!feasible) continue;
        const double total = alpha_full.sum();
        const bool better =
            total < best.total_push - kAlphaTol ||
            (total <= best.total_push + kAlphaTol &&
             std::lexicographical_compare(subset.begin(), subset.end(), best.active.begin(),
                                          best.active.end()));
        if (better) {
            best.total_push = total;
            best.active = subset;
            best.alpha = alpha_full;
            best.point = phi;
        }
    }
}

std::string point_to_string(const Vec& y) {
    std::string s = "(";
    for (int i = 0; i < y.size(); ++i) {
        if (i > 0) s += ", ";
        s += format_double(y(i));
    }
    return s + ")";
}

}  // namespace

Projection project_point(const Vec& y, const PolyhedralCone& cone) {
    if (static_cast<int>(y.size()) != cone.dimension()) {
        throw GeometryError("project_point: dimension mismatch");
    }
    if (!y.allFinite()) throw ProjectionError("project_point: nonfinite input");

    const int n = cone.face_count();
    const double scale = 1.0 + y.norm();
    double min_margin = std::numeric_limits<double>::infinity();
    for (const Face& f : cone.faces()) min_margin = std::min(min_margin, f.normal.dot(y));
    if (min_margin >= 0.0) {
        return Projection{y, Vec::Zero(n), {}};
    }

    const double near_tol = cone.boundary_tolerance() * scale;
    std::vector<int> candidates;
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        all[static_cast<std::size_t>(i)] = i;
        if (cone.faces()[static_cast<std::size_t>(i)].normal.dot(y) <= near_tol) candidates.push_back(i);
    }

    const double feas_tol = 1e-9 * scale;
    LcpCandidate best;
    enumerate_active_sets(y, cone, candidates, all, feas_tol, best);
    if (!std::isfinite(best.total_push) && candidates.size() < all.size()) {
        enumerate_active_sets(y, cone, all, all, feas_tol, best);
    }
    if (!std::isfinite(best.total_push)) {
        throw ProjectionError("projection infeasible at y = " + point_to_string(y) +
                              " (irregular reflection data?)");
    }
    Projection out{std::move(best.point), std::move(best.alpha), {}};
    for (int i = 0; i < n; ++i) {
        if (out.alpha(i) > 0.0) out.active.push_back(i);
    }
    return out;
}

Vec project_velocity(const Vec& x, const Vec& v, const PolyhedralCone& cone) {
    if (static_cast<int>(v.size()) != cone.dimension()) {
        throw GeometryError("project_velocity: dimension mismatch");
    }
    const std::vector<int> in_x = active_set(x, cone);
    if (in_x.empty()) return v;

    const int n = cone.face_count();
    const double scale = 1.0 + v.norm();
    const double feas_tol = 1e-9 * scale;

    // Same complementarity system as project_point, restricted to In(x).
    double min_margin = std::numeric_limits<double>::infinity();
    for (int i : in_x) {
        min_margin = std::min(min_margin, cone.faces()[static_cast<std::size_t>(i)].normal.dot(v));
    }
    if (min_margin >= 0.0) return v;

    LcpCandidate best;
    enumerate_active_sets(v, cone, in_x, in_x, feas_tol, best);
    if (!std::isfinite(best.total_push)) {
        throw ProjectionError("velocity projection infeasible at x = " + point_to_string(x) +
                              ", v = " + point_to_string(v));
    }
    (void)n;
    return best.point;
}

SkorokhodDecomposition apply_skorokhod_map(const PathGrid& psi, const PolyhedralCone& cone) {
    psi.validate();
    if (psi.dimension() != cone.dimension()) {
        throw GeometryError("apply_skorokhod_map: dimension mismatch");
    }
    if (!cone.contains(psi.values.front())) {
        throw GeometryError("apply_skorokhod_map: psi(t_0) outside the domain");
    }
    const std::size_t m_count = psi.size();
    const int n = cone.face_count();

    SkorokhodDecomposition dec;
    dec.times = psi.times;
    dec.psi = psi.values;
    dec.phi.resize(m_count);
    dec.eta.resize(m_count);
    dec.total_variation.assign(m_count, 0.0);
    dec.push_records.assign(m_count, Vec::Zero(n));

    dec.phi[0] = psi.values[0];
    dec.eta[0] = Vec::Zero(psi.dimension());
    for (std::size_t m = 1; m < m_count; ++m) {
        const Vec y = dec.phi[m - 1] + (psi.values[m] - psi.values[m - 1]);
        Projection proj;
        try {
            proj = project_point(y, cone);
        } catch (const ProjectionError& e) {
            throw ProjectionError("skorokhod map failed at step " + std::to_string(m) + ": " +
                                  e.what());
        }
        dec.phi[m] = proj.point;
        dec.eta[m] = dec.phi[m] - dec.psi[m];
        dec.total_variation[m] = dec.total_variation[m - 1] + (proj.point - y).norm();
        dec.push_records[m] = proj.alpha;
    }
    return dec;
}

PathGrid one_d_reflection_oracle(const PathGrid& psi) {
    psi.validate();
    if (psi.dimension() != 1) throw Error("one_d_reflection_oracle: input must be 1-D");
    if (psi.values.front()(0) < 0.0) {
        throw Error("one_d_reflection_oracle: psi(t_0) must be nonnegative");
    }
    PathGrid out;
    out.times = psi.times;
    out.values.resize(psi.size());
    double running = 0.0;
    for (std::size_t m = 0; m < psi.size(); ++m) {
        running = std::max(running, -psi.values[m](0));
        Vec v(1);
        v(0) = psi.values[m](0) + running;
        out.values[m] = v;
    }
    return out;
}

SpChecklist verify_sp_solution(const SkorokhodDecomposition& dec, const PolyhedralCone& cone,
                               double tol) {
    SpChecklist list;
    const std::size_t m_count = dec.times.size();
    if (m_count == 0 || dec.psi.size() != m_count || dec.phi.size() != m_count ||
        dec.eta.size() != m_count || dec.total_variation.size() != m_count ||
        dec.push_records.size() != m_count) {
        throw Error("verify_sp_solution: inconsistent grids");
    }

    auto& [item1, item2, item3, item4, item5] = list.items;

    for (std::size_t m = 0; m < m_count; ++m) {
        const double s = 1.0 + dec.phi[m].norm();

        // (1) phi = psi + eta
        const double recon = (dec.phi[m] - dec.psi[m] - dec.eta[m]).norm() / s;
        item1.max_violation = std::max(item1.max_violation, recon);

        // (2) phi in G
        const double overshoot = std::max(0.0, -cone.wall_margin(dec.phi[m])) / s;
        item2.max_violation = std::max(item2.max_violation, overshoot);

        if (m == 0) continue;

        // (3) |eta| finite and nondecreasing
        const double tv_inc = dec.total_variation[m] - dec.total_variation[m - 1];
        if (!std::isfinite(dec.total_variation[m])) {
            item3.max_violation = std::numeric_limits<double>::infinity();
        } else {
            item3.max_violation = std::max(item3.max_violation, std::max(0.0, -tv_inc));
        }

        // (4) pushing only on the boundary
        const Vec eta_inc = dec.eta[m] - dec.eta[m - 1];
        if (eta_inc.norm() > tol * s) {
            const double interior_margin = std::max(0.0, cone.wall_margin(dec.phi[m])) / s;
            item4.max_violation = std::max(item4.max_violation, interior_margin);
        }

        // (5) push increments in the cone of active directions
        const Vec& alpha = dec.push_records[m];
        if (alpha.size() != cone.face_count()) {
            throw Error("verify_sp_solution: push record length mismatch at step " +
                        std::to_string(m));
        }
        Vec rebuilt = Vec::Zero(dec.phi[m].size());
        const double act_tol = cone.boundary_tolerance() * s;
        for (int i = 0; i < alpha.size(); ++i) {
            item5.max_violation = std::max(item5.max_violation, -alpha(i));
            if (alpha(i) > tol) {
                const double face_margin =
                    cone.faces()[static_cast<std::size_t>(i)].normal.dot(dec.phi[m]);
                if (face_margin > act_tol) {
                    item5.max_violation = std::max(item5.max_violation, face_margin / s);
                }
            }
            rebuilt += alpha(i) * cone.faces()[static_cast<std::size_t>(i)].direction;
        }
        item5.max_violation =
            std::max(item5.max_violation, (eta_inc - rebuilt).norm() / (1.0 + eta_inc.norm()));
    }

    for (auto& item : list.items) item.pass = item.max_violation <= tol;
    return list;
}

double estimate_lipschitz(const PolyhedralCone& cone, int trials, std::uint64_t seed) {
    if (trials < 1) throw Error("estimate_lipschitz: trials must be >= 1");
    const int k = cone.dimension();
    double best = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        RandomStream rng(seed, static_cast<std::uint64_t>(trial) + 1);
        const int steps = 32 + static_cast<int>(rng.uniform() * 96.0);
        const double incr_scale = rng.uniform_in(0.1, 1.0) / std::sqrt(static_cast<double>(steps));

        PathGrid psi1, psi2;
        psi1.times.resize(static_cast<std::size_t>(steps + 1));
        psi2.times = psi1.times;
        for (int m = 0; m <= steps; ++m) {
            psi1.times[static_cast<std::size_t>(m)] = static_cast<double>(m) / steps;
        }
        psi2.times = psi1.times;

        Vec start1 = project_point(rng.normal_vec(k) * rng.uniform_in(0.0, 2.0), cone).point;
        const bool perturb = rng.uniform() < 0.5;
        Vec start2 = perturb
                         ? project_point(start1 + 0.1 * incr_scale * rng.normal_vec(k), cone).point
                         : project_point(rng.normal_vec(k) * rng.uniform_in(0.0, 2.0), cone).point;

        psi1.values.assign(static_cast<std::size_t>(steps + 1), Vec());
        psi2.values.assign(static_cast<std::size_t>(steps + 1), Vec());
        psi1.values[0] = start1;
        psi2.values[0] = start2;
        const double eps = rng.uniform_in(0.01, 0.3) * incr_scale;
        for (int m = 1; m <= steps; ++m) {
            const Vec inc = incr_scale * rng.normal_vec(k);
            psi1.values[static_cast<std::size_t>(m)] = psi1.values[static_cast<std::size_t>(m - 1)] + inc;
            const Vec inc2 = perturb ? Vec(inc + eps * rng.normal_vec(k))
                                     : Vec(incr_scale * rng.normal_vec(k));
            psi2.values[static_cast<std::size_t>(m)] = psi2.values[static_cast<std::size_t>(m - 1)] + inc2;
        }

        const auto dec1 = apply_skorokhod_map(psi1, cone);
        const auto dec2 = apply_skorokhod_map(psi2, cone);
        double num = 0.0, den = 0.0;
        for (std::size_t m = 0; m < psi1.values.size(); ++m) {
            num = std::max(num, (dec1.phi[m] - dec2.phi[m]).norm());
            den = std::max(den, (psi1.values[m] - psi2.values[m]).norm());
        }
        if (den < 1e-12) continue;  // identical inputs give no information
        best = std::max(best, num / den);
    }
    return best;
}

}  // namespace conewalk
