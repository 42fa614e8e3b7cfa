#include "conewalk/dynamics.hpp"

#include "conewalk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace conewalk {

PathGrid integrate_constrained_ode(const Vec& x, const std::function<Vec(double)>& velocity,
                                   const std::vector<double>& times, const PolyhedralCone& cone) {
    if (times.size() < 1) throw Error("integrate_constrained_ode: empty grid");
    for (std::size_t m = 1; m < times.size(); ++m) {
        if (!(times[m] > times[m - 1])) {
            throw Error("integrate_constrained_ode: times not strictly increasing");
        }
    }
    if (!cone.contains(x)) {
        throw GeometryError("integrate_constrained_ode: start point outside the domain");
    }

    PathGrid out;
    out.times = times;
    out.values.resize(times.size());
    out.values[0] = x;
    for (std::size_t m = 1; m < times.size(); ++m) {
        const double h = times[m] - times[m - 1];
        const Vec v = velocity(times[m - 1]);
        out.values[m] = project_point(out.values[m - 1] + h * v, cone).point;
    }
    return out;
}

double decay_envelope(double x_norm, double K, double delta, double t) {
    if (!(K >= 1.0)) throw Error("decay_envelope: K must be >= 1");
    if (!(delta > 0.0)) throw Error("decay_envelope: delta must be positive");
    if (t < 0.0) throw Error("decay_envelope: t must be >= 0");
    if (x_norm == 0.0) return 0.0;
    return K * K * x_norm * x_norm / (K * x_norm + delta * t);
}

double hitting_time_upper(double x_norm, double K, double delta) {
    if (!(K >= 1.0)) throw Error("hitting_time_upper: K must be >= 1");
    if (!(delta > 0.0)) throw Error("hitting_time_upper: delta must be positive");
    return 4.0 * K * K * x_norm / delta;
}

std::vector<Vec> sample_inset_controls(const GeneratedCone& drift_cone, double delta, int count,
                                       std::uint64_t seed) {
    if (!(delta > 0.0)) throw Error("sample_inset_controls: delta must be positive");
    if (count < 1) throw Error("sample_inset_controls: count must be >= 1");
    if (!drift_cone.inset_nonempty() || drift_cone.facet_normals().empty()) {
        throw GeometryError("no admissible controls: C(delta) is empty or unbounded by facets");
    }
    const auto& facets = drift_cone.facet_normals();
    const auto& gens = drift_cone.generators();
    const int k = drift_cone.dimension();

    const auto facet_margin = [&](const Vec& u) {
        double m = std::numeric_limits<double>::infinity();
        for (const Vec& f : facets) m = std::min(m, u.dot(f));
        return m;
    };

    // Deepest sampled direction: mean of facet normals refined by a random
    // search, used both as a control candidate and to pull other samples inward.
    Vec deep = Vec::Zero(k);
    for (const Vec& f : facets) deep += f;
    if (deep.norm() > 0.0) deep.normalize();
    double deep_margin = deep.norm() > 0.0 ? facet_margin(deep) : -1.0;
    RandomStream rng(seed, /*stream=*/0xc7);
    for (int attempt = 0; attempt < 256; ++attempt) {
        Vec w = Vec::Zero(k);
        for (const Vec& g : gens) w += rng.uniform() * g;
        const double nw = w.norm();
        if (nw == 0.0) continue;
        w /= nw;
        const double m = facet_margin(w);
        if (m > deep_margin) {
            deep_margin = m;
            deep = w;
        }
    }
    if (deep_margin <= 1e-9) {
        throw GeometryError("no admissible controls: could not find a direction interior to C");
    }

    // A unit direction u with margin m yields the exact delta-inset point
    // u * delta / m (positive homogeneity of the boundary distance).
    std::vector<Vec> controls;
    controls.reserve(static_cast<std::size_t>(count));
    const auto push_direction = [&](Vec u) {
        const double nu = u.norm();
        if (nu == 0.0) return false;
        u /= nu;
        const double m = facet_margin(u);
        if (m <= 1e-9) return false;
        controls.push_back(u * (delta / m));
        return true;
    };

    push_direction(deep);
    // Insets of the extreme rays, blended toward the deep direction.
    for (std::size_t i = 0; i < gens.size() && static_cast<int>(controls.size()) < count; ++i) {
        for (double blend : {0.15, 0.4}) {
            if (static_cast<int>(controls.size()) >= count) break;
            push_direction((1.0 - blend) * gens[i] + blend * deep);
        }
    }
    // Random conic combinations for the rest; rejected directions are resampled.
    int guard = 0;
    while (static_cast<int>(controls.size()) < count && guard < 100 * count + 1000) {
        ++guard;
        Vec w = Vec::Zero(k);
        for (const Vec& g : gens) w += rng.uniform() * g;
        w += 0.35 * rng.uniform() * deep;
        push_direction(std::move(w));
    }
    while (static_cast<int>(controls.size()) < count) controls.push_back(controls.front());
    return controls;
}

HittingBracket hitting_time_bracket(const Vec& x, const PolyhedralCone& cone,
                                    const GeneratedCone& drift_cone, double K, double delta,
                                    int n_controls, double grid_h, std::uint64_t seed,
                                    ExecPolicy policy) {
    if (!(grid_h > 0.0)) throw Error("hitting_time_bracket: grid_h must be positive");
    if (n_controls < 1) throw Error("hitting_time_bracket: n_controls must be >= 1");
    if (!drift_cone.inset_nonempty()) {
        throw GeometryError("no admissible controls: C(delta) is empty");
    }

    HittingBracket bracket;
    bracket.upper = hitting_time_upper(x.norm(), K, delta);
    if (x.norm() == 0.0) {
        bracket.lower = 0.0;
        bracket.upper = 0.0;
        bracket.best_control = Vec::Zero(x.size());
        return bracket;
    }

    const std::vector<Vec> controls = sample_inset_controls(drift_cone, delta, n_controls, seed);
    const double eps_hit = 1e-6 * (1.0 + x.norm());
    const double horizon = bracket.upper + 2.0 * grid_h;
    const auto steps = static_cast<std::int64_t>(std::ceil(horizon / grid_h));

    std::vector<double> hit_times(controls.size(), horizon);
    const auto run_control = [&](std::size_t c) {
        const Vec& v = controls[c];
        Vec z = x;
        const Vec step_drift = grid_h * v;
        for (std::int64_t m = 1; m <= steps; ++m) {
            z = project_point(z + step_drift, cone).point;
            if (z.norm() <= eps_hit) {
                hit_times[c] = static_cast<double>(m) * grid_h;
                return;
            }
        }
    };

    if (policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t c = 0; c < static_cast<std::int64_t>(controls.size()); ++c) {
            run_control(static_cast<std::size_t>(c));
        }
    } else {
        for (std::size_t c = 0; c < controls.size(); ++c) run_control(c);
    }

    bracket.samples = static_cast<int>(controls.size());
    std::size_t best_index = 0;
    for (std::size_t c = 0; c < controls.size(); ++c) {
        if (hit_times[c] > hit_times[best_index]) best_index = c;
    }
    bracket.lower = std::min(hit_times[best_index], bracket.upper);
    bracket.best_control = controls[best_index];
    return bracket;
}

bool check_dpp(const PathGrid& trajectory, const std::function<double(const Vec&)>& estimator,
               double tol) {
    trajectory.validate();
    const double t0 = trajectory.times.front();
    const double start = estimator(trajectory.values.front());
    for (std::size_t m = 0; m < trajectory.size(); ++m) {
        const double elapsed = trajectory.times[m] - t0;
        const double bound = std::max(start - elapsed, 0.0);
        if (estimator(trajectory.values[m]) > bound + tol) return false;
    }
    return true;
}

}  // namespace conewalk
