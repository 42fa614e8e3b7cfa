#include "conewalk/diffusion.hpp"

#include "conewalk/log.hpp"
#include "conewalk/skorokhod.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace conewalk {

double spectral_norm(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

namespace {

void require_square(const Mat& m, int k, const char* what) {
    if (m.rows() != k || m.cols() != k) {
        throw Error(std::string(what) + ": matrix must be " + std::to_string(k) + "x" +
                    std::to_string(k));
    }
}

}  // namespace

DiffusionModel::DiffusionModel(int dimension, DriftSpec drift, SigmaSpec sigma, double gamma_bound,
                               double c_floor)
    : dimension_(dimension),
      drift_(std::move(drift)),
      sigma_(std::move(sigma)),
      gamma_bound_(gamma_bound),
      c_floor_(c_floor) {
    if (dimension_ < 1) throw Error("model dimension must be positive");
    if (!(gamma_bound_ > 0.0)) throw Error("gamma_bound must be positive");
    if (!(c_floor_ > 0.0)) throw Error("c_floor must be positive");
    if (const auto* affine = std::get_if<AffineDrift>(&drift_)) {
        if (affine->b0.size() != dimension_) throw Error("drift b0: dimension mismatch");
        require_square(affine->B, dimension_, "drift B");
    } else if (const auto* pw = std::get_if<PiecewiseRadialDrift>(&drift_)) {
        if (pw->pieces.empty()) throw Error("piecewise drift needs at least one piece");
        double prev = 0.0;
        for (std::size_t i = 0; i < pw->pieces.size(); ++i) {
            const RadialPiece& piece = pw->pieces[i];
            if (piece.b0.size() != dimension_) throw Error("drift piece b0: dimension mismatch");
            require_square(piece.B, dimension_, "drift piece B");
            const bool last = (i + 1 == pw->pieces.size());
            if (!last && !(piece.r_upper > prev)) {
                throw Error("piecewise drift radii must be strictly increasing");
            }
            prev = piece.r_upper;
        }
    } else if (const auto* ex = std::get_if<ExprDrift>(&drift_)) {
        if (static_cast<int>(ex->components.size()) != dimension_) {
            throw Error("drift expressions: need one component per coordinate");
        }
    }
    if (const auto* cs = std::get_if<ConstantSigma>(&sigma_)) {
        require_square(cs->value, dimension_, "sigma");
    } else if (const auto* ds = std::get_if<DiagonalExprSigma>(&sigma_)) {
        if (static_cast<int>(ds->diagonal.size()) != dimension_) {
            throw Error("sigma diagonal expressions: need one entry per coordinate");
        }
    }
}

DiffusionModel::DiffusionModel(const DiffusionModel& other)
    : dimension_(other.dimension_),
      drift_(other.drift_),
      sigma_(other.sigma_),
      gamma_bound_(other.gamma_bound_),
      c_floor_(other.c_floor_) {
    sigma_violated_.store(other.sigma_violated_.load(std::memory_order_relaxed),
                          std::memory_order_relaxed);
}

DiffusionModel& DiffusionModel::operator=(const DiffusionModel& other) {
    if (this != &other) {
        dimension_ = other.dimension_;
        drift_ = other.drift_;
        sigma_ = other.sigma_;
        gamma_bound_ = other.gamma_bound_;
        c_floor_ = other.c_floor_;
        sigma_violated_.store(other.sigma_violated_.load(std::memory_order_relaxed),
                              std::memory_order_relaxed);
    }
    return *this;
}

Vec DiffusionModel::drift(const Vec& x) const {
    if (x.size() != dimension_) throw Error("drift: dimension mismatch");
    if (const auto* affine = std::get_if<AffineDrift>(&drift_)) {
        return affine->b0 + affine->B * x;
    }
    if (const auto* pw = std::get_if<PiecewiseRadialDrift>(&drift_)) {
        const double r = x.norm();
        for (std::size_t i = 0; i + 1 < pw->pieces.size(); ++i) {
            if (r <= pw->pieces[i].r_upper) {
                return pw->pieces[i].b0 + pw->pieces[i].B * x;
            }
        }
        const RadialPiece& last = pw->pieces.back();
        return last.b0 + last.B * x;
    }
    const auto& ex = std::get<ExprDrift>(drift_);
    Vec out(dimension_);
    for (int i = 0; i < dimension_; ++i) {
        out(i) = ex.components[static_cast<std::size_t>(i)].eval(x);
    }
    return out;
}

Mat DiffusionModel::sigma(const Vec& x) const {
    if (x.size() != dimension_) throw Error("sigma: dimension mismatch");
    Mat s;
    if (const auto* cs = std::get_if<ConstantSigma>(&sigma_)) {
        s = cs->value;
    } else {
        const auto& ds = std::get<DiagonalExprSigma>(sigma_);
        s = Mat::Zero(dimension_, dimension_);
        for (int i = 0; i < dimension_; ++i) {
            s(i, i) = ds.diagonal[static_cast<std::size_t>(i)].eval(x);
        }
    }
    // Frobenius as a free pre-filter (it dominates the spectral norm); confirm
    // against the operator norm only when it trips.
    if (s.norm() > gamma_bound_ * (1.0 + 1e-9)) {
        const double spectral = spectral_norm(s);
        if (spectral > gamma_bound_ * (1.0 + 1e-9) &&
            !sigma_violated_.exchange(true, std::memory_order_relaxed)) {
            log(LogLevel::warn, "sigma bound violated: |sigma(x)| = " + format_double(spectral) +
                                    " > gamma = " + format_double(gamma_bound_));
        }
    }
    return s;
}

std::string DiffusionModel::describe() const {
    std::ostringstream out;
    out << "k=" << dimension_ << ";gamma=" << format_double(gamma_bound_)
        << ";c=" << format_double(c_floor_) << ";drift=";
    if (const auto* affine = std::get_if<AffineDrift>(&drift_)) {
        out << "affine[b0=" << affine->b0.transpose() << ";B=" << affine->B.reshaped().transpose()
            << "]";
    } else if (const auto* pw = std::get_if<PiecewiseRadialDrift>(&drift_)) {
        out << "piecewise[" << pw->pieces.size() << " pieces]";
        for (const auto& piece : pw->pieces) {
            out << "(r<=" << format_double(piece.r_upper) << ";b0=" << piece.b0.transpose() << ")";
        }
    } else {
        out << "expr[";
        for (const auto& e : std::get<ExprDrift>(drift_).components) out << e.str() << ";";
        out << "]";
    }
    out << ";sigma=";
    if (const auto* cs = std::get_if<ConstantSigma>(&sigma_)) {
        out << "const[" << cs->value.reshaped().transpose() << "]";
    } else {
        out << "diag[";
        for (const auto& e : std::get<DiagonalExprSigma>(sigma_).diagonal) out << e.str() << ";";
        out << "]";
    }
    return out.str();
}

bool SetSpec::contains(const Vec& x) const {
    if (kind == Kind::ball) {
        return (x - center).norm() <= radius;
    }
    for (int i = 0; i < x.size(); ++i) {
        if (x(i) < lo(i) || x(i) > hi(i)) return false;
    }
    return true;
}

std::string SetSpec::describe() const {
    std::ostringstream out;
    if (kind == Kind::ball) {
        out << "ball(center=" << center.transpose() << ", r=" << format_double(radius) << ")";
    } else {
        out << "box(lo=" << lo.transpose() << ", hi=" << hi.transpose() << ")";
    }
    return out.str();
}

Vec euler_step(const Vec& x, double h, const Vec& gaussian_increment, const DiffusionModel& model,
               const PolyhedralCone& cone) {
    if (!(h > 0.0)) throw Error("euler_step: h must be positive");
    if (gaussian_increment.size() != model.dimension()) {
        throw Error("euler_step: increment dimension mismatch");
    }
    const Vec y = x + h * model.drift(x) + model.sigma(x) * gaussian_increment;
    return project_point(y, cone).point;
}

void walk_path(const Vec& x, const DiffusionModel& model, const PolyhedralCone& cone,
               std::int64_t steps, double h, const NormalSource& noise,
               const std::function<bool(const StepRecord&)>& on_step) {
    if (!(h > 0.0)) throw Error("walk_path: h must be positive");
    if (!cone.contains(x)) throw SimulationError("start point outside the domain");
    const int k = model.dimension();

    Vec state = x;
    Vec z(k);
    for (std::int64_t m = 0; m < steps; ++m) {
        noise.fill(static_cast<std::uint64_t>(m), z.data(), k);
        const Vec noise_term = model.sigma(state) * (std::sqrt(h) * z);
        const Vec y = state + h * model.drift(state) + noise_term;
        Projection proj;
        try {
            proj = project_point(y, cone);
        } catch (const ProjectionError& e) {
            throw SimulationError("projection failed at step " + std::to_string(m + 1) + ": " +
                                  e.what());
        }
        if (!proj.point.allFinite()) {
            throw SimulationError("nonfinite state at step " + std::to_string(m + 1) +
                                  " (coefficient blow-up?)");
        }
        const double push_inc = (proj.point - y).norm();
        state = proj.point;
        const StepRecord record{m + 1, static_cast<double>(m + 1) * h, state, noise_term, push_inc};
        if (!on_step(record)) return;
    }
}

namespace {

std::int64_t step_count(double horizon, double h) {
    const double ratio = horizon / h;
    const auto steps = static_cast<std::int64_t>(std::llround(ratio));
    if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-6 * std::max(1.0, ratio)) {
        throw Error("horizon must be a positive multiple of h");
    }
    return steps;
}

}  // namespace

SimPath simulate_path(const Vec& x, const DiffusionModel& model, const PolyhedralCone& cone,
                      double horizon, double h, std::uint64_t seed, std::uint64_t path_index) {
    const std::int64_t steps = step_count(horizon, h);
    SimPath path;
    path.seed = seed;
    path.path_index = path_index;
    path.grid.times.reserve(static_cast<std::size_t>(steps + 1));
    path.grid.values.reserve(static_cast<std::size_t>(steps + 1));
    path.push_total.reserve(static_cast<std::size_t>(steps + 1));
    path.noise_terms.reserve(static_cast<std::size_t>(steps));
    path.grid.times.push_back(0.0);
    path.grid.values.push_back(x);
    path.push_total.push_back(0.0);

    const NormalSource noise(seed, path_index);
    walk_path(x, model, cone, steps, h, noise, [&](const StepRecord& record) {
        path.grid.times.push_back(record.t);
        path.grid.values.push_back(record.state);
        path.push_total.push_back(path.push_total.back() + record.push_increment);
        path.noise_terms.push_back(record.noise);
        return true;
    });
    return path;
}

std::vector<double> dyadic_blocks(double horizon) {
    std::vector<double> bounds{0.0};
    double edge = 1.0;
    while (edge < horizon) {
        bounds.push_back(edge);
        edge *= 2.0;
    }
    bounds.push_back(horizon);
    return bounds;
}

std::string fingerprint(const std::string& description) {
    std::uint64_t hash = 1469598103934665603ULL;
    for (const char c : description) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return std::string(buf);
}

namespace {

std::string cone_description(const PolyhedralCone& cone) {
    std::ostringstream out;
    out << "k=" << cone.dimension() << ";faces=";
    for (const Face& f : cone.faces()) {
        out << "(n=" << f.normal.transpose() << ";d=" << f.direction.transpose() << ")";
    }
    return out.str();
}

PathSummary run_summary_path(const Vec& x0, int path_index, int start_index,
                             const DiffusionModel& model, const PolyhedralCone& cone,
                             std::int64_t steps, double h, std::uint64_t base_seed,
                             const std::vector<double>& block_bounds,
                             const std::optional<SetSpec>& hit_target) {
    PathSummary summary;
    summary.path_index = path_index;
    summary.start_index = start_index;
    summary.initial_state = x0;
    summary.final_state = x0;
    summary.sup_norm = x0.norm();
    summary.block_sup.assign(block_bounds.size() - 1, 0.0);
    std::size_t block = 0;
    auto fold_into_blocks = [&](double t, double norm) {
        while (block + 2 < block_bounds.size() && t > block_bounds[block + 1]) ++block;
        summary.block_sup[block] = std::max(summary.block_sup[block], norm);
    };
    fold_into_blocks(0.0, x0.norm());
    if (hit_target && hit_target->contains(x0)) {
        summary.hit = true;
        summary.first_hit_time = 0.0;
    }

    double norm_time_integral = 0.0;
    Vec prev = x0;
    const NormalSource noise(base_seed, static_cast<std::uint64_t>(path_index));
    try {
        walk_path(x0, model, cone, steps, h, noise, [&](const StepRecord& record) {
            norm_time_integral += prev.norm() * h;
            prev = record.state;
            const double norm = record.state.norm();
            summary.sup_norm = std::max(summary.sup_norm, norm);
            fold_into_blocks(record.t, norm);
            summary.push_total += record.push_increment;
            if (hit_target && !summary.hit && hit_target->contains(record.state)) {
                summary.hit = true;
                summary.first_hit_time = record.t;
            }
            if (record.step == steps) summary.final_state = record.state;
            return true;
        });
        summary.time_avg_norm = norm_time_integral / (static_cast<double>(steps) * h);
    } catch (const std::exception& e) {
        summary.failed = true;
        summary.error = e.what();
    }
    return summary;
}

}  // namespace

TrajectoryEnsemble simulate_ensemble(const std::vector<Vec>& x_list, const DiffusionModel& model,
                                     const PolyhedralCone& cone, double horizon, double h,
                                     int n_paths, std::uint64_t base_seed,
                                     const EnsembleOptions& options) {
    if (x_list.empty()) throw Error("simulate_ensemble: x_list must be nonempty");
    if (n_paths < 1) throw Error("simulate_ensemble: n_paths must be >= 1");
    const std::int64_t steps = step_count(horizon, h);

    TrajectoryEnsemble ensemble;
    ensemble.base_seed = base_seed;
    ensemble.horizon = horizon;
    ensemble.h = h;
    ensemble.n_paths = n_paths;
    ensemble.model_fingerprint = fingerprint(model.describe());
    ensemble.cone_fingerprint = fingerprint(cone_description(cone));
    ensemble.block_bounds = dyadic_blocks(horizon);
    ensemble.summaries.resize(static_cast<std::size_t>(n_paths));

    const auto run_one = [&](int p) {
        const int start_index = p % static_cast<int>(x_list.size());
        ensemble.summaries[static_cast<std::size_t>(p)] =
            run_summary_path(x_list[static_cast<std::size_t>(start_index)], p, start_index, model,
                             cone, steps, h, base_seed, ensemble.block_bounds, options.hit_target);
    };

    if (options.policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int p = 0; p < n_paths; ++p) run_one(p);
    } else {
        for (int p = 0; p < n_paths; ++p) run_one(p);
    }

    for (const PathSummary& s : ensemble.summaries) {
        if (s.failed) ++ensemble.failure_count;
    }
    if (ensemble.failure_count > 0) {
        log(LogLevel::warn, std::to_string(ensemble.failure_count) + " of " +
                                std::to_string(n_paths) + " paths failed");
    }
    return ensemble;
}

}  // namespace conewalk
