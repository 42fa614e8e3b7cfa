#include "conewalk/ergodics.hpp"

#include "conewalk/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace conewalk {

std::vector<HittingTimeEstimate> estimate_hitting_time(
    const DiffusionModel& model, const PolyhedralCone& cone, const SetSpec& target,
    const std::vector<Vec>& x_list, int n_paths, double h, double t_cap, std::uint64_t seed,
    ExecPolicy policy) {
    if (x_list.empty()) throw Error("estimate_hitting_time: x_list must be nonempty");
    if (n_paths < 1) throw Error("estimate_hitting_time: n_paths must be >= 1");
    if (!(t_cap > 0.0) || !std::isfinite(t_cap)) {
        throw Error("estimate_hitting_time: t_cap must be finite and positive");
    }
    const auto steps = static_cast<std::int64_t>(std::ceil(t_cap / h - 1e-9));

    std::vector<HittingTimeEstimate> estimates(x_list.size());
    for (std::size_t xi = 0; xi < x_list.size(); ++xi) {
        const Vec& x0 = x_list[xi];
        std::vector<double> tau(static_cast<std::size_t>(n_paths), t_cap);
        std::vector<char> censored(static_cast<std::size_t>(n_paths), 1);

        const auto run_one = [&](int p) {
            if (target.contains(x0)) {
                tau[static_cast<std::size_t>(p)] = 0.0;
                censored[static_cast<std::size_t>(p)] = 0;
                return;
            }
            const std::uint64_t stream =
                static_cast<std::uint64_t>(xi) * static_cast<std::uint64_t>(n_paths) +
                static_cast<std::uint64_t>(p);
            const NormalSource noise(seed, stream);
            walk_path(x0, model, cone, steps, h, noise, [&](const StepRecord& record) {
                if (target.contains(record.state)) {
                    tau[static_cast<std::size_t>(p)] = std::min(record.t, t_cap);
                    censored[static_cast<std::size_t>(p)] = 0;
                    return false;
                }
                return true;
            });
        };

        if (policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(dynamic)
            for (int p = 0; p < n_paths; ++p) run_one(p);
        } else {
            for (int p = 0; p < n_paths; ++p) run_one(p);
        }

        HittingTimeEstimate& est = estimates[xi];
        est.start = x0;
        est.n = n_paths;
        est.censored = static_cast<int>(std::count(censored.begin(), censored.end(), 1));
        est.all_censored = est.censored == n_paths;
        est.mean = std::accumulate(tau.begin(), tau.end(), 0.0) / n_paths;
        double ss = 0.0;
        for (const double t : tau) ss += (t - est.mean) * (t - est.mean);
        est.stderr_mean = n_paths > 1 ? std::sqrt(ss / (n_paths - 1) / n_paths) : 0.0;
        if (est.all_censored) {
            log(LogLevel::warn, "hitting-time estimate fully censored at t_cap = " +
                                    format_double(t_cap) + " from |x0| = " +
                                    format_double(x0.norm()));
        }
    }
    return estimates;
}

std::size_t OccupationHistogram::flat_size() const {
    std::size_t total = 1;
    for (const int b : bins) total *= static_cast<std::size_t>(b);
    return total;
}

std::size_t OccupationHistogram::flat_index(const std::vector<int>& multi) const {
    std::size_t index = 0;
    for (std::size_t axis = 0; axis < bins.size(); ++axis) {
        index = index * static_cast<std::size_t>(bins[axis]) + static_cast<std::size_t>(multi[axis]);
    }
    return index;
}

double OccupationHistogram::total_mass() const {
    return std::accumulate(mass.begin(), mass.end(), 0.0) + out_of_box_mass;
}

double OccupationHistogram::bin_center(int axis, int index) const {
    const double width = (hi(axis) - lo(axis)) / bins[static_cast<std::size_t>(axis)];
    return lo(axis) + (index + 0.5) * width;
}

namespace {

struct HistogramAccumulator {
    Vec lo, hi;
    std::vector<int> bins;
    std::vector<double> in_box;
    double out_of_box = 0.0;
    double elapsed = 0.0;

    HistogramAccumulator(const Vec& lo_in, const Vec& hi_in, const std::vector<int>& bins_in)
        : lo(lo_in), hi(hi_in), bins(bins_in) {
        if (static_cast<std::size_t>(lo.size()) != bins.size() || lo.size() != hi.size()) {
            throw Error("occupation histogram: box/bins dimension mismatch");
        }
        std::size_t total = 1;
        for (std::size_t axis = 0; axis < bins.size(); ++axis) {
            if (bins[axis] < 1) throw Error("occupation histogram: bins must be >= 1");
            if (!(hi(static_cast<Eigen::Index>(axis)) > lo(static_cast<Eigen::Index>(axis)))) {
                throw Error("occupation histogram: degenerate box");
            }
            total *= static_cast<std::size_t>(bins[axis]);
            if (total > (1u << 24)) throw Error("occupation histogram: too many bins");
        }
        in_box.assign(total, 0.0);
    }

    void add(const Vec& x, double dt) {
        elapsed += dt;
        std::size_t index = 0;
        for (std::size_t axis = 0; axis < bins.size(); ++axis) {
            const double a = lo(static_cast<Eigen::Index>(axis));
            const double b = hi(static_cast<Eigen::Index>(axis));
            const double v = x(static_cast<Eigen::Index>(axis));
            if (v < a || v > b) {
                out_of_box += dt;
                return;
            }
            const double width = (b - a) / bins[axis];
            int cell = static_cast<int>((v - a) / width);
            if (cell >= bins[axis]) cell = bins[axis] - 1;  // closed top edge
            index = index * static_cast<std::size_t>(bins[axis]) + static_cast<std::size_t>(cell);
        }
        in_box[index] += dt;
    }

    OccupationHistogram finish() const {
        if (!(elapsed > 0.0)) throw Error("occupation histogram: no elapsed time");
        OccupationHistogram hist;
        hist.lo = lo;
        hist.hi = hi;
        hist.bins = bins;
        hist.mass.resize(in_box.size());
        for (std::size_t i = 0; i < in_box.size(); ++i) hist.mass[i] = in_box[i] / elapsed;
        hist.out_of_box_mass = out_of_box / elapsed;
        hist.elapsed = elapsed;
        return hist;
    }
};

}  // namespace

OccupationHistogram occupation_measure(const SimPath& path, const Vec& lo, const Vec& hi,
                                       const std::vector<int>& bins) {
    path.grid.validate();
    if (path.grid.size() < 2) throw Error("occupation_measure: path needs at least two nodes");
    HistogramAccumulator acc(lo, hi, bins);
    for (std::size_t m = 0; m + 1 < path.grid.size(); ++m) {
        acc.add(path.grid.values[m], path.grid.times[m + 1] - path.grid.times[m]);
    }
    return acc.finish();
}

InvariantEstimate estimate_invariant_measure(const DiffusionModel& model,
                                             const PolyhedralCone& cone, const Vec& x0,
                                             double burn_in, double horizon, double h,
                                             const Vec& lo, const Vec& hi,
                                             const std::vector<int>& bins, std::uint64_t seed) {
    if (!(burn_in >= 0.0) || !(burn_in < horizon)) {
        throw Error("estimate_invariant_measure: need 0 <= burn_in < horizon");
    }
    const auto steps = static_cast<std::int64_t>(std::llround(horizon / h));
    if (std::abs(horizon / h - static_cast<double>(steps)) > 1e-6) {
        throw Error("estimate_invariant_measure: horizon must be a multiple of h");
    }
    const int k = model.dimension();

    HistogramAccumulator acc(lo, hi, bins);
    Vec first = Vec::Zero(k);
    Vec second = Vec::Zero(k);
    Vec half1 = Vec::Zero(k);
    Vec half2 = Vec::Zero(k);
    double weight = 0.0, w1 = 0.0, w2 = 0.0;
    const double mid = burn_in + 0.5 * (horizon - burn_in);

    Vec prev = x0;
    double prev_t = 0.0;
    const NormalSource noise(seed, /*stream=*/0);
    walk_path(x0, model, cone, steps, h, noise, [&](const StepRecord& record) {
        if (prev_t >= burn_in) {
            const double dt = record.t - prev_t;
            acc.add(prev, dt);
            first += dt * prev;
            second += dt * prev.cwiseProduct(prev);
            weight += dt;
            if (prev_t < mid) {
                half1 += dt * prev;
                w1 += dt;
            } else {
                half2 += dt * prev;
                w2 += dt;
            }
        }
        prev = record.state;
        prev_t = record.t;
        return true;
    });

    InvariantEstimate estimate;
    estimate.histogram = acc.finish();
    estimate.mean = first / weight;
    estimate.second_moment = second / weight;
    estimate.half_mean_first = half1 / std::max(w1, 1e-300);
    estimate.half_mean_second = half2 / std::max(w2, 1e-300);
    estimate.half_discrepancy =
        (estimate.half_mean_first - estimate.half_mean_second).cwiseAbs().maxCoeff();
    estimate.burn_in = burn_in;
    estimate.horizon = horizon;
    return estimate;
}

DriftDiagnostic lyapunov_drift_diagnostic(const SimPath& path, double Delta, double K,
                                          double delta, double r_A,
                                          const std::function<double(const Vec&)>& estimator,
                                          const std::string& estimator_id) {
    if (path.grid.size() < 2) throw Error("lyapunov_drift_diagnostic: path too short");
    const double h = path.grid.times[1] - path.grid.times[0];
    const double ratio = Delta / h;
    const auto steps_per_block = static_cast<std::int64_t>(std::llround(ratio));
    if (steps_per_block < 1 || std::abs(ratio - static_cast<double>(steps_per_block)) > 1e-6) {
        throw Error("lyapunov_drift_diagnostic: Delta must be a positive multiple of the path step");
    }
    if (path.noise_terms.size() + 1 != path.grid.size()) {
        throw Error("lyapunov_drift_diagnostic: path is missing noise records");
    }
    if (!(K >= 1.0) || !(delta > 0.0)) {
        throw Error("lyapunov_drift_diagnostic: need K >= 1 and delta > 0");
    }

    const double lip_C = 4.0 * K * K * K / delta;
    const auto total_steps = static_cast<std::int64_t>(path.grid.size()) - 1;
    const std::int64_t block_count = total_steps / steps_per_block;

    DriftDiagnostic diag;
    diag.block_length = Delta;
    diag.estimator_id = estimator_id;
    diag.blocks.reserve(static_cast<std::size_t>(block_count));

    const int k = path.grid.dimension();
    for (std::int64_t b = 0; b < block_count; ++b) {
        const std::int64_t lo = b * steps_per_block;
        const std::int64_t hi = lo + steps_per_block;
        DriftBlock block;
        block.t_start = path.grid.times[static_cast<std::size_t>(lo)];

        bool outside = true;
        for (std::int64_t m = lo; m <= hi; ++m) {
            if (path.grid.values[static_cast<std::size_t>(m)].norm() <= r_A) {
                outside = false;
                break;
            }
        }
        if (outside) {
            Vec partial = Vec::Zero(k);
            double nu_bar = 0.0;
            for (std::int64_t m = lo; m < hi; ++m) {
                partial += path.noise_terms[static_cast<std::size_t>(m)];
                nu_bar = std::max(nu_bar, partial.norm());
            }
            block.nu_bar = nu_bar;
            block.value_before = estimator(path.grid.values[static_cast<std::size_t>(lo)]);
            block.value_after = estimator(path.grid.values[static_cast<std::size_t>(hi)]);
            block.slack = block.value_after -
                          (std::max(block.value_before - Delta, 0.0) + K * lip_C * nu_bar);
            block.scored = true;
            ++diag.scored_count;
            if (block.slack > 1e-9) ++diag.violation_count;
        }
        diag.blocks.push_back(std::move(block));
    }
    return diag;
}

ExpMomentResult exp_moment_check(const DiffusionModel& model, const PolyhedralCone& cone,
                                 const Vec& x0, double kappa, double Delta, int blocks,
                                 int n_paths, double h, std::uint64_t seed, ExecPolicy policy) {
    if (!(kappa > 0.0) || !(Delta > 0.0)) throw Error("exp_moment_check: kappa, Delta must be > 0");
    if (blocks < 1 || n_paths < 1) throw Error("exp_moment_check: blocks, n_paths must be >= 1");
    const double ratio = Delta / h;
    const auto steps_per_block = static_cast<std::int64_t>(std::llround(ratio));
    if (steps_per_block < 1 || std::abs(ratio - static_cast<double>(steps_per_block)) > 1e-6) {
        throw Error("exp_moment_check: Delta must be a positive multiple of h");
    }
    const std::int64_t steps = steps_per_block * blocks;
    const int k = model.dimension();

    std::vector<double> exponents(static_cast<std::size_t>(n_paths), 0.0);
    const auto run_one = [&](int p) {
        const NormalSource noise(seed, static_cast<std::uint64_t>(p));
        Vec partial = Vec::Zero(k);
        double nu_sum = 0.0;
        double nu_bar = 0.0;
        walk_path(x0, model, cone, steps, h, noise, [&](const StepRecord& record) {
            partial += record.noise;
            nu_bar = std::max(nu_bar, partial.norm());
            if (record.step % steps_per_block == 0) {
                nu_sum += nu_bar;
                nu_bar = 0.0;
                partial.setZero();
            }
            return true;
        });
        exponents[static_cast<std::size_t>(p)] = kappa * nu_sum;
    };

    if (policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int p = 0; p < n_paths; ++p) run_one(p);
    } else {
        for (int p = 0; p < n_paths; ++p) run_one(p);
    }

    // Shifted log-space mean: overflow-safe for large exponents.
    const double shift = *std::max_element(exponents.begin(), exponents.end());
    double sum_w = 0.0;
    for (const double e : exponents) sum_w += std::exp(e - shift);
    const double mean_w = sum_w / n_paths;
    double ss = 0.0;
    for (const double e : exponents) {
        const double d = std::exp(e - shift) - mean_w;
        ss += d * d;
    }
    const double stderr_w = n_paths > 1 ? std::sqrt(ss / (n_paths - 1) / n_paths) : 0.0;

    ExpMomentResult result;
    result.samples = n_paths;
    result.log_estimate = shift + std::log(mean_w);
    result.estimate = std::exp(result.log_estimate);
    result.log_bound = blocks * (std::log(2.0 * std::sqrt(2.0)) +
                                 static_cast<double>(k) * k * kappa * kappa *
                                     model.gamma_bound() * model.gamma_bound() * Delta);
    result.bound = std::exp(result.log_bound);
    result.stderr_fraction = stderr_w / mean_w;
    result.pass = result.log_estimate <= result.log_bound + std::log1p(3.0 * result.stderr_fraction);
    return result;
}

std::vector<TightnessRow> tightness_diagnostic(const TrajectoryEnsemble& ensemble,
                                               const std::vector<double>& M0_grid) {
    const std::size_t block_count =
        ensemble.block_bounds.empty() ? 0 : ensemble.block_bounds.size() - 1;
    std::vector<TightnessRow> rows;
    rows.reserve(M0_grid.size());
    int valid = 0;
    for (const PathSummary& s : ensemble.summaries) {
        if (!s.failed) ++valid;
    }
    for (const double m0 : M0_grid) {
        TightnessRow row;
        row.M0 = m0;
        if (valid > 0) {
            for (std::size_t b = 0; b < block_count; ++b) {
                int exceed = 0;
                for (const PathSummary& s : ensemble.summaries) {
                    if (!s.failed && s.block_sup[b] >= m0) ++exceed;
                }
                row.max_frequency =
                    std::max(row.max_frequency, static_cast<double>(exceed) / valid);
            }
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace conewalk
