#ifndef CONEWALK_DIFFUSION_HPP
#define CONEWALK_DIFFUSION_HPP

#include "conewalk/dynamics.hpp"
#include "conewalk/expr.hpp"
#include "conewalk/geometry.hpp"
#include "conewalk/rng.hpp"
#include "conewalk/types.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace conewalk {

struct AffineDrift {
    Vec b0;
    Mat B;
};

struct RadialPiece {
    double r_upper;  // piece applies while |x| <= r_upper; last piece is +inf
    Vec b0;
    Mat B;
};

struct PiecewiseRadialDrift {
    std::vector<RadialPiece> pieces;  // ascending r_upper
};

struct ExprDrift {
    std::vector<Expr> components;  // one expression per coordinate
};

struct ConstantSigma {
    Mat value;
};

struct DiagonalExprSigma {
    std::vector<Expr> diagonal;  // one expression per diagonal entry
};

/// Drift b(.) and diffusion sigma(.) with the coefficient bound gamma and the
/// nondegeneracy floor c. The driving noise dimension equals the state
/// dimension (square sigma).
class DiffusionModel {
public:
    using DriftSpec = std::variant<AffineDrift, PiecewiseRadialDrift, ExprDrift>;
    using SigmaSpec = std::variant<ConstantSigma, DiagonalExprSigma>;

    DiffusionModel(int dimension, DriftSpec drift, SigmaSpec sigma, double gamma_bound,
                   double c_floor);
    DiffusionModel(const DiffusionModel& other);
    DiffusionModel& operator=(const DiffusionModel& other);

    int dimension() const { return dimension_; }
    double gamma_bound() const { return gamma_bound_; }
    double c_floor() const { return c_floor_; }
    const DriftSpec& drift_spec() const { return drift_; }
    const SigmaSpec& sigma_spec() const { return sigma_; }

    Vec drift(const Vec& x) const;
    /// Evaluates sigma(x); a Frobenius norm above gamma_bound latches a
    /// diagnostic flag and logs once, it does not abort the run.
    Mat sigma(const Vec& x) const;

    bool sigma_bound_violated() const { return sigma_violated_.load(std::memory_order_relaxed); }

    std::string describe() const;

private:
    int dimension_;
    DriftSpec drift_;
    SigmaSpec sigma_;
    double gamma_bound_;
    double c_floor_;
    mutable std::atomic<bool> sigma_violated_{false};
};

/// A ball or axis-aligned box target set.
struct SetSpec {
    enum class Kind { ball, box };
    Kind kind = Kind::ball;
    Vec center;  // ball
    double radius = 0.0;
    Vec lo, hi;  // box

    bool contains(const Vec& x) const;
    std::string describe() const;
};

/// One projected Euler step: project(x + b(x) h + sigma(x) dW).
Vec euler_step(const Vec& x, double h, const Vec& gaussian_increment, const DiffusionModel& model,
               const PolyhedralCone& cone);

/// A simulated constrained trajectory with its pushing totals and the recorded
/// per-step noise terms sigma(X_m) dW_m.
struct SimPath {
    PathGrid grid;
    std::vector<double> push_total;  // cumulative |k|(t_m), size grid.size()
    std::vector<Vec> noise_terms;    // size grid.size()-1
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
};

/// Euler-Maruyama under the one-step Skorokhod projection with increments
/// sqrt(h) N(0, I_k) from the counter generator keyed by (seed, path_index).
SimPath simulate_path(const Vec& x, const DiffusionModel& model, const PolyhedralCone& cone,
                      double horizon, double h, std::uint64_t seed, std::uint64_t path_index = 0);

/// View of one completed step, fed to streaming consumers.
struct StepRecord {
    std::int64_t step;  // index of the new state (1-based)
    double t;           // time of the new state
    const Vec& state;
    const Vec& noise;  // sigma(X_{m-1}) dW
    double push_increment;
};

/// Streaming core shared by simulate_path and the ensemble/estimator kernels:
/// one code path, so stored paths and streamed summaries agree bit for bit.
/// `on_step` may return false to stop early.
void walk_path(const Vec& x, const DiffusionModel& model, const PolyhedralCone& cone,
               std::int64_t steps, double h, const NormalSource& noise,
               const std::function<bool(const StepRecord&)>& on_step);

struct PathSummary {
    int path_index = 0;
    int start_index = 0;  // which entry of x_list the path started from
    Vec initial_state;
    Vec final_state;
    double sup_norm = 0.0;
    double time_avg_norm = 0.0;  // time average of |X| over the horizon
    double push_total = 0.0;
    double first_hit_time = -1.0;  // into the configured target, -1 when unset
    bool hit = false;
    std::vector<double> block_sup;  // sup |X| per dyadic time block
    bool failed = false;
    std::string error;
};

struct EnsembleOptions {
    std::optional<SetSpec> hit_target;
    ExecPolicy policy = ExecPolicy::parallel;
};

struct TrajectoryEnsemble {
    std::uint64_t base_seed = 0;
    double horizon = 0.0;
    double h = 0.0;
    int n_paths = 0;
    std::string model_fingerprint;
    std::string cone_fingerprint;
    std::vector<double> block_bounds;  // dyadic time boundaries shared by all paths
    std::vector<PathSummary> summaries;
    int failure_count = 0;
};

/// Independent paths with derived seeds; path p starts at
/// x_list[p % x_list.size()]. Summaries land in path-index order, so the
/// output is identical for serial and parallel execution. Per-path failures
/// are recorded and the ensemble continues.
TrajectoryEnsemble simulate_ensemble(const std::vector<Vec>& x_list, const DiffusionModel& model,
                                     const PolyhedralCone& cone, double horizon, double h,
                                     int n_paths, std::uint64_t base_seed,
                                     const EnsembleOptions& options = {});

/// Dyadic block boundaries 0, 1, 2, 4, ... capped at the horizon.
std::vector<double> dyadic_blocks(double horizon);

std::string fingerprint(const std::string& description);

/// Largest singular value.
double spectral_norm(const Mat& m);

}  // namespace conewalk

#endif
