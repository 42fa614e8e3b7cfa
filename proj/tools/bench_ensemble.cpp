// Timing comparison of the serial reference kernels against the OpenMP ones.
// The outputs must agree bit for bit; this binary reports the speedup.

#include "conewalk/diffusion.hpp"
#include "conewalk/ergodics.hpp"
#include "conewalk/geometry.hpp"

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace conewalk;

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool summaries_equal(const TrajectoryEnsemble& a, const TrajectoryEnsemble& b) {
    if (a.summaries.size() != b.summaries.size()) return false;
    for (std::size_t i = 0; i < a.summaries.size(); ++i) {
        const PathSummary& x = a.summaries[i];
        const PathSummary& y = b.summaries[i];
        if (x.final_state != y.final_state || x.sup_norm != y.sup_norm ||
            x.time_avg_norm != y.time_avg_norm || x.push_total != y.push_total) {
            return false;
        }
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    int n_paths = 64;
    double horizon = 20.0;
    if (argc > 1) n_paths = std::atoi(argv[1]);
    if (argc > 2) horizon = std::atof(argv[2]);

    const int k = 2;
    Vec n1(k), n2(k), d1(k), d2(k);
    n1 << 1, 0;
    n2 << 0, 1;
    d1 << 1, 0.4;
    d2 << 0.4, 1;
    const PolyhedralCone cone = build_cone({n1, n2}, {d1, d2}, 4.0);

    Vec b0(k);
    b0 << -1.0, -1.0;
    const DiffusionModel model(k, AffineDrift{b0, Mat::Zero(k, k)},
                               ConstantSigma{Mat::Identity(k, k)}, 1.0, 1.0);
    Vec x0(k);
    x0 << 2.0, 2.0;

    const double h = 1e-3;
    const std::uint64_t seed = 2024;

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (OpenMP disabled)\n");
#endif
    std::printf("ensemble: %d paths, horizon %.1f, h %.0e\n", n_paths, horizon, h);

    EnsembleOptions serial_opts;
    serial_opts.policy = ExecPolicy::serial;
    auto t0 = std::chrono::steady_clock::now();
    const TrajectoryEnsemble serial =
        simulate_ensemble({x0}, model, cone, horizon, h, n_paths, seed, serial_opts);
    const double serial_time = seconds_since(t0);

    EnsembleOptions parallel_opts;
    parallel_opts.policy = ExecPolicy::parallel;
    t0 = std::chrono::steady_clock::now();
    const TrajectoryEnsemble parallel =
        simulate_ensemble({x0}, model, cone, horizon, h, n_paths, seed, parallel_opts);
    const double parallel_time = seconds_since(t0);

    std::printf("simulate_ensemble: serial %.3fs, parallel %.3fs, speedup %.2fx, outputs %s\n",
                serial_time, parallel_time, serial_time / parallel_time,
                summaries_equal(serial, parallel) ? "identical" : "DIFFER");

    SetSpec target;
    target.kind = SetSpec::Kind::ball;
    target.center = Vec::Zero(k);
    target.radius = 1.0;
    std::vector<Vec> starts{x0};

    t0 = std::chrono::steady_clock::now();
    const auto hit_serial = estimate_hitting_time(model, cone, target, starts, n_paths, h, 50.0,
                                                  seed, ExecPolicy::serial);
    const double hit_serial_time = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const auto hit_parallel = estimate_hitting_time(model, cone, target, starts, n_paths, h, 50.0,
                                                    seed, ExecPolicy::parallel);
    const double hit_parallel_time = seconds_since(t0);
    std::printf("estimate_hitting_time: serial %.3fs, parallel %.3fs, speedup %.2fx, outputs %s\n",
                hit_serial_time, hit_parallel_time, hit_serial_time / hit_parallel_time,
                hit_serial[0].mean == hit_parallel[0].mean ? "identical" : "DIFFER");
    return 0;
}
