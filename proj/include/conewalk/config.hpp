#ifndef CONEWALK_CONFIG_HPP
#define CONEWALK_CONFIG_HPP

#include "conewalk/diffusion.hpp"
#include "conewalk/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace conewalk {

/// Config parse/validation failure; the message carries the offending field
/// path (or line/column for syntax errors).
struct ConfigError : Error {
    using Error::Error;
};

struct SimConfig {
    Vec x0;
    double h = 0.0;
    double horizon = 0.0;
    double burn_in = 0.0;
    int n_paths = 1;
    std::uint64_t base_seed = 0;
    double t_cap = 0.0;
};

struct OutputConfig {
    int paths = 0;  // number of per-path traces the sde subcommand writes
    std::vector<std::string> formats{"csv", "json"};
    int bins = 40;
    Vec box_lo, box_hi;
};

struct HittingConfig {
    std::vector<Vec> x_list;
    SetSpec target;
    int n_controls = 16;
};

struct DiagnoseConfig {
    double block_length = 0.0;  // Delta
    double kappa = 1.0;
    int blocks = 1;
    std::vector<double> m0_grid;
    std::optional<Vec> x0;  // defaults to sim.x0
};

struct Config {
    int dimension = 0;
    std::vector<Vec> normals;
    std::vector<Vec> directions;
    std::optional<double> lipschitz_K;
    double delta = 0.0;
    double r_A = 0.0;
    double gamma_bound = 0.0;
    double c_floor = 0.0;
    SimConfig sim;
    OutputConfig output;
    std::optional<HittingConfig> hitting;
    std::optional<DiagnoseConfig> diagnose;

    // Built eagerly by load_config; failures carry field paths.
    std::optional<PolyhedralCone> cone;
    std::optional<GeneratedCone> drift_cone;
    std::optional<DiffusionModel> model;

    /// Configured K, or a randomized lower-bound estimate when absent.
    double effective_lipschitz(std::uint64_t seed) const;
};

Config load_config(const std::string& path);
Config parse_config(const std::string& json_text);

/// Canonical re-emission; loading the emitted text reproduces the Config.
std::string emit_config(const Config& config);

}  // namespace conewalk

#endif
