#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "conewalk/types.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const char* kRbmConfig = R"({
  "dimension": 1,
  "faces": [{"normal": [1.0], "direction": [1.0]}],
  "lipschitz_K": 2.0,
  "delta": 1.0,
  "r_A": 1.0,
  "model": {
    "drift": {"type": "affine", "b0": [-1.0], "B": [[0.0]]},
    "sigma": {"type": "constant", "matrix": [[1.0]]},
    "gamma_bound": 1.0,
    "c_floor": 0.9
  },
  "sim": {"x0": [2.0], "h": 0.001, "horizon": 5.0, "burn_in": 1.0,
          "n_paths": 4, "base_seed": 11, "t_cap": 50.0},
  "output": {"paths": 1, "formats": ["csv", "json"], "bins": 20,
             "box": {"lo": [0.0], "hi": [4.0]}},
  "hitting": {"x_list": [[2.0], [3.0]],
              "target": {"type": "ball", "center": [0.0], "radius": 1.0},
              "n_controls": 8},
  "diagnose": {"Delta": 0.1, "kappa": 1.0, "blocks": 1, "M0_grid": [1.0, 2.0, 4.0]}
})";

struct Workspace {
    fs::path dir;
    fs::path config;

    explicit Workspace(const std::string& name, const std::string& config_text) {
        dir = fs::temp_directory_path() / ("conewalk_cli_" + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
        config = dir / "config.json";
        std::ofstream out(config);
        out << config_text;
    }
};

int run_cli(const std::string& arguments, const std::string& env = "") {
    const std::string binary = CONEWALK_CLI_PATH;
    const std::string command =
        (env.empty() ? "" : env + " ") + binary + " " + arguments + " > /dev/null 2>&1";
    const int status = std::system(command.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing file: ", path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

TEST_CASE("check passes on the stable 1-D model") {
    const Workspace ws("check_pass", kRbmConfig);
    const int code = run_cli("check --config " + ws.config.string() + " --out " +
                             (ws.dir / "out").string());
    CHECK(code == 0);
    const std::string report = slurp(ws.dir / "out" / "check_report.json");
    CHECK(report.find("\"pass\": true") != std::string::npos);
}

TEST_CASE("check fails with exit 3 when the drift points outward") {
    std::string unstable = kRbmConfig;
    const auto at = unstable.find("\"b0\": [-1.0]");
    REQUIRE(at != std::string::npos);
    unstable.replace(at, std::string("\"b0\": [-1.0]").size(), "\"b0\": [1.0]");
    const Workspace ws("check_fail", unstable);
    const int code = run_cli("check --config " + ws.config.string() + " --out " +
                             (ws.dir / "out").string());
    CHECK(code == 3);
}

TEST_CASE("validation failures exit with 1") {
    const Workspace ws("bad_config", "{ \"dimension\": 0 }");
    CHECK(run_cli("check --config " + ws.config.string()) == 1);
    CHECK(run_cli("frobnicate --config " + ws.config.string()) == 1);
    CHECK(run_cli("check") == 1);  // missing --config
    CHECK(run_cli("check --config /nonexistent/nope.json") == 1);
}

TEST_CASE("project answers a single query") {
    const Workspace ws("project", kRbmConfig);
    const int code = run_cli("project --config " + ws.config.string() + " --point -0.5 --out " +
                             (ws.dir / "out").string());
    CHECK(code == 0);
    const std::string out = slurp(ws.dir / "out" / "projection.json");
    CHECK(out.find("\"point\"") != std::string::npos);
}

TEST_CASE("sde runs are byte-identical across repeats, thread counts and trace writes") {
    const Workspace ws("sde_det", kRbmConfig);
    const auto out1 = ws.dir / "a";
    const auto out2 = ws.dir / "b";
    const auto out3 = ws.dir / "c";
    CHECK(run_cli("sde --config " + ws.config.string() + " --out " + out1.string(),
                  "OMP_NUM_THREADS=1") == 0);
    CHECK(run_cli("sde --config " + ws.config.string() + " --out " + out2.string(),
                  "OMP_NUM_THREADS=4") == 0);
    CHECK(run_cli("sde --config " + ws.config.string() + " --out " + out3.string()) == 0);
    CHECK(slurp(out1 / "sde_summary.json") == slurp(out2 / "sde_summary.json"));
    CHECK(slurp(out1 / "sde_summary.json") == slurp(out3 / "sde_summary.json"));
    CHECK(slurp(out1 / "trace_0.csv") == slurp(out2 / "trace_0.csv"));

    // A different seed must change the summary.
    const auto out4 = ws.dir / "d";
    CHECK(run_cli("sde --config " + ws.config.string() + " --seed 999 --out " + out4.string()) == 0);
    CHECK(slurp(out1 / "sde_summary.json") != slurp(out4 / "sde_summary.json"));

    // Trace files are newline terminated CSV with the documented header.
    const std::string trace = slurp(out1 / "trace_0.csv");
    CHECK(trace.rfind("t,x0,push_total\n", 0) == 0);
    CHECK(trace.back() == '\n');
}

TEST_CASE("invariant subcommand is deterministic and writes moments") {
    const Workspace ws("invariant", kRbmConfig);
    const auto out1 = ws.dir / "a";
    const auto out2 = ws.dir / "b";
    const std::string args = "invariant --config " + ws.config.string() + " --horizon 20";
    CHECK(run_cli(args + " --out " + out1.string(), "OMP_NUM_THREADS=1") == 0);
    CHECK(run_cli(args + " --out " + out2.string(), "OMP_NUM_THREADS=4") == 0);
    CHECK(slurp(out1 / "invariant.json") == slurp(out2 / "invariant.json"));
    CHECK(slurp(out1 / "invariant.json").find("\"mean\"") != std::string::npos);
}

TEST_CASE("ode, hitting and diagnose complete with reports") {
    const Workspace ws("smoke", kRbmConfig);
    CHECK(run_cli("ode --config " + ws.config.string() + " --horizon 3 --out " +
                  (ws.dir / "ode").string()) == 0);
    CHECK(slurp(ws.dir / "ode" / "ode_report.json").find("envelope_ok") != std::string::npos);
    CHECK(slurp(ws.dir / "ode" / "ode_trace.csv").rfind("t,x0,push_total\n", 0) == 0);

    CHECK(run_cli("hitting --config " + ws.config.string() + " --paths 32 --out " +
                  (ws.dir / "hit").string()) == 0);
    const std::string hitting = slurp(ws.dir / "hit" / "hitting.json");
    CHECK(hitting.find("T_bracket") != std::string::npos);
    CHECK(hitting.find("censored") != std::string::npos);

    CHECK(run_cli("diagnose --config " + ws.config.string() + " --paths 64 --horizon 4 --out " +
                  (ws.dir / "diag").string()) == 0);
    const std::string diag = slurp(ws.dir / "diag" / "diagnose.json");
    CHECK(diag.find("exp_moment") != std::string::npos);
    CHECK(diag.find("tightness") != std::string::npos);
}

TEST_CASE("diagnose exits 3 when the moment bound is violated") {
    // gamma_bound misdeclared far below the actual sigma: the block-moment
    // bound computed from gamma cannot hold against the simulated paths.
    std::string lying = kRbmConfig;
    const auto gamma_at = lying.find("\"gamma_bound\": 1.0");
    REQUIRE(gamma_at != std::string::npos);
    lying.replace(gamma_at, std::string("\"gamma_bound\": 1.0").size(), "\"gamma_bound\": 0.1");
    const auto kappa_at = lying.find("\"kappa\": 1.0");
    REQUIRE(kappa_at != std::string::npos);
    lying.replace(kappa_at, std::string("\"kappa\": 1.0").size(), "\"kappa\": 10.0");
    const Workspace ws("diagnose_fail", lying);
    const int code = run_cli("diagnose --config " + ws.config.string() + " --paths 64 --horizon 4" +
                             " --out " + (ws.dir / "out").string());
    CHECK(code == 3);
    CHECK(slurp(ws.dir / "out" / "diagnose.json").find("\"pass\": false") != std::string::npos);
}

TEST_CASE("flag overrides reach the simulation") {
    const Workspace ws("overrides", kRbmConfig);
    const auto out = ws.dir / "out";
    CHECK(run_cli("sde --config " + ws.config.string() + " --paths 2 --horizon 1 --dt 0.01 --out " +
                  out.string()) == 0);
    const std::string summary = slurp(out / "sde_summary.json");
    CHECK(summary.find("\"n_paths\": 2") != std::string::npos);
    CHECK(summary.find("\"horizon\": 1.0") != std::string::npos);
    CHECK(summary.find("\"h\": 0.01") != std::string::npos);
}
