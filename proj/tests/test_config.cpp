#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "conewalk/config.hpp"

#include <string>

using namespace conewalk;

namespace {

const char* kMinimal1d = R"json({
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
          "n_paths": 4, "base_seed": 11, "t_cap": 50.0}
})json";

std::string with_replacement(std::string text, const std::string& from, const std::string& to) {
    const auto at = text.find(from);
    REQUIRE(at != std::string::npos);
    return text.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("minimal config loads with defaults") {
    const Config cfg = parse_config(kMinimal1d);
    CHECK(cfg.dimension == 1);
    CHECK(cfg.lipschitz_K == 2.0);
    CHECK(cfg.delta == 1.0);
    CHECK(cfg.sim.n_paths == 4);
    CHECK(cfg.sim.base_seed == 11);
    CHECK(cfg.output.bins == 40);             // default
    CHECK(cfg.output.box_hi(0) == 4.0);       // default box
    CHECK_FALSE(cfg.hitting.has_value());
    REQUIRE(cfg.cone.has_value());
    REQUIRE(cfg.drift_cone.has_value());
    REQUIRE(cfg.model.has_value());
    CHECK(cfg.model->drift(cfg.sim.x0)(0) == -1.0);
    CHECK(cfg.effective_lipschitz(1) == 2.0);
}

TEST_CASE("acuteness violations are reported with the face index") {
    const std::string bad = with_replacement(kMinimal1d, R"json("direction": [1.0])json",
                                             R"json("direction": [-1.0])json");
    try {
        parse_config(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("faces") != std::string::npos);
        CHECK(msg.find("acute") != std::string::npos);
    }
}

TEST_CASE("field errors carry their paths") {
    CHECK_THROWS_WITH_AS(parse_config(R"json({"dimension": 1})json"), doctest::Contains("faces"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(with_replacement(kMinimal1d, "\"delta\": 1.0", "\"delta\": -1")),
                         doctest::Contains("delta"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_config(with_replacement(kMinimal1d, "\"h\": 0.001", "\"h\": 0")),
        doctest::Contains("sim.h"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_config(with_replacement(kMinimal1d, "\"x0\": [2.0]", "\"x0\": [-2.0]")),
        doctest::Contains("sim.x0"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_config(with_replacement(kMinimal1d, "\"gamma_bound\": 1.0", "\"gamma_bound\": 0")),
        doctest::Contains("gamma_bound"), ConfigError);
    CHECK_THROWS_AS(parse_config("{ not json"), ConfigError);
}

TEST_CASE("expression drift evaluates through the model") {
    const std::string expr_cfg = with_replacement(
        kMinimal1d, R"json("drift": {"type": "affine", "b0": [-1.0], "B": [[0.0]]})json",
        R"json("drift": {"type": "expr", "components": ["min(-1, -x0)"]})json");
    const Config cfg = parse_config(expr_cfg);
    Vec x(1);
    x << 2.0;
    CHECK(cfg.model->drift(x)(0) == -2.0);
    x << 0.25;
    CHECK(cfg.model->drift(x)(0) == -1.0);
}

TEST_CASE("expression parse errors carry the component path") {
    const std::string bad = with_replacement(
        kMinimal1d, R"json("drift": {"type": "affine", "b0": [-1.0], "B": [[0.0]]})json",
        R"json("drift": {"type": "expr", "components": ["x1"]})json");
    CHECK_THROWS_WITH_AS(parse_config(bad), doctest::Contains("model.drift.components[0]"),
                         ConfigError);
}

TEST_CASE("canonical re-emission round-trips") {
    const char* full = R"json({
      "dimension": 2,
      "faces": [
        {"normal": [1.0, 0.0], "direction": [1.0, 0.5]},
        {"normal": [0.0, 1.0], "direction": [0.25, 1.0]}
      ],
      "delta": 0.5,
      "r_A": 2.0,
      "model": {
        "drift": {"type": "expr", "components": ["-1 - 0*x0", "max(-2, -1 - x1)"]},
        "sigma": {"type": "diagonal_expr", "diag": ["1", "1 + 0*x1"]},
        "gamma_bound": 2.0,
        "c_floor": 0.5
      },
      "sim": {"x0": [1.0, 1.0], "h": 0.01, "horizon": 10.0, "burn_in": 2.0,
              "n_paths": 3, "base_seed": 7, "t_cap": 100.0},
      "output": {"paths": 2, "formats": ["json"], "bins": 16,
                 "box": {"lo": [0.0, 0.0], "hi": [3.0, 3.0]}},
      "hitting": {"x_list": [[2.0, 2.0]], "target": {"type": "box", "lo": [0.0, 0.0],
                  "hi": [1.0, 1.0]}, "n_controls": 4},
      "diagnose": {"Delta": 0.1, "kappa": 0.5, "blocks": 2, "M0_grid": [1.0, 2.0]}
    })json";
    const Config cfg = parse_config(full);
    const std::string emitted = emit_config(cfg);
    const Config reloaded = parse_config(emitted);
    const std::string emitted_again = emit_config(reloaded);
    CHECK(emitted == emitted_again);
    CHECK(reloaded.dimension == cfg.dimension);
    CHECK(reloaded.sim.n_paths == cfg.sim.n_paths);
    CHECK(reloaded.hitting->n_controls == cfg.hitting->n_controls);
    CHECK(reloaded.diagnose->blocks == cfg.diagnose->blocks);

    // The re-emitted face data is the raw input, not the normalized one.
    CHECK(reloaded.directions[0](1) == 0.5);
}

TEST_CASE("piecewise drift config with an open last piece") {
    const std::string pw = with_replacement(
        kMinimal1d, R"json("drift": {"type": "affine", "b0": [-1.0], "B": [[0.0]]})json",
        R"json("drift": {"type": "piecewise_radial", "pieces": [
             {"r_upper": 1.0, "b0": [-0.5], "B": [[0.0]]},
             {"b0": [-2.0], "B": [[0.0]]}
           ]})json");
    const Config cfg = parse_config(pw);
    Vec x(1);
    x << 0.5;
    CHECK(cfg.model->drift(x)(0) == -0.5);
    x << 5.0;
    CHECK(cfg.model->drift(x)(0) == -2.0);

    const std::string reemitted = emit_config(cfg);
    const Config reloaded = parse_config(reemitted);
    x << 5.0;
    CHECK(reloaded.model->drift(x)(0) == -2.0);
}
