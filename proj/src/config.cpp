#include "conewalk/config.hpp"

#include "conewalk/skorokhod.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace conewalk {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

const Json& member(const Json& obj, const std::string& path, const std::string& key) {
    if (!obj.is_object()) fail(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing");
    return *it;
}

double number_at(const Json& obj, const std::string& path, const std::string& key) {
    const Json& v = member(obj, path, key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

int int_at(const Json& obj, const std::string& path, const std::string& key) {
    const Json& v = member(obj, path, key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<int>();
}

Vec vec_from(const Json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path, "expected a nonempty array of numbers");
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
        out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
}

Mat mat_from(const Json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path, "expected a nonempty array of rows");
    const std::size_t rows = v.size();
    std::size_t cols = 0;
    Mat out;
    for (std::size_t r = 0; r < rows; ++r) {
        const Vec row = vec_from(v[r], path + "[" + std::to_string(r) + "]");
        if (r == 0) {
            cols = static_cast<std::size_t>(row.size());
            out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        } else if (static_cast<std::size_t>(row.size()) != cols) {
            fail(path + "[" + std::to_string(r) + "]", "ragged matrix rows");
        }
        out.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return out;
}

Json vec_to_json(const Vec& v) {
    Json out = Json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Json mat_to_json(const Mat& m) {
    Json out = Json::array();
    for (int r = 0; r < m.rows(); ++r) out.push_back(vec_to_json(m.row(r).transpose()));
    return out;
}

Expr expr_at(const Json& v, const std::string& path, int dimension) {
    if (!v.is_string()) fail(path, "expected an expression string");
    try {
        return Expr::parse(v.get<std::string>(), dimension);
    } catch (const ParseError& e) {
        fail(path, e.what());
    }
}

DiffusionModel::DriftSpec parse_drift(const Json& drift, int dimension, const std::string& path) {
    const Json& type = member(drift, path, "type");
    if (!type.is_string()) fail(path + ".type", "expected a string");
    const std::string kind = type.get<std::string>();
    if (kind == "affine") {
        return AffineDrift{vec_from(member(drift, path, "b0"), path + ".b0"),
                           mat_from(member(drift, path, "B"), path + ".B")};
    }
    if (kind == "piecewise_radial") {
        const Json& pieces = member(drift, path, "pieces");
        if (!pieces.is_array() || pieces.empty()) fail(path + ".pieces", "expected a nonempty array");
        PiecewiseRadialDrift out;
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            const std::string ppath = path + ".pieces[" + std::to_string(i) + "]";
            const Json& piece = pieces[i];
            RadialPiece rp;
            const bool last = (i + 1 == pieces.size());
            if (piece.contains("r_upper")) {
                rp.r_upper = number_at(piece, ppath, "r_upper");
            } else if (last) {
                rp.r_upper = std::numeric_limits<double>::infinity();
            } else {
                fail(ppath + ".r_upper", "missing (only the last piece may omit it)");
            }
            rp.b0 = vec_from(member(piece, ppath, "b0"), ppath + ".b0");
            rp.B = mat_from(member(piece, ppath, "B"), ppath + ".B");
            out.pieces.push_back(std::move(rp));
        }
        return out;
    }
    if (kind == "expr") {
        const Json& comps = member(drift, path, "components");
        if (!comps.is_array()) fail(path + ".components", "expected an array of strings");
        ExprDrift out;
        for (std::size_t i = 0; i < comps.size(); ++i) {
            out.components.push_back(
                expr_at(comps[i], path + ".components[" + std::to_string(i) + "]", dimension));
        }
        return out;
    }
    fail(path + ".type", "unknown drift type '" + kind + "'");
}

DiffusionModel::SigmaSpec parse_sigma(const Json& sigma, int dimension, const std::string& path) {
    const Json& type = member(sigma, path, "type");
    if (!type.is_string()) fail(path + ".type", "expected a string");
    const std::string kind = type.get<std::string>();
    if (kind == "constant") {
        return ConstantSigma{mat_from(member(sigma, path, "matrix"), path + ".matrix")};
    }
    if (kind == "diagonal_expr") {
        const Json& diag = member(sigma, path, "diag");
        if (!diag.is_array()) fail(path + ".diag", "expected an array of strings");
        DiagonalExprSigma out;
        for (std::size_t i = 0; i < diag.size(); ++i) {
            out.diagonal.push_back(
                expr_at(diag[i], path + ".diag[" + std::to_string(i) + "]", dimension));
        }
        return out;
    }
    fail(path + ".type", "unknown sigma type '" + kind + "'");
}

SetSpec parse_set(const Json& v, int dimension, const std::string& path) {
    const Json& type = member(v, path, "type");
    if (!type.is_string()) fail(path + ".type", "expected a string");
    const std::string kind = type.get<std::string>();
    SetSpec out;
    if (kind == "ball") {
        out.kind = SetSpec::Kind::ball;
        out.center = vec_from(member(v, path, "center"), path + ".center");
        out.radius = number_at(v, path, "radius");
        if (out.center.size() != dimension) fail(path + ".center", "dimension mismatch");
        if (!(out.radius >= 0.0)) fail(path + ".radius", "must be >= 0");
    } else if (kind == "box") {
        out.kind = SetSpec::Kind::box;
        out.lo = vec_from(member(v, path, "lo"), path + ".lo");
        out.hi = vec_from(member(v, path, "hi"), path + ".hi");
        if (out.lo.size() != dimension || out.hi.size() != dimension) {
            fail(path, "box bounds dimension mismatch");
        }
    } else {
        fail(path + ".type", "unknown set type '" + kind + "'");
    }
    return out;
}

Json set_to_json(const SetSpec& s) {
    Json out;
    if (s.kind == SetSpec::Kind::ball) {
        out["type"] = "ball";
        out["center"] = vec_to_json(s.center);
        out["radius"] = s.radius;
    } else {
        out["type"] = "box";
        out["lo"] = vec_to_json(s.lo);
        out["hi"] = vec_to_json(s.hi);
    }
    return out;
}

}  // namespace

Config parse_config(const std::string& json_text) {
    Json root;
    try {
        root = Json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    Config cfg;
    cfg.dimension = int_at(root, "", "dimension");
    if (cfg.dimension < 1 || cfg.dimension > 8) fail("dimension", "must be in 1..8");

    const Json& faces = member(root, "", "faces");
    if (!faces.is_array() || faces.empty()) fail("faces", "expected a nonempty array");
    for (std::size_t i = 0; i < faces.size(); ++i) {
        const std::string fpath = "faces[" + std::to_string(i) + "]";
        cfg.normals.push_back(vec_from(member(faces[i], fpath, "normal"), fpath + ".normal"));
        cfg.directions.push_back(vec_from(member(faces[i], fpath, "direction"), fpath + ".direction"));
        if (cfg.normals.back().size() != cfg.dimension) fail(fpath + ".normal", "dimension mismatch");
        if (cfg.directions.back().size() != cfg.dimension) {
            fail(fpath + ".direction", "dimension mismatch");
        }
    }
    if (faces.size() > 16) fail("faces", "at most 16 faces supported");

    if (root.contains("lipschitz_K")) {
        const Json& k = root["lipschitz_K"];
        if (!k.is_number()) fail("lipschitz_K", "expected a number");
        cfg.lipschitz_K = k.get<double>();
        if (!(*cfg.lipschitz_K >= 1.0)) fail("lipschitz_K", "must be >= 1");
    }

    cfg.delta = number_at(root, "", "delta");
    if (!(cfg.delta > 0.0)) fail("delta", "must be positive");
    cfg.r_A = number_at(root, "", "r_A");
    if (!(cfg.r_A >= 0.0)) fail("r_A", "must be >= 0");

    const Json& model = member(root, "", "model");
    cfg.gamma_bound = number_at(model, "model", "gamma_bound");
    if (!(cfg.gamma_bound > 0.0)) fail("model.gamma_bound", "must be positive");
    cfg.c_floor = number_at(model, "model", "c_floor");
    if (!(cfg.c_floor > 0.0)) fail("model.c_floor", "must be positive");
    auto drift_spec = parse_drift(member(model, "model", "drift"), cfg.dimension, "model.drift");
    auto sigma_spec = parse_sigma(member(model, "model", "sigma"), cfg.dimension, "model.sigma");

    const Json& sim = member(root, "", "sim");
    cfg.sim.x0 = vec_from(member(sim, "sim", "x0"), "sim.x0");
    if (cfg.sim.x0.size() != cfg.dimension) fail("sim.x0", "dimension mismatch");
    cfg.sim.h = number_at(sim, "sim", "h");
    if (!(cfg.sim.h > 0.0)) fail("sim.h", "must be positive");
    cfg.sim.horizon = number_at(sim, "sim", "horizon");
    if (!(cfg.sim.horizon > 0.0)) fail("sim.horizon", "must be positive");
    cfg.sim.burn_in = sim.contains("burn_in") ? number_at(sim, "sim", "burn_in") : 0.0;
    if (cfg.sim.burn_in < 0.0 || cfg.sim.burn_in >= cfg.sim.horizon) {
        fail("sim.burn_in", "must satisfy 0 <= burn_in < horizon");
    }
    cfg.sim.n_paths = sim.contains("n_paths") ? int_at(sim, "sim", "n_paths") : 1;
    if (cfg.sim.n_paths < 1) fail("sim.n_paths", "must be >= 1");
    if (sim.contains("base_seed")) {
        const Json& seed = sim["base_seed"];
        if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
            fail("sim.base_seed", "expected an unsigned integer");
        }
        cfg.sim.base_seed = seed.get<std::uint64_t>();
    }
    cfg.sim.t_cap = sim.contains("t_cap") ? number_at(sim, "sim", "t_cap") : 200.0;
    if (!(cfg.sim.t_cap > 0.0)) fail("sim.t_cap", "must be positive");

    if (root.contains("output")) {
        const Json& out = root["output"];
        if (out.contains("paths")) cfg.output.paths = int_at(out, "output", "paths");
        if (cfg.output.paths < 0) fail("output.paths", "must be >= 0");
        if (out.contains("formats")) {
            cfg.output.formats.clear();
            for (const auto& f : out["formats"]) {
                if (!f.is_string()) fail("output.formats", "expected strings");
                const std::string name = f.get<std::string>();
                if (name != "csv" && name != "json") fail("output.formats", "unknown format '" + name + "'");
                cfg.output.formats.push_back(name);
            }
        }
        if (out.contains("bins")) cfg.output.bins = int_at(out, "output", "bins");
        if (cfg.output.bins < 1) fail("output.bins", "must be >= 1");
        if (out.contains("box")) {
            const Json& box = out["box"];
            cfg.output.box_lo = vec_from(member(box, "output.box", "lo"), "output.box.lo");
            cfg.output.box_hi = vec_from(member(box, "output.box", "hi"), "output.box.hi");
            if (cfg.output.box_lo.size() != cfg.dimension ||
                cfg.output.box_hi.size() != cfg.dimension) {
                fail("output.box", "dimension mismatch");
            }
            for (int i = 0; i < cfg.dimension; ++i) {
                if (!(cfg.output.box_hi(i) > cfg.output.box_lo(i))) {
                    fail("output.box", "hi must exceed lo on every axis");
                }
            }
        }
    }
    if (cfg.output.box_lo.size() == 0) {
        cfg.output.box_lo = Vec::Zero(cfg.dimension);
        cfg.output.box_hi = Vec::Constant(cfg.dimension, 4.0);
    }

    if (root.contains("hitting")) {
        const Json& hit = root["hitting"];
        HittingConfig hc;
        const Json& xs = member(hit, "hitting", "x_list");
        if (!xs.is_array() || xs.empty()) fail("hitting.x_list", "expected a nonempty array");
        for (std::size_t i = 0; i < xs.size(); ++i) {
            hc.x_list.push_back(vec_from(xs[i], "hitting.x_list[" + std::to_string(i) + "]"));
            if (hc.x_list.back().size() != cfg.dimension) {
                fail("hitting.x_list[" + std::to_string(i) + "]", "dimension mismatch");
            }
        }
        hc.target = parse_set(member(hit, "hitting", "target"), cfg.dimension, "hitting.target");
        if (hit.contains("n_controls")) hc.n_controls = int_at(hit, "hitting", "n_controls");
        if (hc.n_controls < 1) fail("hitting.n_controls", "must be >= 1");
        cfg.hitting = std::move(hc);
    }

    if (root.contains("diagnose")) {
        const Json& diag = root["diagnose"];
        DiagnoseConfig dc;
        dc.block_length = number_at(diag, "diagnose", "Delta");
        if (!(dc.block_length > 0.0)) fail("diagnose.Delta", "must be positive");
        if (diag.contains("kappa")) dc.kappa = number_at(diag, "diagnose", "kappa");
        if (!(dc.kappa > 0.0)) fail("diagnose.kappa", "must be positive");
        if (diag.contains("blocks")) dc.blocks = int_at(diag, "diagnose", "blocks");
        if (dc.blocks < 1) fail("diagnose.blocks", "must be >= 1");
        if (diag.contains("M0_grid")) {
            for (const auto& v : diag["M0_grid"]) {
                if (!v.is_number()) fail("diagnose.M0_grid", "expected numbers");
                dc.m0_grid.push_back(v.get<double>());
            }
        }
        if (diag.contains("x0")) {
            dc.x0 = vec_from(diag["x0"], "diagnose.x0");
            if (dc.x0->size() != cfg.dimension) fail("diagnose.x0", "dimension mismatch");
        }
        cfg.diagnose = std::move(dc);
    }

    // Eager geometry build: errors surface now, named by field.
    try {
        cfg.cone = build_cone(cfg.normals, cfg.directions, cfg.lipschitz_K);
    } catch (const GeometryError& e) {
        throw ConfigError(std::string("faces: ") + e.what());
    }
    cfg.drift_cone = dual_description(*cfg.cone);
    try {
        cfg.model = DiffusionModel(cfg.dimension, std::move(drift_spec), std::move(sigma_spec),
                                   cfg.gamma_bound, cfg.c_floor);
    } catch (const Error& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    if (!cfg.cone->contains(cfg.sim.x0)) fail("sim.x0", "outside the domain cone");
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

namespace {

Json drift_to_json(const DiffusionModel::DriftSpec& spec) {
    Json out;
    if (const auto* affine = std::get_if<AffineDrift>(&spec)) {
        out["type"] = "affine";
        out["b0"] = vec_to_json(affine->b0);
        out["B"] = mat_to_json(affine->B);
    } else if (const auto* pw = std::get_if<PiecewiseRadialDrift>(&spec)) {
        out["type"] = "piecewise_radial";
        Json pieces = Json::array();
        for (std::size_t i = 0; i < pw->pieces.size(); ++i) {
            Json piece;
            if (std::isfinite(pw->pieces[i].r_upper)) piece["r_upper"] = pw->pieces[i].r_upper;
            piece["b0"] = vec_to_json(pw->pieces[i].b0);
            piece["B"] = mat_to_json(pw->pieces[i].B);
            pieces.push_back(std::move(piece));
        }
        out["pieces"] = std::move(pieces);
    } else {
        const auto& ex = std::get<ExprDrift>(spec);
        out["type"] = "expr";
        Json comps = Json::array();
        for (const Expr& e : ex.components) comps.push_back(e.str());
        out["components"] = std::move(comps);
    }
    return out;
}

Json sigma_to_json(const DiffusionModel::SigmaSpec& spec) {
    Json out;
    if (const auto* cs = std::get_if<ConstantSigma>(&spec)) {
        out["type"] = "constant";
        out["matrix"] = mat_to_json(cs->value);
    } else {
        const auto& ds = std::get<DiagonalExprSigma>(spec);
        out["type"] = "diagonal_expr";
        Json diag = Json::array();
        for (const Expr& e : ds.diagonal) diag.push_back(e.str());
        out["diag"] = std::move(diag);
    }
    return out;
}

}  // namespace

std::string emit_config(const Config& config) {
    Json root;
    root["dimension"] = config.dimension;
    Json faces = Json::array();
    for (std::size_t i = 0; i < config.normals.size(); ++i) {
        Json face;
        face["normal"] = vec_to_json(config.normals[i]);
        face["direction"] = vec_to_json(config.directions[i]);
        faces.push_back(std::move(face));
    }
    root["faces"] = std::move(faces);
    if (config.lipschitz_K) root["lipschitz_K"] = *config.lipschitz_K;
    root["delta"] = config.delta;
    root["r_A"] = config.r_A;

    Json model;
    model["drift"] = drift_to_json(config.model->drift_spec());
    model["sigma"] = sigma_to_json(config.model->sigma_spec());
    model["gamma_bound"] = config.gamma_bound;
    model["c_floor"] = config.c_floor;
    root["model"] = std::move(model);

    Json sim;
    sim["x0"] = vec_to_json(config.sim.x0);
    sim["h"] = config.sim.h;
    sim["horizon"] = config.sim.horizon;
    sim["burn_in"] = config.sim.burn_in;
    sim["n_paths"] = config.sim.n_paths;
    sim["base_seed"] = config.sim.base_seed;
    sim["t_cap"] = config.sim.t_cap;
    root["sim"] = std::move(sim);

    Json output;
    output["paths"] = config.output.paths;
    output["formats"] = config.output.formats;
    output["bins"] = config.output.bins;
    Json box;
    box["lo"] = vec_to_json(config.output.box_lo);
    box["hi"] = vec_to_json(config.output.box_hi);
    output["box"] = std::move(box);
    root["output"] = std::move(output);

    if (config.hitting) {
        Json hit;
        Json xs = Json::array();
        for (const Vec& x : config.hitting->x_list) xs.push_back(vec_to_json(x));
        hit["x_list"] = std::move(xs);
        hit["target"] = set_to_json(config.hitting->target);
        hit["n_controls"] = config.hitting->n_controls;
        root["hitting"] = std::move(hit);
    }
    if (config.diagnose) {
        Json diag;
        diag["Delta"] = config.diagnose->block_length;
        diag["kappa"] = config.diagnose->kappa;
        diag["blocks"] = config.diagnose->blocks;
        if (!config.diagnose->m0_grid.empty()) diag["M0_grid"] = config.diagnose->m0_grid;
        if (config.diagnose->x0) diag["x0"] = vec_to_json(*config.diagnose->x0);
        root["diagnose"] = std::move(diag);
    }
    return root.dump(2) + "\n";
}

double Config::effective_lipschitz(std::uint64_t seed) const {
    if (lipschitz_K) return *lipschitz_K;
    const double estimate = estimate_lipschitz(*cone, 64, seed);
    return std::max(estimate, 1.0);
}

}  // namespace conewalk
