#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rateindep/errors.hpp"
#include "rateindep/scenarios.hpp"

namespace rateindep {

struct ToleranceSet {
    double tol_inner = 1e-9;
    double tol_norm = 1e-6;
    double tol_comp = 1e-6;
    double delta_g_rel = 1e-6;
    int quad_subnodes = 8;
    double fiber_halfwidth = 0.05;
    double lambda_tol = 1e-6;
};

struct LoadSegmentSpec {
    std::string kind;  // "constant" | "affine"
    double t0 = 0.0, t1 = 0.0;
    Vec from, to;  // constant uses `from` only
};

struct JumpSpec {
    double t = 0.0;
    std::string which;  // "left" | "right" | "value"
    Vec value;
};

struct LoadSpec {
    std::vector<LoadSegmentSpec> segments;
    std::vector<JumpSpec> jumps;

    BVLoad build(int dim) const {
        if (segments.empty()) throw Error(ErrorCode::BadConfig, "load: no segments");
        std::vector<BVLoad::Segment> segs;
        for (const auto& s : segments) {
            if (static_cast<int>(s.from.size()) != dim)
                throw Error(ErrorCode::BadConfig, "load: segment dimension mismatch");
            BVLoad::Segment seg;
            seg.t0 = s.t0;
            seg.t1 = s.t1;
            seg.base = s.from;
            if (s.kind == "constant") {
                seg.slope = Vec(dim, 0.0);
            } else if (s.kind == "affine") {
                seg.slope = s.to;
                for (int i = 0; i < dim; ++i) seg.slope[i] = (s.to[i] - s.from[i]) / (s.t1 - s.t0);
            } else {
                throw Error(ErrorCode::BadConfig, "load: segment kind must be constant or affine");
            }
            segs.push_back(std::move(seg));
        }
        double T = segs.back().t1;
        std::vector<BVLoad::Designation> desig(segs.size() - 1);
        for (const auto& j : jumps) {
            bool found = false;
            for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
                if (std::abs(segs[i].t1 - j.t) <= 1e-12 * (1.0 + T)) {
                    if (j.which == "left")
                        desig[i] = {JumpValue::Left, {}};
                    else if (j.which == "right")
                        desig[i] = {JumpValue::Right, {}};
                    else if (j.which == "value")
                        desig[i] = {JumpValue::Explicit, j.value};
                    else
                        throw Error(ErrorCode::BadConfig, "load: jump designation must be left, right or value");
                    found = true;
                }
            }
            if (!found) throw Error(ErrorCode::BadConfig, "load: jump time is not a segment breakpoint");
        }
        return BVLoad(T, std::move(segs), std::move(desig));
    }

    static LoadSpec from_load(const BVLoad& load) {
        LoadSpec spec;
        for (const auto& s : load.segments()) {
            LoadSegmentSpec ls;
            bool constant = norm_inf(s.slope) == 0.0;
            ls.kind = constant ? "constant" : "affine";
            ls.t0 = s.t0;
            ls.t1 = s.t1;
            ls.from = s.at(s.t0);
            if (!constant) ls.to = s.at(s.t1);
            spec.segments.push_back(std::move(ls));
        }
        const auto& des = load.designations();
        for (std::size_t i = 0; i < des.size(); ++i) {
            JumpSpec j;
            j.t = load.segments()[i].t1;
            switch (des[i].kind) {
                case JumpValue::Left: j.which = "left"; break;
                case JumpValue::Right: j.which = "right"; break;
                case JumpValue::Explicit:
                    j.which = "value";
                    j.value = des[i].explicit_value;
                    break;
            }
            spec.jumps.push_back(std::move(j));
        }
        return spec;
    }
};

struct InlineProblem {
    int dim = 0;
    std::vector<Vec> a_rows, v_rows;
    Vec r, z0;
    std::string f_kind = "none";  // "none" | "doublewell"
    double f_scale = 1.0;
    LoadSpec load;

    Scenario build() const {
        if (dim < 1) throw Error(ErrorCode::BadConfig, "problem: dim must be positive");
        auto to_matrix = [&](const std::vector<Vec>& rows, const char* what) {
            if (static_cast<int>(rows.size()) != dim) throw Error(ErrorCode::BadConfig, std::string(what) + ": row count mismatch");
            Matrix m(dim, dim);
            for (int i = 0; i < dim; ++i) {
                if (static_cast<int>(rows[i].size()) != dim)
                    throw Error(ErrorCode::BadConfig, std::string(what) + ": column count mismatch");
                for (int j = 0; j < dim; ++j) m(i, j) = rows[i][j];
            }
            return m;
        };
        NonconvexTerm F = NonconvexTerm::zero(dim);
        if (f_kind == "doublewell")
            F = doublewell_term(f_scale, dim);
        else if (f_kind != "none")
            throw Error(ErrorCode::BadConfig, "problem: F must be none or doublewell");
        if (static_cast<int>(z0.size()) != dim) throw Error(ErrorCode::BadConfig, "problem: z0 dimension mismatch");
        return Scenario{"inline",
                        dim,
                        SpdOperator(to_matrix(a_rows, "A")),
                        v_rows.empty() ? SpdOperator::identity(dim) : SpdOperator(to_matrix(v_rows, "V")),
                        Dissipation(r),
                        std::move(F),
                        load.build(dim),
                        z0,
                        MeshRule{},
                        {0.1, 0.05, 0.025},
                        "inline problem"};
    }
};

struct RunConfig {
    std::string scenario;
    std::optional<InlineProblem> problem;
    std::vector<double> eps;  // empty: scenario default
    MeshRule mesh;
    bool mesh_set = false;
    ToleranceSet tol;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    std::string certify_only;

    Scenario make() const {
        if (problem) return problem->build();
        if (scenario.empty()) throw Error(ErrorCode::BadConfig, "no scenario or inline problem given");
        return make_scenario(scenario);
    }

    void validate() const {
        if (!problem && scenario.empty()) throw Error(ErrorCode::BadConfig, "no scenario or inline problem given");
        for (std::size_t i = 0; i + 1 < eps.size(); ++i)
            if (!(eps[i + 1] < eps[i]))
                throw Error(ErrorCode::BadConfig, "eps sequence must be strictly decreasing");
        for (double e : eps)
            if (!(e > 0.0)) throw Error(ErrorCode::BadConfig, "eps values must be positive");
        if (mesh_set && (!(mesh.c > 0.0) || !(mesh.p >= 1.0)))
            throw Error(ErrorCode::BadConfig, "mesh rule needs c > 0 and p >= 1");
        if (tol.quad_subnodes < 1) throw Error(ErrorCode::BadConfig, "quad_subnodes must be >= 1");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_vector(const std::string& text, int line) {
    std::string cleaned = text;
    for (auto& c : cleaned)
        if (c == ',') c = ' ';
    std::istringstream is(cleaned);
    std::vector<double> out;
    double x;
    while (is >> x) out.push_back(x);
    std::string rest;
    if (is.clear(), is >> rest, !rest.empty())
        throw Error(ErrorCode::BadConfig, "line " + std::to_string(line) + ": bad number '" + rest + "'");
    if (out.empty()) throw Error(ErrorCode::BadConfig, "line " + std::to_string(line) + ": expected numbers");
    return out;
}

inline std::vector<Vec> parse_matrix(const std::string& text, int line) {
    std::vector<Vec> rows;
    std::stringstream ss(text);
    std::string row;
    while (std::getline(ss, row, ';')) rows.push_back(parse_vector(row, line));
    return rows;
}

}  // namespace detail

// Line-oriented `key = value` grammar with [run], [tolerances], [problem]
// and [load] sections; see docs/config_grammar.ebnf.
inline RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    InlineProblem prob;
    bool has_problem = false;
    LoadSpec load;
    std::string section = "run";
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw Error(ErrorCode::BadConfig, "line " + std::to_string(lineno) + ": unterminated section");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "run" && section != "tolerances" && section != "problem" && section != "load")
                throw Error(ErrorCode::BadConfig,
                            "line " + std::to_string(lineno) + ": unknown section [" + section + "]");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::BadConfig, "line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (value.empty())
            throw Error(ErrorCode::BadConfig, "line " + std::to_string(lineno) + ": empty value for '" + key + "'");
        auto bad_key = [&]() -> Error {
            return Error(ErrorCode::BadConfig,
                         "line " + std::to_string(lineno) + ": unknown key '" + key + "' in [" + section + "]");
        };
        if (section == "run") {
            if (key == "scenario")
                cfg.scenario = value;
            else if (key == "eps")
                cfg.eps = detail::parse_vector(value, lineno);
            else if (key == "mesh_c") {
                cfg.mesh.c = std::stod(value);
                cfg.mesh_set = true;
            } else if (key == "mesh_p") {
                cfg.mesh.p = std::stod(value);
                cfg.mesh_set = true;
            } else if (key == "seed")
                cfg.seed = std::stoull(value);
            else if (key == "out")
                cfg.out_dir = value;
            else if (key == "certify_only")
                cfg.certify_only = value;
            else
                throw bad_key();
        } else if (section == "tolerances") {
            if (key == "tol_inner")
                cfg.tol.tol_inner = std::stod(value);
            else if (key == "tol_norm")
                cfg.tol.tol_norm = std::stod(value);
            else if (key == "tol_comp")
                cfg.tol.tol_comp = std::stod(value);
            else if (key == "delta_g_rel")
                cfg.tol.delta_g_rel = std::stod(value);
            else if (key == "quad_subnodes")
                cfg.tol.quad_subnodes = std::stoi(value);
            else if (key == "fiber_halfwidth")
                cfg.tol.fiber_halfwidth = std::stod(value);
            else if (key == "lambda_tol")
                cfg.tol.lambda_tol = std::stod(value);
            else
                throw bad_key();
        } else if (section == "problem") {
            has_problem = true;
            if (key == "dim")
                prob.dim = std::stoi(value);
            else if (key == "A")
                prob.a_rows = detail::parse_matrix(value, lineno);
            else if (key == "V")
                prob.v_rows = detail::parse_matrix(value, lineno);
            else if (key == "r")
                prob.r = detail::parse_vector(value, lineno);
            else if (key == "z0")
                prob.z0 = detail::parse_vector(value, lineno);
            else if (key == "F") {
                std::istringstream vs(value);
                vs >> prob.f_kind;
                if (!(vs >> prob.f_scale)) prob.f_scale = 1.0;
            } else
                throw bad_key();
        } else {  // load
            has_problem = has_problem || true;
            if (key == "segment") {
                auto colon = value.find(':');
                if (colon == std::string::npos)
                    throw Error(ErrorCode::BadConfig, "line " + std::to_string(lineno) + ": segment needs ':'");
                std::istringstream head(value.substr(0, colon));
                LoadSegmentSpec seg;
                head >> seg.kind >> seg.t0 >> seg.t1;
                if (head.fail())
                    throw Error(ErrorCode::BadConfig,
                                "line " + std::to_string(lineno) + ": segment header must be 'kind t0 t1'");
                std::string body = detail::trim(value.substr(colon + 1));
                auto arrow = body.find("->");
                if (seg.kind == "affine") {
                    if (arrow == std::string::npos)
                        throw Error(ErrorCode::BadConfig,
                                    "line " + std::to_string(lineno) + ": affine segment needs 'from -> to'");
                    seg.from = detail::parse_vector(body.substr(0, arrow), lineno);
                    seg.to = detail::parse_vector(body.substr(arrow + 2), lineno);
                } else {
                    seg.from = detail::parse_vector(body, lineno);
                }
                load.segments.push_back(std::move(seg));
            } else if (key == "jump") {
                std::istringstream vs(value);
                JumpSpec j;
                vs >> j.t >> j.which;
                if (vs.fail())
                    throw Error(ErrorCode::BadConfig, "line " + std::to_string(lineno) + ": jump needs 't which'");
                if (j.which == "value") {
                    std::string rest;
                    std::getline(vs, rest);
                    j.value = detail::parse_vector(rest, lineno);
                }
                load.jumps.push_back(std::move(j));
            } else
                throw bad_key();
        }
    }
    if (!load.segments.empty()) {
        prob.load = load;
        has_problem = true;
    }
    if (has_problem && prob.dim > 0) cfg.problem = prob;
    cfg.validate();
    return cfg;
}

inline nlohmann::json load_spec_to_json(const LoadSpec& spec) {
    nlohmann::json j;
    j["segments"] = nlohmann::json::array();
    for (const auto& s : spec.segments) {
        nlohmann::json js{{"kind", s.kind}, {"t0", s.t0}, {"t1", s.t1}, {"from", s.from}};
        if (s.kind == "affine") js["to"] = s.to;
        j["segments"].push_back(js);
    }
    j["jumps"] = nlohmann::json::array();
    for (const auto& jp : spec.jumps) {
        nlohmann::json jj{{"t", jp.t}, {"which", jp.which}};
        if (jp.which == "value") jj["value"] = jp.value;
        j["jumps"].push_back(jj);
    }
    return j;
}

inline LoadSpec load_spec_from_json(const nlohmann::json& j) {
    LoadSpec spec;
    for (const auto& js : j.at("segments")) {
        LoadSegmentSpec s;
        s.kind = js.at("kind").get<std::string>();
        s.t0 = js.at("t0").get<double>();
        s.t1 = js.at("t1").get<double>();
        s.from = js.at("from").get<Vec>();
        if (js.contains("to")) s.to = js.at("to").get<Vec>();
        spec.segments.push_back(std::move(s));
    }
    for (const auto& jj : j.at("jumps")) {
        JumpSpec jp;
        jp.t = jj.at("t").get<double>();
        jp.which = jj.at("which").get<std::string>();
        if (jj.contains("value")) jp.value = jj.at("value").get<Vec>();
        spec.jumps.push_back(std::move(jp));
    }
    return spec;
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["scenario"] = cfg.scenario;
    j["eps"] = cfg.eps;
    j["mesh"] = {{"c", cfg.mesh.c}, {"p", cfg.mesh.p}, {"set", cfg.mesh_set}};
    j["tolerances"] = {{"tol_inner", cfg.tol.tol_inner},
                       {"tol_norm", cfg.tol.tol_norm},
                       {"tol_comp", cfg.tol.tol_comp},
                       {"delta_g_rel", cfg.tol.delta_g_rel},
                       {"quad_subnodes", cfg.tol.quad_subnodes},
                       {"fiber_halfwidth", cfg.tol.fiber_halfwidth},
                       {"lambda_tol", cfg.tol.lambda_tol}};
    j["out"] = cfg.out_dir;
    j["seed"] = cfg.seed;
    if (!cfg.certify_only.empty()) j["certify_only"] = cfg.certify_only;
    if (cfg.problem) {
        nlohmann::json p;
        p["dim"] = cfg.problem->dim;
        p["A"] = cfg.problem->a_rows;
        if (!cfg.problem->v_rows.empty()) p["V"] = cfg.problem->v_rows;
        p["r"] = cfg.problem->r;
        p["z0"] = cfg.problem->z0;
        p["F"] = {{"kind", cfg.problem->f_kind}, {"scale", cfg.problem->f_scale}};
        p["load"] = load_spec_to_json(cfg.problem->load);
        j["problem"] = p;
    }
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    cfg.scenario = j.value("scenario", std::string{});
    cfg.eps = j.value("eps", std::vector<double>{});
    if (j.contains("mesh")) {
        cfg.mesh.c = j["mesh"].value("c", 0.5);
        cfg.mesh.p = j["mesh"].value("p", 1.0);
        cfg.mesh_set = j["mesh"].value("set", false);
    }
    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        cfg.tol.tol_inner = t.value("tol_inner", 1e-9);
        cfg.tol.tol_norm = t.value("tol_norm", 1e-6);
        cfg.tol.tol_comp = t.value("tol_comp", 1e-6);
        cfg.tol.delta_g_rel = t.value("delta_g_rel", 1e-6);
        cfg.tol.quad_subnodes = t.value("quad_subnodes", 8);
        cfg.tol.fiber_halfwidth = t.value("fiber_halfwidth", 0.05);
        cfg.tol.lambda_tol = t.value("lambda_tol", 1e-6);
    }
    cfg.out_dir = j.value("out", std::string{"out"});
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.certify_only = j.value("certify_only", std::string{});
    if (j.contains("problem")) {
        InlineProblem p;
        const auto& jp = j["problem"];
        p.dim = jp.at("dim").get<int>();
        p.a_rows = jp.at("A").get<std::vector<Vec>>();
        if (jp.contains("V")) p.v_rows = jp.at("V").get<std::vector<Vec>>();
        p.r = jp.at("r").get<Vec>();
        p.z0 = jp.at("z0").get<Vec>();
        p.f_kind = jp.at("F").at("kind").get<std::string>();
        p.f_scale = jp.at("F").at("scale").get<double>();
        p.load = load_spec_from_json(jp.at("load"));
        cfg.problem = p;
    }
    cfg.validate();
    return cfg;
}

}  // namespace rateindep
