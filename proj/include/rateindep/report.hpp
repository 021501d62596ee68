#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rateindep/certificates.hpp"
#include "rateindep/errors.hpp"
#include "rateindep/run_config.hpp"
#include "rateindep/sweep.hpp"

namespace rateindep {

namespace detail {

// Full-precision scientific formatting; 17 significant digits round-trip
// doubles exactly, so replays are bit-faithful.
inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", x);
    return buf;
}

inline std::string eps_tag(double eps) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", eps);
    return buf;
}

}  // namespace detail

inline void write_trajectory_csv(const std::string& path, const DiscreteTrajectory& traj) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::BadConfig, "cannot open " + path);
    out << "# eps=" << detail::fmt(traj.eps) << " lambda_rho=" << detail::fmt(traj.lambda_rho) << "\n";
    out << "t";
    for (int i = 0; i < traj.dim(); ++i) out << ",z" << i;
    out << ",residual,energy,dissipation_increment\n";
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        out << detail::fmt(traj.partition.times[k]);
        for (double x : traj.states[k]) out << "," << detail::fmt(x);
        if (k == 0)
            out << "," << detail::fmt(0.0) << "," << detail::fmt(0.0) << "," << detail::fmt(0.0);
        else
            out << "," << detail::fmt(traj.steps[k - 1].residual) << "," << detail::fmt(traj.steps[k - 1].energy)
                << "," << detail::fmt(traj.steps[k - 1].dissipation_increment);
        out << "\n";
    }
}

inline void write_curve_csv(const std::string& path, const ParameterizedCurve& c,
                            const DiscreteTrajectory& traj, const Dissipation& R) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::BadConfig, "cannot open " + path);
    out << "# eps=" << detail::fmt(c.eps) << " delta_g=" << detail::fmt(c.delta_g)
        << " lambda_rho=" << detail::fmt(traj.lambda_rho) << "\n";
    out << "s,t_hat";
    const int n = c.dim;
    for (int i = 0; i < n; ++i) out << ",z" << i;
    out << ",t_prime,r_rate,dist,m,in_g,lambda";
    for (int i = 0; i < n; ++i) out << ",ell" << i;
    for (int i = 0; i < n; ++i) out << ",ell_left" << i;
    out << ",step_end,inner_residual\n";
    // segment fields are written on their left node; the final node repeats zeros
    std::size_t step = 0;
    for (std::size_t j = 0; j < c.s.size(); ++j) {
        bool is_step_end = false;
        double inner_res = 0.0;
        if (step < traj.partition.steps() &&
            std::abs(c.t_hat[j] - traj.partition.times[step + 1]) <= 1e-13 * (1.0 + traj.partition.horizon())) {
            is_step_end = true;
            inner_res = traj.steps[step].residual;
            ++step;
        }
        double tp = 0.0, rr = 0.0, lam = 0.0;
        if (j + 1 < c.s.size()) {
            double ds = c.s[j + 1] - c.s[j];
            tp = (c.t_hat[j + 1] - c.t_hat[j]) / ds;
            rr = R.value(c.z_hat[j + 1] - c.z_hat[j]) / ds;
            lam = c.lambda_seg.empty() ? 0.0 : c.lambda_seg[j];
        }
        Vec ell_right = (j + 1 < c.s.size()) ? c.ell_segments[j].at(c.ell_segments[j].t0)
                                             : c.ell_segments[j - 1].at(c.ell_segments[j - 1].t1);
        Vec ell_left = (j > 0) ? c.ell_segments[j - 1].at(c.ell_segments[j - 1].t1)
                               : c.ell_segments[0].at(c.ell_segments[0].t0);
        out << detail::fmt(c.s[j]) << "," << detail::fmt(c.t_hat[j]);
        for (double x : c.z_hat[j]) out << "," << detail::fmt(x);
        out << "," << detail::fmt(tp) << "," << detail::fmt(rr) << "," << detail::fmt(c.dist_field[j]) << ","
            << detail::fmt(c.m_field[j]) << "," << (j < c.node_in_G.size() && c.node_in_G[j] ? 1 : 0) << ","
            << detail::fmt(lam);
        for (double x : ell_right) out << "," << detail::fmt(x);
        for (double x : ell_left) out << "," << detail::fmt(x);
        out << "," << (is_step_end ? 1 : 0) << "," << detail::fmt(inner_res) << "\n";
    }
}

struct StoredCurve {
    ParameterizedCurve curve;
    DiscreteTrajectory traj;
};

// Rebuilds curve and trajectory from a stored curve file; states, times,
// pulled-back load and step boundaries are authoritative, the derived fields
// are recomputed by the same code paths that built them.
inline StoredCurve read_curve_csv(const std::string& path, const SemilinearEnergy& E, const Dissipation& R,
                                  const SpdOperator& V) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::BadConfig, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# eps=", 0) != 0)
        throw Error(ErrorCode::BadConfig, "stored curve missing metadata header");
    double eps = 0.0, delta_g = 0.0, lambda_rho = 0.0;
    if (std::sscanf(line.c_str(), "# eps=%lf delta_g=%lf lambda_rho=%lf", &eps, &delta_g, &lambda_rho) != 3)
        throw Error(ErrorCode::BadConfig, "stored curve metadata malformed");
    if (!std::getline(in, line)) throw Error(ErrorCode::BadConfig, "stored curve missing column header");
    const int n = E.dim();
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw Error(ErrorCode::BadConfig, "stored curve has a malformed cell: " + cell);
            }
        }
        rows.push_back(std::move(row));
    }
    const std::size_t cols = 2 + n + 6 + 2 * n + 2;
    for (const auto& r : rows)
        if (r.size() != cols) throw Error(ErrorCode::BadConfig, "stored curve has wrong column count");

    ParameterizedCurve c;
    c.eps = eps;
    c.dim = n;
    c.delta_g = delta_g;
    DiscreteTrajectory traj;
    traj.eps = eps;
    traj.lambda_rho = lambda_rho;
    for (std::size_t j = 0; j < rows.size(); ++j) {
        const auto& r = rows[j];
        c.s.push_back(r[0]);
        c.t_hat.push_back(r[1]);
        c.z_hat.push_back(Vec(r.begin() + 2, r.begin() + 2 + n));
    }
    // pulled-back load segments from right/left node values
    for (std::size_t j = 0; j + 1 < rows.size(); ++j) {
        BVLoad::Segment seg;
        seg.t0 = rows[j][0];
        seg.t1 = rows[j + 1][0];
        std::size_t base = 2 + n + 6;
        seg.base = Vec(rows[j].begin() + base, rows[j].begin() + base + n);
        Vec end(rows[j + 1].begin() + base + n, rows[j + 1].begin() + base + 2 * n);
        seg.slope = end;
        for (int i = 0; i < n; ++i) seg.slope[i] = (end[i] - seg.base[i]) / (seg.t1 - seg.t0);
        c.ell_segments.push_back(std::move(seg));
    }
    // trajectory skeleton from flagged step ends
    traj.partition.times.push_back(c.t_hat.front());
    traj.states.push_back(c.z_hat.front());
    std::vector<std::size_t> step_nodes{0};
    for (std::size_t j = 1; j < rows.size(); ++j) {
        if (rows[j][cols - 2] > 0.5) {
            traj.partition.times.push_back(c.t_hat[j]);
            traj.states.push_back(c.z_hat[j]);
            step_nodes.push_back(j);
            StepRecord rec;
            rec.residual = rows[j][cols - 1];
            std::size_t base = 2 + n + 6;
            rec.driving_load = Vec(rows[j].begin() + base + n, rows[j].begin() + base + 2 * n);  // left limit
            traj.steps.push_back(std::move(rec));
        }
    }
    for (std::size_t k = 0; k < traj.steps.size(); ++k) {
        double tau = traj.partition.tau(k);
        Vec inc = traj.increment(k);
        traj.steps[k].energy = E.stored(traj.states[k + 1]) - dot(traj.steps[k].driving_load, traj.states[k + 1]);
        traj.steps[k].dissipation_increment = R.value(inc) + 0.5 * eps / tau * V.quad(inc);
    }
    traj.rho = traj.max_state_norm();

    // recompute segment stability fields and quadrature residuals
    c.S = c.s.back();
    std::size_t step = 1;
    for (std::size_t j = 0; j + 1 < c.s.size(); ++j) {
        while (step < step_nodes.size() && j >= step_nodes[step]) ++step;
        double tau = traj.partition.tau(step - 1);
        Vec inc = traj.increment(step - 1);
        Vec rate = inc;
        for (auto& x : rate) x /= tau;
        double Rd = R.value(rate), nd = V.norm(rate);
        auto dist_with = [&](const Vec& state, const Vec& lv) {
            Vec w = E.gradient_with_load(state, lv);
            for (auto& x : w) x = -x;
            return R.distance_to_box(V, w);
        };
        Vec l_lo = c.ell_segments[j].at(c.ell_segments[j].t0);
        Vec l_hi = c.ell_segments[j].at(c.ell_segments[j].t1);
        double dlo = dist_with(c.z_hat[j], l_lo);
        double dhi = dist_with(c.z_hat[j + 1], l_hi);
        c.seg_dist_lo.push_back(dlo);
        c.seg_dist_hi.push_back(dhi);
        bool moving = norm_inf(inc) > 0.0;
        double h = c.t_hat[j + 1] - c.t_hat[j];
        double ds = c.s[j + 1] - c.s[j];
        if (moving && h > 0.0) {
            Vec zm = c.z_hat[j];
            axpy(0.5, c.z_hat[j + 1] - c.z_hat[j], zm);
            Vec lm = l_lo;
            axpy(0.5, l_hi - l_lo, lm);
            double dm = dist_with(zm, lm);
            double sigma0 = 1.0 + Rd + nd * dlo, sigma1 = 1.0 + Rd + nd * dhi, sigmam = 1.0 + Rd + nd * dm;
            double ds_ref = 0.25 * h * (sigma0 + 2.0 * sigmam + sigma1);
            c.quad_abs_err.push_back(std::abs(ds_ref - ds));
            c.norm_residual.push_back(std::abs(ds_ref - ds) / ds);
        } else {
            c.quad_abs_err.push_back(0.0);
            c.norm_residual.push_back(0.0);
        }
    }
    const std::size_t M = c.s.size();
    c.dist_field.assign(M, 0.0);
    c.m_field.assign(M, 0.0);
    for (std::size_t j = 0; j < M; ++j) {
        double right = (j < M - 1) ? c.seg_dist_lo[j] : c.seg_dist_hi[j - 1];
        double left = (j > 0) ? c.seg_dist_hi[j - 1] : c.seg_dist_lo[0];
        c.dist_field[j] = right;
        c.m_field[j] = std::min(left, right);
    }
    return StoredCurve{std::move(c), std::move(traj)};
}

inline nlohmann::json ledger_to_json(const Ledger& l) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : l.entries)
        arr.push_back({{"id", e.id}, {"lhs", e.lhs}, {"rhs", e.rhs}, {"margin", e.margin}, {"pass", e.pass}});
    return arr;
}

inline nlohmann::json certificates_to_json(const CurveCertificates& c) {
    nlohmann::json sw = nlohmann::json::array();
    for (const auto& s : c.switches)
        sw.push_back({{"t_star", s.t_star}, {"s_star", s.s_star}, {"switches", s.switch_count}, {"ok", s.ok}});
    return {{"normalization_max", c.normalization_max},
            {"complementarity_l2", c.complementarity_l2sq},
            {"complementarity_bound", c.complementarity_bound},
            {"edi_max", c.edi_max_abs},
            {"edi_budget", c.edi_budget},
            {"edi_within_budget", c.edi_within_budget},
            {"lambda_residual_max", c.lambda_residual_max},
            {"off_g_m_max", c.off_g_m_max},
            {"monotone_t_defect", c.monotone_t_defect},
            {"var_Z", c.var_Z},
            {"var_R", c.var_R},
            {"S", c.S},
            {"g_intervals", c.g_interval_count},
            {"degenerate_rate", c.degenerate_rate},
            {"switches", sw}};
}

struct RunOutcome {
    int exit_code = 0;
    bool pass = false;
    std::string message;
};

// Best-effort structured failure record next to the other artifacts.
inline void write_error_record(const std::string& out_dir, int code, const std::string& message) {
    try {
        std::filesystem::create_directories(out_dir);
        std::ofstream out(std::filesystem::path(out_dir) / "error.json");
        out << nlohmann::json{{"exit_code", code}, {"message", message}}.dump(2) << "\n";
    } catch (...) {
    }
}

inline RunOutcome run(const RunConfig& cfg, std::ostream& log = std::cout) {
    namespace fs = std::filesystem;
    cfg.validate();
    Scenario sc = cfg.make();
    SemilinearEnergy E = sc.energy();
    fs::create_directories(cfg.out_dir);

    SweepConfig swcfg;
    swcfg.eps_sequence = cfg.eps.empty() ? sc.default_eps : cfg.eps;
    swcfg.mesh = cfg.mesh_set ? cfg.mesh : sc.default_mesh;
    swcfg.reparam.subnodes = cfg.tol.quad_subnodes;
    swcfg.reparam.delta_g_rel = cfg.tol.delta_g_rel;
    swcfg.reparam.tol_norm = cfg.tol.tol_norm;
    swcfg.reparam.tol_comp = cfg.tol.tol_comp;
    swcfg.traj.step.tol_inner = cfg.tol.tol_inner;
    swcfg.traj.step.seed = cfg.seed;
    swcfg.fiber_halfwidth = cfg.tol.fiber_halfwidth;
    swcfg.lambda_tol = cfg.tol.lambda_tol;

    if (!cfg.certify_only.empty()) {
        StoredCurve stored = read_curve_csv(cfg.certify_only, E, sc.R, sc.V);
        CurveCertificates cert =
            certify_curve(stored.curve, stored.traj, E, sc.R, sc.V, cfg.tol.fiber_halfwidth, cfg.tol.tol_comp);
        nlohmann::json j{{"config", config_to_json(cfg)}, {"certificates", certificates_to_json(cert)}};
        std::ofstream out(fs::path(cfg.out_dir) / "certificates.json");
        out << j.dump(2) << "\n";
        bool ok = cert.gating_pass(cfg.tol.tol_norm, cfg.tol.lambda_tol);
        log << "certify-only: " << (ok ? "pass" : "fail") << "\n";
        return RunOutcome{ok ? 0 : static_cast<int>(ErrorCode::CertificateFailure), ok,
                          ok ? "certificates pass" : "certificate failure"};
    }

    SweepResult sr = sweep(E, sc.R, sc.V, sc.z0, swcfg);

    nlohmann::json ledger_json = nlohmann::json::array();
    nlohmann::json runs_json = nlohmann::json::array();
    for (std::size_t i = 0; i < sr.eps.size(); ++i) {
        std::string tag = detail::eps_tag(sr.eps[i]);
        write_trajectory_csv((fs::path(cfg.out_dir) / ("trajectory_eps" + tag + ".csv")).string(),
                             sr.trajectories[i]);
        write_curve_csv((fs::path(cfg.out_dir) / ("curve_eps" + tag + ".csv")).string(), sr.curves[i],
                        sr.trajectories[i], sc.R);
        nlohmann::json entry;
        entry["eps"] = sr.eps[i];
        Ledger combined = sr.basic_ledgers[i];
        for (const auto& e : sr.bv_ledgers[i].entries) combined.entries.push_back(e);
        entry["inequalities"] = ledger_to_json(combined);
        entry["discrete_energy_balance"] = {{"max_excess", sr.edp_reports[i].max_excess},
                                            {"pass", sr.edp_reports[i].pass}};
        ledger_json.push_back(entry);
        nlohmann::json run_entry;
        run_entry["eps"] = sr.eps[i];
        run_entry["steps"] = sr.trajectories[i].partition.steps();
        run_entry["S"] = sr.S_eps[i];
        run_entry["certificates"] = certificates_to_json(sr.certificates[i]);
        runs_json.push_back(run_entry);
    }
    write_curve_csv((fs::path(cfg.out_dir) / "limit_curve.csv").string(), sr.curves[sr.limit_index],
                    sr.trajectories[sr.limit_index], sc.R);
    {
        std::ofstream out(fs::path(cfg.out_dir) / "ledger.json");
        out << ledger_json.dump(2) << "\n";
    }

    nlohmann::json sweep_json;
    sweep_json["eps"] = sr.eps;
    sweep_json["S_eps"] = sr.S_eps;
    sweep_json["conv_z"] = sr.conv_z;
    sweep_json["conv_t"] = sr.conv_t;
    sweep_json["converged"] = sr.converged;
    sweep_json["converged_from"] = sr.converged_from;
    sweep_json["cauchy_tol_z"] = sr.cauchy_tol_z;
    sweep_json["cauchy_tol_t"] = sr.cauchy_tol_t;
    sweep_json["limit_index"] = sr.limit_index;
    {
        nlohmann::json certs = nlohmann::json::array();
        for (const auto& c : sr.certificates) certs.push_back(certificates_to_json(c));
        std::ofstream out(fs::path(cfg.out_dir) / "certificates.json");
        out << nlohmann::json{{"per_eps", certs}, {"sweep", sweep_json}}.dump(2) << "\n";
    }

    bool ledgers_ok = sr.ledgers_pass();
    bool curves_ok = true;
    for (const auto& c : sr.certificates)
        curves_ok = curves_ok && c.edi_within_budget && c.complementarity_l2sq <= c.complementarity_bound &&
                    c.monotone_t_defect <= 0.0;
    const auto& limit = sr.certificates[sr.limit_index];
    bool limit_ok = limit.normalization_max <= cfg.tol.tol_norm &&
                    limit.lambda_residual_max <= cfg.tol.lambda_tol && limit.characterization_ok;
    bool converged_ok = sr.conv_z.empty() || sr.converged;
    bool pass = ledgers_ok && curves_ok && limit_ok && converged_ok;

    nlohmann::json report;
    report["config"] = config_to_json(cfg);
    report["scenario"] = sc.name;
    report["metadata"] = {
        {"nonconvex_tie_break", "lowest objective, then smallest V-distance from the previous state, then "
                                "lexicographic"},
        {"jump_value_default", "right limit"}};
    report["constants"] = {{"alpha", sr.constants.alpha},     {"c_Z", sr.constants.cZ},
                           {"c0", sr.constants.c0},           {"Ctilde", sr.constants.Ctilde},
                           {"dist0", sr.constants.dist0},     {"C1", sr.constants.C1},
                           {"C_I", sr.constants.CI},          {"C_R", sr.constants.CR},
                           {"diam_dual", sr.constants.diam_dual},
                           {"rho", sr.constants.rho_bound},   {"lambda_rho", sr.constants.lambda_rho},
                           {"calibrated_upper_bounds", sr.constants.calibrated}};
    report["ledger"] = ledger_json;
    report["runs"] = runs_json;
    report["sweep"] = sweep_json;
    report["gates"] = {{"ledgers", ledgers_ok},
                       {"curve_certificates", curves_ok},
                       {"limit_certificates", limit_ok},
                       {"sweep_converged", converged_ok}};
    report["pass"] = pass;
    {
        std::ofstream out(fs::path(cfg.out_dir) / "report.json");
        out << report.dump(2) << "\n";
    }

    log << "scenario " << sc.name << ": " << sr.eps.size() << " viscosities, ledgers "
        << (ledgers_ok ? "pass" : "FAIL") << ", certificates " << (curves_ok && limit_ok ? "pass" : "FAIL")
        << ", sweep " << (converged_ok ? "converged" : "NOT CONVERGED") << "\n";

    if (pass) return RunOutcome{0, true, "all gating certificates pass"};
    if (!converged_ok && ledgers_ok && curves_ok && limit_ok)
        return RunOutcome{static_cast<int>(ErrorCode::SweepNotConverged), false, "sweep not converged"};
    return RunOutcome{static_cast<int>(ErrorCode::CertificateFailure), false, "certificate failure"};
}

}  // namespace rateindep
