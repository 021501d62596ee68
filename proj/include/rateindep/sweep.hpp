#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rateindep/certificates.hpp"
#include "rateindep/dissipation.hpp"
#include "rateindep/energy.hpp"
#include "rateindep/errors.hpp"
#include "rateindep/estimates.hpp"
#include "rateindep/reparameterize.hpp"
#include "rateindep/spd_operator.hpp"
#include "rateindep/trajectory.hpp"

namespace rateindep {

// Fineness rule tying the partition to the viscosity, delta = c * eps^p.
// p >= 1 keeps delta <= c*eps on eps <= 1 (the uniqueness and accuracy
// regime); larger p sharpens the time-discretization error relative to the
// viscous scale.
struct MeshRule {
    double c = 0.5;
    double p = 1.0;
    double delta(double eps) const { return c * std::pow(eps, p); }
};

struct SweepConfig {
    std::vector<double> eps_sequence;
    MeshRule mesh;
    ReparamConfig reparam;
    TrajectoryConfig traj;
    double fiber_halfwidth = 0.05;
    double lambda_tol = 1e-6;
};

struct SweepResult {
    std::vector<double> eps;
    std::vector<DiscreteTrajectory> trajectories;
    std::vector<ParameterizedCurve> curves;
    std::vector<Ledger> basic_ledgers;
    std::vector<Ledger> bv_ledgers;
    std::vector<EdpReport> edp_reports;
    std::vector<CurveCertificates> certificates;
    EstimateConstants constants;

    std::vector<double> S_eps;
    double S_max = 0.0;
    std::vector<double> common_s;

    std::vector<double> conv_z;  // sup_s |z_n - z_{n+1}|_V
    std::vector<double> conv_t;  // sup_s |t_n - t_{n+1}|
    bool converged = true;
    std::size_t converged_from = 0;
    std::size_t limit_index = 0;
    double cauchy_tol_z = 0.0;
    double cauchy_tol_t = 0.0;

    bool ledgers_pass() const {
        for (const auto& l : basic_ledgers)
            if (!l.all_pass()) return false;
        for (const auto& l : bv_ledgers)
            if (!l.all_pass()) return false;
        for (const auto& e : edp_reports)
            if (!e.pass) return false;
        return true;
    }
};

// Richardson extrapolation in eps of the physical-time state, using the two
// finest trajectories of the sweep. The viscous lag is first order in eps.
inline Vec extrapolated_state(const SweepResult& sr, double t) {
    if (sr.trajectories.size() < 2) return sr.trajectories.back().affine_interpolant().eval(t);
    const auto& z1 = sr.trajectories[sr.trajectories.size() - 1];
    const auto& z2 = sr.trajectories[sr.trajectories.size() - 2];
    double e1 = sr.eps[sr.eps.size() - 1], e2 = sr.eps[sr.eps.size() - 2];
    Vec v1 = z1.affine_interpolant().eval(t);
    Vec v2 = z2.affine_interpolant().eval(t);
    Vec out = v1;
    double w = e1 / (e2 - e1);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * (v1[i] - v2[i]);
    return out;
}

inline SweepResult sweep(const SemilinearEnergy& E, const Dissipation& R, const SpdOperator& V, const Vec& z0,
                         const SweepConfig& cfg) {
    if (cfg.eps_sequence.size() < 1) throw Error(ErrorCode::BadConfig, "eps sequence must not be empty");
    for (std::size_t i = 0; i + 1 < cfg.eps_sequence.size(); ++i)
        if (!(cfg.eps_sequence[i + 1] < cfg.eps_sequence[i]))
            throw Error(ErrorCode::BadConfig, "eps sequence must be strictly decreasing");
    for (double e : cfg.eps_sequence)
        if (!(e > 0.0)) throw Error(ErrorCode::BadConfig, "viscosity must be positive");

    SweepResult sr;
    sr.eps = cfg.eps_sequence;
    sr.constants = compute_estimate_constants(E, R, V, z0);

    std::vector<double> interior;
    for (double b : E.load().breakpoints())
        if (b > 0.0 && b < E.load().horizon()) interior.push_back(b);

    std::size_t max_nodes = 0;
    for (double eps : cfg.eps_sequence) {
        Partition part = Partition::with_fineness(E.horizon(), cfg.mesh.delta(eps), interior);
        TrajectoryConfig tcfg = cfg.traj;
        tcfg.calibration_rho = sr.constants.rho_bound;
        DiscreteTrajectory traj = solve_trajectory(E, R, V, part, eps, z0, tcfg);
        sr.basic_ledgers.push_back(check_basic_estimates(traj, E, R, V, sr.constants));
        sr.bv_ledgers.push_back(check_bv_estimates(traj, E, R, V, sr.constants));
        sr.edp_reports.push_back(check_discrete_edp(traj, E, R, V));
        ParameterizedCurve curve = reparameterize(traj, E, R, V, cfg.reparam);
        sr.certificates.push_back(
            certify_curve(curve, traj, E, R, V, cfg.fiber_halfwidth, cfg.reparam.tol_comp));
        sr.S_eps.push_back(curve.S);
        max_nodes = std::max(max_nodes, curve.s.size());
        sr.trajectories.push_back(std::move(traj));
        sr.curves.push_back(std::move(curve));
    }
    sr.limit_index = sr.curves.size() - 1;
    for (double s : sr.S_eps) sr.S_max = std::max(sr.S_max, s);

    // common uniform arc grid; curves extend by their terminal value
    sr.common_s.resize(max_nodes);
    for (std::size_t j = 0; j < max_nodes; ++j)
        sr.common_s[j] = sr.S_max * double(j) / double(max_nodes - 1);
    for (std::size_t n = 0; n + 1 < sr.curves.size(); ++n) {
        double dz = 0.0, dt = 0.0;
        for (std::size_t j = 0; j < max_nodes; ++j) {
            double s = sr.common_s[j];
            dz = std::max(dz, V.norm(sr.curves[n].eval_z(s) - sr.curves[n + 1].eval_z(s)));
            dt = std::max(dt, std::abs(sr.curves[n].eval_t(s) - sr.curves[n + 1].eval_t(s)));
        }
        sr.conv_z.push_back(dz);
        sr.conv_t.push_back(dt);
    }
    if (!sr.conv_z.empty()) {
        sr.cauchy_tol_z = sr.conv_z.back();
        sr.cauchy_tol_t = sr.conv_t.back();
        // smallest index whose tail is nonincreasing within 10%; the tail
        // must contain at least one transition, so a final increase flags
        // the sweep
        std::size_t from = sr.conv_z.size();
        for (std::size_t c = 0; c + 1 < sr.conv_z.size(); ++c) {
            bool tail_ok = true;
            for (std::size_t j = c; j + 1 < sr.conv_z.size(); ++j)
                if (sr.conv_z[j + 1] > 1.1 * sr.conv_z[j] + 1e-14) tail_ok = false;
            if (tail_ok) {
                from = c;
                break;
            }
        }
        sr.converged_from = from;
        sr.converged = sr.conv_z.size() == 1 || from < sr.conv_z.size();
    }
    return sr;
}

}  // namespace rateindep
