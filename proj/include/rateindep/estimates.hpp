#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rateindep/dissipation.hpp"
#include "rateindep/energy.hpp"
#include "rateindep/linalg.hpp"
#include "rateindep/spd_operator.hpp"
#include "rateindep/trajectory.hpp"

namespace rateindep {

struct LedgerEntry {
    std::string id;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  // rhs - lhs at the worst index
    bool pass = true;
};

struct Ledger {
    std::vector<LedgerEntry> entries;
    bool all_pass() const {
        for (const auto& e : entries)
            if (!e.pass) return false;
        return true;
    }
    const LedgerEntry* find(const std::string& id) const {
        for (const auto& e : entries)
            if (e.id == id) return &e;
        return nullptr;
    }
};

// Explicit constants of the a-priori estimates, instantiated with the
// Euclidean state norm, the V-metric and its dual. The interpolation and
// semiconvexity constants are probe-calibrated upper bounds and flagged so.
struct EstimateConstants {
    double alpha = 0.0;      // Euclidean ellipticity of A
    double cZ = 0.0;         // |v|_V <= cZ |v|_2
    double lsup = 0.0;       // sup_t |l(t)|_V*
    double c0 = 0.0;         // (cZ^2/alpha)(1 + lsup^2)
    double E0 = 0.0;         // E(0, z0)
    double var_total = 0.0;  // Var_V*(l, [0,T])
    double Ctilde = 0.0;     // dissipation-sum bound
    double dist0 = 0.0;      // dist_V(-DE(0,z0), box)
    double CR = 0.0;         // sup over the box of the V*-norm
    double diam_dual = 0.0;  // V*-diameter of the box
    double rho_bound = 0.0;  // a-priori Euclidean state-ball radius
    double lambda_rho = 0.0;
    double hess_sup = 0.0;
    double CI = 0.0;  // interpolation constant at kappa = alpha/2
    double C1 = 0.0;  // dist0 + Var + CI * Ctilde
    bool calibrated = false;

    double C_eps(double eps) const {
        return 2.0 / (alpha * eps) * (dist0 * C1 + 2.0 * CI * CR * Ctilde + C1 * var_total);
    }
};

inline EstimateConstants compute_estimate_constants(const SemilinearEnergy& E, const Dissipation& R,
                                                    const SpdOperator& V, const Vec& z0) {
    EstimateConstants c;
    c.alpha = E.A().ellipticity();
    c.cZ = std::sqrt(V.lambda_max());
    c.lsup = E.load().sup_norm(V);
    c.c0 = c.cZ * c.cZ / c.alpha * (1.0 + c.lsup * c.lsup);
    c.E0 = E.energy(0.0, z0);
    c.var_total = E.load().variation(V);
    c.Ctilde = (c.E0 + c.c0) * (1.0 + c.var_total * std::exp(c.var_total));
    Vec w0 = E.gradient(0.0, z0);
    for (auto& x : w0) x = -x;
    c.dist0 = R.distance_to_box(V, w0);
    c.CR = R.support_dual_norm(V);
    c.diam_dual = R.box_diameter_dual(V);
    c.rho_bound = (c.E0 + c.c0) * std::exp(c.var_total) / c.cZ;
    ConvexityCalibration cal = calibrate_convexity(E.F(), V, E.dim(), c.rho_bound);
    c.lambda_rho = cal.lambda;
    c.hess_sup = cal.hess_sup;
    c.CI = cal.interpolation_constant(0.5 * c.alpha, R, V);
    c.C1 = c.dist0 + c.var_total + c.CI * c.Ctilde;
    c.calibrated = cal.estimated;
    return c;
}

namespace detail {

inline LedgerEntry worst_entry(const std::string& id, const std::vector<double>& lhs,
                               const std::vector<double>& rhs, double slack = 0.0) {
    LedgerEntry e;
    e.id = id;
    double worst = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        double m = rhs[i] - lhs[i];
        if (m < worst) {
            worst = m;
            arg = i;
        }
    }
    if (lhs.empty()) {
        e.margin = 0.0;
        e.pass = true;
        return e;
    }
    e.lhs = lhs[arg];
    e.rhs = rhs[arg];
    e.margin = worst;
    e.pass = worst >= -slack;
    return e;
}

}  // namespace detail

// Per-run evaluation of the basic energy and dissipation estimates with
// their explicit constants. Report-only: violations flag, never abort.
inline Ledger check_basic_estimates(const DiscreteTrajectory& traj, const SemilinearEnergy& E,
                                    const Dissipation& R, const SpdOperator& V, const EstimateConstants& c) {
    (void)R;
    Ledger ledger;
    const auto& t = traj.partition.times;
    const std::size_t N = traj.partition.steps();
    const double e0c0 = c.E0 + c.c0;

    std::vector<double> lhs, rhs;
    for (std::size_t k = 1; k <= N; ++k) {
        lhs.push_back(norm2(traj.states[k]));
        rhs.push_back(e0c0 * std::exp(E.load().variation(V, 0.0, t[k])) / c.cZ);
    }
    ledger.entries.push_back(detail::worst_entry("state_bound", lhs, rhs, 1e-10));

    lhs.clear();
    rhs.clear();
    for (std::size_t k = 1; k <= N; ++k) {
        lhs.push_back(-(c.c0 + traj.steps[k - 1].energy));
        rhs.push_back(0.0);
    }
    ledger.entries.push_back(detail::worst_entry("energy_lower_bound", lhs, rhs, 1e-10));

    lhs.clear();
    rhs.clear();
    for (std::size_t k = 1; k <= N; ++k) {
        lhs.push_back(c.c0 + traj.steps[k - 1].energy);
        rhs.push_back(e0c0 * std::exp(E.load().variation(V, 0.0, t[k])));
    }
    ledger.entries.push_back(detail::worst_entry("energy_upper_bound", lhs, rhs, 1e-10));

    double diss = 0.0;
    for (const auto& s : traj.steps) diss += s.dissipation_increment;
    ledger.entries.push_back(detail::worst_entry("dissipation_sum", {diss}, {c.Ctilde}, 1e-10));

    // energy-dissipation estimates; power sums follow the step recursion
    lhs.clear();
    rhs.clear();
    double dsum = 0.0, power_prev = 0.0;
    for (std::size_t k = 1; k <= N; ++k) {
        dsum += traj.steps[k - 1].dissipation_increment;
        Vec dl = E.load().eval(t[k - 1], Side::At) - E.load().eval(t[k], Side::At);
        power_prev += dot(dl, traj.states[k - 1]);
        lhs.push_back(traj.steps[k - 1].energy + dsum);
        rhs.push_back(c.E0 + power_prev);
    }
    ledger.entries.push_back(detail::worst_entry("energy_dissipation_load_increments", lhs, rhs, 1e-8));

    lhs.clear();
    rhs.clear();
    dsum = 0.0;
    double power_right = 0.0;
    const double I0 = E.stored(traj.states[0]);
    for (std::size_t k = 1; k <= N; ++k) {
        dsum += traj.steps[k - 1].dissipation_increment;
        power_right += dot(E.load().eval(t[k], Side::At), traj.states[k] - traj.states[k - 1]);
        lhs.push_back(E.stored(traj.states[k]) + dsum);
        rhs.push_back(I0 + power_right);
    }
    ledger.entries.push_back(detail::worst_entry("energy_dissipation_by_parts", lhs, rhs, 1e-8));

    double prod = 1.0;
    for (std::size_t k = 1; k <= N; ++k) {
        Vec dl = E.load().eval(t[k], Side::At) - E.load().eval(t[k - 1], Side::At);
        prod *= 1.0 + V.dual_norm(dl);
    }
    ledger.entries.push_back(
        detail::worst_entry("variation_product", {prod}, {std::exp(c.var_total)}, 1e-10));

    lhs.clear();
    rhs.clear();
    for (std::size_t k = 0; k <= N; ++k) {
        double Ek = (k == 0) ? c.E0 : traj.steps[k - 1].energy;
        lhs.push_back(c.cZ * norm2(traj.states[k]));
        rhs.push_back(Ek + c.c0);
    }
    ledger.entries.push_back(detail::worst_entry("coercivity", lhs, rhs, 1e-10));
    return ledger;
}

// Refined estimates backing the vanishing-viscosity analysis: the summed
// increment bound and the gradient bound carry the explicit C1, the squared
// rate sum the derived C_eps.
inline Ledger check_bv_estimates(const DiscreteTrajectory& traj, const SemilinearEnergy& E, const Dissipation& R,
                                 const SpdOperator& V, const EstimateConstants& c) {
    (void)R;
    Ledger ledger;
    const std::size_t N = traj.partition.steps();

    std::vector<double> lhs, rhs;
    double zsum = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
        Vec inc = traj.increment(k);
        zsum += norm2(inc);
        double visc = traj.eps / traj.partition.tau(k) * V.norm(inc);
        lhs.push_back(visc + 0.5 * c.alpha / c.cZ * zsum);
        rhs.push_back(c.C1);
    }
    ledger.entries.push_back(detail::worst_entry("increment_total_variation", lhs, rhs, 1e-8));

    lhs.clear();
    rhs.clear();
    for (std::size_t k = 1; k <= N; ++k) {
        lhs.push_back(V.dual_norm(E.gradient_with_load(traj.states[k], traj.steps[k - 1].driving_load)));
        rhs.push_back(c.diam_dual + c.C1);
    }
    ledger.entries.push_back(detail::worst_entry("gradient_bound", lhs, rhs, 1e-8));

    if (traj.eps > 0.0) {
        double sum = 0.0;
        for (std::size_t k = 0; k < N; ++k) {
            Vec rate = traj.rate(k);
            sum += traj.partition.tau(k) * dot(rate, rate);
        }
        ledger.entries.push_back(
            detail::worst_entry("rate_square_sum", {sum}, {c.C_eps(traj.eps)}, 1e-8));
    }
    return ledger;
}

struct EdpReport {
    std::vector<double> times;
    std::vector<double> residual;  // signed LHS - RHS of the discrete energy balance
    std::vector<double> bound;     // semiconvexity error-term bound plus solver slack
    double max_excess = 0.0;       // max(residual - bound)
    bool pass = true;
};

// Discrete De Giorgi balance along the trajectory:
//   I(z_K) - I(z_0) + sum_k [ tau R_eps(dz/tau) + tau R*_eps(-DE(t_k,z_k)) - <l(t_k), dz_k> ] <= error term,
// with the error term controlled by lambda(rho) sum |dz|_V^2.
inline EdpReport check_discrete_edp(const DiscreteTrajectory& traj, const SemilinearEnergy& E,
                                    const Dissipation& R, const SpdOperator& V) {
    if (!(traj.eps > 0.0)) throw Error(ErrorCode::BadConfig, "discrete energy balance needs eps > 0");
    EdpReport rep;
    const std::size_t N = traj.partition.steps();
    const double I0 = E.stored(traj.states[0]);
    const double n = static_cast<double>(traj.dim());
    double acc = 0.0, err = 0.0, slack = 0.0;
    rep.times.push_back(traj.partition.times[0]);
    rep.residual.push_back(0.0);
    rep.bound.push_back(0.0);
    for (std::size_t k = 0; k < N; ++k) {
        double tau = traj.partition.tau(k);
        Vec inc = traj.increment(k);
        Vec w = E.gradient_with_load(traj.states[k + 1], traj.steps[k].driving_load);
        for (auto& x : w) x = -x;
        double d = R.distance_to_box(V, w);
        acc += traj.steps[k].dissipation_increment + tau * 0.5 / traj.eps * d * d -
               dot(traj.steps[k].driving_load, inc);
        err += traj.lambda_rho * V.quad(inc);
        double rho_k = traj.steps[k].residual;
        double rho_dual = rho_k * std::sqrt(n / V.lambda_min());
        slack += rho_k * norm1(inc) + tau * 0.5 / traj.eps * (2.0 * d + rho_dual) * rho_dual;
        rep.times.push_back(traj.partition.times[k + 1]);
        rep.residual.push_back(E.stored(traj.states[k + 1]) - I0 + acc);
        rep.bound.push_back(err + slack + 1e-12 * (1.0 + std::abs(I0)));
    }
    rep.max_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rep.residual.size(); ++i)
        rep.max_excess = std::max(rep.max_excess, rep.residual[i] - rep.bound[i]);
    rep.pass = rep.max_excess <= 0.0;
    return rep;
}

}  // namespace rateindep
