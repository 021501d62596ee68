#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rateindep/dissipation.hpp"
#include "rateindep/energy.hpp"
#include "rateindep/errors.hpp"
#include "rateindep/kurzweil.hpp"
#include "rateindep/linalg.hpp"
#include "rateindep/reparameterize.hpp"
#include "rateindep/spd_operator.hpp"

namespace rateindep {

// Marks segments and nodes where the one-sided stability distance exceeds
// the threshold and collects maximal runs as open intervals.
inline void detect_G(ParameterizedCurve& c) {
    const std::size_t segs = c.s.size() - 1;
    c.seg_in_G.assign(segs, 0);
    for (std::size_t j = 0; j < segs; ++j)
        c.seg_in_G[j] = std::max(c.seg_dist_lo[j], c.seg_dist_hi[j]) > c.delta_g ? 1 : 0;
    c.node_in_G.assign(c.s.size(), 0);
    for (std::size_t j = 0; j < c.s.size(); ++j) c.node_in_G[j] = c.m_field[j] > c.delta_g ? 1 : 0;
    c.g_intervals.clear();
    std::size_t j = 0;
    while (j < segs) {
        if (!c.seg_in_G[j]) {
            ++j;
            continue;
        }
        GInterval g;
        g.seg_lo = j;
        while (j < segs && c.seg_in_G[j]) ++j;
        g.seg_hi = j - 1;
        g.s_lo = c.s[g.seg_lo];
        g.s_hi = c.s[g.seg_hi + 1];
        g.t_lo = c.t_hat[g.seg_lo];
        g.t_hi = c.t_hat[g.seg_hi + 1];
        c.g_intervals.push_back(g);
    }
}

// Viscosity multiplier on G: lambda = dist / |z'|_V per segment, with the
// inclusion residual of  -lambda V z' - DE  against the subdifferential at
// the segment midpoint.
inline void extract_lambda(ParameterizedCurve& c, const SemilinearEnergy& E, const Dissipation& R,
                           const SpdOperator& V) {
    const std::size_t segs = c.s.size() - 1;
    c.lambda_seg.assign(segs, 0.0);
    c.lambda_residual_seg.assign(segs, 0.0);
    c.degenerate_rate = false;
    BVLoad lhat = c.ell_hat();
    const Vec& r = R.weights();
    for (std::size_t j = 0; j < segs; ++j) {
        if (!c.seg_in_G[j]) continue;
        Vec zp = c.z_prime(j);
        double nzp = V.norm(zp);
        double smid = 0.5 * (c.s[j] + c.s[j + 1]);
        Vec zmid = c.z_hat[j];
        axpy(0.5, c.z_hat[j + 1] - c.z_hat[j], zmid);
        Vec lmid = lhat.eval(smid, Side::At);
        Vec w = E.gradient_with_load(zmid, lmid);
        for (auto& x : w) x = -x;
        double dmid = R.distance_to_box(V, w);
        if (nzp < 1e-12) {
            c.degenerate_rate = true;
            continue;
        }
        double lambda = dmid / nzp;
        c.lambda_seg[j] = lambda;
        Vec resid = w;
        axpy(-lambda, V.apply(zp), resid);
        Vec xi(resid.size());
        for (std::size_t i = 0; i < xi.size(); ++i) {
            if (zp[i] != 0.0)
                xi[i] = zp[i] > 0.0 ? r[i] : -r[i];
            else
                xi[i] = std::clamp(resid[i], -r[i], r[i]);
        }
        c.lambda_residual_seg[j] = V.dual_norm(resid - xi);
    }
}

struct EdiBudgetBreakdown {
    double quadrature = 0.0;
    double inner_tol = 0.0;
    double curvature = 0.0;
    double alignment_gap = 0.0;
    double load_within_step = 0.0;
    double g_truncation = 0.0;
};

struct EdiReport {
    std::vector<double> s;
    std::vector<double> residual;  // LHS - RHS at each node
    std::vector<double> budget;    // cumulative tolerance budget
    EdiBudgetBreakdown breakdown;
    double max_abs_residual = 0.0;
    double final_budget = 0.0;
    bool within_budget = true;
};

// Energy dissipation identity of the parameterized picture,
//   I(z(s)) + int_0^s R[z'] + int_{(0,s) cap G} |z'|_V dist = I(z_0) + int <l_hat, d z_hat>,
// with the power term as a Kurzweil integral. The cumulative budget is a sum
// of computable per-step bounds (quadrature, inner tolerance, curvature,
// alignment, in-step load variation, G truncation).
inline EdiReport certify_edi(const ParameterizedCurve& c, const DiscreteTrajectory& traj,
                             const SemilinearEnergy& E, const Dissipation& R, const SpdOperator& V) {
    EdiReport rep;
    BVLoad lhat = c.ell_hat();
    PiecewiseLinearCurve zc = c.z_curve();
    std::vector<double> pgrid, pval;
    kurzweil_bv_dg(lhat, zc, &pgrid, &pval);
    if (pgrid.size() != c.s.size())
        throw Error(ErrorCode::NumericFailure, "arc grid mismatch in power term");

    const double I0 = E.stored(c.z_hat.front());
    const std::size_t segs = c.s.size() - 1;

    // a-posteriori per-step budget, attributed to the step's sub-segments
    std::vector<double> seg_budget(segs, 0.0);
    {
        // map sub-segments back to their time step by t_hat nodes
        std::size_t seg = 0;
        for (std::size_t k = 0; k < traj.partition.steps(); ++k) {
            double t1 = traj.partition.times[k + 1];
            Vec inc = traj.increment(k);
            double tau = traj.partition.tau(k);
            double ninc_V = V.norm(inc);
            std::size_t first = seg;
            while (seg < segs && c.t_hat[seg + 1] <= t1 + 1e-14 * (1.0 + t1)) ++seg;
            // viscous-versus-distance defect, a posteriori over the step's
            // quadrature nodes: |int_G |z'| dist - (eps/tau)|dz|^2| <= |dz| dvar;
            // sub-segments outside G contribute with distance zero
            double target = tau > 0.0 ? traj.eps / tau * ninc_V : 0.0;
            double dvar = 0.0;
            for (std::size_t q = first; q < seg; ++q) {
                bool in_g = c.seg_in_G.size() == segs ? c.seg_in_G[q] != 0 : true;
                double dlo = in_g ? c.seg_dist_lo[q] : 0.0;
                double dhi = in_g ? c.seg_dist_hi[q] : 0.0;
                dvar = std::max(dvar, std::abs(dlo - target));
                dvar = std::max(dvar, std::abs(dhi - target));
            }
            double visc_gap = ninc_V * dvar;
            double curv = 0.5 * dot(E.A().apply(inc), inc);
            if (!E.F().trivially_zero) {
                Vec mid = traj.states[k];
                axpy(0.5, inc, mid);
                auto ev_lo = symmetric_eigenvalues(E.F().hessian_matrix(traj.states[k]));
                auto ev_mid = symmetric_eigenvalues(E.F().hessian_matrix(mid));
                auto ev_hi = symmetric_eigenvalues(E.F().hessian_matrix(traj.states[k + 1]));
                double L = 0.0;
                for (auto& ev : {ev_lo, ev_mid, ev_hi})
                    L = std::max(L, std::max(std::abs(ev.front()), std::abs(ev.back())));
                curv += 1.5 * L * dot(inc, inc);
            }
            double lvar = E.load().variation(V, traj.partition.times[k], t1);
            double within = 0.5 * lvar * ninc_V;
            double inner = traj.steps[k].residual * (norm1(inc) + tau);
            double trunc = c.delta_g * ninc_V;
            double step_total = visc_gap + curv + within + inner + trunc;
            // whole step bound enters at the step's first sub-segment so
            // partial positions within the step stay covered
            if (first < segs) seg_budget[first] += step_total;
            for (std::size_t q = first; q < seg; ++q)
                seg_budget[q] += c.quad_abs_err[q] * (1.0 + norm_inf(traj.rate(k)));
            rep.breakdown.alignment_gap += visc_gap;
            rep.breakdown.curvature += curv;
            rep.breakdown.load_within_step += within;
            rep.breakdown.inner_tol += inner;
            rep.breakdown.g_truncation += trunc;
        }
        for (std::size_t q = 0; q < segs; ++q) rep.breakdown.quadrature += c.quad_abs_err[q];
    }

    rep.s.push_back(0.0);
    rep.residual.push_back(0.0);
    rep.budget.push_back(1e-12 * (1.0 + std::abs(I0)));
    double rsum = 0.0, gsum = 0.0, bsum = rep.budget[0];
    for (std::size_t j = 0; j < segs; ++j) {
        Vec dz = c.z_hat[j + 1] - c.z_hat[j];
        rsum += R.value(dz);
        if (c.seg_in_G[j]) gsum += V.norm(dz) * 0.5 * (c.seg_dist_lo[j] + c.seg_dist_hi[j]);
        bsum += seg_budget[j];
        double lhs = E.stored(c.z_hat[j + 1]) + rsum + gsum;
        double rhs = I0 + pval[j + 1];
        rep.s.push_back(c.s[j + 1]);
        rep.residual.push_back(lhs - rhs);
        rep.budget.push_back(bsum);
    }
    for (std::size_t j = 0; j < rep.residual.size(); ++j) {
        rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(rep.residual[j]));
        if (std::abs(rep.residual[j]) > rep.budget[j]) rep.within_budget = false;
    }
    rep.final_budget = rep.budget.back();
    return rep;
}

struct SwitchPoint {
    double t_star = 0.0;
    double s_star = 0.0;
    int switch_count = 0;
    bool ok = true;
};

struct LoadCharacterization {
    std::vector<SwitchPoint> switches;
    double max_offfiber_mismatch = 0.0;
    bool ok = true;
};

// Checks the fiber structure of the pulled-back load: across each jump of
// the physical load, l_hat must equal the left limit, switch exactly once,
// then equal the right limit; away from fibers it must match l(t_hat(s)).
inline LoadCharacterization characterize_ell_hat(const ParameterizedCurve& c, const BVLoad& load,
                                                 double fiber_halfwidth) {
    LoadCharacterization out;
    BVLoad lhat = c.ell_hat();
    auto jumps = load.jump_times();
    const double T = load.horizon();
    auto in_any_fiber = [&](double t) {
        for (double tj : jumps)
            if (std::abs(t - tj) <= fiber_halfwidth) return true;
        return false;
    };
    for (double tstar : jumps) {
        SwitchPoint sw;
        sw.t_star = tstar;
        Vec left = load.eval(tstar, Side::Left);
        Vec right = load.eval(tstar, Side::Right);
        int transitions = 0;
        bool seen_right = false;
        double s_star = 0.0;
        for (std::size_t j = 0; j < c.s.size(); ++j) {
            if (std::abs(c.t_hat[j] - tstar) > fiber_halfwidth) continue;
            Vec v = lhat.eval(c.s[j], Side::At);
            bool is_right = norm2(v - right) <= norm2(v - left);
            if (is_right && !seen_right) {
                ++transitions;
                seen_right = true;
                s_star = c.s[j];
            } else if (!is_right && seen_right) {
                ++transitions;
                seen_right = false;
            }
        }
        sw.switch_count = transitions;
        sw.s_star = s_star;
        sw.ok = transitions == 1;
        if (!sw.ok) out.ok = false;
        out.switches.push_back(sw);
    }
    // sample off-fiber nodes: pulled-back load equals the physical one
    for (std::size_t j = 0; j < c.s.size(); ++j) {
        double t = std::clamp(c.t_hat[j], 0.0, T);
        if (in_any_fiber(t)) continue;
        Vec expect = load.eval(t, Side::At);
        Vec got = lhat.eval(c.s[j], Side::At);
        out.max_offfiber_mismatch = std::max(out.max_offfiber_mismatch, norm_inf(got - expect));
    }
    if (out.max_offfiber_mismatch > 1e-8) out.ok = false;
    return out;
}

struct CurveCertificates {
    double normalization_max = 0.0;
    double complementarity_l2sq = 0.0;   // int (t' dist)^2 ds
    double complementarity_bound = 0.0;  // eps * (eps int |zdot|_V^2 dt)
    double edi_max_abs = 0.0;
    double edi_budget = 0.0;
    bool edi_within_budget = true;
    double lambda_residual_max = 0.0;
    double off_g_m_max = 0.0;
    double monotone_t_defect = 0.0;
    double var_Z = 0.0;  // reported, not gated
    double var_R = 0.0;
    double S = 0.0;
    int g_interval_count = 0;
    bool degenerate_rate = false;
    std::vector<SwitchPoint> switches;
    bool characterization_ok = true;

    bool gating_pass(double tol_norm, double lambda_tol) const {
        return normalization_max <= tol_norm && edi_within_budget && lambda_residual_max <= lambda_tol &&
               complementarity_l2sq <= complementarity_bound && characterization_ok &&
               monotone_t_defect <= 0.0;
    }
};

// Runs the full certificate pipeline on one curve. tol_comp caps the
// complementarity defect absolutely; the viscosity-scaled bound usually
// governs.
inline CurveCertificates certify_curve(ParameterizedCurve& c, const DiscreteTrajectory& traj,
                                       const SemilinearEnergy& E, const Dissipation& R, const SpdOperator& V,
                                       double fiber_halfwidth, double tol_comp = 1e-6) {
    detect_G(c);
    extract_lambda(c, E, R, V);
    CurveCertificates cert;
    cert.S = c.S;
    cert.g_interval_count = static_cast<int>(c.g_intervals.size());
    cert.degenerate_rate = c.degenerate_rate;
    for (double r : c.norm_residual) cert.normalization_max = std::max(cert.normalization_max, r);
    for (std::size_t j = 0; j + 1 < c.s.size(); ++j) {
        double ds = c.s[j + 1] - c.s[j];
        double tp = c.t_prime(j);
        cert.monotone_t_defect = std::max(cert.monotone_t_defect, -tp);
        double dlo = c.seg_dist_lo[j], dhi = c.seg_dist_hi[j];
        cert.complementarity_l2sq += tp * tp * 0.5 * (dlo * dlo + dhi * dhi) * ds;
        cert.lambda_residual_max = std::max(cert.lambda_residual_max, c.lambda_residual_seg[j]);
    }
    double visc_l2 = 0.0;
    for (std::size_t k = 0; k < traj.partition.steps(); ++k) {
        Vec rate = traj.rate(k);
        visc_l2 += traj.partition.tau(k) * V.quad(rate);
    }
    cert.complementarity_bound = std::max(traj.eps * (traj.eps * visc_l2) * 1.05 + 1e-12, tol_comp * tol_comp);
    for (std::size_t j = 0; j < c.s.size(); ++j)
        if (!c.node_in_G[j]) cert.off_g_m_max = std::max(cert.off_g_m_max, c.m_field[j]);
    EdiReport edi = certify_edi(c, traj, E, R, V);
    cert.edi_max_abs = edi.max_abs_residual;
    cert.edi_budget = edi.final_budget;
    cert.edi_within_budget = edi.within_budget;
    PiecewiseLinearCurve zc = c.z_curve();
    for (std::size_t j = 0; j + 1 < c.s.size(); ++j) cert.var_Z += norm2(c.z_hat[j + 1] - c.z_hat[j]);
    cert.var_R = zc.variation_gauge(R, zc.a(), zc.b());
    auto ch = characterize_ell_hat(c, E.load(), fiber_halfwidth);
    cert.switches = ch.switches;
    cert.characterization_ok = ch.ok;
    return cert;
}

}  // namespace rateindep
