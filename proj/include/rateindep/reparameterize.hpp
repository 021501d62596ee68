#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rateindep/bv_load.hpp"
#include "rateindep/dissipation.hpp"
#include "rateindep/energy.hpp"
#include "rateindep/errors.hpp"
#include "rateindep/linalg.hpp"
#include "rateindep/piecewise_curve.hpp"
#include "rateindep/spd_operator.hpp"
#include "rateindep/trajectory.hpp"

namespace rateindep {

struct ReparamConfig {
    int subnodes = 8;            // quadrature sub-nodes per time step
    double delta_g_rel = 1e-6;   // G threshold relative to the box V*-diameter
    double tol_norm = 1e-6;
    double tol_comp = 1e-6;
};

struct GInterval {
    double s_lo = 0.0, s_hi = 0.0;
    double t_lo = 0.0, t_hi = 0.0;
    std::size_t seg_lo = 0, seg_hi = 0;  // inclusive segment range
};

// Arc-length picture of one viscous trajectory: strictly increasing s built
// from the contact potential, states and time pulled back onto the s-grid,
// load pulled back with the step's driving value, and the stability fields
// needed by the certificates.
struct ParameterizedCurve {
    double S = 0.0;
    double eps = 0.0;
    int dim = 0;
    double delta_g = 0.0;

    std::vector<double> s;      // nodes
    std::vector<double> t_hat;  // nondecreasing
    std::vector<Vec> z_hat;

    // per-segment fields (size s.size()-1); dist values are the one-sided
    // endpoint values of the segment's own load convention
    std::vector<double> seg_dist_lo, seg_dist_hi;
    std::vector<double> norm_residual;  // a-posteriori quadrature residual, relative
    std::vector<double> quad_abs_err;   // |refined - constructed| arc increment
    std::vector<std::uint8_t> seg_in_G;
    std::vector<double> lambda_seg;
    std::vector<double> lambda_residual_seg;

    // per-node display fields
    std::vector<double> dist_field;  // e(l_hat(s), z_hat(s))
    std::vector<double> m_field;     // min over one-sided load values
    std::vector<std::uint8_t> node_in_G;

    std::vector<GInterval> g_intervals;
    bool degenerate_rate = false;

    std::vector<BVLoad::Segment> ell_segments;  // tile [0,S]

    BVLoad ell_hat() const { return BVLoad(S, ell_segments); }
    PiecewiseLinearCurve z_curve() const { return PiecewiseLinearCurve(s, z_hat); }

    double t_prime(std::size_t seg) const { return (t_hat[seg + 1] - t_hat[seg]) / (s[seg + 1] - s[seg]); }

    Vec z_prime(std::size_t seg) const {
        Vec d = z_hat[seg + 1] - z_hat[seg];
        double ds = s[seg + 1] - s[seg];
        for (auto& x : d) x /= ds;
        return d;
    }

    std::size_t locate(double at_s) const {
        auto it = std::upper_bound(s.begin(), s.end(), at_s);
        std::size_t k = (it == s.begin()) ? 0 : static_cast<std::size_t>(it - s.begin()) - 1;
        return std::min(k, s.size() - 2);
    }

    Vec eval_z(double at_s) const {
        if (at_s <= s.front()) return z_hat.front();
        if (at_s >= s.back()) return z_hat.back();
        std::size_t k = locate(at_s);
        double w = (at_s - s[k]) / (s[k + 1] - s[k]);
        Vec v = z_hat[k];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += w * (z_hat[k + 1][i] - z_hat[k][i]);
        return v;
    }

    double eval_t(double at_s) const {
        if (at_s <= s.front()) return t_hat.front();
        if (at_s >= s.back()) return t_hat.back();
        std::size_t k = locate(at_s);
        double w = (at_s - s[k]) / (s[k + 1] - s[k]);
        return t_hat[k] + w * (t_hat[k + 1] - t_hat[k]);
    }
};

// Builds the arc-length reparameterization of the affine interpolant.
// Per time step the rate is constant, so the contact-potential integrand
// varies only through the stability distance; that distance is integrated
// by composite trapezoid on a fixed sub-grid and re-checked at doubled
// resolution. Steps whose right node carries a load jump use the step's
// driving (post-jump) value throughout, matching the discrete scheme's
// right-endpoint power convention.
inline ParameterizedCurve reparameterize(const DiscreteTrajectory& traj, const SemilinearEnergy& E,
                                         const Dissipation& R, const SpdOperator& V,
                                         const ReparamConfig& cfg = {}) {
    if (!(traj.eps > 0.0)) throw Error(ErrorCode::BadConfig, "reparameterization needs eps > 0");
    ParameterizedCurve c;
    c.eps = traj.eps;
    c.dim = traj.dim();
    c.delta_g = cfg.delta_g_rel * R.box_diameter_dual(V);

    const auto& times = traj.partition.times;
    const std::size_t N = traj.partition.steps();
    const int m = std::max(1, cfg.subnodes);

    c.s.push_back(0.0);
    c.t_hat.push_back(times[0]);
    c.z_hat.push_back(traj.states[0]);

    auto dist_at = [&](const Vec& state, const Vec& load_value) {
        Vec w = E.gradient_with_load(state, load_value);
        for (auto& x : w) x = -x;
        return R.distance_to_box(V, w);
    };

    const double jump_tol = 1e-12 * (1.0 + E.load().sup_norm(V));
    for (std::size_t k = 0; k < N; ++k) {
        const double t0 = times[k], t1 = times[k + 1], tau = t1 - t0;
        const Vec& z0 = traj.states[k];
        const Vec& z1 = traj.states[k + 1];
        Vec inc = z1 - z0;
        Vec rate = inc;
        for (auto& x : rate) x /= tau;
        const double Rd = R.value(rate);
        const double nd = V.norm(rate);
        const Vec& driving = traj.steps[k].driving_load;
        Vec left_limit = E.load().eval(t1, Side::Left);
        const bool jump_step = norm_inf(driving - left_limit) > jump_tol;
        const bool moving = norm_inf(inc) > 0.0;

        auto load_at = [&](double t) -> Vec {
            if (jump_step) return driving;
            if (t <= t0) return E.load().eval(t0, k == 0 ? Side::At : Side::Right);
            if (t >= t1) return driving;  // == l(t1) designated, no jump here
            return E.load().eval(t, Side::At);
        };

        std::vector<double> tj;
        if (moving) {
            for (int j = 0; j <= m; ++j) tj.push_back(t0 + tau * double(j) / m);
            // split sub-segments at box-activation times so the distance is
            // smooth between quadrature nodes
            auto excess = [&](double t, int i, double bound) {
                double w = (t - t0) / tau;
                Vec state = z0;
                axpy(w, inc, state);
                Vec g = E.gradient_with_load(state, load_at(t));
                return -g[i] - bound;
            };
            std::vector<double> kinks;
            const Vec& weights = R.weights();
            for (int j = 0; j < m; ++j) {
                for (int i = 0; i < c.dim; ++i) {
                    for (double bound : {weights[i], -weights[i]}) {
                        double flo = excess(tj[j], i, bound), fhi = excess(tj[j + 1], i, bound);
                        if (flo == 0.0 || fhi == 0.0 || flo * fhi > 0.0) continue;
                        double lo = tj[j], hi = tj[j + 1];
                        for (int it = 0; it < 60 && hi - lo > 1e-15 * tau; ++it) {
                            double mid = 0.5 * (lo + hi);
                            double fm = excess(mid, i, bound);
                            if (fm == 0.0) {
                                lo = hi = mid;
                            } else if (fm * flo < 0.0) {
                                hi = mid;
                            } else {
                                lo = mid;
                                flo = fm;
                            }
                        }
                        kinks.push_back(0.5 * (lo + hi));
                    }
                }
            }
            tj.insert(tj.end(), kinks.begin(), kinks.end());
            std::sort(tj.begin(), tj.end());
            tj.erase(std::unique(tj.begin(), tj.end(),
                                 [&](double a, double b) { return b - a < 1e-13 * tau; }),
                     tj.end());
            tj.back() = t1;
            tj.front() = t0;
        } else {
            tj = {t0, t1};
        }
        const int subs = static_cast<int>(tj.size()) - 1;
        std::vector<double> dj(subs + 1);
        std::vector<Vec> lj(subs + 1), zj(subs + 1);
        for (int j = 0; j <= subs; ++j) {
            double w = (tj[j] - t0) / tau;
            Vec state = z0;
            axpy(w, inc, state);
            zj[j] = state;
            lj[j] = load_at(tj[j]);
            dj[j] = moving ? dist_at(state, lj[j]) : dist_at(z1, driving);
        }
        for (int j = 0; j < subs; ++j) {
            double h = tj[j + 1] - tj[j];
            double sigma0 = 1.0 + Rd + nd * dj[j];
            double sigma1 = 1.0 + Rd + nd * dj[j + 1];
            double ds = 0.5 * h * (sigma0 + sigma1);
            // doubled-resolution re-check
            double tm = 0.5 * (tj[j] + tj[j + 1]);
            Vec zm = z0;
            axpy((tm - t0) / tau, inc, zm);
            double dm = moving ? dist_at(zm, load_at(tm)) : dj[j];
            double sigmam = 1.0 + Rd + nd * dm;
            double ds_ref = 0.25 * h * (sigma0 + 2.0 * sigmam + sigma1);
            if (!(ds > 0.0)) throw Error(ErrorCode::NumericFailure, "reparameterization failed");

            double s_lo = c.s.back();
            c.s.push_back(s_lo + ds);
            c.t_hat.push_back(tj[j + 1]);
            c.z_hat.push_back(zj[j + 1]);
            c.seg_dist_lo.push_back(dj[j]);
            c.seg_dist_hi.push_back(dj[j + 1]);
            c.quad_abs_err.push_back(std::abs(ds_ref - ds));
            c.norm_residual.push_back(std::abs(ds_ref - ds) / ds);
            BVLoad::Segment seg;
            seg.t0 = s_lo;
            seg.t1 = s_lo + ds;
            seg.base = lj[j];
            seg.slope = lj[j + 1] - lj[j];
            for (auto& x : seg.slope) x /= ds;
            c.ell_segments.push_back(std::move(seg));
        }
    }
    c.S = c.s.back();
    // close the load tiling exactly
    c.ell_segments.back().t1 = c.S;

    // node display fields from the one-sided segment values
    const std::size_t M = c.s.size();
    c.dist_field.assign(M, 0.0);
    c.m_field.assign(M, 0.0);
    for (std::size_t j = 0; j < M; ++j) {
        double right = (j < M - 1) ? c.seg_dist_lo[j] : c.seg_dist_hi[j - 1];
        double left = (j > 0) ? c.seg_dist_hi[j - 1] : c.seg_dist_lo[0];
        c.dist_field[j] = right;  // cadlag designation
        c.m_field[j] = std::min(left, right);
    }
    return c;
}

}  // namespace rateindep
