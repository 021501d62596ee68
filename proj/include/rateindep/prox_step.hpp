#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rateindep/dissipation.hpp"
#include "rateindep/energy.hpp"
#include "rateindep/errors.hpp"
#include "rateindep/linalg.hpp"
#include "rateindep/spd_operator.hpp"

namespace rateindep {

struct StepConfig {
    double tol_inner = 1e-9;
    int max_iterations = 50000;
    bool allow_multistart = true;
    std::uint64_t seed = 0;
};

struct StepResult {
    Vec z;
    double residual = 0.0;
    int iterations = 0;
    double objective = 0.0;
    int starts = 1;
};

namespace detail {

// One incremental problem:  min_v  I(v) - <L,v> + R(v - z_prev) + (eps/2tau)|v - z_prev|_V^2
struct ProxProblem {
    const SemilinearEnergy& E;
    const Dissipation& R;
    const SpdOperator& V;
    Vec load;
    double tau;
    double eps;
    Vec z_prev;

    double smooth(const Vec& v) const {
        double s = E.stored(v) - dot(load, v);
        if (eps > 0.0) {
            Vec d = v - z_prev;
            s += 0.5 * eps / tau * V.quad(d);
        }
        if (!std::isfinite(s)) throw Error(ErrorCode::NumericFailure, "numeric overflow");
        return s;
    }

    Vec smooth_grad(const Vec& v) const {
        Vec g = E.gradient_with_load(v, load);
        if (eps > 0.0) {
            Vec d = v - z_prev;
            Vec vd = V.apply(d);
            axpy(eps / tau, vd, g);
        }
        return g;
    }

    double objective(const Vec& v) const { return smooth(v) + R.value(v - z_prev); }

    // First-order violation of  -DE - (eps/tau) V dz  in  dR(dz):
    // moving coordinates must sit on the matching box face, resting ones inside.
    double residual(const Vec& v) const {
        Vec w = smooth_grad(v);
        for (auto& x : w) x = -x;
        const Vec& r = R.weights();
        double res = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            double d = v[i] - z_prev[i];
            if (d != 0.0)
                res = std::max(res, std::abs(w[i] - (d > 0.0 ? r[i] : -r[i])));
            else
                res = std::max(res, std::max(0.0, std::abs(w[i]) - r[i]));
        }
        return res;
    }

    Vec prox(const Vec& y, double eta) const {
        const Vec& r = R.weights();
        Vec v(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            double d = y[i] - z_prev[i];
            double thr = eta * r[i];
            if (d > thr)
                d -= thr;
            else if (d < -thr)
                d += thr;
            else
                d = 0.0;
            v[i] = z_prev[i] + d;
        }
        return v;
    }
};

inline bool newton_polish(const ProxProblem& P, Vec& v, double tol, int* evals) {
    const int n = static_cast<int>(v.size());
    const Vec& r = P.R.weights();
    for (int round = 0; round < 40; ++round) {
        double res = P.residual(v);
        if (res <= tol) return true;
        Vec w = P.smooth_grad(v);
        for (auto& x : w) x = -x;
        std::vector<int> active;
        std::vector<double> sign;
        for (int i = 0; i < n; ++i) {
            double d = v[i] - P.z_prev[i];
            if (d != 0.0) {
                active.push_back(i);
                sign.push_back(d > 0.0 ? 1.0 : -1.0);
            } else if (std::abs(w[i]) > r[i] + tol) {
                active.push_back(i);
                sign.push_back(w[i] > 0.0 ? 1.0 : -1.0);
            }
        }
        if (active.empty()) return P.residual(v) <= tol;
        Matrix full = P.E.A().entries();
        if (!P.E.F().trivially_zero) full += P.E.F().hessian_matrix(v);
        if (P.eps > 0.0) {
            Matrix vm = P.V.entries();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) full(i, j) += P.eps / P.tau * vm(i, j);
        }
        const int m = static_cast<int>(active.size());
        Matrix red(m, m);
        Vec rhs(m);
        Vec g = P.smooth_grad(v);
        for (int a = 0; a < m; ++a) {
            for (int b = 0; b < m; ++b) red(a, b) = full(active[a], active[b]);
            rhs[a] = -(g[active[a]] + r[active[a]] * sign[a]);
        }
        ++*evals;
        Vec delta;
        try {
            delta = solve_dense(red, rhs);
        } catch (const std::domain_error&) {
            return false;
        }
        double obj0 = P.objective(v);
        bool accepted = false;
        for (double s : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
            Vec cand = v;
            for (int a = 0; a < m; ++a) cand[active[a]] += s * delta[a];
            // snap coordinates whose increment crossed the kink
            for (int a = 0; a < m; ++a) {
                double d = cand[active[a]] - P.z_prev[active[a]];
                if (d * sign[a] < 0.0) cand[active[a]] = P.z_prev[active[a]];
            }
            double robj = P.objective(cand);
            double rres = P.residual(cand);
            if (robj <= obj0 + 1e-14 * (1.0 + std::abs(obj0)) && (rres < 0.9 * res || rres <= tol)) {
                v = cand;
                accepted = true;
                break;
            }
        }
        if (!accepted) return P.residual(v) <= tol;
        if (P.residual(v) <= tol) return true;
    }
    return P.residual(v) <= tol;
}

inline StepResult descend(const ProxProblem& P, Vec v, const StepConfig& cfg) {
    StepResult out;
    double L0 = P.E.A().lambda_max() + (P.eps > 0.0 ? P.eps / P.tau * P.V.lambda_max() : 0.0) + 1.0;
    double eta = 1.0 / L0;
    int it = 0;
    double res = P.residual(v);
    int polish_evals = 0;
    while (res > cfg.tol_inner && it < cfg.max_iterations) {
        Vec g = P.smooth_grad(v);
        double sv = P.smooth(v);
        Vec u;
        bool stepped = false;
        while (eta > 1e-18) {
            Vec y = v;
            axpy(-eta, g, y);
            u = P.prox(y, eta);
            Vec d = u - v;
            double model = sv + dot(g, d) + 0.5 / eta * dot(d, d);
            if (P.smooth(u) <= model + 1e-15 * (1.0 + std::abs(sv))) {
                stepped = true;
                break;
            }
            eta *= 0.5;
        }
        if (!stepped) throw Error(ErrorCode::SolverStall, "line search failure");
        v = u;
        eta = std::min(eta * 1.25, 1e4 / L0);
        res = P.residual(v);
        ++it;
        if (res <= 1e3 * cfg.tol_inner || (it % 16 == 0 && res < 1e-2 * (1.0 + L0))) {
            if (newton_polish(P, v, cfg.tol_inner, &polish_evals)) {
                res = P.residual(v);
                break;
            }
            res = P.residual(v);
        }
    }
    if (res > cfg.tol_inner) {
        newton_polish(P, v, cfg.tol_inner, &polish_evals);
        res = P.residual(v);
    }
    out.z = v;
    out.residual = res;
    out.iterations = it + polish_evals;
    out.objective = P.objective(v);
    if (res > cfg.tol_inner)
        throw Error(ErrorCode::SolverStall,
                    "inner solver stalled (residual " + std::to_string(res) + " after " +
                        std::to_string(out.iterations) + " iterations)");
    return out;
}

}  // namespace detail

// Solves one time-incremental minimization step. The one-homogeneity of the
// gauge lets the objective use R(v - z_prev) directly. When eps/tau does not
// dominate the semiconvexity modulus the problem may be nonconvex; a
// deterministic multi-start is engaged and ties are broken by the smaller
// V-distance from z_prev, then lexicographically.
inline StepResult incremental_step_with_load(const SemilinearEnergy& E, const Dissipation& R,
                                             const SpdOperator& V, const Vec& load_value, double tau, double eps,
                                             const Vec& z_prev, const Vec& warm_start, const StepConfig& cfg,
                                             double lambda_rho = 0.0) {
    if (!(tau > 0.0)) throw Error(ErrorCode::BadConfig, "step size must be positive");
    if (eps < 0.0) throw Error(ErrorCode::BadConfig, "viscosity must be nonnegative");
    detail::ProxProblem P{E, R, V, load_value, tau, eps, z_prev};

    bool nonconvex_regime = cfg.allow_multistart && eps <= lambda_rho * tau;
    std::vector<Vec> starts;
    starts.push_back(warm_start);
    if (nonconvex_regime) {
        if (norm_inf(warm_start - z_prev) > 0.0) starts.push_back(z_prev);
        Vec g0 = P.smooth_grad(z_prev);
        double L0 = E.A().lambda_max() + 1.0;
        Vec pred = z_prev;
        axpy(-1.0 / L0, g0, pred);
        starts.push_back(pred);
        for (std::size_t i = 0; i < z_prev.size(); ++i) {
            double kick = 1.0 + std::abs(z_prev[i]);
            Vec up = z_prev, dn = z_prev;
            up[i] += kick;
            dn[i] -= kick;
            starts.push_back(up);
            starts.push_back(dn);
        }
        std::mt19937_64 rng(cfg.seed);
        std::shuffle(starts.begin(), starts.end(), rng);
    }

    StepResult best;
    bool have = false;
    for (const auto& s0 : starts) {
        StepResult r = detail::descend(P, s0, cfg);
        if (!have) {
            best = r;
            have = true;
            continue;
        }
        double slack = 1e-12 * (1.0 + std::abs(best.objective));
        if (r.objective < best.objective - slack) {
            best = r;
        } else if (r.objective <= best.objective + slack) {
            double dr = V.norm(r.z - z_prev), db = V.norm(best.z - z_prev);
            if (dr < db - 1e-14) {
                best = r;
            } else if (std::abs(dr - db) <= 1e-14 &&
                       std::lexicographical_compare(r.z.begin(), r.z.end(), best.z.begin(), best.z.end())) {
                best = r;
            }
        }
    }
    // Objective monotonicity versus the previous state backs the discrete
    // energy estimates; rerun from z_prev if a foreign warm start lost it.
    if (best.objective > P.objective(z_prev) + 1e-13 * (1.0 + std::abs(best.objective)) &&
        norm_inf(warm_start - z_prev) > 0.0 && !nonconvex_regime) {
        StepResult r = detail::descend(P, z_prev, cfg);
        if (r.objective <= best.objective) best = r;
    }
    best.starts = static_cast<int>(starts.size());
    return best;
}

inline StepResult incremental_step(const SemilinearEnergy& E, const Dissipation& R, const SpdOperator& V,
                                   double t_k, double tau, double eps, const Vec& z_prev, const Vec& warm_start,
                                   const StepConfig& cfg, double lambda_rho = 0.0) {
    return incremental_step_with_load(E, R, V, E.load().eval(t_k, Side::At), tau, eps, z_prev, warm_start, cfg,
                                      lambda_rho);
}

}  // namespace rateindep
