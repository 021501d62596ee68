#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rateindep/bv_load.hpp"
#include "rateindep/dissipation.hpp"
#include "rateindep/energy.hpp"
#include "rateindep/errors.hpp"
#include "rateindep/linalg.hpp"
#include "rateindep/piecewise_curve.hpp"
#include "rateindep/prox_step.hpp"
#include "rateindep/spd_operator.hpp"
#include "rateindep/sweep.hpp"

namespace rateindep {

// Benchmark problem with fixed constants so runs reproduce bit for bit.
struct Scenario {
    std::string name;
    int dim = 1;
    SpdOperator A;
    SpdOperator V;
    Dissipation R;
    NonconvexTerm F;
    BVLoad load;
    Vec z0;
    MeshRule default_mesh;
    std::vector<double> default_eps;
    std::string notes;

    SemilinearEnergy energy() const { return SemilinearEnergy(A, F, load); }
    double horizon() const { return load.horizon(); }

    // Same path traversed on [0, factor*T]; the viscosity must be scaled by
    // the same factor for the incremental problems to coincide (the viscous
    // term is the only rate-dependent piece).
    Scenario rescaled_time(double factor) const {
        Scenario s = *this;
        s.load = load.rescaled_time(factor);
        s.name = name + "_rescaled";
        return s;
    }
};

inline NonconvexTerm doublewell_term(double scale, int n) {
    NonconvexTerm f;
    f.growth_exponent = 2.0;
    f.value = [scale](const Vec& z) {
        double s = 0.0;
        for (double x : z) {
            double q = x * x - 1.0;
            s += 0.25 * q * q;
        }
        return scale * s;
    };
    f.gradient = [scale, n](const Vec& z) {
        Vec g(n);
        for (int i = 0; i < n; ++i) g[i] = scale * (z[i] * z[i] * z[i] - z[i]);
        return g;
    };
    f.hessian_apply = [scale, n](const Vec& z, const Vec& v) {
        Vec h(n);
        for (int i = 0; i < n; ++i) h[i] = scale * (3.0 * z[i] * z[i] - 1.0) * v[i];
        return h;
    };
    return f;
}

// Convex 1-d play problem: a=1, r=1, V=1, ramp 0 -> 3 on [0,1].
// Closed-form reference for monotone ramps: z(t) = max(z0, (l(t)-r)/a).
inline Scenario scenario_play1d() {
    return Scenario{
        "play1d",
        1,
        SpdOperator::scalar(1.0),
        SpdOperator::scalar(1.0),
        Dissipation(Vec{1.0}),
        NonconvexTerm::zero(1),
        BVLoad::ramp(1.0, Vec{0.0}, Vec{3.0}),
        Vec{0.0},
        MeshRule{0.5, 1.0},
        {0.2, 0.1, 0.05, 0.025},
        "convex play with monotone ramp load",
    };
}

// Same elastic element, step load 0 -> 3 at t = 0.5.
inline Scenario scenario_play1d_jump() {
    Scenario s = scenario_play1d();
    s.name = "play1d_jump";
    s.load = BVLoad::step(1.0, 0.5, Vec{0.0}, Vec{3.0});
    s.default_eps = {0.04, 0.02, 0.01, 0.005, 0.0025};
    s.notes = "convex play with a single load jump";
    return s;
}

// Nonconvex double well, A = 0.1, F(z) = (z^2-1)^2/4, ramp 0 -> 2 on [0,1].
// Snap-through once the stable branch loses the inclusion -DE in dR(0).
inline Scenario scenario_doublewell1d() {
    return Scenario{
        "doublewell1d",
        1,
        SpdOperator::scalar(0.1),
        SpdOperator::scalar(1.0),
        Dissipation(Vec{1.0}),
        doublewell_term(1.0, 1),
        BVLoad::ramp(1.0, Vec{0.0}, Vec{2.0}),
        Vec{-1.0},
        MeshRule{0.5, 1.5},
        {0.016, 0.008, 0.004, 0.002, 0.001},
        "double-well snap-through driven past the spinodal point",
    };
}

// n-d chain: A = tridiagonal second difference + identity, scaled double
// well, ramp plus one jump in a single coordinate. No closed-form reference;
// acceptance rests on the certificates.
inline Scenario scenario_chain(int n) {
    if (n < 2) throw Error(ErrorCode::BadConfig, "chain scenario needs n >= 2");
    Matrix a(n, n);
    for (int i = 0; i < n; ++i) {
        a(i, i) = 3.0;  // 2 (second difference) + 1 (identity)
        if (i > 0) a(i, i - 1) = -1.0;
        if (i + 1 < n) a(i, i + 1) = -1.0;
    }
    int drive = n / 4;
    Vec lo(n, 0.0), mid(n, 0.0), hi(n, 0.0);
    mid[drive] = 1.2;
    hi[drive] = 2.4;
    std::vector<BVLoad::Segment> segs;
    Vec slope0(n, 0.0);
    slope0[drive] = 1.2 / 0.5;
    segs.push_back(BVLoad::Segment{0.0, 0.5, lo, slope0});
    segs.push_back(BVLoad::Segment{0.5, 1.0, hi, Vec(n, 0.0)});
    return Scenario{
        "chain" + std::to_string(n),
        n,
        SpdOperator(a),
        SpdOperator::identity(n),
        Dissipation(Vec(n, 1.0)),
        doublewell_term(0.5, n),
        BVLoad(1.0, std::move(segs)),
        Vec(n, 0.0),
        MeshRule{0.5, 1.5},
        {0.1, 0.05, 0.025, 0.0125},
        "n-d chain stress test, ramp plus jump in one coordinate",
    };
}

inline const std::map<std::string, std::function<Scenario()>>& scenario_registry() {
    static const std::map<std::string, std::function<Scenario()>> reg = {
        {"play1d", [] { return scenario_play1d(); }},
        {"play1d_jump", [] { return scenario_play1d_jump(); }},
        {"doublewell1d", [] { return scenario_doublewell1d(); }},
        {"chain16", [] { return scenario_chain(16); }},
    };
    return reg;
}

inline Scenario make_scenario(const std::string& name) {
    auto it = scenario_registry().find(name);
    if (it == scenario_registry().end()) throw Error(ErrorCode::BadConfig, "unknown scenario: " + name);
    return it->second();
}

// Play formula for monotone nondecreasing scalar loads starting from a
// stable state: z(t) = max(z0, (l(t) - r)/a).
inline double play_formula(double a, double r, double z0, double load_value) {
    return std::max(z0, (load_value - r) / a);
}

struct DenseOracle {
    PiecewiseLinearCurve trace;
    double spinodal_time = -1.0;  // first time the followed branch loses definiteness of A + D2F
    double jump_time = -1.0;      // time of the largest single-step increment
};

// Independent reference for the 1-d nonconvex scenario: a dense eps = 0
// incremental scheme continuing the local branch (descent warm-started at
// the previous state, no global restarts), with event location of the first
// stability failure. Not routed through solve_trajectory.
inline DenseOracle dense_incremental_oracle(const Scenario& sc, double dt = 1e-5) {
    struct CacheKey {
        std::string name;
        double dt;
        bool operator<(const CacheKey& o) const { return name < o.name || (name == o.name && dt < o.dt); }
    };
    static std::map<CacheKey, std::shared_ptr<DenseOracle>> cache;
    CacheKey key{sc.name, dt};
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;

    SemilinearEnergy E = sc.energy();
    const double T = sc.horizon();
    auto n = static_cast<std::size_t>(std::llround(T / dt));
    const double tau = T / double(n);
    StepConfig scfg;
    scfg.allow_multistart = false;
    double spinodal = -1.0, jump_time = -1.0, max_inc = 0.0;
    std::vector<double> grid;
    std::vector<Vec> states;
    grid.push_back(0.0);
    states.push_back(sc.z0);
    Vec prev = sc.z0;
    const std::size_t keep_every = std::max<std::size_t>(1, n / 20000);
    for (std::size_t k = 1; k <= n; ++k) {
        double t = T * double(k) / double(n);
        Vec lv = E.load().eval(t, Side::At);
        StepResult res = incremental_step_with_load(E, sc.R, sc.V, lv, tau, 0.0, prev, prev, scfg, 0.0);
        if (spinodal < 0.0 && !E.F().trivially_zero) {
            // branch stability is lost when A + D2F stops being definite
            // anywhere along the step's increment
            for (int q = 0; q <= 8 && spinodal < 0.0; ++q) {
                Vec probe = prev;
                axpy(double(q) / 8.0, res.z - prev, probe);
                Matrix h = E.A().entries();
                h += E.F().hessian_matrix(probe);
                if (symmetric_eigenvalues(h).front() <= 0.0) spinodal = t;
            }
        }
        double inc = norm2(res.z - prev);
        if (inc > max_inc) {
            max_inc = inc;
            jump_time = t;
        }
        prev = res.z;
        if (k % keep_every == 0 || k == n) {
            grid.push_back(t);
            states.push_back(prev);
        }
    }
    auto sp = std::make_shared<DenseOracle>(
        DenseOracle{PiecewiseLinearCurve(std::move(grid), std::move(states)), spinodal, jump_time});
    cache[key] = sp;
    return *sp;
}

}  // namespace rateindep
