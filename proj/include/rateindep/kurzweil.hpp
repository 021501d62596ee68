#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rateindep/bv_load.hpp"
#include "rateindep/errors.hpp"
#include "rateindep/linalg.hpp"
#include "rateindep/piecewise_curve.hpp"

namespace rateindep {

struct KurzweilResult {
    double value = 0.0;
    double bound = 0.0;  // two-sided estimate, Euclidean norms
};

namespace detail {

inline double load_sup_euclid(const BVLoad& f) {
    double m = 0.0;
    for (const auto& s : f.segments()) {
        m = std::max(m, norm2(s.at(s.t0)));
        m = std::max(m, norm2(s.at(s.t1)));
    }
    for (std::size_t i = 0; i + 1 < f.segments().size(); ++i)
        m = std::max(m, norm2(f.eval(f.segments()[i].t1, Side::At)));
    return m;
}

inline double load_var_euclid(const BVLoad& f) {
    double var = 0.0;
    const auto& segs = f.segments();
    for (const auto& s : segs) var += norm2(s.slope) * (s.t1 - s.t0);
    for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
        double tb = segs[i].t1;
        Vec left = segs[i].at(tb), right = segs[i + 1].at(tb), at = f.eval(tb, Side::At);
        var += norm2(at - left) + norm2(right - at);
    }
    return var;
}

inline double curve_sup_euclid(const PiecewiseLinearCurve& g) {
    double m = 0.0;
    for (const auto& v : g.values()) m = std::max(m, norm2(v));
    return m;
}

inline double curve_var_euclid(const PiecewiseLinearCurve& g) {
    double var = 0.0;
    for (std::size_t k = 0; k + 1 < g.values().size(); ++k) var += norm2(g.values()[k + 1] - g.values()[k]);
    return var;
}

inline void check_same_interval(double fa, double fb, double ga, double gb) {
    double tol = 1e-10 * (1.0 + std::abs(fb) + std::abs(gb));
    if (std::abs(fa - ga) > tol || std::abs(fb - gb) > tol)
        throw Error(ErrorCode::DomainMismatch, "domain mismatch");
}

inline std::size_t load_segment(const BVLoad& g, double t) {
    const auto& segs = g.segments();
    for (std::size_t i = 0; i + 1 < segs.size(); ++i)
        if (t < segs[i].t1) return i;
    return segs.size() - 1;
}

inline std::vector<double> merged_grid(const BVLoad& f, const PiecewiseLinearCurve& g) {
    std::vector<double> pts = f.breakpoints();
    pts.insert(pts.end(), g.grid().begin(), g.grid().end());
    std::sort(pts.begin(), pts.end());
    std::vector<double> out;
    double tol = 1e-13 * (1.0 + std::abs(g.b()));
    for (double p : pts)
        if (out.empty() || p - out.back() > tol) out.push_back(p);
    return out;
}

}  // namespace detail

// Integral of a regulated piecewise load against a continuous piecewise
// affine curve. Segment-exact: per merged piece the integrand <f, g'> is
// affine, so the endpoint average integrates it exactly. Isolated values of f
// at its breakpoints carry no mass because g is continuous. The prefix vector
// holds the running integral at each merged-grid point.
inline KurzweilResult kurzweil_bv_dg(const BVLoad& f, const PiecewiseLinearCurve& g,
                                     std::vector<double>* prefix_grid = nullptr,
                                     std::vector<double>* prefix_value = nullptr) {
    detail::check_same_interval(0.0, f.horizon(), g.a(), g.b());
    auto grid = detail::merged_grid(f, g);
    double total = 0.0;
    if (prefix_grid) *prefix_grid = grid;
    if (prefix_value) {
        prefix_value->clear();
        prefix_value->push_back(0.0);
    }
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        double lo = grid[k], hi = grid[k + 1], len = hi - lo;
        double mid = 0.5 * (lo + hi);
        Vec gprime = g.derivative(g.locate(mid));
        // f is affine on the open piece, so the midpoint value integrates it exactly
        total += dot(f.eval(mid, Side::At), gprime) * len;
        if (prefix_value) prefix_value->push_back(total);
    }
    KurzweilResult out;
    out.value = total;
    double byg = detail::load_sup_euclid(f) * detail::curve_var_euclid(g);
    double byf = (norm2(f.eval(0.0)) + norm2(f.eval(f.horizon())) + detail::load_var_euclid(f)) *
                 detail::curve_sup_euclid(g);
    out.bound = std::min(byg, byf);
    return out;
}

// Integral of a continuous piecewise affine integrand against a BV load:
// absolutely continuous part plus tag-value jump terms at the breakpoints.
inline KurzweilResult kurzweil_cont_dstep(const PiecewiseLinearCurve& f, const BVLoad& g) {
    detail::check_same_interval(f.a(), f.b(), 0.0, g.horizon());
    auto grid = detail::merged_grid(g, f);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        double lo = grid[k], hi = grid[k + 1];
        double mid = 0.5 * (lo + hi);
        const auto& seg = g.segments()[detail::load_segment(g, mid)];
        Vec favg = f.eval(lo);
        favg += f.eval(hi);
        for (auto& x : favg) x *= 0.5;
        total += dot(favg, seg.slope) * (hi - lo);
    }
    for (std::size_t i = 0; i + 1 < g.segments().size(); ++i) {
        double tb = g.segments()[i].t1;
        Vec jump = g.segments()[i + 1].at(tb) - g.segments()[i].at(tb);
        total += dot(f.eval(tb), jump);
    }
    KurzweilResult out;
    out.value = total;
    double byg = detail::curve_sup_euclid(f) * detail::load_var_euclid(g);
    double byf = (norm2(f.eval(f.a())) + norm2(f.eval(f.b())) + detail::curve_var_euclid(f)) *
                 detail::load_sup_euclid(g);
    out.bound = std::min(byg, byf);
    return out;
}

// Exact value of the difference-quotient pairing
//   int_a^{b-h} <f(s), (g(s+h)-g(s))/h> ds .
// Piecewise the integrand is quadratic; the three-interior-point rule
// (2 q(1/4) - q(1/2) + 2 q(3/4))/3 integrates quadratics exactly without
// touching breakpoint values.
inline double diff_quotient_pairing(const BVLoad& f, const PiecewiseLinearCurve& g, double h) {
    detail::check_same_interval(0.0, f.horizon(), g.a(), g.b());
    double a = g.a(), b = g.b();
    if (!(h > 0.0) || h >= b - a) throw Error(ErrorCode::DomainMismatch, "quotient step must lie in (0, b-a)");
    std::vector<double> pts = f.breakpoints();
    for (double t : g.grid()) {
        pts.push_back(t);
        pts.push_back(t - h);
    }
    pts.push_back(a);
    pts.push_back(b - h);
    std::sort(pts.begin(), pts.end());
    std::vector<double> grid;
    double tol = 1e-13 * (1.0 + std::abs(b));
    for (double p : pts) {
        if (p < a - tol || p > b - h + tol) continue;
        double q = std::clamp(p, a, b - h);
        if (grid.empty() || q - grid.back() > tol) grid.push_back(q);
    }
    auto integrand = [&](double s) {
        Vec df = g.eval(s + h) - g.eval(s);
        return dot(f.eval(s, Side::At), df) / h;
    };
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        double lo = grid[k], len = grid[k + 1] - grid[k];
        double q1 = integrand(lo + 0.25 * len);
        double q2 = integrand(lo + 0.50 * len);
        double q3 = integrand(lo + 0.75 * len);
        total += len * (2.0 * q1 - q2 + 2.0 * q3) / 3.0;
    }
    return total;
}

}  // namespace rateindep
