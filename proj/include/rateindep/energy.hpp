#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <utility>

#include "rateindep/bv_load.hpp"
#include "rateindep/dissipation.hpp"
#include "rateindep/errors.hpp"
#include "rateindep/linalg.hpp"
#include "rateindep/spd_operator.hpp"

namespace rateindep {

// Nonnegative C^2 lower-order term with callable value/gradient/Hessian
// action. growth_exponent is scenario metadata only.
struct NonconvexTerm {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    std::function<Vec(const Vec&, const Vec&)> hessian_apply;
    double growth_exponent = 1.0;
    bool trivially_zero = false;

    static NonconvexTerm zero(int n) {
        NonconvexTerm f;
        f.value = [](const Vec&) { return 0.0; };
        f.gradient = [n](const Vec&) { return Vec(n, 0.0); };
        f.hessian_apply = [n](const Vec&, const Vec&) { return Vec(n, 0.0); };
        f.trivially_zero = true;
        return f;
    }

    Matrix hessian_matrix(const Vec& z) const {
        const int n = static_cast<int>(z.size());
        Matrix h(n, n);
        Vec e(n, 0.0);
        for (int j = 0; j < n; ++j) {
            e[j] = 1.0;
            Vec col = hessian_apply(z, e);
            for (int i = 0; i < n; ++i) h(i, j) = col[i];
            e[j] = 0.0;
        }
        h.symmetrize();
        return h;
    }
};

// E(t,z) = 1/2 <Az,z> + F(z) - <l(t), z>.
class SemilinearEnergy {
  public:
    SemilinearEnergy(SpdOperator A, NonconvexTerm F, BVLoad load)
        : A_(std::move(A)), F_(std::move(F)), load_(std::move(load)) {}

    const SpdOperator& A() const { return A_; }
    const NonconvexTerm& F() const { return F_; }
    const BVLoad& load() const { return load_; }
    int dim() const { return A_.dim(); }
    double horizon() const { return load_.horizon(); }

    double stored(const Vec& z) const { return 0.5 * A_.quad(z) + F_.value(z); }

    Vec stored_gradient(const Vec& z) const {
        Vec g = A_.apply(z);
        if (!F_.trivially_zero) g += F_.gradient(z);
        return g;
    }

    double energy(double t, const Vec& z, Side side = Side::At) const {
        double e = stored(z) - dot(load_.eval(t, side), z);
        if (!std::isfinite(e)) throw Error(ErrorCode::NumericFailure, "numeric overflow");
        return e;
    }

    Vec gradient(double t, const Vec& z, Side side = Side::At) const {
        Vec g = stored_gradient(z) - load_.eval(t, side);
        if (!all_finite(g)) throw Error(ErrorCode::NumericFailure, "numeric overflow");
        return g;
    }

    // Gradient with an explicitly supplied load value (used where the
    // discrete scheme pins the driving load of a step).
    Vec gradient_with_load(const Vec& z, const Vec& load_value) const {
        Vec g = stored_gradient(z) - load_value;
        if (!all_finite(g)) throw Error(ErrorCode::NumericFailure, "numeric overflow");
        return g;
    }

    // Both sides of the semiconvexity inequality
    //   <DE(t,z1)-DE(t,z2), z1-z2> >= (alpha/2)|z1-z2|^2 - lambda |z1-z2|_V^2
    // for a calibrated lambda; the caller supplies the V metric.
    std::pair<double, double> lambda_convexity_probe(double t, const Vec& z1, const Vec& z2, double rho,
                                                     const SpdOperator& V, double lambda) const {
        (void)rho;
        Vec d = z1 - z2;
        double lhs = dot(gradient(t, z1) - gradient(t, z2), d);
        double rhs = 0.5 * A_.ellipticity() * dot(d, d) - lambda * V.quad(d);
        return {lhs, rhs};
    }

  private:
    SpdOperator A_;
    NonconvexTerm F_;
    BVLoad load_;
};

// Calibration of the semiconvexity modulus and the interpolation constant on
// a norm ball. Hessian extremes are probed on a deterministic grid (axes,
// diagonal corners, seeded samples) and inflated by 10%; the derived
// constants are certified given those extremes:
//   lambda(rho) = 1.1 max(0,-min eig D2F) / lambda_min(V)
//   C_{rho,kappa} = (sup|D2F| - kappa)_+ / (r_min sqrt(lambda_min(V)))
struct ConvexityCalibration {
    double rho = 0.0;
    double hess_sup = 0.0;      // estimated sup of |D2F(z)| over the ball
    double hess_neg = 0.0;      // estimated (-min eigenvalue)_+ over the ball
    double lambda = 0.0;        // semiconvexity modulus lambda(rho)
    bool estimated = true;      // probe-based upper bound, flagged in reports

    double interpolation_constant(double kappa, const Dissipation& R, const SpdOperator& V) const {
        double excess = std::max(0.0, hess_sup - kappa);
        return excess / (R.min_weight() * std::sqrt(V.lambda_min()));
    }
};

inline ConvexityCalibration calibrate_convexity(const NonconvexTerm& F, const SpdOperator& V, int dim,
                                                double rho, int samples = 256, std::uint64_t seed = 20240901ull) {
    ConvexityCalibration cal;
    cal.rho = rho;
    if (F.trivially_zero) {
        cal.estimated = false;
        return cal;
    }
    std::vector<Vec> probes;
    probes.push_back(Vec(dim, 0.0));
    for (int i = 0; i < dim; ++i) {
        Vec p(dim, 0.0);
        p[i] = rho;
        probes.push_back(p);
        p[i] = -rho;
        probes.push_back(p);
        p[i] = 0.5 * rho;
        probes.push_back(p);
    }
    probes.push_back(Vec(dim, rho / std::sqrt(double(dim))));
    probes.push_back(Vec(dim, -rho / std::sqrt(double(dim))));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int s = 0; s < samples; ++s) {
        Vec p(dim);
        for (auto& x : p) x = u(rng);
        double n = norm2(p);
        double scale = (n > 0 ? rho * std::pow(std::abs(u(rng)), 0.5) / n : 0.0);
        for (auto& x : p) x *= scale;
        probes.push_back(p);
    }
    double sup = 0.0, neg = 0.0;
    for (const auto& p : probes) {
        auto ev = symmetric_eigenvalues(F.hessian_matrix(p));
        sup = std::max(sup, std::max(std::abs(ev.front()), std::abs(ev.back())));
        neg = std::max(neg, -ev.front());
    }
    cal.hess_sup = 1.1 * sup;
    cal.hess_neg = std::max(0.0, neg);
    cal.lambda = 1.1 * cal.hess_neg / V.lambda_min();
    return cal;
}

}  // namespace rateindep
