#pragma once

#include <cmath>
#include <cstdint>

#include "rateindep/errors.hpp"
#include "rateindep/linalg.hpp"
#include "rateindep/spd_operator.hpp"

namespace rateindep {

enum class GaugeKind { WeightedL1 };

struct BoxProjection {
    Vec point;        // minimizer inside the box
    double distance;  // dual-metric distance
    double residual;  // fixed-point residual of the projected-gradient solve
    int iterations = 0;
    bool converged = true;
};

// Positively one-homogeneous gauge R(v) = sum_i r_i |v_i| with r_i > 0.
// Its subdifferential at zero is the box  prod_i [-r_i, r_i]; distances to
// that box are measured in the dual metric of a supplied SPD operator.
class Dissipation {
  public:
    explicit Dissipation(Vec weights, GaugeKind kind = GaugeKind::WeightedL1)
        : r_(std::move(weights)), kind_(kind) {
        for (double w : r_)
            if (!(w > 0.0)) throw Error(ErrorCode::BadConfig, "dissipation weights must be positive");
    }

    int dim() const { return static_cast<int>(r_.size()); }
    GaugeKind kind() const { return kind_; }
    const Vec& weights() const { return r_; }
    double min_weight() const {
        double m = r_[0];
        for (double w : r_) m = std::min(m, w);
        return m;
    }
    double max_weight() const {
        double m = r_[0];
        for (double w : r_) m = std::max(m, w);
        return m;
    }

    double value(const Vec& v) const {
        double s = 0.0;
        for (std::size_t i = 0; i < r_.size(); ++i) s += r_[i] * std::abs(v[i]);
        return s;
    }

    bool box_contains(const Vec& w, double slack = 0.0) const {
        for (std::size_t i = 0; i < r_.size(); ++i)
            if (std::abs(w[i]) > r_[i] + slack) return false;
        return true;
    }

    Vec clamp_to_box(Vec w) const {
        for (std::size_t i = 0; i < r_.size(); ++i) w[i] = std::clamp(w[i], -r_[i], r_[i]);
        return w;
    }

    // min_{xi in box} |w - xi|_V* together with the minimizer. Diagonal V has
    // the separable closed form; otherwise projected gradient on the box,
    // tolerance 1e-10, cap 10000.
    BoxProjection project(const SpdOperator& V, const Vec& w, double tol = 1e-10, int cap = 10000) const {
        BoxProjection out;
        if (V.is_diagonal()) {
            out.point = clamp_to_box(w);
            out.distance = V.dual_norm(w - out.point);
            out.residual = 0.0;
            return out;
        }
        Vec xi = clamp_to_box(w);
        const double step = 1.0 / (2.0 / V.lambda_min());  // 1/L for grad xi -> -2 V^-1 (w-xi)
        Vec grad(dim());
        for (out.iterations = 0; out.iterations < cap; ++out.iterations) {
            Vec d = V.solve(w - xi);
            for (int i = 0; i < dim(); ++i) grad[i] = -2.0 * d[i];
            Vec next = xi;
            axpy(-step, grad, next);
            next = clamp_to_box(next);
            out.residual = norm_inf(next - xi);
            xi = next;
            if (out.residual <= tol) break;
        }
        out.converged = out.residual <= tol;
        out.point = xi;
        out.distance = V.dual_norm(w - xi);
        if (!out.converged)
            throw Error(ErrorCode::NumericFailure,
                        "projection not converged (residual " + std::to_string(out.residual) + ")");
        return out;
    }

    double distance_to_box(const SpdOperator& V, const Vec& w) const { return project(V, w).distance; }

    // Conjugate of the viscous-regularized gauge: (1/2eps) dist^2.
    double conjugate_eps(const SpdOperator& V, double eps, const Vec& w) const {
        if (!(eps > 0.0)) throw Error(ErrorCode::BadConfig, "viscosity must be positive");
        double d = distance_to_box(V, w);
        return 0.5 / eps * d * d;
    }

    // Contact potential p(v,w) = R(v) + |v|_V dist_V(w, box).
    double contact_potential(const SpdOperator& V, const Vec& v, const Vec& w) const {
        return value(v) + V.norm(v) * distance_to_box(V, w);
    }

    // max over the box of the dual norm; exact by sign enumeration (diagonal
    // metric collapses to a single evaluation).
    double support_dual_norm(const SpdOperator& V) const {
        if (V.is_diagonal()) return V.dual_norm(r_);
        const int n = dim();
        if (n > 22) {  // fall back to a certified upper bound
            return std::sqrt(1.0 / V.lambda_min()) * norm2(r_);
        }
        double best = 0.0;
        for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
            Vec corner(n);
            for (int i = 0; i < n; ++i) corner[i] = (mask >> i) & 1 ? r_[i] : -r_[i];
            best = std::max(best, V.dual_norm(corner));
        }
        return best;
    }

    double box_diameter_dual(const SpdOperator& V) const { return 2.0 * support_dual_norm(V); }

  private:
    Vec r_;
    GaugeKind kind_;
};

}  // namespace rateindep
