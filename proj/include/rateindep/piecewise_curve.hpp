#pragma once

#include <algorithm>
#include <vector>

#include "rateindep/dissipation.hpp"
#include "rateindep/errors.hpp"
#include "rateindep/linalg.hpp"
#include "rateindep/spd_operator.hpp"

namespace rateindep {

// Continuous piecewise affine curve over an increasing grid (time or arc
// length). Variations are exact sums over the affine pieces.
class PiecewiseLinearCurve {
  public:
    PiecewiseLinearCurve(std::vector<double> grid, std::vector<Vec> values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        if (grid_.size() < 2 || grid_.size() != values_.size())
            throw Error(ErrorCode::BadConfig, "curve needs matching grid and values");
        for (std::size_t i = 0; i + 1 < grid_.size(); ++i)
            if (!(grid_[i + 1] > grid_[i])) throw Error(ErrorCode::BadConfig, "curve grid must be increasing");
    }

    const std::vector<double>& grid() const { return grid_; }
    const std::vector<Vec>& values() const { return values_; }
    double a() const { return grid_.front(); }
    double b() const { return grid_.back(); }
    int dim() const { return static_cast<int>(values_.front().size()); }
    std::size_t segments() const { return grid_.size() - 1; }

    Vec eval(double t) const {
        const double tol = 1e-12 * (1.0 + std::abs(b()));
        if (t < a() - tol || t > b() + tol) throw Error(ErrorCode::DomainMismatch, "point outside curve domain");
        t = std::clamp(t, a(), b());
        std::size_t k = locate(t);
        double w = (t - grid_[k]) / (grid_[k + 1] - grid_[k]);
        Vec v = values_[k];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += w * (values_[k + 1][i] - values_[k][i]);
        return v;
    }

    Vec derivative(std::size_t segment) const {
        Vec d = values_[segment + 1] - values_[segment];
        double h = grid_[segment + 1] - grid_[segment];
        for (auto& x : d) x /= h;
        return d;
    }

    double variation_metric(const SpdOperator& M, double lo, double hi) const {
        return accumulate(lo, hi, [&](const Vec& dv) { return M.norm(dv); });
    }

    double variation_gauge(const Dissipation& R, double lo, double hi) const {
        return accumulate(lo, hi, [&](const Vec& dv) { return R.value(dv); });
    }

    double sup_norm_metric(const SpdOperator& M) const {
        double m = 0.0;
        for (const auto& v : values_) m = std::max(m, M.norm(v));
        return m;
    }

    std::size_t locate(double t) const {
        auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
        std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - grid_.begin()) - 1));
        return std::min(k, grid_.size() - 2);
    }

  private:
    template <class NormFn>
    double accumulate(double lo, double hi, NormFn&& nf) const {
        if (hi <= lo) return 0.0;
        double total = 0.0;
        for (std::size_t k = 0; k + 1 < grid_.size(); ++k) {
            double l = std::max(lo, grid_[k]), h = std::min(hi, grid_[k + 1]);
            if (h <= l) continue;
            double frac = (h - l) / (grid_[k + 1] - grid_[k]);
            Vec dv = values_[k + 1] - values_[k];
            for (auto& x : dv) x *= frac;
            total += nf(dv);
        }
        return total;
    }

    std::vector<double> grid_;
    std::vector<Vec> values_;
};

}  // namespace rateindep
