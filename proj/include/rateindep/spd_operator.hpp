#pragma once

#include <cmath>
#include <utility>

#include "rateindep/errors.hpp"
#include "rateindep/linalg.hpp"

namespace rateindep {

// Dense symmetric positive definite bilinear form with a certified lower
// bound on its Euclidean Rayleigh quotient. Instances play the roles of both
// the elastic form and the viscous metric; the induced norms are
//   |v|_M   = <Mv,v>^(1/2)        (primal)
//   |w|_M*  = <w,M^-1 w>^(1/2)    (dual)
class SpdOperator {
  public:
    explicit SpdOperator(Matrix entries) : m_(std::move(entries)) {
        if (m_.rows() != m_.cols()) throw Error(ErrorCode::BadConfig, "operator must be square");
        const double tol = 1e-12 * (1.0 + m_.max_abs());
        if (m_.symmetry_defect() > tol) throw Error(ErrorCode::BadConfig, "operator entries not symmetric");
        m_.symmetrize();
        chol_ = Cholesky(m_);
        auto ev = symmetric_eigenvalues(m_);
        lambda_min_ = ev.front();
        lambda_max_ = ev.back();
        if (lambda_min_ <= 0.0) throw Error(ErrorCode::BadConfig, "operator not positive definite");
        // Certified Rayleigh bound: back off by the Jacobi rounding level.
        ellipticity_ = lambda_min_ - 1e-13 * lambda_max_;
        diagonal_ = true;
        for (int i = 0; i < dim() && diagonal_; ++i)
            for (int j = i + 1; j < dim(); ++j)
                if (m_(i, j) != 0.0) {
                    diagonal_ = false;
                    break;
                }
    }

    static SpdOperator identity(int n) { return SpdOperator(Matrix::identity(n)); }

    static SpdOperator diagonal(const Vec& d) {
        Matrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
        for (std::size_t i = 0; i < d.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = d[i];
        return SpdOperator(std::move(m));
    }

    static SpdOperator scalar(double a) { return diagonal(Vec{a}); }

    int dim() const { return m_.rows(); }
    const Matrix& entries() const { return m_; }
    bool is_diagonal() const { return diagonal_; }

    double ellipticity() const { return ellipticity_; }
    double lambda_min() const { return lambda_min_; }
    double lambda_max() const { return lambda_max_; }

    Vec apply(const Vec& v) const { return m_.apply(v); }
    Vec solve(const Vec& w) const { return chol_.solve(w); }

    double quad(const Vec& v) const { return dot(m_.apply(v), v); }
    double norm(const Vec& v) const { return std::sqrt(std::max(0.0, quad(v))); }
    double dual_quad(const Vec& w) const { return dot(w, chol_.solve(w)); }
    double dual_norm(const Vec& w) const { return std::sqrt(std::max(0.0, dual_quad(w))); }

  private:
    Matrix m_;
    Cholesky chol_;
    double lambda_min_ = 0.0, lambda_max_ = 0.0, ellipticity_ = 0.0;
    bool diagonal_ = false;
};

}  // namespace rateindep
