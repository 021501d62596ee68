#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rateindep {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm1(const Vec& a) {
    double s = 0.0;
    for (double x : a) s += std::abs(x);
    return s;
}

inline double norm_inf(const Vec& a) {
    double s = 0.0;
    for (double x : a) s = std::max(s, std::abs(x));
    return s;
}

inline Vec operator+(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline Vec operator-(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

inline Vec operator*(double c, Vec a) {
    for (auto& x : a) x *= c;
    return a;
}

inline Vec& operator+=(Vec& a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline Vec& operator-=(Vec& a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

inline void axpy(double c, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline bool all_finite(const Vec& a) {
    for (double x : a)
        if (!std::isfinite(x)) return false;
    return true;
}

// Dense matrix, row-major. Used symmetric almost everywhere; kept general so
// Newton systems with restricted index sets reuse it.
class Matrix {
  public:
    Matrix() = default;
    Matrix(int n, int m) : rows_(n), cols_(m), a_(static_cast<std::size_t>(n) * m, 0.0) {}
    static Matrix identity(int n) {
        Matrix I(n, n);
        for (int i = 0; i < n; ++i) I(i, i) = 1.0;
        return I;
    }

    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }

    Vec apply(const Vec& x) const {
        Vec y(rows_, 0.0);
        for (int i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    Matrix& operator+=(const Matrix& b) {
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += b.a_[i];
        return *this;
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : a_) m = std::max(m, std::abs(x));
        return m;
    }

    double symmetry_defect() const {
        double d = 0.0;
        for (int i = 0; i < rows_; ++i)
            for (int j = i + 1; j < cols_; ++j) d = std::max(d, std::abs((*this)(i, j) - (*this)(j, i)));
        return d;
    }

    void symmetrize() {
        for (int i = 0; i < rows_; ++i)
            for (int j = i + 1; j < cols_; ++j) {
                double v = 0.5 * ((*this)(i, j) + (*this)(j, i));
                (*this)(i, j) = v;
                (*this)(j, i) = v;
            }
    }

  private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

// Cyclic Jacobi; returns eigenvalues ascending. Adequate for the small dense
// symmetric matrices this project works with.
inline std::vector<double> symmetric_eigenvalues(Matrix m) {
    const int n = m.rows();
    if (n == 1) return {m(0, 0)};
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off = std::max(off, std::abs(m(i, j)));
        if (off < 1e-15 * (1.0 + m.max_abs())) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                double apq = m(p, q);
                if (std::abs(apq) < 1e-300) continue;
                double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = m(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

// Lower Cholesky factor; throws std::domain_error when not SPD.
class Cholesky {
  public:
    Cholesky() = default;
    explicit Cholesky(const Matrix& m) : n_(m.rows()), l_(m.rows(), m.rows()) {
        for (int j = 0; j < n_; ++j) {
            double d = m(j, j);
            for (int k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
            if (d <= 0.0) throw std::domain_error("matrix not positive definite");
            l_(j, j) = std::sqrt(d);
            for (int i = j + 1; i < n_; ++i) {
                double s = m(i, j);
                for (int k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
                l_(i, j) = s / l_(j, j);
            }
        }
    }

    Vec solve(const Vec& b) const {
        Vec y(n_);
        for (int i = 0; i < n_; ++i) {
            double s = b[i];
            for (int k = 0; k < i; ++k) s -= l_(i, k) * y[k];
            y[i] = s / l_(i, i);
        }
        Vec x(n_);
        for (int i = n_ - 1; i >= 0; --i) {
            double s = y[i];
            for (int k = i + 1; k < n_; ++k) s -= l_(k, i) * x[k];
            x[i] = s / l_(i, i);
        }
        return x;
    }

  private:
    int n_ = 0;
    Matrix l_;
};

// Gaussian elimination with partial pivoting; for the small Newton systems.
inline Vec solve_dense(Matrix a, Vec b) {
    const int n = a.rows();
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (std::abs(a(piv, col)) < 1e-300) throw std::domain_error("singular linear system");
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(a(col, c), a(piv, c));
            std::swap(b[col], b[piv]);
        }
        for (int r = col + 1; r < n; ++r) {
            double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a(r, c) -= f * a(col, c);
            b[r] -= f * b[col];
        }
    }
    Vec x(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int c = i + 1; c < n; ++c) s -= a(i, c) * x[c];
        x[i] = s / a(i, i);
    }
    return x;
}

}  // namespace rateindep
