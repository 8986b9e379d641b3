#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace ddespec {

using Complex = std::complex<double>;

/// Dense row-major complex matrix. Small sizes only (n <= 16 for eigenvalues).
class CMatrix {
  public:
    CMatrix() = default;
    CMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    CMatrix(std::initializer_list<std::initializer_list<Complex>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_) throw DimensionError("ragged matrix initializer");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static CMatrix identity(std::size_t n) {
        CMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static CMatrix diagonal(std::span<const Complex> d) {
        CMatrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool is_square() const noexcept { return rows_ == cols_; }
    bool empty() const noexcept { return data_.empty(); }

    Complex& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const Complex& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<Complex> entries() noexcept { return data_; }
    std::span<const Complex> entries() const noexcept { return data_; }

    CMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
        if (r0 + nr > rows_ || c0 + nc > cols_) throw DimensionError("block out of range");
        CMatrix b(nr, nc);
        for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
        return b;
    }

    /// Max absolute row sum.
    double norm_inf() const noexcept {
        double best = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
            best = std::max(best, s);
        }
        return best;
    }

    double max_abs() const noexcept {
        double best = 0.0;
        for (const auto& v : data_) best = std::max(best, std::abs(v));
        return best;
    }

    bool is_real(double tol = 0.0) const noexcept {
        return std::all_of(data_.begin(), data_.end(),
                           [tol](const Complex& v) { return std::abs(v.imag()) <= tol; });
    }

    bool is_zero() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](const Complex& v) { return v == 0.0; });
    }

    Complex trace() const {
        if (!is_square()) throw DimensionError("trace of non-square matrix");
        Complex t = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
        return t;
    }

    CMatrix& operator+=(const CMatrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    CMatrix& operator-=(const CMatrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    CMatrix& operator*=(Complex s) {
        for (auto& v : data_) v *= s;
        return *this;
    }

    friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
    friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
    friend CMatrix operator*(CMatrix a, Complex s) { return a *= s; }
    friend CMatrix operator*(Complex s, CMatrix a) { return a *= s; }

    friend CMatrix operator*(const CMatrix& a, const CMatrix& b) {
        if (a.cols_ != b.rows_) throw DimensionError("matrix product dimension mismatch");
        CMatrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const Complex aik = a(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    friend bool operator==(const CMatrix& a, const CMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

  private:
    void check_same(const CMatrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionError("matrix size mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Complex> data_;
};

/// Pivot magnitudes below this fraction of ||m||_inf mark the matrix singular.
inline constexpr double kPivotTolerance = 1e-13;

/// In-place LU factorization with partial pivoting; never throws on singularity.
struct LuFactors {
    CMatrix lu;
    std::vector<std::size_t> perm;
    int sign = 1;
    double smallest_pivot = 0.0;
    double norm = 0.0;

    bool singular(double tol = kPivotTolerance) const noexcept {
        return !(smallest_pivot >= tol * norm) || norm == 0.0;
    }

    Complex determinant() const {
        Complex d = static_cast<double>(sign);
        for (std::size_t i = 0; i < lu.rows(); ++i) d *= lu(i, i);
        return d;
    }

    /// Solves in place for one or more right-hand sides; assumes nonsingular.
    CMatrix solve(const CMatrix& rhs) const {
        const std::size_t n = lu.rows();
        if (rhs.rows() != n) throw DimensionError("rhs row count mismatch");
        CMatrix x(n, rhs.cols());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < rhs.cols(); ++j) x(i, j) = rhs(perm[i], j);
        for (std::size_t j = 0; j < rhs.cols(); ++j) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < i; ++k) x(i, j) -= lu(i, k) * x(k, j);
            for (std::size_t ii = n; ii-- > 0;) {
                for (std::size_t k = ii + 1; k < n; ++k) x(ii, j) -= lu(ii, k) * x(k, j);
                x(ii, j) /= lu(ii, ii);
            }
        }
        return x;
    }
};

inline LuFactors lu_factor(const CMatrix& m) {
    if (!m.is_square()) throw DimensionError("LU of non-square matrix");
    const std::size_t n = m.rows();
    LuFactors f{m, std::vector<std::size_t>(n), 1, n ? HUGE_VAL : 0.0, m.norm_inf()};
    for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;
    CMatrix& a = f.lu;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::abs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::abs(a(i, k));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            std::swap(f.perm[k], f.perm[p]);
            f.sign = -f.sign;
        }
        f.smallest_pivot = std::min(f.smallest_pivot, best);
        if (best == 0.0) continue;
        for (std::size_t i = k + 1; i < n; ++i) {
            const Complex l = a(i, k) / a(k, k);
            a(i, k) = l;
            if (l == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= l * a(k, j);
        }
    }
    return f;
}

inline Complex det(const CMatrix& m) {
    if (!m.is_square()) throw DimensionError("determinant of non-square matrix");
    if (m.rows() == 0) return 1.0;
    return lu_factor(m).determinant();
}

/// Solves m x = rhs. Throws SingularMatrixError when a pivot falls below
/// kPivotTolerance * ||m||_inf.
inline CMatrix solve(const CMatrix& m, const CMatrix& rhs) {
    if (!m.is_square()) throw DimensionError("solve with non-square matrix");
    auto f = lu_factor(m);
    if (f.singular())
        throw SingularMatrixError("matrix is singular to working tolerance", f.smallest_pivot);
    return f.solve(rhs);
}

namespace detail {

// Householder reduction to upper Hessenberg form.
inline void to_hessenberg(CMatrix& h) {
    const std::size_t n = h.rows();
    std::vector<Complex> v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double alpha_norm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) alpha_norm += std::norm(h(i, k));
        alpha_norm = std::sqrt(alpha_norm);
        if (alpha_norm == 0.0) continue;
        const Complex x0 = h(k + 1, k);
        const Complex phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : Complex(1.0);
        const Complex alpha = -phase * alpha_norm;
        std::fill(v.begin(), v.end(), Complex(0.0));
        v[k + 1] = x0 - alpha;
        for (std::size_t i = k + 2; i < n; ++i) v[i] = h(i, k);
        double vnorm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) vnorm += std::norm(v[i]);
        if (vnorm == 0.0) continue;
        // H <- (I - 2 v v^H / |v|^2) H (I - 2 v v^H / |v|^2)
        for (std::size_t j = 0; j < n; ++j) {
            Complex s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += std::conj(v[i]) * h(i, j);
            s *= 2.0 / vnorm;
            for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= v[i] * s;
        }
        for (std::size_t i = 0; i < n; ++i) {
            Complex s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += h(i, j) * v[j];
            s *= 2.0 / vnorm;
            for (std::size_t j = k + 1; j < n; ++j) h(i, j) -= s * std::conj(v[j]);
        }
        for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
    }
}

inline Complex wilkinson_shift(Complex a, Complex b, Complex c, Complex d) {
    const Complex half_diff = 0.5 * (a - d);
    const Complex disc = std::sqrt(half_diff * half_diff + b * c);
    const Complex mu1 = 0.5 * (a + d) + disc;
    const Complex mu2 = 0.5 * (a + d) - disc;
    return std::abs(mu1 - d) < std::abs(mu2 - d) ? mu1 : mu2;
}

}  // namespace detail

/// All eigenvalues (with multiplicity) via Hessenberg reduction and shifted
/// complex QR. Real input yields an exactly conjugate-paired result.
inline std::vector<Complex> eigenvalues(const CMatrix& m) {
    if (!m.is_square()) throw DimensionError("eigenvalues of non-square matrix");
    const std::size_t n = m.rows();
    if (n > 16) throw DimensionError("eigenvalues supports n <= 16");
    std::vector<Complex> out;
    if (n == 0) return out;
    out.reserve(n);

    CMatrix h = m;
    detail::to_hessenberg(h);
    const double eps = std::numeric_limits<double>::epsilon();
    const double scale = std::max(h.max_abs(), std::numeric_limits<double>::min());

    std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(n) - 1;
    int iter = 0;
    int total_iter = 0;
    std::vector<double> cs(n);
    std::vector<Complex> sn(n);
    while (hi >= 0) {
        std::ptrdiff_t l = hi;
        while (l > 0) {
            const double off = std::abs(h(l, l - 1));
            double diag = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
            if (diag == 0.0) diag = scale;
            if (off <= eps * diag) {
                h(l, l - 1) = 0.0;
                break;
            }
            --l;
        }
        if (l == hi) {
            out.push_back(h(hi, hi));
            --hi;
            iter = 0;
            continue;
        }
        if (++total_iter > 300 * static_cast<int>(n)) throw SolverError("QR iteration did not converge");
        ++iter;
        Complex mu;
        if (iter % 11 == 0) {
            // exceptional shift
            mu = h(hi, hi) + Complex(0.75 * std::abs(h(hi, hi - 1)), 0.3 * std::abs(h(hi, hi - 1)));
        } else {
            mu = detail::wilkinson_shift(h(hi - 1, hi - 1), h(hi - 1, hi), h(hi, hi - 1), h(hi, hi));
        }
        for (std::ptrdiff_t k = l; k <= hi; ++k) h(k, k) -= mu;
        for (std::ptrdiff_t k = l; k < hi; ++k) {
            const Complex a = h(k, k);
            const Complex b = h(k + 1, k);
            const double r = std::hypot(std::abs(a), std::abs(b));
            double c;
            Complex s;
            if (r == 0.0) {
                c = 1.0;
                s = 0.0;
            } else if (std::abs(a) == 0.0) {
                c = 0.0;
                s = 1.0;
            } else {
                c = std::abs(a) / r;
                s = (a / std::abs(a)) * std::conj(b) / r;
            }
            cs[k] = c;
            sn[k] = s;
            for (std::ptrdiff_t j = k; j <= hi; ++j) {
                const Complex x = h(k, j);
                const Complex y = h(k + 1, j);
                h(k, j) = c * x + s * y;
                h(k + 1, j) = -std::conj(s) * x + c * y;
            }
        }
        for (std::ptrdiff_t k = l; k < hi; ++k) {
            const double c = cs[k];
            const Complex s = sn[k];
            const std::ptrdiff_t last = std::min(k + 2, hi);
            for (std::ptrdiff_t i = l; i <= last; ++i) {
                const Complex x = h(i, k);
                const Complex y = h(i, k + 1);
                h(i, k) = c * x + std::conj(s) * y;
                h(i, k + 1) = -s * x + c * y;
            }
        }
        for (std::ptrdiff_t k = l; k <= hi; ++k) h(k, k) += mu;
    }

    if (m.is_real()) {
        // Pair each value with its conjugate so real input gives a symmetric set.
        const double tol = 1e-9 * std::max(1.0, m.norm_inf());
        std::vector<Complex> paired;
        std::vector<bool> used(out.size(), false);
        std::sort(out.begin(), out.end(), [](const Complex& x, const Complex& y) {
            return x.imag() > y.imag();
        });
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (used[i]) continue;
            used[i] = true;
            if (std::abs(out[i].imag()) <= tol) {
                paired.emplace_back(out[i].real(), 0.0);
                continue;
            }
            std::size_t best = out.size();
            double best_d = HUGE_VAL;
            for (std::size_t j = 0; j < out.size(); ++j) {
                if (used[j]) continue;
                const double dist = std::abs(out[j] - std::conj(out[i]));
                if (dist < best_d) {
                    best_d = dist;
                    best = j;
                }
            }
            if (best == out.size()) {
                paired.push_back(out[i]);
                continue;
            }
            used[best] = true;
            const Complex avg = 0.5 * (out[i] + std::conj(out[best]));
            paired.push_back(avg);
            paired.push_back(std::conj(avg));
        }
        out = std::move(paired);
    }
    std::sort(out.begin(), out.end(), [](const Complex& x, const Complex& y) {
        if (x.real() != y.real()) return x.real() > y.real();
        return x.imag() > y.imag();
    });
    return out;
}

}  // namespace ddespec
