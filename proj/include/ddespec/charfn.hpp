#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

#include "error.hpp"
#include "matrix.hpp"
#include "models.hpp"

namespace ddespec {

/// Below this |z| the cardinal functions switch to their Maclaurin series.
inline constexpr double kSeriesSwitch = 1e-3;

/// sinh(z)/z, continued by 1 at z = 0.
inline Complex sinhc(Complex z) {
    if (std::abs(z) < kSeriesSwitch) {
        const Complex z2 = z * z;
        return 1.0 + z2 * (1.0 / 6.0 + z2 * (1.0 / 120.0 + z2 * (1.0 / 5040.0 + z2 / 362880.0)));
    }
    return std::sinh(z) / z;
}

/// sin(x)/x, continued by 1 at x = 0.
inline double sinc(double x) {
    if (std::abs(x) < kSeriesSwitch) {
        const double x2 = x * x;
        return 1.0 - x2 * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 5040.0 - x2 / 362880.0)));
    }
    return std::sin(x) / x;
}

inline Complex cschc(Complex z) {
    const Complex s = sinhc(z);
    if (std::abs(s) <= 1e-14) throw PoleError("cschc evaluated at a zero of sinhc");
    return 1.0 / s;
}

/// d/dz sinhc(z). The closed form cancels badly for small |z|, so the series
/// covers |z| < 0.5 (terms through z^15).
inline Complex sinhc_derivative(Complex z) {
    if (std::abs(z) < 0.5) {
        // sum_{k>=1} 2k z^{2k-1} / (2k+1)!
        const Complex z2 = z * z;
        const Complex sum = z * (1.0 / 3.0 +
                   z2 * (1.0 / 30.0 +
                         z2 * (1.0 / 840.0 +
                               z2 * (1.0 / 45360.0 +
                                     z2 * (1.0 / 3991680.0 +
                                           z2 * (1.0 / 518918400.0 +
                                                 z2 * (1.0 / 93405312000.0 +
                                                       z2 / 22230464256000.0)))))));
        return sum;
    }
    return (z * std::cosh(z) - std::sinh(z)) / (z * z);
}

/// log sinhc(z) without overflow for large |Re z|; the branch is immaterial to
/// callers, which only exponentiate or take the real part.
inline Complex log_sinhc(Complex z) {
    constexpr double kLn2 = std::numbers::ln2;
    if (std::abs(z.real()) < 30.0) return std::log(sinhc(z));
    if (z.real() > 0.0) return z - kLn2 - std::log(z);  // e^{-2z} is below double precision here
    return Complex(0.0, std::numbers::pi) - z - kLn2 - std::log(z);
}

/// sinhc'(z) / sinhc(z) = coth z - 1/z.
inline Complex sinhc_log_derivative(Complex z) {
    if (std::abs(z) < 0.5) return sinhc_derivative(z) / sinhc(z);
    if (std::abs(z.real()) > 20.0) return (z.real() > 0.0 ? 1.0 : -1.0) - 1.0 / z;
    return 1.0 / std::tanh(z) - 1.0 / z;
}

/// Expansion terms of sinhc(rho (eps gamma + i omega)) around eps = 0.
struct ExpansionTerms {
    double f1;
    double f2;
};

inline ExpansionTerms f1_f2(double omega, double rho) {
    if (!(rho > 0.0)) throw DomainError("f1_f2 requires rho > 0");
    const double u = rho * omega;
    if (std::abs(u) < 0.5) {
        const double u2 = u * u;
        // f1 = sum (-1)^{k+1} 2k u^{2k-1} / (2k+1)!
        const double f1 =
            u * (1.0 / 3.0 -
                 u2 * (1.0 / 30.0 -
                       u2 * (1.0 / 840.0 -
                             u2 * (1.0 / 45360.0 - u2 * (1.0 / 3991680.0 - u2 / 518918400.0)))));
        // f2 = 1/2 sum (-1)^{k-1} 2k (2k-1) u^{2k-2} / (2k+1)!
        const double f2 =
            1.0 / 6.0 -
            u2 * (1.0 / 20.0 -
                  u2 * (1.0 / 336.0 -
                        u2 * (1.0 / 12960.0 - u2 * (1.0 / 887040.0 - u2 / 94348800.0))));
        return {f1, f2};
    }
    const double s = std::sin(u);
    const double c = std::cos(u);
    return {(s - u * c) / (u * u), (u * u * s - 2.0 * s + 2.0 * u * c) / (2.0 * u * u * u)};
}

// ---------------------------------------------------------------------------
// Characteristic function

/// Delay transfer factor s(lambda) = e^{-lambda tau_m} sinhc(rho lambda), in log form.
struct DelayFactor {
    Complex log_s;
    Complex ratio;  ///< s'(lambda) / s(lambda)
};

inline DelayFactor delay_factor(double rho, double tau_m, Complex lambda) {
    const Complex z = rho * lambda;
    return {-lambda * tau_m + log_sinhc(z), -tau_m + rho * sinhc_log_derivative(z)};
}

/// Delta(lambda) = det(lambda I - A - B e^{-lambda tau_m} sinhc(lambda rho)),
/// evaluated directly. Overflows to inf far into the left half-plane; the
/// solvers use characteristic_matrices() instead.
inline Complex delta(const LinearDDE& sys, Complex lambda) {
    const Complex s = std::exp(-lambda * sys.tau_m()) * sinhc(sys.rho() * lambda);
    CMatrix m = CMatrix::identity(sys.n()) * lambda - sys.A() - sys.B() * s;
    return det(m);
}

/// M(lambda) and M'(lambda) with the delayed rows divided by s(lambda) whenever
/// |s| > 1. The scaling leaves the zeros and trace(M^{-1} M') unchanged, and
/// |det(m)| = |Delta| / max(1, |s|)^d.
struct CharacteristicMatrices {
    CMatrix m;
    CMatrix dm;
    double log_scale = 0.0;  ///< d * log max(1, |s|)
};

inline CharacteristicMatrices characteristic_matrices(const LinearDDE& sys, Complex lambda) {
    const std::size_t n = sys.n();
    const std::size_t first_delayed = n - sys.d();
    const CMatrix& a = sys.A();
    const CMatrix& b = sys.B();
    const DelayFactor f = delay_factor(sys.rho(), sys.tau_m(), lambda);
    CharacteristicMatrices out{CMatrix(n, n), CMatrix(n, n), 0.0};
    const bool scaled = f.log_s.real() > 0.0;
    Complex s = 0.0, ds = 0.0, inv_s = 1.0;
    if (scaled) {
        inv_s = std::exp(-f.log_s);
        out.log_scale = static_cast<double>(sys.d()) * f.log_s.real();
    } else {
        const Complex e = std::exp(-lambda * sys.tau_m());
        const Complex z = sys.rho() * lambda;
        const Complex sh = sinhc(z);
        s = e * sh;
        ds = e * (-sys.tau_m() * sh + sys.rho() * sinhc_derivative(z));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const bool delayed_row = i >= first_delayed;
        for (std::size_t j = 0; j < n; ++j) {
            const Complex undelayed = (i == j ? lambda : Complex(0.0)) - a(i, j);
            const Complex unit = i == j ? 1.0 : 0.0;
            if (!delayed_row) {
                out.m(i, j) = undelayed;
                out.dm(i, j) = unit;
            } else if (scaled) {
                out.m(i, j) = inv_s * undelayed - b(i, j);
                out.dm(i, j) = inv_s * unit - f.ratio * b(i, j);
            } else {
                out.m(i, j) = undelayed - s * b(i, j);
                out.dm(i, j) = unit - ds * b(i, j);
            }
        }
    }
    return out;
}

/// Delta(lambda) / max(1, |s(lambda)|)^d up to a unimodular factor. Same zeros as
/// Delta, bounded magnitude everywhere; used for residuals.
inline Complex delta_scaled(const LinearDDE& sys, Complex lambda) {
    return det(characteristic_matrices(sys, lambda).m);
}

/// Delta'(lambda) / Delta(lambda) = trace(M^{-1} M'). Throws OnZeroError when M
/// is singular to pivot tolerance.
inline Complex delta_log_derivative(const LinearDDE& sys, Complex lambda) {
    const auto cm = characteristic_matrices(sys, lambda);
    const auto lu = lu_factor(cm.m);
    if (lu.singular()) throw OnZeroError("characteristic matrix singular at evaluation point");
    return lu.solve(cm.dm).trace();
}

// ---------------------------------------------------------------------------
// Polynomials in the auxiliary variable x

/// Polynomial with complex coefficients, ascending degree.
struct PolyC {
    std::vector<Complex> coeffs;
    bool trivial = false;  ///< identically zero to working tolerance

    int degree() const noexcept { return static_cast<int>(coeffs.size()) - 1; }

    Complex operator()(Complex x) const noexcept {
        Complex acc = 0.0;
        for (std::size_t k = coeffs.size(); k-- > 0;) acc = acc * x + coeffs[k];
        return acc;
    }

    Complex derivative(Complex x) const noexcept {
        Complex acc = 0.0;
        for (std::size_t k = coeffs.size(); k-- > 1;) acc = acc * x + static_cast<double>(k) * coeffs[k];
        return acc;
    }

    double max_coeff() const noexcept {
        double m = 0.0;
        for (const auto& c : coeffs) m = std::max(m, std::abs(c));
        return m;
    }

    /// Drops high-order coefficients below rel_tol * max|c|; flags the polynomial
    /// trivial when max|c| <= abs_floor.
    void trim(double rel_tol, double abs_floor) {
        const double m = max_coeff();
        if (m <= abs_floor) {
            trivial = true;
            coeffs.assign(1, Complex(0.0));
            return;
        }
        while (coeffs.size() > 1 && std::abs(coeffs.back()) < rel_tol * m) coeffs.pop_back();
    }
};

inline constexpr double kDegreeTrim = 1e-14;

namespace detail {

// Coefficients of a polynomial of degree <= deg from values on the (deg+1)-th roots of unity.
template <typename F>
PolyC interpolate_on_unit_circle(std::size_t deg, F&& f) {
    const std::size_t m = deg + 1;
    std::vector<Complex> nodes(m), values(m);
    for (std::size_t j = 0; j < m; ++j) {
        nodes[j] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m));
        values[j] = f(nodes[j]);
    }
    PolyC p;
    p.coeffs.assign(m, Complex(0.0));
    for (std::size_t k = 0; k < m; ++k) {
        Complex acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += values[j] * std::pow(std::conj(nodes[j]), static_cast<int>(k));
        p.coeffs[k] = acc / static_cast<double>(m);
    }
    return p;
}

inline double poly_scale(const LinearDDE& sys, double omega, double kernel) {
    const double base = std::max(1.0, std::abs(omega) + sys.A().norm_inf() + std::abs(kernel) * sys.B().norm_inf());
    return std::pow(base, static_cast<double>(sys.n()));
}

}  // namespace detail

/// p_omega(x) = det(i omega I - A - x sinc(rho omega) B), degree <= d.
/// Interpolates P(y) = det(i omega I - A - y B) and rescales c_k = P_k sinc^k,
/// which keeps the high-order coefficients accurate near kernel zeros.
inline PolyC p_omega(const LinearDDE& sys, double omega) {
    const double k = sinc(sys.rho() * omega);
    const CMatrix base = CMatrix::identity(sys.n()) * Complex(0.0, omega) - sys.A();
    PolyC p = detail::interpolate_on_unit_circle(sys.d(), [&](Complex y) { return det(base - sys.B() * y); });
    double power = 1.0;
    for (auto& c : p.coeffs) {
        c *= power;
        power *= k;
    }
    p.trim(kDegreeTrim, kDegreeTrim * detail::poly_scale(sys, omega, k));
    return p;
}

/// q_omega(x) = det(x (i omega I - A) - sinc(rho omega) B) = x^n p_omega(1/x), degree <= n.
inline PolyC q_omega(const LinearDDE& sys, double omega) {
    const double k = sinc(sys.rho() * omega);
    const CMatrix base = CMatrix::identity(sys.n()) * Complex(0.0, omega) - sys.A();
    const CMatrix kb = sys.B() * Complex(k);
    PolyC q = detail::interpolate_on_unit_circle(sys.n(), [&](Complex x) { return det(base * x - kb); });
    q.trim(kDegreeTrim, kDegreeTrim * detail::poly_scale(sys, omega, k));
    return q;
}

}  // namespace ddespec
