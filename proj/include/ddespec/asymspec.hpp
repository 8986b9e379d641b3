#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "charfn.hpp"
#include "error.hpp"
#include "models.hpp"
#include "polyroots.hpp"

namespace ddespec {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// |Re lambda| at or below this counts as purely imaginary.
inline constexpr double kImagAxisTol = 1e-10;

// ---------------------------------------------------------------------------
// Strong spectrum

struct StrongSets {
    std::vector<Complex> a_plus;   ///< sigma(A), Re > 0
    std::vector<Complex> a_minus;  ///< sigma(A1), Re < 0
    std::vector<Complex> a_zero;   ///< strong critical, purely imaginary
    double r = kInf;               ///< classification radius

    std::vector<Complex> strong() const {
        std::vector<Complex> s = a_plus;
        s.insert(s.end(), a_minus.begin(), a_minus.end());
        return s;
    }
};

inline StrongSets strong_sets(const LinearDDE& sys) {
    StrongSets out;
    const auto sa = eigenvalues(sys.A());
    for (const auto& l : sa) {
        if (l.real() > kImagAxisTol) out.a_plus.push_back(l);
        // iw in sigma(A) at a kernel zero: Delta(iw) = 0 for every tau_m
        if (std::abs(l.real()) <= kImagAxisTol && std::abs(sinc(sys.rho() * l.imag())) < 1e-10)
            out.a_zero.emplace_back(0.0, l.imag());
    }
    if (sys.d() < sys.n()) {
        const auto sa1 = eigenvalues(sys.A1());
        const bool decoupled = sys.A2().is_zero() || sys.A3().is_zero();
        for (const auto& l : sa1) {
            if (l.real() < -kImagAxisTol) out.a_minus.push_back(l);
            if (decoupled && std::abs(l.real()) <= kImagAxisTol) out.a_zero.emplace_back(0.0, l.imag());
        }
    }
    const auto s = out.strong();
    double r0 = kInf, axis = kInf;
    for (std::size_t i = 0; i < s.size(); ++i) {
        axis = std::min(axis, std::abs(s[i].real()));
        for (std::size_t j = i + 1; j < s.size(); ++j) r0 = std::min(r0, std::abs(s[i] - s[j]));
    }
    out.r = s.empty() ? kInf : std::min(r0, axis) / 3.0;
    return out;
}

// ---------------------------------------------------------------------------
// Spectral curves

enum class SingularityKind { plus_inf_sigmaA, minus_inf_sigmaA1, kernel_zero };

inline std::string to_string(SingularityKind k) {
    switch (k) {
        case SingularityKind::plus_inf_sigmaA: return "plus_inf_sigmaA";
        case SingularityKind::minus_inf_sigmaA1: return "minus_inf_sigmaA1";
        case SingularityKind::kernel_zero: return "kernel_zero";
    }
    return "unknown";
}

struct Singularity {
    double omega;
    SingularityKind kind;
};

/// Excluded frequencies in [omega_min, omega_max], sorted by omega.
inline std::vector<Singularity> singular_frequencies(const LinearDDE& sys, double omega_min, double omega_max) {
    std::vector<Singularity> out;
    auto add = [&](double w, SingularityKind k) {
        if (w >= omega_min && w <= omega_max) out.push_back({w, k});
    };
    for (const auto& l : eigenvalues(sys.A()))
        if (std::abs(l.real()) <= kImagAxisTol) add(l.imag(), SingularityKind::plus_inf_sigmaA);
    if (sys.d() < sys.n())
        for (const auto& l : eigenvalues(sys.A1()))
            if (std::abs(l.real()) <= kImagAxisTol) add(l.imag(), SingularityKind::minus_inf_sigmaA1);
    const double step = std::numbers::pi / sys.rho();
    const auto k_lo = static_cast<long>(std::ceil(omega_min / step));
    const auto k_hi = static_cast<long>(std::floor(omega_max / step));
    for (long k = k_lo; k <= k_hi; ++k)
        if (k != 0) add(static_cast<double>(k) * step, SingularityKind::kernel_zero);
    std::sort(out.begin(), out.end(), [](const Singularity& a, const Singularity& b) {
        return a.omega < b.omega || (a.omega == b.omega && a.kind < b.kind);
    });
    return out;
}

/// The d curve values at one frequency, sorted ascending. Roots of p_omega that
/// vanish give +inf, roots lost to a degree drop give -inf (phase NaN for both).
struct CurveSample {
    std::vector<double> gamma;
    std::vector<double> phi;
    bool trivial = false;  ///< p_omega identically zero (strong critical frequency)
};

inline CurveSample curve_sample(const LinearDDE& sys, double omega) {
    CurveSample s;
    const PolyC p = p_omega(sys, omega);
    if (p.trivial) {
        s.trivial = true;
        return s;
    }
    const double cmax = p.max_coeff();
    std::size_t low = 0;
    while (low < p.coeffs.size() && std::abs(p.coeffs[low]) < kDegreeTrim * cmax) ++low;
    std::vector<std::pair<double, double>> entries;
    const std::size_t degree = p.coeffs.size() - 1;
    for (std::size_t k = degree; k < sys.d(); ++k) entries.emplace_back(-kInf, std::nan(""));
    for (std::size_t k = 0; k < low; ++k) entries.emplace_back(kInf, std::nan(""));
    const std::vector<Complex> rest(p.coeffs.begin() + static_cast<std::ptrdiff_t>(low), p.coeffs.end());
    for (const auto& x : polynomial_roots(rest)) entries.emplace_back(-std::log(std::abs(x)), -std::arg(x));
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first || (a.first == b.first && a.second < b.second); });
    for (const auto& [g, f] : entries) {
        s.gamma.push_back(g);
        s.phi.push_back(f);
    }
    return s;
}

struct SpectralCurveSet {
    std::size_t d = 0;
    std::vector<double> omega_grid;
    std::vector<std::vector<double>> curves;  ///< curves[l][i] = gamma_{l+1}(omega_grid[i])
    std::vector<std::vector<double>> phases;
    std::vector<Singularity> singularities;

    std::size_t size() const noexcept { return omega_grid.size(); }
    double max_at(std::size_t i) const {
        double m = -kInf;
        for (const auto& c : curves) m = std::max(m, c[i]);
        return m;
    }
    double min_at(std::size_t i) const {
        double m = kInf;
        for (const auto& c : curves) m = std::min(m, c[i]);
        return m;
    }
};

namespace detail {

inline bool needs_refinement(const CurveSample& a, const CurveSample& b) {
    for (std::size_t l = 0; l < a.gamma.size(); ++l) {
        const double ga = a.gamma[l], gb = b.gamma[l];
        if (std::isfinite(ga) && std::isfinite(gb)) {
            if (std::abs(ga - gb) >= 0.1) return true;
        } else if (ga != gb) {
            return true;
        }
    }
    return false;
}

}  // namespace detail

inline constexpr int kCurveRefineLevels = 20;
inline constexpr double kCurveMinInterval = 1e-6;

/// Samples every curve on n_base uniform points plus points clustered around
/// the excluded frequencies, then bisects intervals where a curve jumps by
/// 0.1 or more.
inline SpectralCurveSet spectral_curves(const LinearDDE& sys, double omega_min, double omega_max, int n_base) {
    if (!(omega_max > omega_min)) throw DomainError("empty frequency window");
    if (n_base < 2) throw DomainError("n_base must be at least 2");
    if (sys.d() == 0) throw ModelError("no delayed block");

    SpectralCurveSet out;
    out.d = sys.d();
    out.singularities = singular_frequencies(sys, omega_min, omega_max);

    std::vector<double> seeds;
    seeds.reserve(static_cast<std::size_t>(n_base) + 16 * out.singularities.size() + 16);
    for (int i = 0; i < n_base; ++i)
        seeds.push_back(omega_min + (omega_max - omega_min) * static_cast<double>(i) / (n_base - 1));
    std::vector<double> centers{0.0};
    for (const auto& s : out.singularities) centers.push_back(s.omega);
    for (const auto& l : eigenvalues(sys.A())) centers.push_back(l.imag());
    if (sys.d() < sys.n())
        for (const auto& l : eigenvalues(sys.A1())) centers.push_back(l.imag());
    for (double c : centers) {
        seeds.push_back(c);
        double off = 0.1;
        for (int j = 1; j <= 7; ++j, off *= 0.1) {
            seeds.push_back(c - off);
            seeds.push_back(c + off);
        }
    }
    std::erase_if(seeds, [&](double w) { return w < omega_min || w > omega_max; });
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

    std::vector<std::pair<double, CurveSample>> base;
    for (double w : seeds) {
        auto s = curve_sample(sys, w);
        if (!s.trivial) base.emplace_back(w, std::move(s));
    }

    std::vector<std::pair<double, CurveSample>> samples;
    // Recursive bisection of (a, b]; appends interior points then b.
    auto refine = [&](auto&& self, double a, const CurveSample& sa, double b, const CurveSample& sb, int level) -> void {
        if (level < kCurveRefineLevels && b - a >= kCurveMinInterval && detail::needs_refinement(sa, sb)) {
            const double m = 0.5 * (a + b);
            CurveSample sm = curve_sample(sys, m);
            if (!sm.trivial) {
                self(self, a, sa, m, sm, level + 1);
                samples.emplace_back(m, sm);
                self(self, m, sm, b, sb, level + 1);
            }
        }
    };
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (i > 0) refine(refine, base[i - 1].first, base[i - 1].second, base[i].first, base[i].second, 0);
        samples.push_back(base[i]);
    }

    out.curves.assign(out.d, {});
    out.phases.assign(out.d, {});
    for (auto& [w, s] : samples) {
        out.omega_grid.push_back(w);
        for (std::size_t l = 0; l < out.d; ++l) {
            out.curves[l].push_back(s.gamma[l]);
            out.phases[l].push_back(s.phi[l]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Closed-form curves of the built-in models

/// Curve values from the explicit formulas, sorted ascending.
inline std::vector<double> closed_form_curve(const std::string& model, const ParamMap& overrides, double omega) {
    const ModelSpec& spec = find_model(model);
    const ParamMap prm = spec.resolve(overrides);
    const double rho = prm.at("rho");
    const double sc = sinc(rho * omega);
    auto kernel_check = [&] {
        if (omega != 0.0 && std::abs(sc) < 1e-12)
            throw SingularityError("kernel zero at omega = " + std::to_string(omega), "kernel_zero");
    };
    const double w2 = omega * omega;
    if (model == "example1") {
        const double al = prm.at("alpha"), be = prm.at("beta");
        kernel_check();
        const double num = al * al + w2;
        if (num == 0.0) throw SingularityError("i omega in sigma(A)", "plus_inf_sigmaA");
        return {-0.5 * std::log(num / (be * be * sc * sc))};
    }
    if (model == "example2") {
        const double al = prm.at("alpha");
        kernel_check();
        const double den = al * al + w2;
        if (den == 0.0) throw SingularityError("i omega in sigma(A1)", "minus_inf_sigmaA1");
        const double num = (1.0 + w2) * (1.0 + w2) + al * al * w2;
        return {-0.5 * std::log(num / (den * sc * sc))};
    }
    if (model == "example3") {
        const double al = prm.at("alpha"), be = prm.at("beta");
        kernel_check();
        const double np = al * al + (be + omega) * (be + omega);
        const double nm = al * al + (be - omega) * (be - omega);
        if (np == 0.0 || nm == 0.0) throw SingularityError("i omega in sigma(A)", "plus_inf_sigmaA");
        std::vector<double> g{-0.5 * std::log(np / (sc * sc)), -0.5 * std::log(nm / (sc * sc))};
        std::sort(g.begin(), g.end());
        return g;
    }
    // wilson-cowan
    const auto eq = wilson_cowan_equilibrium(wilson_cowan_params(prm));
    if (omega == 0.0) throw SingularityError("i omega in sigma(A1)", "minus_inf_sigmaA1");
    kernel_check();
    const double a = eq.p2 * w2 - eq.p0;
    const double b = w2 - eq.p1;
    const double num = a * a + w2 * b * b;
    if (num == 0.0) throw SingularityError("i omega in sigma(A)", "plus_inf_sigmaA");
    return {-0.5 * std::log(num / (eq.q * eq.q * w2 * (1.0 + w2) * sc * sc))};
}

// ---------------------------------------------------------------------------
// Global maximum of the curves

struct GammaStar {
    double gamma_star;
    double omega_star;
};

inline double curve_max(const LinearDDE& sys, double omega) {
    const auto s = curve_sample(sys, omega);
    return s.trivial ? -kInf : s.gamma.back();
}

/// max over l and omega in [-omega_max, omega_max] of gamma_l(omega).
inline GammaStar gamma_star(const LinearDDE& sys, double omega_max, int n_base = 4001) {
    if (!(omega_max > 0.0)) throw DomainError("omega_max must be positive");
    const auto set = spectral_curves(sys, -omega_max, omega_max, n_base);
    const std::size_t n = set.size();
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = set.max_at(i);

    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (f[i] > f[best]) best = i;
    if (n == 0 || f[best] == -kInf) throw DegenerateCurveError("every curve sample is -inf");
    if (f[best] == kInf) return {kInf, set.omega_grid[best]};

    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < n; ++i) {
        const bool left = i == 0 || f[i] >= f[i - 1];
        const bool right = i + 1 == n || f[i] >= f[i + 1];
        if (left && right && std::isfinite(f[i])) peaks.push_back(i);
    }
    std::stable_sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return f[a] > f[b]; });
    if (peaks.size() > 3) peaks.resize(3);

    GammaStar result{f[best], set.omega_grid[best]};
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (std::size_t i : peaks) {
        double a = set.omega_grid[i == 0 ? 0 : i - 1];
        double b = set.omega_grid[i + 1 == n ? n - 1 : i + 1];
        double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
        double f1 = curve_max(sys, x1), f2 = curve_max(sys, x2);
        for (int it = 0; it < 200 && b - a > 1e-12 * std::max(1.0, std::abs(a)); ++it) {
            if (f1 < f2) {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = curve_max(sys, x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = curve_max(sys, x1);
            }
        }
        const double xm = f1 > f2 ? x1 : x2;
        const double fm = std::max(f1, f2);
        if (fm > result.gamma_star) result = {fm, xm};
    }
    return result;
}

}  // namespace ddespec
