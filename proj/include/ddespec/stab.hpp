#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "asymspec.hpp"
#include "error.hpp"
#include "models.hpp"
#include "numspec.hpp"
#include "parallel.hpp"

namespace ddespec {

enum class Verdict { stable, unstable, marginal };
enum class VerdictMethod { asymptotic, numeric };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::stable: return "stable";
        case Verdict::unstable: return "unstable";
        case Verdict::marginal: return "marginal";
    }
    return "unknown";
}

inline std::string to_string(VerdictMethod m) { return m == VerdictMethod::asymptotic ? "asymptotic" : "numeric"; }

inline constexpr double kMarginTol = 1e-6;

struct StabilityVerdict {
    Verdict verdict = Verdict::marginal;
    double gamma_star = 0.0;
    double omega_star = 0.0;
    std::optional<Complex> a_plus_witness;
    VerdictMethod method = VerdictMethod::asymptotic;
};

inline Verdict verdict_from_gamma(double gamma_star, bool strong_unstable) {
    if (strong_unstable || gamma_star > kMarginTol) return Verdict::unstable;
    if (gamma_star < -kMarginTol) return Verdict::stable;
    return Verdict::marginal;
}

/// Frequency window for verdicts: 4 pi / rho + spectral radius of A + 10.
inline double default_omega_max(const LinearDDE& sys) {
    double radius = 0.0;
    for (const auto& l : eigenvalues(sys.A())) radius = std::max(radius, std::abs(l));
    return 4.0 * std::numbers::pi / sys.rho() + radius + 10.0;
}

/// Large-delay verdict: A_+ nonempty is unstable, otherwise the sign of gamma*.
inline StabilityVerdict verdict_asymptotic(const LinearDDE& sys, std::optional<double> omega_max = std::nullopt) {
    StabilityVerdict v;
    v.method = VerdictMethod::asymptotic;
    const auto strong = strong_sets(sys);
    if (!strong.a_plus.empty()) v.a_plus_witness = strong.a_plus.front();
    const auto g = gamma_star(sys, omega_max.value_or(default_omega_max(sys)));
    v.gamma_star = g.gamma_star;
    v.omega_star = g.omega_star;
    v.verdict = verdict_from_gamma(v.gamma_star, v.a_plus_witness.has_value());
    return v;
}

/// Finite-delay verdict from the computed spectrum; gamma_star reports
/// tau_m * max Re lambda over the region.
inline StabilityVerdict verdict_numeric(const LinearDDE& sys, const Region& region, const FindOptions& opt = {}) {
    const auto part = find_eigenvalues(sys, region, opt);
    StabilityVerdict v;
    v.method = VerdictMethod::numeric;
    double best = -kInf;
    for (std::size_t i = 0; i < part.size(); ++i) {
        const Complex l = part.eigenvalues[i].lambda;
        if (l.real() > best) {
            best = l.real();
            v.omega_star = l.imag();
        }
        if (part.classes[i] == SpectralClass::strong_plus && !v.a_plus_witness) v.a_plus_witness = l;
    }
    v.gamma_star = best * sys.tau_m();
    v.verdict = verdict_from_gamma(v.gamma_star, false);
    return v;
}

// ---------------------------------------------------------------------------
// Parameter scans

struct ScanAxis {
    std::string name;
    double min = 0.0;
    double max = 1.0;
    int steps = 2;

    double value(int i) const {
        if (i == steps - 1) return max;
        return min + (max - min) * static_cast<double>(i) / (steps - 1);
    }
};

struct ScanPoint {
    std::vector<double> coords;  ///< one value per axis, in axis order
    StabilityVerdict verdict;
};

inline std::string describe_point(const std::vector<ScanAxis>& axes, const std::vector<double>& coords) {
    std::string s;
    for (std::size_t a = 0; a < axes.size(); ++a) {
        if (a) s += ", ";
        s += axes[a].name + "=" + std::to_string(coords[a]);
    }
    return s;
}

/// verdict_asymptotic on every lattice point. Points are emitted to `sink` in
/// axis-major order (first axis slowest), one block of rows at a time, so the
/// full grid is never held in memory.
inline void scan(const std::string& model, const ParamMap& fixed, const std::vector<ScanAxis>& axes,
                 const std::function<void(const ScanPoint&)>& sink, int jobs = 1) {
    if (axes.empty() || axes.size() > 3) throw DomainError("scan needs one to three axes");
    const ModelSpec& spec = find_model(model);
    ParamMap probe = fixed;
    std::size_t total = 1;
    for (const auto& ax : axes) {
        if (ax.steps < 2) throw DomainError("axis " + ax.name + " needs at least 2 steps");
        if (fixed.contains(ax.name)) throw ConfigError("parameter " + ax.name + " is both fixed and scanned");
        probe[ax.name] = ax.min;
        total *= static_cast<std::size_t>(ax.steps);
    }
    spec.resolve(probe);  // unknown names fail before any computation

    auto coords_of = [&](std::size_t flat) {
        std::vector<double> c(axes.size());
        for (std::size_t a = axes.size(); a-- > 0;) {
            const auto steps = static_cast<std::size_t>(axes[a].steps);
            c[a] = axes[a].value(static_cast<int>(flat % steps));
            flat /= steps;
        }
        return c;
    };
    const std::size_t block = static_cast<std::size_t>(axes.back().steps) * (axes.size() > 1 ? 4 : 1);
    for (std::size_t start = 0; start < total; start += block) {
        const std::size_t count = std::min(block, total - start);
        auto rows = parallel_map(count, jobs, [&](std::size_t i) {
            ScanPoint pt;
            pt.coords = coords_of(start + i);
            ParamMap prm = fixed;
            for (std::size_t a = 0; a < axes.size(); ++a) prm[axes[a].name] = pt.coords[a];
            try {
                pt.verdict = verdict_asymptotic(spec.build(prm));
            } catch (const ConfigError& e) {
                throw ConfigError(std::string(e.what()) + " at lattice point (" + describe_point(axes, pt.coords) + ")");
            }
            return pt;
        });
        for (const auto& r : rows) sink(r);
    }
}

inline std::vector<ScanPoint> scan(const std::string& model, const ParamMap& fixed, const std::vector<ScanAxis>& axes,
                                   int jobs = 1) {
    std::vector<ScanPoint> out;
    scan(model, fixed, axes, [&](const ScanPoint& p) { out.push_back(p); }, jobs);
    return out;
}

// ---------------------------------------------------------------------------
// Boundary tracing

struct BoundaryPoint {
    ParamMap fixed;
    std::string axis;
    double point = 0.0;         ///< axis value at the located sign change
    double stable_side = 0.0;   ///< final bracket end with gamma* < 0
    double unstable_side = 0.0; ///< final bracket end with gamma* > 0
    double gamma_star = 0.0;    ///< gamma* at `point`
    int iterations = 0;

    ParamMap params() const {
        ParamMap p = fixed;
        p[axis] = point;
        return p;
    }
};

inline constexpr int kMaxBisections = 60;

/// Bisection on one parameter for a sign change of gamma*, the maximum of the
/// spectral curves. The bracket ends must have gamma* of opposite signs, each
/// outside the marginal band.
inline BoundaryPoint trace_boundary(const std::string& model, const ParamMap& fixed, const std::string& axis,
                                    double lo, double hi) {
    const ModelSpec& spec = find_model(model);
    if (fixed.contains(axis)) throw ConfigError("parameter " + axis + " is both fixed and traced");
    auto g_at = [&](double x) {
        ParamMap prm = fixed;
        prm[axis] = x;
        const auto sys = spec.build(prm);
        return gamma_star(sys, default_omega_max(sys)).gamma_star;
    };
    double g_lo = g_at(lo), g_hi = g_at(hi);
    if (std::abs(g_lo) <= kMarginTol || std::abs(g_hi) <= kMarginTol)
        throw BracketError("a bracket end is already marginal");
    if ((g_lo < 0.0) == (g_hi < 0.0)) throw BracketError("bracket ends have the same verdict");

    BoundaryPoint bp;
    bp.fixed = fixed;
    bp.axis = axis;
    double a = lo, b = hi, ga = g_lo;
    double mid = 0.5 * (a + b), gm = 0.0;
    for (int it = 1; it <= kMaxBisections; ++it) {
        mid = 0.5 * (a + b);
        gm = g_at(mid);
        bp.iterations = it;
        if (gm == 0.0) break;
        if ((gm < 0.0) == (ga < 0.0)) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
        if (std::abs(b - a) < 1e-10 * std::max(1.0, std::abs(mid))) {
            mid = 0.5 * (a + b);
            gm = g_at(mid);
            break;
        }
    }
    bp.point = mid;
    bp.gamma_star = gm;
    const bool a_stable = ga < 0.0;
    bp.stable_side = a_stable ? a : b;
    bp.unstable_side = a_stable ? b : a;
    return bp;
}

}  // namespace ddespec
