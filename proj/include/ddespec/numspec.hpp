#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "asymspec.hpp"
#include "charfn.hpp"
#include "error.hpp"
#include "models.hpp"
#include "parallel.hpp"

namespace ddespec {

struct Box {
    double re_min, re_max, im_min, im_max;

    double width() const noexcept { return re_max - re_min; }
    double height() const noexcept { return im_max - im_min; }
    Complex center() const noexcept { return {0.5 * (re_min + re_max), 0.5 * (im_min + im_max)}; }
    bool contains(Complex z) const noexcept {
        return z.real() > re_min && z.real() < re_max && z.imag() > im_min && z.imag() < im_max;
    }
};

class Region {
  public:
    enum class Shape { rect, disk };

    static Region rect(double re_min, double re_max, double im_min, double im_max) {
        if (!(re_max > re_min && im_max > im_min)) throw DomainError("rectangle must have positive area");
        Region r;
        r.shape_ = Shape::rect;
        r.box_ = {re_min, re_max, im_min, im_max};
        return r;
    }
    static Region disk(Complex center, double radius) {
        if (!(radius > 0.0)) throw DomainError("disk radius must be positive");
        Region r;
        r.shape_ = Shape::disk;
        r.center_ = center;
        r.radius_ = radius;
        r.box_ = {center.real() - radius, center.real() + radius, center.imag() - radius, center.imag() + radius};
        return r;
    }

    Shape shape() const noexcept { return shape_; }
    Complex center() const noexcept { return shape_ == Shape::disk ? center_ : box_.center(); }
    double radius() const noexcept { return radius_; }
    /// The rectangle itself, or the square circumscribing the disk.
    const Box& bounding_box() const noexcept { return box_; }

    bool contains(Complex z) const noexcept {
        return shape_ == Shape::disk ? std::abs(z - center_) < radius_ : box_.contains(z);
    }

    /// Same shape grown about its center by the factor (1 + u).
    Region expanded(double u) const {
        if (shape_ == Shape::disk) return disk(center_, radius_ * (1.0 + u));
        const Complex c = box_.center();
        const double hw = 0.5 * box_.width() * (1.0 + u), hh = 0.5 * box_.height() * (1.0 + u);
        return rect(c.real() - hw, c.real() + hw, c.imag() - hh, c.imag() + hh);
    }

  private:
    Shape shape_ = Shape::rect;
    Box box_{0, 1, 0, 1};
    Complex center_{0.0, 0.0};
    double radius_ = 0.0;
};

// ---------------------------------------------------------------------------
// Argument-principle counting

inline constexpr int kMaxPanelDepth = 14;
inline constexpr int kMaxJitters = 5;
inline constexpr double kRoundingDefect = 0.1;

struct WindingEstimate {
    Complex winding;      ///< (1 / 2 pi i) * integral of Delta'/Delta
    bool converged = true;
    int max_depth = 0;
    long evaluations = 0;
};

namespace detail {

// Adaptive Simpson (trapezoid plus one Richardson step) of g(t) = L(z(t)) z'(t)
// over a parametrized path piece.
template <typename G>
Complex adaptive_panel(G& g, double a, double b, Complex fa, Complex fm, Complex fb, double tol, int depth,
                       WindingEstimate& est) {
    const double m = 0.5 * (a + b);
    const Complex flm = g(0.5 * (a + m)), frm = g(0.5 * (m + b));
    est.evaluations += 2;
    const double h = b - a;
    const Complex whole = h / 6.0 * (fa + 4.0 * fm + fb);
    const Complex left = h / 12.0 * (fa + 4.0 * flm + fm);
    const Complex right = h / 12.0 * (fm + 4.0 * frm + fb);
    const Complex diff = left + right - whole;
    est.max_depth = std::max(est.max_depth, depth);
    if (std::abs(diff) <= 15.0 * tol || !std::isfinite(std::abs(diff))) {
        if (!std::isfinite(std::abs(diff))) est.converged = false;
        return left + right + diff / 15.0;
    }
    if (depth >= kMaxPanelDepth) {
        est.converged = false;
        return left + right + diff / 15.0;
    }
    return adaptive_panel(g, a, m, fa, flm, fm, 0.5 * tol, depth + 1, est) +
           adaptive_panel(g, m, b, fm, frm, fb, 0.5 * tol, depth + 1, est);
}

// Integral of g over [0, 1] split into `panels` initial panels.
template <typename G>
Complex integrate_path(G& g, int panels, double tol, WindingEstimate& est) {
    Complex total = 0.0;
    Complex fa = g(0.0);
    ++est.evaluations;
    for (int k = 0; k < panels; ++k) {
        const double a = static_cast<double>(k) / panels, b = static_cast<double>(k + 1) / panels;
        const Complex fm = g(0.5 * (a + b)), fb = g(b);
        est.evaluations += 2;
        total += adaptive_panel(g, a, b, fa, fm, fb, tol / panels, 0, est);
        fa = fb;
    }
    return total;
}

inline int initial_panels(const LinearDDE& sys, double length) {
    return std::max(16, static_cast<int>(std::ceil(length * std::max(1.0, sys.tau_m()))));
}

}  // namespace detail

/// One contour integral without any jitter. Throws OnZeroError when the contour
/// passes through a zero to pivot tolerance.
inline WindingEstimate winding_number(const LinearDDE& sys, const Region& region) {
    WindingEstimate est;
    const double total_tol = 1e-3 * 2.0 * std::numbers::pi;
    Complex integral = 0.0;
    if (region.shape() == Region::Shape::disk) {
        const Complex c = region.center();
        const double r = region.radius();
        for (int q = 0; q < 4; ++q) {
            const double t0 = 0.5 * std::numbers::pi * q;
            auto g = [&](double t) {
                const Complex e = std::polar(1.0, t0 + 0.5 * std::numbers::pi * t);
                return delta_log_derivative(sys, c + r * e) * Complex(0.0, 0.5 * std::numbers::pi * r) * e;
            };
            const int panels = detail::initial_panels(sys, 0.5 * std::numbers::pi * r);
            integral += detail::integrate_path(g, panels, 0.25 * total_tol, est);
        }
    } else {
        const Box& b = region.bounding_box();
        const std::array<Complex, 5> corners{Complex(b.re_min, b.im_min), Complex(b.re_max, b.im_min),
                                             Complex(b.re_max, b.im_max), Complex(b.re_min, b.im_max),
                                             Complex(b.re_min, b.im_min)};
        for (int e = 0; e < 4; ++e) {
            const Complex z0 = corners[e], dz = corners[e + 1] - corners[e];
            auto g = [&](double t) { return delta_log_derivative(sys, z0 + t * dz) * dz; };
            const int panels = detail::initial_panels(sys, std::abs(dz));
            integral += detail::integrate_path(g, panels, 0.25 * total_tol, est);
        }
    }
    est.winding = integral / Complex(0.0, 2.0 * std::numbers::pi);
    return est;
}

struct CountResult {
    int count = 0;
    double defect = 0.0;
    int jitters = 0;
    int max_depth = 0;
    Region region;  ///< contour actually used (after any jitter)
};

namespace detail {

struct CountAttempt {
    bool ok = false;
    bool on_zero = false;
    CountResult result;
};

inline CountAttempt try_count(const LinearDDE& sys, const Region& region) {
    CountAttempt a;
    a.result.region = region;
    try {
        const auto est = winding_number(sys, region);
        const double rounded = std::round(est.winding.real());
        a.result.count = static_cast<int>(rounded);
        a.result.defect = std::abs(est.winding - Complex(rounded, 0.0));
        a.result.max_depth = est.max_depth;
        a.ok = est.converged && a.result.defect < kRoundingDefect && rounded >= 0.0;
    } catch (const OnZeroError&) {
        a.on_zero = true;
    }
    return a;
}

inline double jitter_factor(std::mt19937_64& rng) {
    return std::uniform_real_distribution<double>(1e-4, 1e-3)(rng);
}

inline std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

inline constexpr std::uint64_t kDefaultSeed = 20240917;

/// Zeros of Delta inside the region, with multiplicity. On an on-contour zero or
/// an inaccurate estimate the region is grown by a seeded factor in
/// [1e-4, 1e-3] and retried, at most five times.
inline CountResult count_zeros_detailed(const LinearDDE& sys, const Region& region,
                                        std::uint64_t seed = kDefaultSeed) {
    std::mt19937_64 rng(seed);
    Region current = region;
    bool last_on_zero = false;
    for (int attempt = 0; attempt <= kMaxJitters; ++attempt) {
        auto a = detail::try_count(sys, current);
        if (a.ok) {
            a.result.jitters = attempt;
            return a.result;
        }
        last_on_zero = a.on_zero;
        current = region.expanded(detail::jitter_factor(rng));
    }
    if (last_on_zero) throw JitterExhaustedError("contour keeps hitting a zero after jitter retries");
    throw ContourAccuracyError("winding number did not round cleanly at maximum panel depth");
}

inline int count_zeros(const LinearDDE& sys, const Region& region, std::uint64_t seed = kDefaultSeed) {
    return count_zeros_detailed(sys, region, seed).count;
}

// ---------------------------------------------------------------------------
// Root finding and partition

enum class SpectralClass { strong_plus, strong_minus, pseudo_continuous, strong_critical };

inline std::string to_string(SpectralClass c) {
    switch (c) {
        case SpectralClass::strong_plus: return "strong_plus";
        case SpectralClass::strong_minus: return "strong_minus";
        case SpectralClass::pseudo_continuous: return "pseudo_continuous";
        case SpectralClass::strong_critical: return "strong_critical";
    }
    return "unknown";
}

struct Eigenvalue {
    Complex lambda;
    double residual = 0.0;  ///< |det of the scaled characteristic matrix|
    int newton_iters = 0;
    int multiplicity = 1;
};

struct SolverMetadata {
    std::uint64_t seed = kDefaultSeed;
    int max_panel_depth = 0;
    int jitters = 0;
    int boxes = 0;
    int total_count = 0;  ///< winding count of the searched (bounding) contour
};

struct SpectrumPartition {
    std::vector<Eigenvalue> eigenvalues;
    std::vector<SpectralClass> classes;
    std::vector<Complex> rescaled;
    Region region;
    std::array<int, 4> counts{0, 0, 0, 0};  ///< indexed by SpectralClass
    SolverMetadata meta;
    double epsilon = 0.0;

    int count(SpectralClass c) const { return counts[static_cast<std::size_t>(c)]; }
    std::size_t size() const noexcept { return eigenvalues.size(); }
    /// Number of roots counting multiplicity.
    int total_multiplicity() const {
        int m = 0;
        for (const auto& e : eigenvalues) m += e.multiplicity;
        return m;
    }
};

inline double residual_scale(const LinearDDE& sys, Complex lambda) {
    return std::pow(1.0 + std::abs(lambda), static_cast<double>(sys.n()));
}

inline constexpr double kResidualTol = 1e-9;
inline constexpr int kBoxCapacity = 4;

struct NewtonResult {
    Complex z;
    int iterations = 0;
    bool converged = false;
};

/// Newton on Delta with step -Delta/Delta' = -1/L, confined to a neighbourhood
/// of `box`.
inline NewtonResult newton_refine(const LinearDDE& sys, Complex z, const Box& box, int max_iter = 60) {
    NewtonResult r{z, 0, false};
    const double margin = std::max(box.width(), box.height());
    for (int it = 0; it < max_iter; ++it) {
        r.iterations = it + 1;
        Complex step;
        try {
            step = -1.0 / delta_log_derivative(sys, r.z);
        } catch (const OnZeroError&) {
            r.converged = true;
            return r;
        }
        if (!std::isfinite(std::abs(step))) return r;
        r.z += step;
        if (r.z.real() < box.re_min - margin || r.z.real() > box.re_max + margin || r.z.imag() < box.im_min - margin ||
            r.z.imag() > box.im_max + margin)
            return r;
        const double res = std::abs(delta_scaled(sys, r.z));
        if (std::abs(step) < 1e-12 || res < 1e-12 * residual_scale(sys, r.z)) {
            r.converged = true;
            return r;
        }
    }
    r.converged = std::abs(delta_scaled(sys, r.z)) < kResidualTol * residual_scale(sys, r.z);
    return r;
}

namespace detail {

struct BoxTask {
    Box box;
    int count;
    std::uint64_t id;
};

struct BoxOutcome {
    std::vector<Eigenvalue> roots;
    std::vector<BoxTask> children;
    int max_depth = 0;
    int jitters = 0;
};

inline std::vector<Eigenvalue> seed_box(const LinearDDE& sys, const Box& box, int grid) {
    std::vector<Eigenvalue> found;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            const Complex z0(box.re_min + box.width() * (i + 0.5) / grid, box.im_min + box.height() * (j + 0.5) / grid);
            const auto nr = newton_refine(sys, z0, box);
            if (!nr.converged || !box.contains(nr.z)) continue;
            const double res = std::abs(delta_scaled(sys, nr.z));
            if (!(res < kResidualTol * residual_scale(sys, nr.z))) continue;
            bool dup = false;
            for (const auto& e : found)
                if (std::abs(e.lambda - nr.z) < 1e-8) dup = true;
            if (!dup) found.push_back({nr.z, res, nr.iterations, 1});
        }
    return found;
}

inline BoxOutcome process_box(const LinearDDE& sys, const BoxTask& task) {
    BoxOutcome out;
    const Box& box = task.box;
    if (task.count <= kBoxCapacity) {
        for (int grid : {3, 5}) {
            auto roots = seed_box(sys, box, grid);
            if (static_cast<int>(roots.size()) == task.count) {
                out.roots = std::move(roots);
                return out;
            }
        }
    }
    const double size = std::max(box.width(), box.height());
    if (size < 1e-7 * (1.0 + std::abs(box.center()))) {
        // Box has shrunk onto a cluster: a single distinct root carries the full count.
        auto roots = seed_box(sys, box, 5);
        if (roots.size() == 1) {
            roots[0].multiplicity = task.count;
            out.roots = std::move(roots);
            return out;
        }
        throw MissingRootError("found fewer roots than the winding count", box.re_min, box.re_max, box.im_min,
                               box.im_max);
    }
    // Split the longer side off-center; the fraction is reseeded when a child
    // contour fails or the counts do not add up.
    std::mt19937_64 rng(task.id);
    const bool split_re = box.width() >= box.height();
    for (int attempt = 0; attempt <= kMaxJitters; ++attempt) {
        const double f = attempt == 0 ? 0.5 + 0.0123 : std::uniform_real_distribution<double>(0.4, 0.6)(rng);
        Box lo = box, hi = box;
        if (split_re) {
            lo.re_max = hi.re_min = box.re_min + f * box.width();
        } else {
            lo.im_max = hi.im_min = box.im_min + f * box.height();
        }
        const auto a = try_count(sys, Region::rect(lo.re_min, lo.re_max, lo.im_min, lo.im_max));
        if (!a.ok) continue;
        const int rest = task.count - a.result.count;
        if (rest < 0) continue;
        const auto b = try_count(sys, Region::rect(hi.re_min, hi.re_max, hi.im_min, hi.im_max));
        if (!b.ok || b.result.count != rest) continue;
        out.max_depth = std::max(a.result.max_depth, b.result.max_depth);
        out.jitters = attempt;
        if (a.result.count > 0) out.children.push_back({lo, a.result.count, mix(task.id ^ 1)});
        if (rest > 0) out.children.push_back({hi, rest, mix(task.id ^ 2)});
        return out;
    }
    throw ContourAccuracyError("box subdivision failed to conserve the winding count");
}

}  // namespace detail

/// Classification against the strong sets: within 1e-8 of A_0 is critical,
/// within r of A_+ / A_- is strong, everything else pseudo-continuous.
inline SpectralClass classify(const StrongSets& s, Complex lambda) {
    for (const auto& a : s.a_zero)
        if (std::abs(lambda - a) < 1e-8) return SpectralClass::strong_critical;
    for (const auto& a : s.a_plus)
        if (std::abs(lambda - a) < s.r) return SpectralClass::strong_plus;
    for (const auto& a : s.a_minus)
        if (std::abs(lambda - a) < s.r) return SpectralClass::strong_minus;
    return SpectralClass::pseudo_continuous;
}

struct FindOptions {
    std::uint64_t seed = kDefaultSeed;
    int jobs = 1;
};

/// All zeros of Delta in the region, partitioned into spectral classes.
inline SpectrumPartition find_eigenvalues(const LinearDDE& sys, const Region& region, const FindOptions& opt = {}) {
    const Box& bb = region.bounding_box();
    const Region square = Region::rect(bb.re_min, bb.re_max, bb.im_min, bb.im_max);
    const CountResult top = count_zeros_detailed(sys, square, opt.seed);
    const Box searched = top.region.bounding_box();

    SpectrumPartition part;
    part.region = region;
    part.epsilon = sys.epsilon();
    part.meta.seed = opt.seed;
    part.meta.jitters = top.jitters;
    part.meta.max_panel_depth = top.max_depth;
    part.meta.total_count = top.count;

    std::vector<Eigenvalue> roots;
    std::vector<detail::BoxTask> level;
    if (top.count > 0) level.push_back({searched, top.count, detail::mix(opt.seed)});
    while (!level.empty()) {
        part.meta.boxes += static_cast<int>(level.size());
        auto outcomes = parallel_map(level.size(), opt.jobs, [&](std::size_t i) { return detail::process_box(sys, level[i]); });
        std::vector<detail::BoxTask> next;
        for (auto& o : outcomes) {
            part.meta.max_panel_depth = std::max(part.meta.max_panel_depth, o.max_depth);
            part.meta.jitters += o.jitters;
            roots.insert(roots.end(), o.roots.begin(), o.roots.end());
            next.insert(next.end(), o.children.begin(), o.children.end());
        }
        level = std::move(next);
    }

    std::erase_if(roots, [&](const Eigenvalue& e) { return !region.contains(e.lambda); });
    std::sort(roots.begin(), roots.end(), [](const Eigenvalue& a, const Eigenvalue& b) {
        return a.lambda.imag() < b.lambda.imag() || (a.lambda.imag() == b.lambda.imag() && a.lambda.real() < b.lambda.real());
    });

    const StrongSets strong = strong_sets(sys);
    for (const auto& e : roots) {
        const SpectralClass c = classify(strong, e.lambda);
        part.eigenvalues.push_back(e);
        part.classes.push_back(c);
        part.rescaled.emplace_back(e.lambda.real() / part.epsilon, e.lambda.imag());
        part.counts[static_cast<std::size_t>(c)] += e.multiplicity;
    }
    return part;
}

namespace detail {

inline double segment_distance(Complex p, Complex a, Complex b) {
    const Complex ab = b - a;
    const double len2 = std::norm(ab);
    double t = len2 > 0.0 ? ((p - a) * std::conj(ab)).real() / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(p - a - t * ab);
}

}  // namespace detail

/// Largest distance, in the rescaled plane, from a pseudo-continuous eigenvalue
/// S(lambda) to the nearest point gamma_l(omega) + i omega of the sampled curves
/// (linear between grid points). Eigenvalues within `exclusion` of a recorded
/// singularity, or outside the sampled window, are skipped. nullopt when no
/// eigenvalue qualifies.
inline std::optional<double> pseudo_distance(const SpectrumPartition& part, const SpectralCurveSet& curves,
                                             double exclusion = 0.05) {
    const auto& grid = curves.omega_grid;
    if (grid.size() < 2) return std::nullopt;
    std::optional<double> worst;
    for (std::size_t k = 0; k < part.size(); ++k) {
        if (part.classes[k] != SpectralClass::pseudo_continuous) continue;
        const Complex p = part.rescaled[k];
        const double w = p.imag();
        if (w < grid.front() || w > grid.back()) continue;
        bool near = false;
        for (const auto& s : curves.singularities)
            if (std::abs(w - s.omega) < exclusion) near = true;
        if (near) continue;

        double best = kInf;
        auto visit = [&](std::size_t i) {
            for (const auto& c : curves.curves) {
                if (!std::isfinite(c[i]) || !std::isfinite(c[i + 1])) continue;
                best = std::min(best, detail::segment_distance(p, {c[i], grid[i]}, {c[i + 1], grid[i + 1]}));
            }
        };
        const auto start = static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), w) - grid.begin());
        // segments ending at or after w, then those before; stop once the
        // frequency gap alone exceeds the best distance
        for (std::size_t i = start == 0 ? 0 : start - 1; i + 1 < grid.size() && grid[i] - w <= best; ++i) visit(i);
        for (std::size_t i = start < 2 ? 0 : start - 1; i-- > 0 && w - grid[i + 1] <= best;) visit(i);
        if (!std::isfinite(best)) continue;
        worst = std::max(worst.value_or(0.0), best);
    }
    return worst;
}

}  // namespace ddespec
