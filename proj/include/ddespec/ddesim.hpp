#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "models.hpp"

namespace ddespec {

using WcState = std::array<double, 3>;  ///< (W^EI, I, E)

/// Initial history on [-(tau_m + rho), 0]: a constant state.
struct HistoryInit {
    WcState state{};
    bool from_equilibrium = true;
    double perturbation = 1e-3;  ///< added to E when starting from the equilibrium

    static HistoryInit equilibrium(double perturbation = 1e-3) { return {{}, true, perturbation}; }
    static HistoryInit constant(WcState s) { return {s, false, 0.0}; }

    WcState resolve(const WilsonCowanParams& w) const {
        if (!from_equilibrium) return state;
        const auto eq = wilson_cowan_equilibrium(w);
        return {eq.WEI, eq.I, eq.E + perturbation};
    }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<WcState> states;
    std::vector<double> delay_integral;  ///< (1 / 2 rho) * integral of E(t - s) over the kernel window
    double h = 0.0;

    std::size_t size() const noexcept { return times.size(); }
};

/// Ring buffer of E samples at spacing h, long enough for the kernel window.
class DelayHistory {
  public:
    DelayHistory(double h, long lag_far, long lag_near, double initial_e)
        : h_(h), far_(lag_far), near_(lag_near), buf_(static_cast<std::size_t>(lag_far + 2), initial_e) {}

    void push(double e) {
        ++newest_;
        buf_[index(newest_)] = e;
    }

    /// Trapezoid average of E over [t_n - lag_far h, t_n - lag_near h], t_n the newest
    /// pushed sample plus `ahead` steps. Weights sum to one.
    double window_average(long ahead) const {
        const long n = newest_ + ahead;
        const long first = n - far_, last = n - near_;
        // deviations from the first sample, so a constant window is reproduced exactly
        const double base = at(first);
        double sum = 0.5 * (at(last) - base);
        for (long k = first + 1; k < last; ++k) sum += at(k) - base;
        return base + sum / static_cast<double>(far_ - near_);
    }

    double h() const noexcept { return h_; }

  private:
    std::size_t index(long k) const {
        const long m = static_cast<long>(buf_.size());
        return static_cast<std::size_t>(((k % m) + m) % m);
    }
    double at(long k) const { return buf_[index(k)]; }

    double h_;
    long far_, near_;
    std::vector<double> buf_;
    long newest_ = 0;
};

namespace detail {

inline bool is_multiple(double x, double h) {
    const double r = x / h;
    return std::abs(r - std::round(r)) <= 1e-12 * std::max(1.0, std::abs(r));
}

}  // namespace detail

/// Whether h divides rho and tau_m - rho with at least one step of pure lag.
inline bool step_aligned(double h, double rho, double tau_m) {
    return h > 0.0 && detail::is_multiple(rho, h) && detail::is_multiple(tau_m - rho, h) &&
           (tau_m - rho) / h >= 1.0 - 1e-12;
}

/// Largest aligned step not above h, searched over rho / m; NaN if none found.
inline double suggest_step(double h, double rho, double tau_m) {
    const long m0 = std::max(1L, static_cast<long>(std::ceil(rho / h - 1e-9)));
    for (long m = m0; m < m0 + 100000; ++m)
        if (step_aligned(rho / static_cast<double>(m), rho, tau_m)) return rho / static_cast<double>(m);
    return std::nan("");
}

/// rho / 32 clamped to [1e-3, 0.1], reduced until aligned.
inline double default_step(double rho, double tau_m) {
    const double h = std::clamp(rho / 32.0, 1e-3, 0.1);
    return step_aligned(h, rho, tau_m) ? h : suggest_step(h, rho, tau_m);
}

struct SimulationOptions {
    double t_end = 400.0;
    std::optional<double> h;  ///< default_step when empty
    HistoryInit history = HistoryInit::equilibrium();
    int record_stride = 1;
};

/// Classic RK4 on the nonlinear node. The kernel average uses history samples
/// only (the window ends at least one step in the past); half-step stages take
/// the mean of the two neighbouring windows.
inline Trajectory simulate(const WilsonCowanParams& w, const SimulationOptions& opt) {
    validate(w);
    if (!(w.rho > 0.0) || w.rho > w.tau_m) throw ModelError("kernel requires 0 < rho <= tau_m");
    if (!(opt.t_end > w.tau_m)) throw HorizonError("t_end must exceed tau_m");
    if (opt.record_stride < 1) throw DomainError("record stride must be positive");
    const double h = opt.h.value_or(default_step(w.rho, w.tau_m));
    if (!step_aligned(h, w.rho, w.tau_m)) {
        const double s = suggest_step(h, w.rho, w.tau_m);
        throw AlignmentError("step " + std::to_string(h) + " does not divide rho and tau_m - rho", s);
    }
    const long lag_far = std::lround((w.tau_m + w.rho) / h);
    const long lag_near = std::lround((w.tau_m - w.rho) / h);
    const WcState init = opt.history.resolve(w);
    DelayHistory hist(h, lag_far, lag_near, init[2]);

    auto rhs = [&](const WcState& s, double j) -> WcState {
        const double dw = s[1] * (s[2] - w.p) / w.tau2;
        const double di = logistic(w.WIE * s[2], w.a) - s[1];
        const double de = (logistic(w.WE * j - s[0] * s[1], w.a) - s[2]) / w.tau1;
        return {dw, di, de};
    };
    auto axpy = [](const WcState& s, double a, const WcState& k) {
        return WcState{s[0] + a * k[0], s[1] + a * k[1], s[2] + a * k[2]};
    };

    Trajectory traj;
    traj.h = h;
    const long steps = std::lround(std::ceil(opt.t_end / h - 1e-9));
    traj.times.reserve(static_cast<std::size_t>(steps / opt.record_stride + 2));
    WcState s = init;
    double j_now = hist.window_average(0);
    for (long n = 0;; ++n) {
        if (n % opt.record_stride == 0 || n == steps) {
            traj.times.push_back(static_cast<double>(n) * h);
            traj.states.push_back(s);
            traj.delay_integral.push_back(j_now);
        }
        if (n == steps) break;
        const double j_next = hist.window_average(1);
        const double j_half = 0.5 * (j_now + j_next);
        const WcState k1 = rhs(s, j_now);
        const WcState k2 = rhs(axpy(s, 0.5 * h, k1), j_half);
        const WcState k3 = rhs(axpy(s, 0.5 * h, k2), j_half);
        const WcState k4 = rhs(axpy(s, h, k3), j_next);
        for (int c = 0; c < 3; ++c) s[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        hist.push(s[2]);
        j_now = j_next;
    }
    return traj;
}

enum class TrajectoryClass { converged, oscillating, undecided };

inline std::string to_string(TrajectoryClass c) {
    switch (c) {
        case TrajectoryClass::converged: return "converged";
        case TrajectoryClass::oscillating: return "oscillating";
        case TrajectoryClass::undecided: return "undecided";
    }
    return "unknown";
}

/// Looks at E after the leading `transient_fraction` of the samples.
inline TrajectoryClass classify_trajectory(const Trajectory& traj, double transient_fraction) {
    if (!(transient_fraction > 0.0 && transient_fraction < 1.0))
        throw DomainError("transient fraction must lie in (0, 1)");
    const auto n = traj.size();
    const auto start = static_cast<std::size_t>(std::floor(transient_fraction * static_cast<double>(n)));
    if (n < 3 || start + 2 >= n) return TrajectoryClass::undecided;
    double lo = traj.states[start][2], hi = lo;
    int sign_changes = 0, prev_sign = 0;
    for (std::size_t i = start + 1; i < n; ++i) {
        const double e = traj.states[i][2];
        lo = std::min(lo, e);
        hi = std::max(hi, e);
        const double de = e - traj.states[i - 1][2];
        const int sg = de > 0.0 ? 1 : (de < 0.0 ? -1 : 0);
        if (sg != 0) {
            if (prev_sign != 0 && sg != prev_sign) ++sign_changes;
            prev_sign = sg;
        }
    }
    const double ptp = hi - lo;
    if (ptp < 1e-4) return TrajectoryClass::converged;
    if (ptp > 1e-2 && sign_changes >= 5) return TrajectoryClass::oscillating;
    return TrajectoryClass::undecided;
}

}  // namespace ddespec
