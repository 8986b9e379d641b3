#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"
#include "matrix.hpp"

namespace ddespec {

using ParamMap = std::map<std::string, double>;

/// du/dt = A u(t) + B (1/2rho) \int_{tau_m-rho}^{tau_m+rho} u(t-s) ds,
/// with B = [[0, 0], [0, Bbar]] and Bbar (d x d) invertible.
class LinearDDE {
  public:
    LinearDDE(CMatrix a, const CMatrix& bbar, double rho, double tau_m)
        : a_(std::move(a)), rho_(rho), tau_m_(tau_m) {
        if (!a_.is_square()) throw DimensionError("A must be square");
        if (!bbar.is_square() || bbar.rows() == 0 || bbar.rows() > a_.rows())
            throw DimensionError("Bbar must be square with 1 <= d <= n");
        if (!a_.is_real() || !bbar.is_real()) throw ModelError("A and Bbar must be real");
        if (!(std::abs(det(bbar)) > 1e-12)) throw ModelError("Bbar must be invertible (not a DDE)");
        if (!(rho > 0.0)) throw ModelError("kernel half-width rho must be positive");
        if (!(tau_m > 0.0)) throw ModelError("mean delay tau_m must be positive");
        if (rho > tau_m) throw ModelError("kernel is ill-posed: rho must not exceed tau_m");
        d_ = bbar.rows();
        const std::size_t n = a_.rows();
        b_ = CMatrix(n, n);
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = 0; j < d_; ++j) b_(n - d_ + i, n - d_ + j) = bbar(i, j);
    }

    std::size_t n() const noexcept { return a_.rows(); }
    std::size_t d() const noexcept { return d_; }
    double rho() const noexcept { return rho_; }
    double tau_m() const noexcept { return tau_m_; }
    double epsilon() const noexcept { return 1.0 / tau_m_; }

    const CMatrix& A() const noexcept { return a_; }
    const CMatrix& B() const noexcept { return b_; }

    CMatrix A1() const { return a_.block(0, 0, n() - d_, n() - d_); }
    CMatrix A2() const { return a_.block(0, n() - d_, n() - d_, d_); }
    CMatrix A3() const { return a_.block(n() - d_, 0, d_, n() - d_); }
    CMatrix A4() const { return a_.block(n() - d_, n() - d_, d_, d_); }
    CMatrix Bbar() const { return b_.block(n() - d_, n() - d_, d_, d_); }

    /// Undelayed and delayed subsystems do not interact (A2 = 0 or A3 = 0).
    bool decoupled() const { return d_ == n() || A2().is_zero() || A3().is_zero(); }

  private:
    CMatrix a_;
    CMatrix b_;
    std::size_t d_ = 0;
    double rho_;
    double tau_m_;
};

inline LinearDDE build_example1(double alpha, double beta, double rho, double tau_m) {
    if (beta == 0.0) throw ModelError("beta = 0 gives an ODE, not a DDE");
    return LinearDDE(CMatrix{{alpha}}, CMatrix{{beta}}, rho, tau_m);
}

inline LinearDDE build_example2(double alpha, double rho, double tau_m) {
    return LinearDDE(CMatrix{{alpha, 0.5}, {2.0, 0.0}}, CMatrix{{1.0}}, rho, tau_m);
}

inline LinearDDE build_example3(double alpha, double beta, double rho, double tau_m) {
    return LinearDDE(CMatrix{{alpha, beta}, {-beta, alpha}}, CMatrix::identity(2), rho, tau_m);
}

// ---------------------------------------------------------------------------
// Wilson-Cowan node with homeostatic inhibitory plasticity.

struct WilsonCowanParams {
    double p = 0.2;     ///< homeostatic set-point, in (0, 1)
    double a = 5.0;     ///< sigmoid steepness
    double tau1 = 1.0;  ///< excitatory timescale ratio
    double tau2 = 5.0;  ///< plasticity timescale ratio
    double WE = 2.0;
    double WIE = 4.0;
    double rho = 2.0;
    double tau_m = 40.0;
};

inline double logistic(double x, double a) { return 1.0 / (1.0 + std::exp(-a * x)); }
inline double logistic_inverse(double p, double a) { return std::log(p / (1.0 - p)) / a; }
inline double logistic_slope(double x, double a) {
    const double f = logistic(x, a);
    return a * f * (1.0 - f);
}

/// Equilibrium and the scalar coefficients of the linearized characteristic
/// polynomial lambda^3 + p2 lambda^2 + p1 lambda + p0 - q lambda (lambda + 1) e sinhc.
struct WilsonCowanEquilibrium {
    double E = 0.0;
    double I = 0.0;
    double WEI = 0.0;
    double slope_E = 0.0;  ///< phi'(phi^{-1}(p)) = a p (1 - p)
    double slope_I = 0.0;  ///< phi'(W^IE p)
    double p0 = 0.0, p1 = 0.0, p2 = 0.0, q = 0.0;
    bool valid = true;  ///< false when W^EI* <= 0
};

inline void validate(const WilsonCowanParams& w) {
    if (!(w.p > 0.0 && w.p < 1.0)) throw DomainError("set-point p must lie in (0, 1)");
    if (!(w.a > 0.0)) throw DomainError("sigmoid steepness a must be positive");
    if (!(w.tau1 > 0.0 && w.tau2 > 0.0)) throw DomainError("timescales must be positive");
    if (!(w.WE > 0.0 && w.WIE > 0.0)) throw DomainError("synaptic weights must be positive");
}

inline WilsonCowanEquilibrium wilson_cowan_equilibrium(const WilsonCowanParams& w) {
    validate(w);
    WilsonCowanEquilibrium eq;
    eq.E = w.p;
    eq.I = logistic(w.WIE * w.p, w.a);
    eq.WEI = (w.WE * w.p - logistic_inverse(w.p, w.a)) / eq.I;
    eq.slope_E = w.a * w.p * (1.0 - w.p);
    eq.slope_I = logistic_slope(w.WIE * w.p, w.a);
    eq.p2 = 1.0 + 1.0 / w.tau1;
    eq.p0 = eq.I * eq.I * eq.slope_E / (w.tau1 * w.tau2);
    eq.p1 = 1.0 / w.tau1 + eq.WEI * w.WIE * eq.slope_E * eq.slope_I / w.tau1 + eq.p0;
    eq.q = w.WE * eq.slope_E / w.tau1;
    eq.valid = eq.WEI > 0.0;
    return eq;
}

/// Linearization about the equilibrium in coordinates (W^EI, I, E); only E is delayed.
/// The delayed coefficient is q = W^E phi'(phi^{-1}(p)) / tau1.
inline LinearDDE build_wilson_cowan(const WilsonCowanParams& w) {
    const auto eq = wilson_cowan_equilibrium(w);
    CMatrix a(3, 3);
    a(0, 2) = eq.I / w.tau2;
    a(1, 1) = -1.0;
    a(1, 2) = w.WIE * eq.slope_I;
    a(2, 0) = -eq.slope_E * eq.I / w.tau1;
    a(2, 1) = -eq.slope_E * eq.WEI / w.tau1;
    a(2, 2) = -1.0 / w.tau1;
    return LinearDDE(std::move(a), CMatrix{{eq.q}}, w.rho, w.tau_m);
}

// ---------------------------------------------------------------------------
// Registry

struct ModelSpec {
    std::string name;
    std::vector<std::pair<std::string, double>> defaults;
    std::function<LinearDDE(const ParamMap&)> builder;

    /// Defaults overlaid with `overrides`; unknown names are rejected.
    ParamMap resolve(const ParamMap& overrides) const {
        ParamMap out;
        for (const auto& [k, v] : defaults) out[k] = v;
        for (const auto& [k, v] : overrides) {
            if (!out.contains(k))
                throw ConfigError("unknown parameter '" + k + "' for model " + name);
            out[k] = v;
        }
        return out;
    }

    LinearDDE build(const ParamMap& overrides = {}) const { return builder(resolve(overrides)); }
};

inline WilsonCowanParams wilson_cowan_params(const ParamMap& m) {
    WilsonCowanParams w;
    w.p = m.at("p");
    w.a = m.at("a");
    w.tau1 = m.at("tau1");
    w.tau2 = m.at("tau2");
    w.WE = m.at("WE");
    w.WIE = m.at("WIE");
    w.rho = m.at("rho");
    w.tau_m = m.at("tau_m");
    return w;
}

inline ParamMap to_param_map(const WilsonCowanParams& w) {
    return {{"p", w.p},   {"a", w.a},     {"tau1", w.tau1}, {"tau2", w.tau2},
            {"WE", w.WE}, {"WIE", w.WIE}, {"rho", w.rho},   {"tau_m", w.tau_m}};
}

inline const std::vector<ModelSpec>& model_registry() {
    static const std::vector<ModelSpec> registry = {
        {"example1",
         {{"alpha", 2.0}, {"beta", 1.0}, {"rho", 0.5}, {"tau_m", 20.0}},
         [](const ParamMap& m) {
             return build_example1(m.at("alpha"), m.at("beta"), m.at("rho"), m.at("tau_m"));
         }},
        {"example2",
         {{"alpha", 2.0}, {"rho", 2.0}, {"tau_m", 20.0}},
         [](const ParamMap& m) { return build_example2(m.at("alpha"), m.at("rho"), m.at("tau_m")); }},
        {"example3",
         {{"alpha", 2.0}, {"beta", 1.0}, {"rho", 0.5}, {"tau_m", 20.0}},
         [](const ParamMap& m) {
             return build_example3(m.at("alpha"), m.at("beta"), m.at("rho"), m.at("tau_m"));
         }},
        {"wilson-cowan",
         {{"p", 0.2},
          {"a", 5.0},
          {"tau1", 1.0},
          {"tau2", 5.0},
          {"WE", 2.0},
          {"WIE", 4.0},
          {"rho", 2.0},
          {"tau_m", 40.0}},
         [](const ParamMap& m) { return build_wilson_cowan(wilson_cowan_params(m)); }},
    };
    return registry;
}

inline const ModelSpec& find_model(const std::string& name) {
    for (const auto& spec : model_registry())
        if (spec.name == name) return spec;
    throw ConfigError("unknown model '" + name + "'");
}

}  // namespace ddespec
