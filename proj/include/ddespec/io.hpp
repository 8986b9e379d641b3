#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "asymspec.hpp"
#include "ddesim.hpp"
#include "error.hpp"
#include "models.hpp"
#include "numspec.hpp"
#include "stab.hpp"

namespace ddespec {

using Json = nlohmann::ordered_json;

/// 17 significant digits; infinities as "inf" / "-inf".
inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// JSON has no infinities; they become the strings used in CSV.
inline Json json_number(double x) {
    if (std::isfinite(x)) return x;
    return fmt(x);
}

// ---------------------------------------------------------------------------
// Model parameter maps

inline Json model_to_json(const std::string& model, const ParamMap& params) {
    Json j;
    j["model"] = model;
    j["params"] = Json::object();
    for (const auto& [k, v] : params) j["params"][k] = v;
    return j;
}

struct ModelConfig {
    std::string model;
    ParamMap params;
};

inline ModelConfig model_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("model") || !j["model"].is_string())
        throw ConfigError("model JSON needs a string field \"model\"");
    ModelConfig c{j["model"].get<std::string>(), {}};
    if (j.contains("params")) {
        if (!j["params"].is_object()) throw ConfigError("\"params\" must be an object");
        for (const auto& [k, v] : j["params"].items()) {
            if (!v.is_number()) throw ConfigError("parameter " + k + " must be a number");
            c.params[k] = v.get<double>();
        }
    }
    find_model(c.model).resolve(c.params);
    return c;
}

// ---------------------------------------------------------------------------
// Spectral curves

inline void write_curves_csv(std::ostream& os, const SpectralCurveSet& set) {
    os << "omega";
    for (std::size_t l = 1; l <= set.d; ++l) os << ",gamma_" << l;
    for (std::size_t l = 1; l <= set.d; ++l) os << ",phi_" << l;
    os << '\n';
    for (std::size_t i = 0; i < set.size(); ++i) {
        os << fmt(set.omega_grid[i]);
        for (const auto& c : set.curves) os << ',' << fmt(c[i]);
        for (const auto& p : set.phases) os << ',' << fmt(p[i]);
        os << '\n';
    }
}

inline Json singularities_to_json(const SpectralCurveSet& set) {
    Json arr = Json::array();
    for (const auto& s : set.singularities) arr.push_back({{"omega", s.omega}, {"kind", to_string(s.kind)}});
    return arr;
}

// ---------------------------------------------------------------------------
// Spectra

inline void write_spectrum_csv(std::ostream& os, const SpectrumPartition& part) {
    os << "re,im,re_rescaled,im_rescaled,class,residual\n";
    for (std::size_t i = 0; i < part.size(); ++i) {
        const auto& e = part.eigenvalues[i];
        for (int m = 0; m < e.multiplicity; ++m)
            os << fmt(e.lambda.real()) << ',' << fmt(e.lambda.imag()) << ',' << fmt(part.rescaled[i].real()) << ','
               << fmt(part.rescaled[i].imag()) << ',' << to_string(part.classes[i]) << ',' << fmt(e.residual) << '\n';
    }
}

inline Json region_to_json(const Region& r) {
    if (r.shape() == Region::Shape::disk)
        return {{"shape", "disk"}, {"center", {r.center().real(), r.center().imag()}}, {"radius", r.radius()}};
    const Box& b = r.bounding_box();
    return {{"shape", "rect"}, {"re_min", b.re_min}, {"re_max", b.re_max}, {"im_min", b.im_min}, {"im_max", b.im_max}};
}

inline Json spectrum_to_json(const SpectrumPartition& part) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < part.size(); ++i) {
        const auto& e = part.eigenvalues[i];
        rows.push_back({{"re", e.lambda.real()},
                        {"im", e.lambda.imag()},
                        {"re_rescaled", part.rescaled[i].real()},
                        {"im_rescaled", part.rescaled[i].imag()},
                        {"class", to_string(part.classes[i])},
                        {"residual", e.residual},
                        {"newton_iters", e.newton_iters},
                        {"multiplicity", e.multiplicity}});
    }
    Json counts = Json::object();
    for (auto c : {SpectralClass::strong_plus, SpectralClass::strong_minus, SpectralClass::pseudo_continuous,
                   SpectralClass::strong_critical})
        counts[to_string(c)] = part.count(c);
    return {{"region", region_to_json(part.region)},
            {"epsilon", part.epsilon},
            {"eigenvalues", rows},
            {"counts", counts},
            {"metadata",
             {{"seed", part.meta.seed},
              {"max_panel_depth", part.meta.max_panel_depth},
              {"jitters", part.meta.jitters},
              {"boxes", part.meta.boxes},
              {"winding_count", part.meta.total_count}}}};
}

// ---------------------------------------------------------------------------
// Scans, boundaries, trajectories

inline void write_scan_header(std::ostream& os, const std::vector<ScanAxis>& axes) {
    for (const auto& a : axes) os << a.name << ',';
    os << "gamma_star,omega_star,verdict\n";
}

inline void write_scan_row(std::ostream& os, const ScanPoint& p) {
    for (double c : p.coords) os << fmt(c) << ',';
    os << fmt(p.verdict.gamma_star) << ',' << fmt(p.verdict.omega_star) << ',' << to_string(p.verdict.verdict) << '\n';
}

inline Json boundary_to_json(const BoundaryPoint& bp) {
    Json fixed = Json::object();
    for (const auto& [k, v] : bp.fixed) fixed[k] = v;
    return {{"fixed", fixed},
            {"axis", bp.axis},
            {"point", bp.point},
            {"bracket", {{"stable", bp.stable_side}, {"unstable", bp.unstable_side}}},
            {"gamma_star", bp.gamma_star},
            {"iterations", bp.iterations}};
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
    os << "t,W_EI,I,E,delay_integral\n";
    for (std::size_t i = 0; i < t.size(); ++i)
        os << fmt(t.times[i]) << ',' << fmt(t.states[i][0]) << ',' << fmt(t.states[i][1]) << ','
           << fmt(t.states[i][2]) << ',' << fmt(t.delay_integral[i]) << '\n';
}

}  // namespace ddespec
