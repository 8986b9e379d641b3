#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asymspec.hpp"
#include "ddesim.hpp"
#include "error.hpp"
#include "io.hpp"
#include "models.hpp"
#include "numspec.hpp"
#include "stab.hpp"

namespace ddespec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitAlignment = 4;

inline constexpr const char* kModelNote =
    "Note: for wilson-cowan the delayed coefficient is Bbar = +W^E phi'(phi^-1(p)) / tau1 (the scalar q of the\n"
    "curve formula), and the delay factor is e^{-lambda tau_m} throughout.";

inline double parse_number(const std::string& s, const std::string& what) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw ConfigError("bad number '" + s + "' in " + what);
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline ParamMap parse_assignments(const std::vector<std::string>& items) {
    ParamMap m;
    for (const auto& it : items) {
        const auto eq = it.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + it + "'");
        m[it.substr(0, eq)] = parse_number(it.substr(eq + 1), it);
    }
    return m;
}

/// disk:cx,cy,R or rect:re_min,re_max,im_min,im_max
inline Region parse_region(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw ConfigError("region must look like disk:cx,cy,R or rect:a,b,c,d");
    const std::string kind = s.substr(0, colon);
    std::vector<double> v;
    for (const auto& part : split(s.substr(colon + 1), ',')) v.push_back(parse_number(part, "--region"));
    if (kind == "disk" && v.size() == 3) return Region::disk({v[0], v[1]}, v[2]);
    if (kind == "rect" && v.size() == 4) return Region::rect(v[0], v[1], v[2], v[3]);
    throw ConfigError("region must look like disk:cx,cy,R or rect:a,b,c,d");
}

/// name:min:max[:steps]
inline ScanAxis parse_axis(const std::string& s, int default_steps) {
    const auto f = split(s, ':');
    if (f.size() < 3 || f.size() > 4 || f[0].empty()) throw ConfigError("axis must look like name:min:max[:steps]");
    ScanAxis a{f[0], parse_number(f[1], "--axis"), parse_number(f[2], "--axis"), default_steps};
    if (f.size() == 4) a.steps = static_cast<int>(parse_number(f[3], "--axis"));
    return a;
}

inline std::uint64_t effective_seed(std::uint64_t flag_seed) {
    if (const char* env = std::getenv("DDE_SPECTRA_SEED"); env && *env) {
        char* end = nullptr;
        const auto v = std::strtoull(env, &end, 10);
        if (*end != '\0') throw ConfigError("DDE_SPECTRA_SEED must be an unsigned integer");
        return v;
    }
    return flag_seed;
}

struct CommonOptions {
    std::string model;
    std::vector<std::string> sets;
    std::string config;
    std::string out;
    std::string format = "csv";
    std::uint64_t seed = kDefaultSeed;
    int jobs = 1;

    /// Model name and parameter overrides, from --config then --set.
    ModelConfig resolve() const {
        ModelConfig mc;
        if (!config.empty()) {
            std::ifstream f(config);
            if (!f) throw ConfigError("cannot read " + config);
            Json j;
            try {
                j = Json::parse(f);
            } catch (const Json::exception& e) {
                throw ConfigError(std::string("bad model JSON: ") + e.what());
            }
            mc = model_from_json(j);
        }
        if (!model.empty()) {
            if (!mc.model.empty() && mc.model != model) mc.params.clear();
            mc.model = model;
        }
        if (mc.model.empty()) throw ConfigError("no model given (use --model or --config)");
        for (const auto& [k, v] : parse_assignments(sets)) mc.params[k] = v;
        find_model(mc.model).resolve(mc.params);  // reject unknown names up front
        return mc;
    }
};

class Output {
  public:
    Output(const std::string& path, std::ostream& fallback) : os_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw ConfigError("cannot write " + path);
            os_ = file_.get();
        }
    }
    std::ostream& stream() { return *os_; }

  private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* os_;
};

inline void add_common(CLI::App* sub, CommonOptions& o, const char* set_flag) {
    sub->add_option("--model", o.model, "model name: example1, example2, example3, wilson-cowan");
    sub->add_option(set_flag, o.sets, "parameter override key=value (repeatable)");
    sub->add_option("--config", o.config, "model JSON {\"model\": ..., \"params\": {...}}");
    sub->add_option("--out", o.out, "output file (default stdout)");
    sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", o.seed, "jitter seed (DDE_SPECTRA_SEED overrides)");
    sub->add_option("--jobs", o.jobs, "worker threads; output does not depend on it");
}

inline int cmd_spectrum(const CommonOptions& o, const std::string& region_text, std::ostream& out, std::ostream& err) {
    const auto mc = o.resolve();
    const auto sys = find_model(mc.model).build(mc.params);
    const Region region = parse_region(region_text);
    const auto part = find_eigenvalues(sys, region, {effective_seed(o.seed), o.jobs});
    Output dst(o.out, out);
    if (o.format == "json")
        dst.stream() << spectrum_to_json(part).dump(2) << '\n';
    else
        write_spectrum_csv(dst.stream(), part);
    err << "eigenvalues=" << part.total_multiplicity() << " strong_plus=" << part.count(SpectralClass::strong_plus)
        << " strong_minus=" << part.count(SpectralClass::strong_minus)
        << " strong_critical=" << part.count(SpectralClass::strong_critical)
        << " pseudo_continuous=" << part.count(SpectralClass::pseudo_continuous) << '\n';
    return kExitOk;
}

/// Largest |generic - closed form| over grid points at least 1e-3 from every
/// singularity.
inline double curve_deviation(const std::string& model, const ParamMap& params, const SpectralCurveSet& set,
                              std::vector<std::vector<double>>* closed) {
    double dev = 0.0;
    if (closed) closed->assign(set.d, std::vector<double>(set.size(), std::nan("")));
    for (std::size_t i = 0; i < set.size(); ++i) {
        const double w = set.omega_grid[i];
        std::vector<double> cf;
        try {
            cf = closed_form_curve(model, params, w);
        } catch (const SingularityError&) {
            continue;
        }
        if (closed)
            for (std::size_t l = 0; l < set.d; ++l) (*closed)[l][i] = cf[l];
        bool near = false;
        for (const auto& s : set.singularities)
            if (std::abs(w - s.omega) < 1e-3) near = true;
        if (near) continue;
        for (std::size_t l = 0; l < set.d; ++l)
            if (std::isfinite(cf[l]) && std::isfinite(set.curves[l][i]))
                dev = std::max(dev, std::abs(cf[l] - set.curves[l][i]));
    }
    return dev;
}

inline int cmd_curves(const CommonOptions& o, double wmin, double wmax, int n_base, const std::string& sidecar,
                      std::ostream& out, std::ostream& err) {
    const auto mc = o.resolve();
    const auto sys = find_model(mc.model).build(mc.params);
    const auto set = spectral_curves(sys, wmin, wmax, n_base);
    std::vector<std::vector<double>> closed;
    const double dev = curve_deviation(mc.model, mc.params, set, &closed);
    Json side = {{"model", model_to_json(mc.model, find_model(mc.model).resolve(mc.params))},
                 {"omega_min", wmin},
                 {"omega_max", wmax},
                 {"max_deviation", dev},
                 {"singularities", singularities_to_json(set)}};
    Output dst(o.out, out);
    if (o.format == "json") {
        Json j = side;
        j["omega"] = set.omega_grid;
        Json curves = Json::array(), phases = Json::array(), cf = Json::array();
        for (std::size_t l = 0; l < set.d; ++l) {
            Json c = Json::array(), p = Json::array(), k = Json::array();
            for (std::size_t i = 0; i < set.size(); ++i) {
                c.push_back(json_number(set.curves[l][i]));
                p.push_back(json_number(set.phases[l][i]));
                k.push_back(json_number(closed[l][i]));
            }
            curves.push_back(c);
            phases.push_back(p);
            cf.push_back(k);
        }
        j["gamma"] = curves;
        j["phi"] = phases;
        j["closed_form"] = cf;
        dst.stream() << j.dump(2) << '\n';
    } else {
        std::ostringstream body;
        write_curves_csv(body, set);
        // append the closed-form columns to every line
        std::istringstream lines(body.str());
        std::string line;
        std::size_t row = 0;
        while (std::getline(lines, line)) {
            dst.stream() << line;
            for (std::size_t l = 0; l < set.d; ++l)
                dst.stream() << ',' << (row == 0 ? "closed_" + std::to_string(l + 1) : fmt(closed[l][row - 1]));
            dst.stream() << '\n';
            ++row;
        }
    }
    std::string side_path = sidecar;
    if (side_path.empty() && !o.out.empty()) side_path = o.out + ".singularities.json";
    if (!side_path.empty()) {
        std::ofstream f(side_path);
        if (!f) throw ConfigError("cannot write " + side_path);
        f << side.dump(2) << '\n';
    }
    err << "samples=" << set.size() << " singularities=" << set.singularities.size() << " max_deviation=" << fmt(dev)
        << '\n';
    return kExitOk;
}

inline int cmd_scan(const CommonOptions& o, const std::vector<std::string>& axes_text, std::ostream& out,
                    std::ostream& err) {
    if (o.model.empty()) throw ConfigError("scan needs --model");
    const ParamMap fixed = parse_assignments(o.sets);
    std::vector<ScanAxis> axes;
    for (const auto& a : axes_text) axes.push_back(parse_axis(a, 16));
    Output dst(o.out, out);
    std::size_t n = 0, unstable = 0;
    if (o.format == "json") {
        Json rows = Json::array();
        scan(o.model, fixed, axes, [&](const ScanPoint& p) {
            Json r = Json::object();
            for (std::size_t a = 0; a < axes.size(); ++a) r[axes[a].name] = p.coords[a];
            r["gamma_star"] = json_number(p.verdict.gamma_star);
            r["omega_star"] = p.verdict.omega_star;
            r["verdict"] = to_string(p.verdict.verdict);
            rows.push_back(r);
            ++n;
            unstable += p.verdict.verdict == Verdict::unstable;
        }, o.jobs);
        dst.stream() << rows.dump(2) << '\n';
    } else {
        write_scan_header(dst.stream(), axes);
        scan(o.model, fixed, axes, [&](const ScanPoint& p) {
            write_scan_row(dst.stream(), p);
            dst.stream().flush();
            ++n;
            unstable += p.verdict.verdict == Verdict::unstable;
        }, o.jobs);
    }
    err << "points=" << n << " unstable=" << unstable << '\n';
    return kExitOk;
}

inline int cmd_boundary(const CommonOptions& o, const std::string& axis_text, std::ostream& out, std::ostream& err) {
    if (o.model.empty()) throw ConfigError("boundary needs --model");
    const ParamMap fixed = parse_assignments(o.sets);
    const auto f = split(axis_text, ':');
    if (f.size() != 3) throw ConfigError("axis must look like name:lo:hi");
    find_model(o.model).resolve([&] {
        ParamMap p = fixed;
        p[f[0]] = 0.0;
        return p;
    }());
    const auto bp = trace_boundary(o.model, fixed, f[0], parse_number(f[1], "--axis"), parse_number(f[2], "--axis"));
    Output dst(o.out, out);
    dst.stream() << boundary_to_json(bp).dump(2) << '\n';
    err << "potential Hopf point " << bp.axis << "=" << fmt(bp.point) << " gamma_star=" << fmt(bp.gamma_star)
        << " iterations=" << bp.iterations << '\n';
    return kExitOk;
}

inline int cmd_simulate(const CommonOptions& o, double t_end, std::optional<double> h, int stride, double transient,
                        std::ostream& out, std::ostream& err) {
    const auto mc = o.resolve();
    if (mc.model != "wilson-cowan") throw ConfigError("simulate supports only the wilson-cowan model");
    const auto w = wilson_cowan_params(find_model(mc.model).resolve(mc.params));
    SimulationOptions so;
    so.t_end = t_end;
    so.h = h;
    so.record_stride = stride;
    const auto traj = simulate(w, so);
    const auto cls = classify_trajectory(traj, transient);
    Output dst(o.out, out);
    write_trajectory_csv(dst.stream(), traj);
    err << "h=" << fmt(traj.h) << " samples=" << traj.size() << " classify=" << to_string(cls) << '\n';
    return kExitOk;
}

inline int cmd_models(std::ostream& out) {
    for (const auto& spec : model_registry()) {
        out << spec.name;
        for (const auto& [k, v] : spec.defaults) out << ' ' << k << '=' << fmt(v);
        out << '\n';
    }
    out << kModelNote << '\n';
    return kExitOk;
}

/// Prints the error and returns its exit code.
inline int report_error(std::exception_ptr ep, std::ostream& err) {
    try {
        std::rethrow_exception(ep);
    } catch (const AlignmentError& e) {
        err << "alignment error: " << e.what() << "; suggested h = " << fmt(e.suggested_h()) << '\n';
        return kExitAlignment;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitSolver;
    } catch (...) {
        err << "error: unknown failure\n";
        return kExitSolver;
    }
}

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spectra and stability of delay equations with a uniformly distributed delay", "ddespec"};
    app.footer(kModelNote);
    app.require_subcommand(1);

    CommonOptions spec_o, curve_o, scan_o, bound_o, sim_o;
    std::string region = "disk:0,0,20";
    auto* spectrum = app.add_subcommand("spectrum", "eigenvalues in a region, classified");
    add_common(spectrum, spec_o, "--set");
    spectrum->add_option("--region", region, "disk:cx,cy,R or rect:re_min,re_max,im_min,im_max");

    double wmin = -20.0, wmax = 20.0;
    int n_base = 2001;
    std::string sidecar;
    auto* curves = app.add_subcommand("curves", "spectral curves with closed-form comparison");
    add_common(curves, curve_o, "--set");
    curves->add_option("--omega-min", wmin, "window start");
    curves->add_option("--omega-max", wmax, "window end");
    curves->add_option("--n-base", n_base, "uniform base samples");
    curves->add_option("--sidecar", sidecar, "singularity JSON path (default <out>.singularities.json)");

    std::vector<std::string> axes;
    auto* scan_cmd = app.add_subcommand("scan", "asymptotic verdicts on a parameter lattice");
    add_common(scan_cmd, scan_o, "--fix");
    scan_cmd->add_option("--axis", axes, "name:min:max[:steps], one to three times")->required();

    std::string axis;
    auto* boundary = app.add_subcommand("boundary", "bisect one parameter for a sign change of gamma*");
    add_common(boundary, bound_o, "--fix");
    boundary->add_option("--axis", axis, "name:lo:hi")->required();

    double t_end = 400.0, transient = 0.5;
    std::optional<double> h;
    int stride = 1;
    auto* sim = app.add_subcommand("simulate", "integrate the nonlinear wilson-cowan node");
    sim->set_help_flag("--help", "print this help message and exit");  // frees the name h for the step
    add_common(sim, sim_o, "--set");
    sim->add_option("--t-end", t_end, "final time");
    sim->add_option("--h", h, "step; must divide rho and tau_m - rho");
    sim->add_option("--stride", stride, "record every n-th step");
    sim->add_option("--transient", transient, "fraction skipped by the classifier");

    auto* models = app.add_subcommand("models", "list built-in models and defaults");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (spectrum->parsed()) return cmd_spectrum(spec_o, region, out, err);
        if (curves->parsed()) return cmd_curves(curve_o, wmin, wmax, n_base, sidecar, out, err);
        if (scan_cmd->parsed()) return cmd_scan(scan_o, axes, out, err);
        if (boundary->parsed()) return cmd_boundary(bound_o, axis, out, err);
        if (sim->parsed()) return cmd_simulate(sim_o, t_end, h, stride, transient, out, err);
        if (models->parsed()) return cmd_models(out);
    } catch (...) {
        return report_error(std::current_exception(), err);
    }
    return kExitConfig;
}

}  // namespace ddespec::cli
