#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <ddespec/cli.hpp>

using namespace ddespec;
using ddespec::cli::run_cli;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("ddespec_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("spectrum command") {
    const auto path = (scratch() / "s.csv").string();
    const auto r = run({"spectrum", "--model", "example1", "--set", "alpha=2", "--set", "beta=1", "--set", "rho=0.5",
                        "--set", "tau_m=20", "--out", path});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(slurp(path));
    REQUIRE(rows.size() > 2);
    CHECK(rows[0] == std::vector<std::string>{"re", "im", "re_rescaled", "im_rescaled", "class", "residual"});
    int strong = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i][4] == "strong_plus") {
            ++strong;
            CHECK(std::abs(std::stod(rows[i][0]) - 2.0) < 1e-6);
        }
    CHECK(strong == 1);
    CHECK(r.err.find("strong_plus=1") != std::string::npos);
}

TEST_CASE("rectangle region finds the same roots") {
    const auto disk = run({"spectrum", "--model", "example1"});
    const auto rect = run({"spectrum", "--model", "example1", "--region", "rect:-1,1,-19,19"});
    REQUIRE(disk.code == 0);
    REQUIRE(rect.code == 0);
    const auto d = csv_rows(disk.out), q = csv_rows(rect.out);
    for (std::size_t i = 1; i < q.size(); ++i) {
        const Complex z(std::stod(q[i][0]), std::stod(q[i][1]));
        bool found = false;
        for (std::size_t j = 1; j < d.size(); ++j)
            found |= std::abs(z - Complex(std::stod(d[j][0]), std::stod(d[j][1]))) < 1e-9;
        CHECK(found);
    }
}

TEST_CASE("json spectrum carries solver metadata and the seed override") {
    const auto plain = run({"spectrum", "--model", "example3", "--region", "disk:0,0,5", "--format", "json", "--seed", "5"});
    REQUIRE(plain.code == 0);
    auto j = Json::parse(plain.out);
    CHECK(j["metadata"]["seed"] == 5);
    CHECK(j["region"]["shape"] == "disk");
    CHECK(j["eigenvalues"].size() > 0);

    ::setenv("DDE_SPECTRA_SEED", "77", 1);
    const auto env = run({"spectrum", "--model", "example3", "--region", "disk:0,0,5", "--format", "json", "--seed", "5"});
    ::unsetenv("DDE_SPECTRA_SEED");
    REQUIRE(env.code == 0);
    CHECK(Json::parse(env.out)["metadata"]["seed"] == 77);
}

TEST_CASE("config errors exit with 2") {
    CHECK(run({"spectrum", "--model", "example1", "--set", "zeta=1"}).code == 2);
    CHECK(run({"spectrum", "--model", "nope"}).code == 2);
    CHECK(run({"spectrum", "--model", "example1", "--region", "disk:0,0"}).code == 2);
    CHECK(run({"spectrum", "--model", "example1", "--set", "beta=0"}).code == 2);
    CHECK(run({"spectrum"}).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"curves", "--model", "example1", "--omega-min", "3", "--omega-max", "3"}).code == 2);
    CHECK(run({"boundary", "--model", "example1", "--fix", "beta=1", "--axis", "alpha:-3:-2"}).code == 2);
    CHECK(run({"simulate", "--model", "example1"}).code == 2);
    CHECK(run({"models"}).code == 0);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("exit code mapping") {
    std::ostringstream err;
    auto code = [&](auto&& ex) { return cli::report_error(std::make_exception_ptr(ex), err); };
    CHECK(code(ConfigError("x")) == 2);
    CHECK(code(BracketError("x")) == 2);
    CHECK(code(ContourAccuracyError("x")) == 3);
    CHECK(code(MissingRootError("x", 0, 1, 0, 1)) == 3);
    CHECK(code(std::runtime_error("x")) == 3);
    CHECK(code(AlignmentError("x", 0.1)) == 4);
}

TEST_CASE("curves command and sidecar") {
    const auto path = (scratch() / "c.csv").string();
    const auto r = run({"curves", "--model", "example3", "--set", "alpha=0", "--set", "beta=2", "--set", "rho=2",
                        "--omega-min", "-5", "--omega-max", "5", "--out", path});
    REQUIRE(r.code == 0);
    const auto side = Json::parse(slurp(path + ".singularities.json"));
    int kernel = 0, plus = 0;
    for (const auto& s : side["singularities"]) {
        if (s["kind"] == "kernel_zero") ++kernel;
        if (s["kind"] == "plus_inf_sigmaA") {
            ++plus;
            CHECK(std::abs(std::abs(s["omega"].get<double>()) - 2.0) < 1e-12);
        }
    }
    CHECK(kernel == 6);
    CHECK(plus == 2);
    const auto rows = csv_rows(slurp(path));
    CHECK(rows[0] == std::vector<std::string>{"omega", "gamma_1", "gamma_2", "phi_1", "phi_2", "closed_1", "closed_2"});

    for (const auto& spec : model_registry()) {
        const auto out = (scratch() / (spec.name + ".csv")).string();
        REQUIRE(run({"curves", "--model", spec.name, "--out", out}).code == 0);
        const auto j = Json::parse(slurp(out + ".singularities.json"));
        INFO(spec.name);
        CHECK(j["max_deviation"].get<double>() < 1e-10);
    }
}

TEST_CASE("scan command") {
    const auto r = run({"scan", "--model", "wilson-cowan", "--fix", "rho=2", "--fix", "WE=2", "--axis", "WIE:0.5:4:64", "--jobs", "3"});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 65);
    CHECK(rows[0] == std::vector<std::string>{"WIE", "gamma_star", "omega_star", "verdict"});
    std::vector<std::string> pattern;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (pattern.empty() || pattern.back() != rows[i][3]) pattern.push_back(rows[i][3]);
    CHECK(pattern == std::vector<std::string>{"unstable", "stable", "unstable"});
    const auto serial = run({"scan", "--model", "wilson-cowan", "--fix", "rho=2", "--fix", "WE=2", "--axis", "WIE:0.5:4:64"});
    CHECK(serial.out == r.out);
}

TEST_CASE("boundary command") {
    const auto r = run({"boundary", "--model", "example1", "--fix", "beta=1", "--axis", "alpha:-2:-0.5"});
    REQUIRE(r.code == 0);
    const auto j = Json::parse(r.out);
    CHECK(std::abs(j["point"].get<double>() + 1.0) < 1e-6);
    CHECK(j["axis"] == "alpha");
    CHECK(j["fixed"]["beta"] == 1.0);
    CHECK(j["bracket"]["stable"].get<double>() < j["bracket"]["unstable"].get<double>());
    CHECK(r.err.find("potential Hopf point") != std::string::npos);
}

TEST_CASE("simulate command") {
    const auto ok = run({"simulate", "--model", "wilson-cowan", "--set", "rho=6", "--t-end", "4000", "--stride", "50"});
    REQUIRE(ok.code == 0);
    CHECK(ok.err.find("classify=converged") != std::string::npos);
    CHECK(ok.out.rfind("t,W_EI,I,E,delay_integral\n", 0) == 0);
    const auto bad = run({"simulate", "--model", "wilson-cowan", "--t-end", "100", "--h", "0.3"});
    CHECK(bad.code == 4);
    CHECK(bad.err.find("suggested h") != std::string::npos);
    CHECK(run({"simulate", "--model", "wilson-cowan", "--t-end", "10"}).code == 2);
}

TEST_CASE("identical arguments give identical bytes") {
    const std::vector<std::string> args{"spectrum", "--model", "example2", "--region", "disk:0,0,8", "--format", "json"};
    const auto a = run(args), b = run(args);
    auto c_args = args;
    c_args.insert(c_args.end(), {"--jobs", "4"});
    const auto c = run(c_args);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
}

TEST_CASE("executable exit codes") {
    const std::string exe = DDESPEC_CLI_PATH;
    const auto null = (scratch() / "null").string();
    auto status = [&](const std::string& args) {
        const int s = std::system((exe + " " + args + " > " + null + " 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    CHECK(status("models") == 0);
    CHECK(status("spectrum --model example1 --set zeta=1") == 2);
    CHECK(status("simulate --model wilson-cowan --t-end 100 --h 0.3") == 4);
}
