#include <catch_amalgamated.hpp>

#include <random>

#include <ddespec/asymspec.hpp>
#include <ddespec/io.hpp>
#include <ddespec/models.hpp>

using namespace ddespec;

namespace {

void check_block_structure(const LinearDDE& sys) {
    const std::size_t n = sys.n(), d = sys.d();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i < n - d || j < n - d) CHECK(sys.B()(i, j) == Complex(0.0));
    CHECK(std::abs(det(sys.Bbar())) > 1e-12);
}

}  // namespace

TEST_CASE("example builders") {
    const auto e1 = build_example1(2.0, 1.0, 0.5, 20.0);
    CHECK(e1.n() == 1);
    CHECK(e1.d() == 1);
    CHECK(e1.A()(0, 0) == Complex(2.0));
    CHECK(e1.Bbar()(0, 0) == Complex(1.0));
    CHECK_NOTHROW(build_example1(0.0, 2.0, 2.0, 20.0));
    CHECK_THROWS_AS(build_example1(1.0, 0.0, 2.0, 20.0), ModelError);

    const auto e2 = build_example2(2.0, 2.0, 20.0);
    CHECK(e2.d() == 1);
    CHECK(e2.A1()(0, 0) == Complex(2.0));
    CHECK(e2.A2()(0, 0) == Complex(0.5));
    CHECK(e2.A3()(0, 0) == Complex(2.0));
    CHECK(e2.A4()(0, 0) == Complex(0.0));
    CHECK_THROWS_AS(build_example2(2.0, 21.0, 20.0), ModelError);

    const auto e3 = build_example3(-0.5, 1.0, 8.0, 20.0);
    CHECK(e3.d() == 2);
    CHECK(e3.Bbar() == CMatrix::identity(2));
    CHECK_THROWS_AS(build_example3(0.0, 1.0, 30.0, 20.0), ModelError);

    for (const auto& spec : model_registry()) check_block_structure(spec.build());
}

TEST_CASE("wilson-cowan linearization entries") {
    const WilsonCowanParams w;
    CHECK(std::abs(logistic_slope(logistic_inverse(0.2, 5.0), 5.0) - 0.8) < 1e-14);
    const auto eq = wilson_cowan_equilibrium(w);
    CHECK(eq.E == 0.2);
    CHECK(std::abs(eq.I - 1.0 / (1.0 + std::exp(-4.0))) < 1e-15);
    CHECK(std::abs(eq.WEI - (2.0 * 0.2 - std::log(0.25) / 5.0) / eq.I) < 1e-14);

    const auto sys = build_wilson_cowan(w);
    CHECK(sys.n() == 3);
    CHECK(sys.d() == 1);
    const double se = 0.8;
    CHECK(sys.A()(0, 2).real() == eq.I / w.tau2);
    CHECK(sys.A()(1, 1).real() == -1.0);
    CHECK(std::abs(sys.A()(2, 0).real() + se * eq.I / w.tau1) < 1e-15);
    CHECK(std::abs(sys.A()(2, 1).real() + se * eq.WEI / w.tau1) < 1e-15);
    CHECK(std::abs(sys.Bbar()(0, 0).real() - w.WE * se / w.tau1) < 1e-15);
    CHECK(sys.A()(0, 0) == Complex(0.0));

    WilsonCowanParams bad = w;
    bad.p = 1.2;
    CHECK_THROWS_AS(build_wilson_cowan(bad), DomainError);
}

TEST_CASE("wilson-cowan characteristic polynomial matches the scalar form") {
    // det(lambda - A - B s) = lambda^3 + p2 lambda^2 + p1 lambda + p0 - q lambda (lambda + 1) s
    WilsonCowanParams w;
    w.WIE = 2.5;
    const auto sys = build_wilson_cowan(w);
    const auto eq = wilson_cowan_equilibrium(w);
    const Complex l(0.3, 1.7), s(0.2, -0.4);
    const CMatrix m = CMatrix::identity(3) * l - sys.A() - sys.B() * s;
    const Complex poly = l * l * l + eq.p2 * l * l + eq.p1 * l + eq.p0 - eq.q * l * (l + 1.0) * s;
    CHECK(std::abs(det(m) - poly) < 1e-13);
}

TEST_CASE("routh-hurwitz positivity over random draws") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> up(0.05, 0.95), ua(0.5, 10.0), ut(0.1, 10.0), uw(0.1, 8.0);
    int valid = 0;
    for (int k = 0; k < 10000; ++k) {
        WilsonCowanParams w;
        w.p = up(rng);
        w.a = ua(rng);
        w.tau1 = ut(rng);
        w.tau2 = ut(rng);
        w.WE = uw(rng);
        w.WIE = uw(rng);
        const auto eq = wilson_cowan_equilibrium(w);
        if (!eq.valid) continue;
        ++valid;
        REQUIRE(eq.p0 > 0.0);
        REQUIRE(eq.p1 > 0.0);
        REQUIRE(eq.p2 > 0.0);
        REQUIRE(eq.q > 0.0);
        REQUIRE(eq.p2 * eq.p1 - eq.p0 > 0.0);
    }
    CHECK(valid > 1000);
}

TEST_CASE("rebuild from emitted parameter map is bit-identical") {
    for (const auto& spec : model_registry()) {
        const auto params = spec.resolve({});
        const auto a = spec.build(params);
        const auto j = model_to_json(spec.name, params);
        const auto mc = model_from_json(Json::parse(j.dump()));
        const auto b = find_model(mc.model).build(mc.params);
        CHECK(a.A() == b.A());
        CHECK(a.B() == b.B());
        CHECK(a.rho() == b.rho());
        CHECK(a.tau_m() == b.tau_m());
    }
    const auto w = wilson_cowan_params(to_param_map(WilsonCowanParams{}));
    CHECK(build_wilson_cowan(w).A() == build_wilson_cowan(WilsonCowanParams{}).A());
}

TEST_CASE("registry rejects unknown names") {
    CHECK_THROWS_AS(find_model("example9"), ConfigError);
    CHECK_THROWS_AS(find_model("example1").resolve({{"gamma", 1.0}}), ConfigError);
    CHECK_THROWS_AS(model_from_json(Json::parse(R"({"params": {}})")), ConfigError);
}
