#include <catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include <ddespec/charfn.hpp>
#include <ddespec/models.hpp>

using namespace ddespec;
using std::numbers::pi;

namespace {

// sinh(z)/z = sum z^{2k} / (2k+1)!, 30 terms in long double
std::complex<long double> sinhc_series(std::complex<long double> z) {
    std::complex<long double> term = 1.0L, sum = 1.0L;
    const auto z2 = z * z;
    for (int k = 1; k < 30; ++k) {
        term *= z2 / static_cast<long double>((2 * k) * (2 * k + 1));
        sum += term;
    }
    return sum;
}

Complex to_c(std::complex<long double> z) { return {static_cast<double>(z.real()), static_cast<double>(z.imag())}; }

double rel(Complex a, Complex b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

}  // namespace

TEST_CASE("cardinal functions") {
    CHECK(sinhc(0.0) == Complex(1.0));
    CHECK(std::abs(sinhc(Complex(0.0, pi))) < 1e-16);
    CHECK(std::abs(sinhc(1.0) - to_c(sinhc_series(1.0L))) < 1e-15);
    CHECK(std::abs(sinhc(1.0).real() - 1.1752011936438014) < 1e-15);
    CHECK(sinc(0.0) == 1.0);
    for (int k = 1; k <= 5; ++k) CHECK(std::abs(sinc(k * pi)) < 1e-15);
    CHECK(std::abs(cschc(1.0) - 1.0 / to_c(sinhc_series(1.0L))) < 1e-15);
    CHECK_THROWS_AS(cschc(Complex(0.0, pi)), PoleError);
    CHECK_THROWS_AS(cschc(Complex(0.0, -3.0 * pi)), PoleError);
}

TEST_CASE("sinhc against the series oracle, including across the switch") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double r : {1e-6, 5e-4, 9.99e-4, 1.0e-3, 1.001e-3, 0.1, 1.0, 3.0}) {
        for (int k = 0; k < 50; ++k) {
            const Complex z = std::polar(r, pi * u(rng));
            const auto want = to_c(sinhc_series({z.real(), z.imag()}));
            CHECK(rel(sinhc(z), want) < 1e-14);
        }
    }
    for (double x : {1e-5, 9.99e-4, 1.001e-3, 0.3, 2.0})
        CHECK(std::abs(sinc(x) - to_c(sinhc_series({0.0L, x})).real()) < 1e-15);
}

TEST_CASE("sinhc derivative and log-derivative") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double r : {1e-4, 0.2, 0.49, 0.51, 2.0, 6.0}) {
        for (int k = 0; k < 30; ++k) {
            const Complex z = std::polar(r, pi * u(rng));
            const Complex h = 1e-5;
            const Complex fd = (to_c(sinhc_series({(z + h).real(), (z + h).imag()})) -
                                to_c(sinhc_series({(z - h).real(), (z - h).imag()}))) /
                               (2.0 * h);
            CHECK(std::abs(sinhc_derivative(z) - fd) < 1e-9 * std::max(1.0, std::abs(fd)));
            CHECK(rel(sinhc_log_derivative(z), sinhc_derivative(z) / sinhc(z)) < 1e-10);
        }
    }
}

TEST_CASE("delta closed forms") {
    const auto e1 = build_example1(2.0, 1.0, 0.5, 20.0);
    const Complex want = -std::exp(-40.0) * sinhc(1.0);
    CHECK(std::abs(delta(e1, 2.0)) < 1e-17);
    CHECK(rel(delta(e1, 2.0), want) < 1e-12);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const double a = -0.5, b = 1.0, rho = 2.0, tau = 20.0;
    const auto e3 = build_example3(a, b, rho, tau);
    for (int k = 0; k < 50; ++k) {
        const Complex l(u(rng) * 0.1, u(rng) * 3.0);
        const Complex s = std::exp(-l * tau) * sinhc(rho * l);
        const Complex closed = (l - a - s) * (l - a - s) + b * b;
        CHECK(rel(delta(e3, l), closed) < 1e-12);
    }
}

TEST_CASE("Schwarz reflection") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (const auto& spec : model_registry()) {
        const auto sys = spec.build();
        for (int k = 0; k < 100; ++k) {
            const Complex l(0.2 * u(rng), 3.0 * u(rng));
            const Complex a = delta(sys, std::conj(l)), b = std::conj(delta(sys, l));
            CHECK(std::abs(a - b) <= 1e-13 * std::max(1.0, std::abs(b)));
        }
    }
}

TEST_CASE("scaled characteristic matrices keep zeros and magnitude") {
    const auto sys = build_example2(2.0, 2.0, 20.0);
    for (const Complex l : {Complex(-0.5, 3.0), Complex(0.1, -1.0), Complex(-2.0, 0.7)}) {
        const auto cm = characteristic_matrices(sys, l);
        const double scale = std::exp(std::max(0.0, cm.log_scale) * static_cast<double>(sys.d()));
        CHECK(rel(std::abs(delta_scaled(sys, l)) * scale, std::abs(delta(sys, l))) < 1e-10);
    }
}

TEST_CASE("logarithmic derivative") {
    const double alpha = 2.0, beta = 1.0, rho = 0.5, tau = 20.0;
    const auto e1 = build_example1(alpha, beta, rho, tau);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    // scalar closed form (1 - beta d/dlambda[e^{-lambda tau} sinhc(rho lambda)]) / Delta
    for (int k = 0; k < 20; ++k) {
        const Complex l(0.3 * u(rng), 5.0 * u(rng));
        const Complex e = std::exp(-l * tau);
        const Complex ds = e * (-tau * sinhc(rho * l) + rho * sinhc_derivative(rho * l));
        const Complex want = (1.0 - beta * ds) / (l - alpha - beta * e * sinhc(rho * l));
        CHECK(rel(delta_log_derivative(e1, l), want) < 1e-10);
    }
    // finite differences of log Delta
    for (const auto& spec : model_registry()) {
        const auto sys = spec.build();
        for (int k = 0; k < 100; ++k) {
            const Complex l(0.3 * u(rng), 4.0 * u(rng));
            const Complex f0 = delta(sys, l);
            if (std::abs(f0) < 1e-6) continue;
            const double h = 1e-6;
            const Complex fd = (delta(sys, l + h) - delta(sys, l - h)) / (2.0 * h * f0);
            CHECK(rel(delta_log_derivative(sys, l), fd) < 1e-5);
        }
    }
}

TEST_CASE("argument principle around one simple zero") {
    // Example 1 has a zero within e^{-40} of lambda = 2
    const auto e1 = build_example1(2.0, 1.0, 0.5, 20.0);
    const int m = 2000;
    Complex acc = 0.0;
    for (int k = 0; k < m; ++k) {
        const Complex dz = std::polar(0.1, 2.0 * pi * k / m);
        acc += delta_log_derivative(e1, 2.0 + dz) * dz * Complex(0.0, 2.0 * pi / m);
    }
    const Complex winding = acc / Complex(0.0, 2.0 * pi);
    CHECK(std::abs(winding - 1.0) < 1e-10);
    CHECK_THROWS_AS(delta_log_derivative(build_example3(0.0, pi / 2.0, 2.0, 20.0), Complex(0.0, pi / 2.0)),
                    OnZeroError);
}

TEST_CASE("p_omega closed forms") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    const double a = 0.7, b = -1.3, rho = 2.0;
    const auto e1 = build_example1(a, b, rho, 20.0);
    const auto e2 = build_example2(a, rho, 20.0);
    for (int k = 0; k < 50; ++k) {
        const double w = u(rng);
        const Complex iw(0.0, w);
        const double s = sinc(rho * w);
        const auto p1 = p_omega(e1, w);
        REQUIRE(p1.coeffs.size() == 2);
        CHECK(std::abs(p1.coeffs[0] - (iw - a)) < 1e-13);
        CHECK(std::abs(p1.coeffs[1] - (-s * b)) < 1e-13);
        const auto p2 = p_omega(e2, w);
        REQUIRE(p2.coeffs.size() == 2);
        CHECK(std::abs(p2.coeffs[0] - (-w * w - a * iw - 1.0)) < 1e-12);
        CHECK(std::abs(p2.coeffs[1] - (-(iw - a) * s)) < 1e-13);
        const auto q1 = q_omega(e1, w);
        REQUIRE(q1.coeffs.size() == 2);
        CHECK(std::abs(q1.coeffs[1] - (iw - a)) < 1e-13);
        CHECK(std::abs(q1.coeffs[0] - (-s * b)) < 1e-13);
    }
}

TEST_CASE("q_omega reciprocity and the zero root") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (const auto& spec : model_registry()) {
        const auto sys = spec.build();
        for (int k = 0; k < 30; ++k) {
            const double w = u(rng);
            const auto p = p_omega(sys, w);
            const auto q = q_omega(sys, w);
            const Complex lhs = q(2.0), rhs = std::pow(2.0, static_cast<double>(sys.n())) * p(0.5);
            CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
            // x = 0 has multiplicity n - d: the low coefficients vanish
            const double tol = 1e-12 * q.max_coeff();
            for (std::size_t j = 0; j < sys.n() - sys.d(); ++j) CHECK(std::abs(q.coeffs[j]) <= tol);
            if (sys.n() > sys.d()) CHECK(std::abs(q.coeffs[sys.n() - sys.d()]) > tol);
        }
    }
}

TEST_CASE("p_omega degree law") {
    const double rho = 2.0;
    SECTION("example 3 at rho omega = pi drops to degree 0") {
        const auto e3 = build_example3(2.0, 1.0, rho, 20.0);
        for (int k = 1; k <= 3; ++k) {
            const double w0 = k * pi / rho;
            CHECK(p_omega(e3, w0).degree() == 0);
            for (double off : {-1e-3, 1e-3, -0.1, 0.1}) CHECK(p_omega(e3, w0 + off).degree() == 2);
        }
        CHECK(p_omega(e3, 0.0).degree() == 2);
    }
    SECTION("example 2 drops degree where i omega is in sigma(A1)") {
        const auto e2 = build_example2(0.0, rho, 20.0);  // A1 = [0]
        CHECK(p_omega(e2, 0.0).degree() == 0);
        CHECK(p_omega(e2, 1e-3).degree() == 1);
        CHECK(p_omega(e2, pi / rho).degree() == 0);
        CHECK(p_omega(e2, pi / rho + 1e-3).degree() == 1);
    }
    SECTION("example 1 drops degree at kernel zeros only") {
        const auto e1 = build_example1(2.0, 1.0, rho, 20.0);
        CHECK(p_omega(e1, 0.0).degree() == 1);
        CHECK(p_omega(e1, -pi / rho).degree() == 0);
        CHECK(p_omega(e1, -pi / rho + 1e-4).degree() == 1);
    }
}

TEST_CASE("expansion terms") {
    CHECK(f1_f2(0.0, 2.0).f1 == 0.0);
    CHECK(std::abs(f1_f2(1e-8, 2.0).f1) < 1e-8);
    CHECK_THROWS_AS(f1_f2(1.0, 0.0), DomainError);
    // series and closed form agree at the switch
    for (double u : {0.49999, 0.50001}) {
        const double s = std::sin(u), c = std::cos(u);
        const auto t = f1_f2(u, 1.0);
        CHECK(std::abs(t.f1 - (s - u * c) / (u * u)) < 1e-13);
        CHECK(std::abs(t.f2 - (u * u * s - 2.0 * s + 2.0 * u * c) / (2.0 * u * u * u)) < 1e-13);
    }
    // bounds over a dense grid that avoids u = 0
    double f1_max = 0.0, f2_min = 1.0, f2_max = -1.0;
    for (int k = 1; k <= 400000; ++k) {
        const double u = -100.0 + 200.0 * (k - 0.5) / 400000.0;
        const auto t = f1_f2(u, 1.0);
        f1_max = std::max(f1_max, std::abs(t.f1));
        f2_min = std::min(f2_min, t.f2);
        f2_max = std::max(f2_max, t.f2);
    }
    CHECK(f1_max <= 0.4361 + 1e-4);
    CHECK(f2_min >= -0.1243 - 1e-4);
    CHECK(f2_max < 1.0 / 6.0);
}

TEST_CASE("second-order expansion of sinhc near the imaginary axis") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ur(0.1, 8.0), uw(-10.0, 10.0), ug(-5.0, 5.0), ue(1e-6, 1e-3);
    const double f2_bound = 1.0 / 6.0;
    for (int k = 0; k < 1000; ++k) {
        const double rho = ur(rng), w = uw(rng), g = ug(rng), eps = ue(rng);
        const auto t = f1_f2(w, rho);
        const Complex lhs = sinhc(rho * Complex(eps * g, w));
        const Complex lin = sinc(rho * w) + Complex(0.0, eps * rho * g * t.f1);
        const double c = std::abs(lhs - lin) / (eps * eps * rho * rho);
        CHECK(c <= 2.0 * f2_bound * g * g + 0.05);
    }
}
