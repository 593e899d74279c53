#include "orliczq/error.hpp"
#include "orliczq/g_function.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace orliczq;

namespace {

// Gauss-Legendre nodes and weights on [0, 1] by Newton iteration.
struct Legendre {
    std::vector<double> x;
    std::vector<double> w;
};

Legendre gauss_legendre(int n) {
    Legendre g;
    for (int i = 1; i <= n; ++i) {
        double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        g.x.push_back(0.5 * (1.0 - z));
        g.w.push_back(1.0 / ((1.0 - z * z) * dp * dp));
    }
    return g;
}

// E f(|U|) for U uniform on the unit-area regular hexagon centred at the
// origin: six triangles (0, v_k, v_{k+1}), each integrated with a collapsed
// (Duffy) tensor Gauss rule.
template <class F>
double hexagon_mean(F f) {
    const double R = std::sqrt(2.0 / (3.0 * std::sqrt(3.0)));
    const Legendre g = gauss_legendre(40);
    double total = 0.0;
    for (int k = 0; k < 6; ++k) {
        const double a0 = k * std::numbers::pi / 3.0, a1 = (k + 1) * std::numbers::pi / 3.0;
        const double ux = R * std::cos(a0), uy = R * std::sin(a0);
        const double vx = R * std::cos(a1), vy = R * std::sin(a1);
        const double jac = std::abs(ux * vy - uy * vx);
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            for (std::size_t j = 0; j < g.x.size(); ++j) {
                // (s, t) in the unit square -> s (1 - t) u + s t v.
                const double s = g.x[i], t = g.x[j];
                const double x = s * ((1.0 - t) * ux + t * vx);
                const double y = s * ((1.0 - t) * uy + t * vy);
                total += g.w[i] * g.w[j] * s * jac * f(std::hypot(x, y));
            }
        }
    }
    return total;
}

}  // namespace

TEST_CASE("one-dimensional exp loss matches its antiderivative") {
    const auto g = GFunction::one_dim_abs(PhiFunction::exp_minus_one());
    for (int i = 0; i <= 40; ++i) {
        const double eta = 0.05 * std::pow(1000.0, i / 40.0);
        const double exact = 2.0 * eta * std::exp(1.0 / (2.0 * eta)) - 2.0 * eta - 1.0;
        CHECK(g(eta) == doctest::Approx(exact).epsilon(1e-8));
        const double dexact = 2.0 * std::exp(1.0 / (2.0 * eta)) - std::exp(1.0 / (2.0 * eta)) / eta - 2.0;
        CHECK(g.derivative(eta) == doctest::Approx(dexact).epsilon(1e-7));
    }
}

TEST_CASE("one-dimensional power loss is a power of eta") {
    for (double p : {1.0, 2.0, 3.0}) {
        const auto g = GFunction::one_dim_abs(PhiFunction::power(p));
        for (double eta : {0.5, 1.0, 2.0}) {
            CHECK(g(eta) == doctest::Approx(std::pow(0.5, p) / ((p + 1.0) * std::pow(eta, p))).epsilon(1e-10));
        }
    }
    const auto g2 = GFunction::one_dim_abs(PhiFunction::power(2.0));
    CHECK(g2(0.5) == doctest::Approx(1.0 / 3.0));
    CHECK(g2(1.0) == doctest::Approx(1.0 / 12.0));
    CHECK(g2(2.0) == doctest::Approx(1.0 / 48.0));
}

TEST_CASE("hexagon second moment against a triangle quadrature oracle") {
    const auto g = GFunction::hexagon_2d(PhiFunction::power(2.0));
    const double oracle = hexagon_mean([](double r) { return r * r; });
    CHECK(oracle == doctest::Approx(5.0 / (18.0 * std::sqrt(3.0))).epsilon(1e-12));
    CHECK(g(1.0) == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(g(2.0) == doctest::Approx(oracle / 2.0).epsilon(1e-9));
    CHECK(hexagon_mean([](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hexagon mean distance and exp loss against the triangle oracle") {
    const auto g1 = GFunction::hexagon_2d(PhiFunction::power(1.0));
    CHECK(g1(1.0) == doctest::Approx(hexagon_mean([](double r) { return r; })).epsilon(1e-8));
    const auto ge = GFunction::hexagon_2d(PhiFunction::exp_minus_one());
    for (double eta : {0.5, 1.0, 4.0}) {
        const double s = 1.0 / std::sqrt(eta);
        CHECK(ge(eta) == doctest::Approx(hexagon_mean([s](double r) { return std::expm1(s * r); })).epsilon(1e-8));
    }
}

TEST_CASE("sup-norm square cell by a midpoint Riemann sum") {
    const auto g = GFunction::sup_norm_cube(PhiFunction::power(2.0), 2);
    CHECK(g(1.0) == doctest::Approx(1.0 / 8.0).epsilon(1e-10));
    const auto ge = GFunction::sup_norm_cube(PhiFunction::exp_minus_one(), 2);
    const int n = 800;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double x = (i + 0.5) / n - 0.5, y = (j + 0.5) / n - 0.5;
            acc += std::expm1(std::max(std::abs(x), std::abs(y)) / std::sqrt(0.5));
        }
    }
    CHECK(ge(0.5) == doctest::Approx(acc / (n * n)).epsilon(1e-5));
}

TEST_CASE("tabulated loss against a Riemann sum") {
    const auto phi = PhiFunction::tabulated({{0.2, 0.1}, {0.5, 1.0}, {1.0, 1.5}});
    const auto g = GFunction::one_dim_abs(phi);
    for (double eta : {0.3, 1.0, 3.0}) {
        const int n = 200000;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += phi(((i + 0.5) / n * 0.5) / eta);
        CHECK(g(eta) == doctest::Approx(acc / n).epsilon(1e-7));
    }
    CHECK(g.at_zero() == doctest::Approx(1.5));
    CHECK(g(0.0) == g.at_zero());
}

TEST_CASE("power-law variant and limits") {
    const auto g = GFunction::power_law(2.0, 3.0, 1);
    CHECK(g(2.0) == doctest::Approx(2.0 / 8.0));
    CHECK(g.derivative(2.0) == doctest::Approx(-3.0 * 2.0 / 16.0));
    CHECK(std::isinf(GFunction::one_dim_abs(PhiFunction::power(2.0)).at_zero()));
    CHECK(g.dimension() == 1);
    CHECK(GFunction::hexagon_2d(PhiFunction::power(2.0)).dimension() == 2);
    CHECK_THROWS_AS(g(-1.0), DomainError);
}

TEST_CASE("log value stays finite where g overflows") {
    const auto g = GFunction::one_dim_abs(PhiFunction::exp_minus_one());
    // log g(eta) ~ 1 / (2 eta) + log(2 eta) for small eta.
    const double eta = 1e-4;
    CHECK(std::isinf(g(eta)));
    CHECK(g.log_value(eta) == doctest::Approx(1.0 / (2.0 * eta) + std::log(2.0 * eta)).epsilon(1e-9));
}

TEST_CASE("finite-size oracle reproduces g on the unit interval") {
    for (int n : {4, 8, 16, 64}) {
        const auto phi = PhiFunction::power(2.0);
        const auto r = f_n_oracle(phi, n, 1.0, 3);
        CHECK(r.value == doctest::Approx(1.0 / 12.0).epsilon(1e-4));
        REQUIRE(r.codebook.size() == static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) CHECK(r.codebook[i] == doctest::Approx((i + 0.5) / n).epsilon(1e-6));
    }
    const auto re = f_n_oracle(PhiFunction::exp_minus_one(), 8, 2.0, 3);
    CHECK(re.value == doctest::Approx(GFunction::one_dim_abs(PhiFunction::exp_minus_one())(2.0)).epsilon(1e-4));
    // A larger codebook is never worse.
    const auto phi = PhiFunction::exp_minus_one();
    CHECK(f_n_oracle(phi, 16, 1.0, 2).value <= f_n_oracle(phi, 8, 1.0, 2).value + 1e-9);
    CHECK_THROWS_AS(f_n_oracle(phi, 0, 1.0, 1), DomainError);
}
