#include "orliczq/error.hpp"
#include "orliczq/growth.hpp"
#include "orliczq/source.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

using namespace orliczq;

namespace {

double normal_pdf(double x, double mu, double s) {
    const double z = (x - mu) / s;
    return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
}

double one(std::span<const double>) { return 1.0; }

}  // namespace

TEST_CASE("gaussian mass, mean and variance") {
    const auto src = SourceDensity::gaussian(0.5, 2.0);
    const auto mass = integrate_mu(src, one);
    CHECK(mass.value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mass.truncation_bound < 1e-14);
    CHECK(integrate_mu(src, [](std::span<const double> x) { return x[0]; }).value == doctest::Approx(0.5).epsilon(1e-9));
    const auto var = integrate_mu(src, [](std::span<const double> x) { return (x[0] - 0.5) * (x[0] - 0.5); });
    CHECK(var.value == doctest::Approx(4.0).epsilon(1e-9));
    CHECK(src.density(1.3) == doctest::Approx(normal_pdf(1.3, 0.5, 2.0)).epsilon(1e-13));
    CHECK(src.log_density(100.0) == doctest::Approx(-0.5 * std::pow(99.5 / 2.0, 2) - std::log(2.0 * std::sqrt(2.0 * std::numbers::pi))).epsilon(1e-12));
    CHECK(src.cdf(0.5) == doctest::Approx(0.5));
    CHECK(src.unbounded_support());
}

TEST_CASE("power integral of the standard normal density") {
    // int h^{2/3} = (2 pi)^{-1/3} int exp(-x^2 / 3) dx = (2 pi)^{-1/3} sqrt(3 pi).
    const double closed = std::pow(2.0 * std::numbers::pi, -1.0 / 3.0) * std::sqrt(3.0 * std::numbers::pi);
    CHECK(closed == doctest::Approx(1.66370226391805).epsilon(1e-13));
    const auto src = SourceDensity::gaussian(0.0, 1.0);
    const auto r = integrate_lebesgue(src, [](std::span<const double>, double lh) { return std::exp(2.0 / 3.0 * lh); });
    CHECK(r.value == doctest::Approx(closed).epsilon(1e-10));
}

TEST_CASE("sampler agrees with quadrature") {
    const auto src = SourceDensity::gaussian(0.0, 1.0);
    const auto f = [](double x) { return std::expm1(std::abs(x) / 3.0); };
    const double exact = integrate_mu(src, [&](std::span<const double> x) { return f(x[0]); }).value;
    const std::size_t n = 1000000;
    const auto xs = src.sample(n, 7);
    double s = 0.0, s2 = 0.0;
    for (double x : xs) {
        s += f(x);
        s2 += f(x) * f(x);
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(mean - exact) < 3.0 * se);
    // Streams are independent yet reproducible.
    CHECK(src.sample(5, 7, 1) == src.sample(5, 7, 1));
    CHECK(src.sample(5, 7, 1) != src.sample(5, 7, 2));
}

TEST_CASE("mixture law") {
    const auto src = SourceDensity::gaussian_mixture({0.3, 0.7}, {-2.0, 1.5}, {0.5, 1.0});
    const double x = 0.4;
    CHECK(src.density(x) == doctest::Approx(0.3 * normal_pdf(x, -2.0, 0.5) + 0.7 * normal_pdf(x, 1.5, 1.0)).epsilon(1e-13));
    CHECK(integrate_mu(src, one).value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(integrate_mu(src, [](std::span<const double> p) { return p[0]; }).value == doctest::Approx(0.3 * -2.0 + 0.7 * 1.5).epsilon(1e-9));
    // Weights are normalized to sum to one.
    const auto scaled = SourceDensity::gaussian_mixture({0.6, 1.4}, {-2.0, 1.5}, {0.5, 1.0});
    CHECK(scaled.density(x) == doctest::Approx(src.density(x)).epsilon(1e-14));
    CHECK_THROWS_AS(SourceDensity::gaussian_mixture({0.0, 1.0}, {0.0, 1.0}, {1.0, 1.0}), DomainError);
    CHECK_THROWS(SourceDensity::gaussian_mixture({1.0}, {0.0, 1.0}, {1.0, 1.0}));
}

TEST_CASE("uniform box and partial mass") {
    const auto src = SourceDensity::uniform_box(Box{{0.0, -1.0}, {2.0, 1.0}}, 0.5);
    CHECK(src.dimension() == 2);
    const double inside[2] = {1.0, 0.0}, outside[2] = {3.0, 0.0};
    CHECK(src.density(inside) == doctest::Approx(0.125));
    CHECK(src.density(outside) == 0.0);
    CHECK(std::isinf(src.log_density(outside)));
    CHECK(integrate_mu(src, one).value == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(src.mass_outside(Box{{0.0, -1.0}, {1.0, 1.0}}) == doctest::Approx(0.25));
    CHECK_THROWS(SourceDensity::uniform_box(Box{{0.0}, {1.0}}, 1.5));
    CHECK_THROWS(SourceDensity::gaussian(0.0, -1.0));
}

TEST_CASE("grid density interpolates a fine tabulation") {
    GridDensity grid;
    const int n = 4097;
    for (int i = 0; i < n; ++i) {
        const double x = -8.0 + 16.0 * i / (n - 1);
        grid.xs.push_back(x);
        grid.values.push_back(normal_pdf(x, 0.0, 1.0));
    }
    const auto src = SourceDensity::grid(grid);
    CounterRng rng(3, 0);
    for (int k = 0; k < 500; ++k) {
        const double x = -7.0 + 14.0 * rng.uniform();
        CHECK(std::abs(src.density(x) - normal_pdf(x, 0.0, 1.0)) < 1e-6);
    }
    CHECK(src.density(9.0) == 0.0);
    CHECK(integrate_mu(src, one).value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("grid density from CSV") {
    std::istringstream ok("x,h\n0,1\n1,1\n2,1\n");
    const auto src = SourceDensity::grid_from_csv(ok);
    CHECK(src.density(1.5) == doctest::Approx(0.5));
    std::istringstream two("x,y,h\n0,0,1\n0,1,1\n1,0,1\n1,1,1\n");
    const auto src2 = SourceDensity::grid_from_csv(two);
    const double p[2] = {0.5, 0.5};
    CHECK(src2.dimension() == 2);
    CHECK(src2.density(p) == doctest::Approx(1.0));

    std::istringstream bad_header("a,b\n0,1\n");
    CHECK_THROWS_AS(SourceDensity::grid_from_csv(bad_header), UsageError);
    std::istringstream unordered("x,h\n0,1\n2,1\n1,1\n");
    CHECK_THROWS_AS(SourceDensity::grid_from_csv(unordered), UsageError);
    std::istringstream garbage("x,h\n0,1\n1,abc\n");
    CHECK_THROWS_AS(SourceDensity::grid_from_csv(garbage), UsageError);
    std::istringstream negative("x,h\n0,1\n1,-1\n");
    CHECK_THROWS(SourceDensity::grid_from_csv(negative));
    std::istringstream holes("x,y,h\n0,0,1\n0,1,1\n1,0,1\n");
    CHECK_THROWS_AS(SourceDensity::grid_from_csv(holes), UsageError);
}

TEST_CASE("tail moment of exp(|x|^1.5) under a standard normal") {
    // Reference values from an arbitrary-precision quadrature.
    const auto src = SourceDensity::gaussian(0.0, 1.0);
    const TailWeight psi = ExpPowerPsi{1.5};
    const double m8 = tail_moment(src, psi).value;
    CHECK(m8 == doctest::Approx(6.20313852055190).epsilon(1e-9));
    const double m10 = tail_moment(src.with_quad_domain(Box{{-10.0}, {10.0}}), psi).value;
    CHECK(m10 == doctest::Approx(6.20315574885531).epsilon(1e-9));
    // Widening the domain beyond 10 sigma changes the moment by less than 1e-9.
    const double m12 = tail_moment(src.with_quad_domain(Box{{-12.0}, {12.0}}), psi).value;
    CHECK(std::abs(m12 - m10) / m10 < 1e-9);
}
