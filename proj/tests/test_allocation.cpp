#include "orliczq/allocation.hpp"
#include "orliczq/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace orliczq;

namespace {

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double log_normal_pdf(double x) { return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi); }

// Composite Simpson rule with n (even) panels.
template <class F>
double simpson(F f, double a, double b, int n) {
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return acc * h / 3.0;
}

// Exp loss on the unit interval: g(eta) = 2 eta e^{1/(2 eta)} - 2 eta - 1 and
// -g'(eta) = e^{1/(2 eta)} (1/eta - 2) + 2, both handled through their logs.
double log_neg_gprime(double eta) {
    const double u = 1.0 / (2.0 * eta);
    return u + std::log(1.0 / eta - 2.0 + 2.0 * std::exp(-u));
}

double log_g(double eta) {
    const double u = 1.0 / (2.0 * eta);
    return u + std::log(2.0 * eta - (2.0 * eta + 1.0) * std::exp(-u));
}

// eta with -g'(eta) = e^L, by bisection on log eta.
double eta_of_log(double L) {
    double lo = std::log(1e-15), hi = std::log(1e6);
    for (int it = 0; it < 90; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (log_neg_gprime(std::exp(mid)) > L) lo = mid;
        else hi = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

// Integral over R of an even function via x = s / (1 - s) on [0, 1).
template <class F>
double even_line_integral(F f) {
    const int n = 4000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double s = (i + 0.5) / n;
        const double x = s / (1.0 - s);
        acc += f(x) / ((1.0 - s) * (1.0 - s));
    }
    return 2.0 * acc / n;
}

struct ExpOracle {
    double kappa;
    double I;
};

ExpOracle exp_gaussian_oracle() {
    auto xi = [](double kappa, double x) { return eta_of_log(std::log(kappa) - log_normal_pdf(x)); };
    auto constraint = [&](double kappa) {
        return even_line_integral([&](double x) { return std::exp(log_g(xi(kappa, x)) + log_normal_pdf(x)); });
    };
    double lo = std::log(0.01), hi = std::log(100.0);
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        // The constraint increases with kappa: larger kappa, smaller xi.
        if (constraint(std::exp(mid)) > 1.0) hi = mid;
        else lo = mid;
    }
    const double kappa = std::exp(0.5 * (lo + hi));
    return {kappa, even_line_integral([&](double x) { return xi(kappa, x); })};
}

}  // namespace

TEST_CASE("squared loss on a gaussian: classical closed form") {
    const auto src = SourceDensity::gaussian(0.0, 1.0);
    const double A = simpson([](double x) { return std::cbrt(normal_pdf(x)); }, -30.0, 30.0, 20000);
    const double classical = std::sqrt(A * A * A / 12.0);
    CHECK(classical == doctest::Approx(1.6494541661869016).epsilon(1e-12));
    const ConjugatePair cp(GFunction::one_dim_abs(PhiFunction::power(2.0)));
    const auto sol = solve(cp, src, std::numeric_limits<double>::infinity());
    CHECK_FALSE(sol.degenerate);
    CHECK(sol.I == doctest::Approx(classical).epsilon(1e-7));
    CHECK(sol.constraint_value == doctest::Approx(1.0).epsilon(1e-8));
    // xi proportional to h^{1/3}.
    const double c = std::sqrt(A / 12.0);
    for (double x : {0.0, 1.0, 3.0}) CHECK(sol.xi(x) == doctest::Approx(c * std::cbrt(normal_pdf(x))).epsilon(1e-6));
}

TEST_CASE("squared loss on a gaussian mixture") {
    const auto src = SourceDensity::gaussian_mixture({0.3, 0.7}, {-2.0, 1.5}, {0.5, 1.0});
    const double A = simpson(
        [&](double x) { return std::cbrt(src.density(x)); }, -30.0, 30.0, 40000);
    const double classical = std::sqrt(A * A * A / 12.0);
    CHECK(classical == doctest::Approx(2.17246925572468).epsilon(1e-10));
    const ConjugatePair cp(GFunction::one_dim_abs(PhiFunction::power(2.0)));
    const auto sol = solve(cp, src, std::numeric_limits<double>::infinity());
    CHECK(sol.I == doctest::Approx(classical).epsilon(1e-7));
}

TEST_CASE("squared loss on the unit interval") {
    const auto src = SourceDensity::uniform_box(Box{{0.0}, {1.0}});
    const ConjugatePair cp(GFunction::one_dim_abs(PhiFunction::power(2.0)));
    const auto sol = solve(cp, src, std::numeric_limits<double>::infinity());
    CHECK(sol.I == doctest::Approx(1.0 / (2.0 * std::sqrt(3.0))).epsilon(1e-8));
    CHECK(sol.xi(0.3) == doctest::Approx(sol.I).epsilon(1e-8));
    CHECK(sol.xi(1.5) == 0.0);
}

TEST_CASE("exp loss on a gaussian against an independent solver") {
    const auto oracle = exp_gaussian_oracle();
    CHECK(oracle.kappa == doctest::Approx(0.699).epsilon(0.01));
    CHECK(oracle.I == doctest::Approx(2.88).epsilon(0.02));

    const auto src = SourceDensity::gaussian(0.0, 1.0);
    const auto phi = PhiFunction::exp_minus_one();
    const ConjugatePair cp(GFunction::one_dim_abs(phi));
    const auto sol = solve(cp, src, phi.sup_value());
    REQUIRE(sol.kappa0.has_value());
    CHECK(*sol.kappa0 == doctest::Approx(oracle.kappa).epsilon(1e-5));
    CHECK(sol.I == doctest::Approx(oracle.I).epsilon(1e-5));
    CHECK(constraint_integral(cp, src, *sol.kappa0, Side::plus) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(dual_eval(cp, src, *sol.kappa0) == doctest::Approx(sol.I).epsilon(1e-6));

    // Far tails: xi(x) ~ 1 / x^2.
    for (double x : {8.0, 10.0, 12.0}) {
        const double expect = eta_of_log(std::log(oracle.kappa) - log_normal_pdf(x));
        CHECK(sol.xi(x) == doctest::Approx(expect).epsilon(1e-4));
        CHECK(sol.xi(x) * x * x >= 0.9);
        CHECK(sol.xi(x) * x * x <= 1.5);
    }

    const auto dual = maximize_dual(cp, src, 1.0);
    CHECK(dual.value == doctest::Approx(sol.I).epsilon(1e-6));
    CHECK(dual.kappa == doctest::Approx(*sol.kappa0).epsilon(1e-3));
    // Weak duality away from the optimum.
    CHECK(dual_eval(cp, src, 0.3) < sol.I);
    CHECK(dual_eval(cp, src, 3.0) < sol.I);
}

TEST_CASE("bounded loss below the mass threshold is degenerate") {
    const auto phi = PhiFunction::tabulated({{1.0, 0.8}, {2.0, 0.8}});
    const auto src = SourceDensity::gaussian(0.0, 1.0);
    const ConjugatePair cp(GFunction::one_dim_abs(phi));
    const auto sol = solve(cp, src, phi.sup_value());
    CHECK(sol.degenerate);
    CHECK(sol.I == 0.0);
    CHECK(sol.xi.is_zero());

    const auto phi2 = PhiFunction::tabulated({{1.0, 1.001}});
    const auto sol2 = solve(ConjugatePair(GFunction::one_dim_abs(phi2)), src, phi2.sup_value());
    CHECK_FALSE(sol2.degenerate);
    CHECK(sol2.I > 0.0);
    // phi = c min(t, 1), c = 1.001: g = c / (4 eta) for eta >= 1/2 and affine below,
    // so xi = sqrt(c h / (4 kappa)) where h > kappa / c and 0 elsewhere.
    const double c = 1.001;
    auto pieces = [&](double kappa, double& constraint, double& I) {
        const double arg = -2.0 * std::log(kappa / c * std::sqrt(2.0 * std::numbers::pi));
        const double xs = arg > 0.0 ? std::sqrt(arg) : 0.0;
        const auto eta = [&](double x) { return std::sqrt(c * normal_pdf(x) / (4.0 * kappa)); };
        const double inside = simpson([&](double x) { return c / (4.0 * eta(x)) * normal_pdf(x); }, -xs, xs, 2000);
        const double mass = std::erf(xs / std::sqrt(2.0));
        constraint = inside + c * (1.0 - mass);
        I = simpson(eta, -xs, xs, 2000);
    };
    double lo = 0.3, hi = c * normal_pdf(0.0), constraint = 0.0, I = 0.0;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        pieces(mid, constraint, I);
        if (constraint > 1.0) hi = mid;
        else lo = mid;
    }
    pieces(0.5 * (lo + hi), constraint, I);
    CHECK(I == doctest::Approx(0.0025).epsilon(0.05));
    CHECK(sol2.I == doctest::Approx(I).epsilon(1e-5));
    CHECK(*sol2.kappa0 == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-9));
}

TEST_CASE("affine stretch of g is resolved by mixing both sides") {
    // phi = 1.5 min(t, 1): g = 1.5 (1 - eta) on [0, 1/2], so any xi in [0, 1/2]
    // is optimal at the kink and g(xi) = 1 forces xi = 1/3 = (1 - alpha) / 2.
    const auto phi = PhiFunction::tabulated({{1.0, 1.5}});
    const auto src = SourceDensity::uniform_box(Box{{0.0}, {1.0}});
    const ConjugatePair cp(GFunction::one_dim_abs(phi));
    const auto sol = solve(cp, src, phi.sup_value());
    CHECK(sol.alpha_mix == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(sol.I == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(sol.xi(0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(sol.constraint_plus == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(sol.constraint_minus == doctest::Approx(0.75).epsilon(1e-6));
}

TEST_CASE("membership of normalized point densities") {
    const auto src = SourceDensity::gaussian(0.0, 1.0);
    const auto g = GFunction::one_dim_abs(PhiFunction::power(2.0));
    const ConjugatePair cp(g);
    const auto sol = solve(cp, src, std::numeric_limits<double>::infinity());
    const auto optimal = membership_check(sol, g, [&](std::span<const double> x) { return sol.xi(x) / sol.I; }, src);
    CHECK(optimal.member);
    CHECK(std::abs(optimal.mass_residual) < 1e-6);
    // The source density itself is a probability density but not optimal.
    const auto other = membership_check(sol, g, [&](std::span<const double> x) { return src.density(x); }, src);
    CHECK_FALSE(other.member);
    CHECK(std::abs(other.mass_residual) < 1e-6);
    CHECK(std::abs(other.constraint_residual) > 1e-2);
}

TEST_CASE("constraint of an arbitrary density") {
    const auto src = SourceDensity::uniform_box(Box{{0.0}, {1.0}});
    const auto g = GFunction::one_dim_abs(PhiFunction::power(2.0));
    const ConjugatePair cp(g);
    const PointDensity xi(cp, src, 1.0, 1.0, 1.0);
    // xi = gbar'(1) = eta with 1 / (6 eta^3) = 1, g(eta) = 1 / (12 eta^2).
    const double eta = std::cbrt(1.0 / 6.0);
    CHECK(xi(0.5) == doctest::Approx(eta).epsilon(1e-8));
    CHECK(constraint_of(g, src, xi) == doctest::Approx(1.0 / (12.0 * eta * eta)).epsilon(1e-8));
}
