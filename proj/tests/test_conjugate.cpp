#include "orliczq/conjugate.hpp"
#include "orliczq/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace orliczq;

namespace {

// Maximizes a concave function of log a over [lo, hi] by golden section.
template <class F>
double golden_max(F f, double lo, double hi) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-12) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return std::max(fc, fd);
}

}  // namespace

TEST_CASE("power-law conjugate in closed form") {
    const double c = 1.5, q = 2.0;
    const ConjugatePair cp(GFunction::power_law(c, q, 1));
    for (double a : {0.01, 0.3, 1.0, 7.0, 250.0}) {
        const double eta = std::pow(c * q / a, 1.0 / (q + 1.0));
        CHECK(cp.gbar(a) == doctest::Approx(a * eta + c * std::pow(eta, -q)).epsilon(1e-10));
        CHECK(cp.gbar_derivative(a, Side::plus) == doctest::Approx(eta).epsilon(1e-8));
        CHECK(cp.gbar_derivative(a, Side::minus) == doctest::Approx(eta).epsilon(1e-8));
        CHECK(cp.inv_neg_gprime(a) == doctest::Approx(eta).epsilon(1e-8));
    }
    CHECK(cp.gbar(0.0) == 0.0);
}

TEST_CASE("Fenchel identity for the exp loss") {
    const auto g = GFunction::one_dim_abs(PhiFunction::exp_minus_one());
    const ConjugatePair cp(g);
    for (double a : {0.05, 0.5, 2.0, 20.0, 400.0}) {
        const double eta = cp.gbar_derivative(a, Side::plus);
        CHECK(cp.gbar(a) == doctest::Approx(a * eta + g(eta)).epsilon(1e-9));
        CHECK(-g.derivative(eta) == doctest::Approx(a).epsilon(1e-6));
        // Inner objective is minimized: nearby eta do no better.
        CHECK(cp.gbar(a) <= a * eta * 1.01 + g(eta * 1.01) + 1e-12);
        CHECK(cp.gbar(a) <= a * eta * 0.99 + g(eta * 0.99) + 1e-12);
    }
}

TEST_CASE("double conjugate recovers g") {
    const auto g = GFunction::one_dim_abs(PhiFunction::power(2.0));
    const ConjugatePair cp(g);
    for (double eta : {0.2, 1.0, 3.0}) {
        const double back = golden_max([&](double u) { return cp.gbar(std::exp(u)) - std::exp(u) * eta; }, -20.0, 20.0);
        CHECK(back == doctest::Approx(g(eta)).epsilon(1e-7));
    }
}

TEST_CASE("bounded loss: an affine stretch of g gives a conjugate kink") {
    // phi(t) = min(t, 1) gives g(eta) = 1 - eta on [0, 1/2] and 1/(4 eta) beyond,
    // hence gbar(a) = min(sqrt(a), 1).
    const auto g = GFunction::one_dim_abs(PhiFunction::tabulated({{1.0, 1.0}}));
    CHECK(g(0.25) == doctest::Approx(0.75).epsilon(1e-10));
    CHECK(g(2.0) == doctest::Approx(0.125).epsilon(1e-10));
    const ConjugatePair cp(g);
    for (double a : {0.04, 0.25, 0.81, 1.0, 4.0}) CHECK(cp.gbar(a) == doctest::Approx(std::min(std::sqrt(a), 1.0)).epsilon(1e-8));
    CHECK(cp.gbar_derivative(1.0, Side::plus) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(cp.gbar_derivative(1.0, Side::minus) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(cp.gbar_derivative(0.25, Side::plus) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(cp.gbar_derivative(4.0, Side::minus) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(cp.gbar(std::numeric_limits<double>::infinity()) == doctest::Approx(1.0));
}

TEST_CASE("gbar over a in log space") {
    const auto g = GFunction::one_dim_abs(PhiFunction::exp_minus_one());
    const ConjugatePair cp(g);
    for (double a : {0.1, 3.0, 100.0}) CHECK(cp.gbar_over_a(std::log(a)) == doctest::Approx(cp.gbar(a) / a).epsilon(1e-9));
    // Beyond double range, log a = 800: the minimizer solves
    // 1/(2 eta) + log(1/eta - 2) = 800 and gbar/a = eta + g(eta)/a.
    double eta = 1.0 / 1600.0;
    for (int it = 0; it < 60; ++it) eta = 1.0 / (2.0 * (800.0 - std::log(1.0 / eta - 2.0)));
    const double u = 1.0 / (2.0 * eta);
    const double g_over_a = std::exp(u + std::log(2.0 * eta - (2.0 * eta + 1.0) * std::exp(-u)) - 800.0);
    CHECK(cp.gbar_over_a(800.0) == doctest::Approx(eta + g_over_a).epsilon(1e-8));
}

TEST_CASE("conjugate argument checks") {
    const ConjugatePair cp(GFunction::one_dim_abs(PhiFunction::power(2.0)));
    CHECK_THROWS_AS(cp.gbar(-1.0), DomainError);
    CHECK_FALSE(cp.cache().empty());
}
