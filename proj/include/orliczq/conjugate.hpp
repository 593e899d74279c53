#pragma once

// The concave conjugate gbar(a) = inf_{eta >= 0} [a eta + g(eta)], its
// one-sided derivatives and the inverse of -g'.

#include "orliczq/g_function.hpp"

#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace orliczq {

enum class Side { plus, minus };

class ConjugatePair {
public:
    explicit ConjugatePair(GFunction g);

    const GFunction& g() const noexcept;

    // gbar(a) for a >= 0; gbar(+inf) = g(0).
    double gbar(double a) const;
    // gbar(a) / a given log a, for arguments far beyond double range.
    double gbar_over_a(double log_a) const;

    // gbar'_+(a) (side plus, the smallest inner minimizer) or gbar'_-(a)
    // (side minus, the largest). Zero at a = +infinity.
    double gbar_derivative(double a, Side side) const;
    double gbar_derivative_log(double log_a, Side side) const;

    // inf{b > 0 : -g'(b) <= t}.
    double inv_neg_gprime(double t) const;

    // Arguments a > 0 at which gbar' jumps (g affine on a stretch), ascending.
    std::span<const double> kinks() const noexcept;

    // Search interval for the inner minimizations, in eta.
    std::pair<double, double> eta_bracket() const noexcept;

    struct CacheEntry {
        double a;
        double gbar;
        double deriv_plus;
        double deriv_minus;
    };
    // gbar and its one-sided derivatives on a geometric grid over [1e-6, 1e12].
    std::span<const CacheEntry> cache() const noexcept;

private:
    struct State;
    std::shared_ptr<const State> state_;
};

double gbar_eval(const ConjugatePair& cp, double a);
double gbar_deriv(const ConjugatePair& cp, double a, Side side);
double inv_neg_gprime(const ConjugatePair& cp, double t);

}  // namespace orliczq
