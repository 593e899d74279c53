#include "orliczq/conjugate.hpp"

#include "orliczq/error.hpp"
#include "orliczq/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace orliczq {

namespace {

constexpr double kLogEtaMin = -460.0;  // eta ~ 1e-200
constexpr double kLogEtaMax = 460.0;
constexpr double kLogEtaTol = 1e-13;
constexpr std::size_t kCacheSize = 256;

}  // namespace

struct ConjugatePair::State {
    GFunction g;
    std::vector<CacheEntry> cache;
    std::vector<double> kinks;
};

namespace {

double scaled_minimum(const GFunction& g, double log_a) {
    // log F(u), F(u) = e^u + g(e^u) / a, is unimodal in u because a eta + g(eta)
    // is convex in eta; the log keeps the steep side near eta = 0 finite.
    auto log_F = [&](double u) { return log_add(u, g.log_value(std::exp(u)) - log_a); };
    const BracketedMinimum m = minimize_unimodal(log_F, 0.0, kLogEtaMin, kLogEtaMax, 1e-12);
    double best = std::exp(m.value);
    // Minimizer at eta = 0 when g(0) is finite and a exceeds -g'(0+).
    const double g0 = g.at_zero();
    if (std::isfinite(g0) && m.at_lower_limit) best = std::min(best, g0 * std::exp(-log_a));
    return best;
}

double derivative_log(const GFunction& g, double log_a, Side side) {
    if (log_a == kInf) return 0.0;
    if (std::isnan(log_a)) throw DomainError("gbar derivative: NaN argument");
    // Smallest minimizer: first eta where a + g'(eta) >= 0; largest: first where it is > 0.
    auto pred = [&](double u) {
        const double lng = g.log_neg_derivative(std::exp(u));
        return side == Side::plus ? lng <= log_a : lng < log_a;
    };
    if (pred(kLogEtaMin)) return 0.0;
    if (!pred(kLogEtaMax)) return std::exp(kLogEtaMax);
    return std::exp(bisect_first_true(pred, kLogEtaMin, kLogEtaMax, kLogEtaTol));
}

// In one dimension a tabulated loss that is constant on [t_i, t_{i+1}] makes
// g(eta) = 2 eta Phi(1 / (2 eta)) affine for eta in [1/(2 t_{i+1}), 1/(2 t_i)];
// gbar' jumps at minus the slope there. Past the last knot the stretch reaches
// eta = 0. Other variants average phi over a spread of radii and stay strictly
// convex.
std::vector<double> affine_kinks(const GFunction& g) {
    std::vector<double> out;
    const auto* one = std::get_if<OneDimAbs>(&g.variant());
    if (!one) return out;
    const auto* tab = std::get_if<Tabulated>(&one->phi.peel().base->kind());
    if (!tab) return out;
    auto add = [&](double eta) {
        const double a = -g.derivative(eta);
        if (a > 0.0 && std::isfinite(a)) out.push_back(a);
    };
    double t_prev = 0.0;
    double v_prev = 0.0;
    for (const auto& [t, v] : tab->knots) {
        if (v == v_prev && t > t_prev) add(1.0 / (t_prev + t));
        t_prev = t;
        v_prev = v;
    }
    add(1.0 / (4.0 * t_prev));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

ConjugatePair::ConjugatePair(GFunction g) {
    auto st = std::make_shared<State>(State{std::move(g), {}, {}});
    st->kinks = affine_kinks(st->g);
    st->cache.reserve(kCacheSize);
    const double log_lo = std::log(1e-6);
    const double log_hi = std::log(1e12);
    for (std::size_t i = 0; i < kCacheSize; ++i) {
        const double la = log_lo + (log_hi - log_lo) * static_cast<double>(i) / (kCacheSize - 1);
        const double a = std::exp(la);
        st->cache.push_back(CacheEntry{a, a * scaled_minimum(st->g, la), derivative_log(st->g, la, Side::plus),
                                       derivative_log(st->g, la, Side::minus)});
    }
    state_ = std::move(st);
}

const GFunction& ConjugatePair::g() const noexcept { return state_->g; }

std::span<const ConjugatePair::CacheEntry> ConjugatePair::cache() const noexcept { return state_->cache; }

std::span<const double> ConjugatePair::kinks() const noexcept { return state_->kinks; }

std::pair<double, double> ConjugatePair::eta_bracket() const noexcept {
    return {std::exp(kLogEtaMin), std::exp(kLogEtaMax)};
}

double ConjugatePair::gbar_over_a(double log_a) const {
    if (log_a == kInf) return 0.0;
    return scaled_minimum(state_->g, log_a);
}

double ConjugatePair::gbar(double a) const {
    if (!(a >= 0.0)) throw DomainError("gbar: argument must be >= 0, got " + std::to_string(a));
    if (a == 0.0) return 0.0;
    if (a == kInf) return state_->g.at_zero();
    return a * scaled_minimum(state_->g, std::log(a));
}

double ConjugatePair::gbar_derivative(double a, Side side) const {
    if (!(a > 0.0)) throw DomainError("gbar derivative: argument must be > 0, got " + std::to_string(a));
    return derivative_log(state_->g, std::log(a), side);
}

double ConjugatePair::gbar_derivative_log(double log_a, Side side) const {
    return derivative_log(state_->g, log_a, side);
}

double ConjugatePair::inv_neg_gprime(double t) const {
    if (!(t > 0.0)) throw DomainError("inv_neg_gprime: t must be > 0, got " + std::to_string(t));
    const GFunction& g = state_->g;
    auto neg_gprime = [&](double b) { return -g.derivative(b); };
    double lo = 1.0;
    double hi = 1.0;
    if (neg_gprime(1.0) <= t) {
        do {
            hi = lo;
            lo *= 0.5;
            if (lo < 1e-300) return 0.0;
        } while (neg_gprime(lo) <= t);
    } else {
        do {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e300) return hi;
        } while (neg_gprime(hi) > t);
    }
    while (hi - lo > 1e-15 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (neg_gprime(mid) <= t) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

double gbar_eval(const ConjugatePair& cp, double a) { return cp.gbar(a); }
double gbar_deriv(const ConjugatePair& cp, double a, Side side) { return cp.gbar_derivative(a, side); }
double inv_neg_gprime(const ConjugatePair& cp, double t) { return cp.inv_neg_gprime(t); }

}  // namespace orliczq
