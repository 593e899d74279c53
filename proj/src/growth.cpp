#include "orliczq/growth.hpp"

#include "orliczq/error.hpp"
#include "orliczq/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace orliczq {

namespace {

constexpr int kMaxGrowthTerms = 10000;
// Partial sums beyond this count use the integral remainder estimate.
constexpr int kExplicitTailTerms = 100000;

double log_tail_weight_of_log(const TailWeight& psi, double log_t) {
    if (const auto* pl = std::get_if<PowerLogPsi>(&psi)) {
        if (log_t <= 0.0) return pl->beta > 0.0 ? -kInf : pl->p * log_t;
        return pl->p * log_t + (pl->beta == 0.0 ? 0.0 : pl->beta * std::log(log_t));
    }
    const auto& ep = std::get<ExpPowerPsi>(psi);
    return std::exp(ep.kappa * log_t);
}

// log phi(e^{log_t}) for arguments that may exceed double range.
double log_phi_of_log(const PhiFunction& phi, double log_t) {
    if (log_t < 700.0) return phi.log_value(std::exp(log_t));
    const auto peeled = phi.peel();
    if (const auto* pw = std::get_if<Power>(&peeled.base->kind())) return std::log(peeled.factor) + pw->p * log_t;
    if (std::holds_alternative<ExpMinusOne>(peeled.base->kind())) return kInf;
    return std::log(phi.sup_value());
}

double log_radius_at(const RadiusSequence& r, int n) {
    if (const auto* g = std::get_if<GeometricRadii>(&r)) return std::log(g->scale) + n * std::log(g->base);
    if (const auto* p = std::get_if<PolynomialRadii>(&r)) return std::log(p->scale) + p->exponent * std::log(n + 1.0);
    const auto& t = std::get<TabulatedSequence>(r);
    if (n < 0 || static_cast<std::size_t>(n) >= t.values.size()) {
        throw DomainError("tabulated radius sequence has no entry " + std::to_string(n));
    }
    return std::log(t.values[static_cast<std::size_t>(n)]);
}

}  // namespace

double log_tail_weight(const TailWeight& psi, double t) {
    if (!(t >= 0.0)) throw DomainError("tail weight needs t >= 0");
    return log_tail_weight_of_log(psi, std::log(t));
}

double radius_at(const RadiusSequence& r, int n) { return std::exp(log_radius_at(r, n)); }

double weight_at(const WeightSequence& alpha, int n) {
    if (const auto* p = std::get_if<PolynomialWeights>(&alpha)) return p->scale * std::pow(n + 2.0, -p->gamma);
    const auto& t = std::get<TabulatedSequence>(alpha);
    if (n < 0 || static_cast<std::size_t>(n) >= t.values.size()) {
        throw DomainError("tabulated weight sequence has no entry " + std::to_string(n));
    }
    return t.values[static_cast<std::size_t>(n)];
}

double weight_tail_sum(const WeightSequence& alpha, int from) {
    from = std::max(from, 0);
    if (const auto* t = std::get_if<TabulatedSequence>(&alpha)) {
        double s = 0.0;
        for (std::size_t n = static_cast<std::size_t>(from); n < t->values.size(); ++n) s += t->values[n];
        return s;
    }
    const auto& p = std::get<PolynomialWeights>(alpha);
    if (p.gamma <= 1.0) return kInf;
    double s = 0.0;
    const int last = from + kExplicitTailTerms;
    for (int n = last - 1; n >= from; --n) s += std::pow(n + 2.0, -p.gamma);
    // sum_{n >= last} (n + 2)^{-gamma} by Euler-Maclaurin to second order.
    const double x = last + 2.0;
    s += std::pow(x, 1.0 - p.gamma) / (p.gamma - 1.0) + 0.5 * std::pow(x, -p.gamma) +
         p.gamma / 12.0 * std::pow(x, -p.gamma - 1.0);
    return p.scale * s;
}

int sequence_limit(const RadiusSequence& r, const WeightSequence& alpha) {
    int limit = -1;
    if (const auto* t = std::get_if<TabulatedSequence>(&r)) limit = static_cast<int>(t->values.size()) - 2;
    if (const auto* t = std::get_if<TabulatedSequence>(&alpha)) {
        const int a = static_cast<int>(t->values.size()) - 1;
        limit = limit < 0 ? a : std::min(limit, a);
    }
    return limit;
}

void TailSpec::validate(int n_check) const {
    if (const auto* pl = std::get_if<PowerLogPsi>(&psi)) {
        if (!(pl->p > 0.0) || !(pl->beta >= 0.0)) throw DomainError("PowerLog tail weight needs p > 0, beta >= 0");
    } else if (!(std::get<ExpPowerPsi>(psi).kappa > 0.0)) {
        throw DomainError("ExpPower tail weight needs kappa > 0");
    }
    if (const auto* g = std::get_if<GeometricRadii>(&r)) {
        if (!(g->base > 1.0) || !(g->scale > 0.0)) throw DomainError("geometric radii need base > 1, scale > 0");
    } else if (const auto* p = std::get_if<PolynomialRadii>(&r)) {
        if (!(p->exponent > 0.0) || !(p->scale > 0.0)) throw DomainError("polynomial radii need exponent > 0, scale > 0");
    }
    if (const auto* p = std::get_if<PolynomialWeights>(&alpha)) {
        if (!(p->gamma > 0.0) || !(p->scale > 0.0)) throw DomainError("polynomial weights need gamma > 0, scale > 0");
    }
    const int limit = sequence_limit(r, alpha);
    if (limit == -1 && (std::holds_alternative<TabulatedSequence>(r) || std::holds_alternative<TabulatedSequence>(alpha))) {
        throw DomainError("tabulated sequences need at least two entries");
    }
    const int last = limit < 0 ? n_check : std::min(n_check, limit);
    double prev_r = -kInf;
    double prev_a = kInf;
    for (int n = 0; n <= last; ++n) {
        const double lr = log_radius_at(r, n);
        const double a = weight_at(alpha, n);
        if (!std::isfinite(lr) || !(lr > prev_r)) {
            throw DomainError("radius sequence must be positive and strictly increasing (index " + std::to_string(n) + ")");
        }
        if (!(a > 0.0) || !(a <= prev_a)) {
            throw DomainError("weight sequence must be positive and nonincreasing (index " + std::to_string(n) + ")");
        }
        prev_r = lr;
        prev_a = a;
    }
}

const char* to_string(GrowthVerdict v) {
    switch (v) {
        case GrowthVerdict::converged: return "converged";
        case GrowthVerdict::diverging: return "diverging";
        case GrowthVerdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

double GrowthReport::final_partial_sum() const {
    return log_partial_sums.empty() ? 0.0 : std::exp(log_partial_sums.back());
}

GrowthReport check_growth_condition(const TailSpec& tail, const PhiFunction& phi, int d, double c_E, int n_max) {
    if (n_max < 8 || n_max > kMaxGrowthTerms) {
        throw UsageError("growth check needs 8 <= n_max <= " + std::to_string(kMaxGrowthTerms));
    }
    if (d < 1) throw DomainError("growth check needs d >= 1");
    if (!(c_E > 0.0)) throw DomainError("growth check needs c_E > 0");
    const int limit = sequence_limit(tail.r, tail.alpha);
    if (limit >= 0) n_max = std::min(n_max, limit);
    tail.validate(n_max);

    GrowthReport rep;
    int first = 0;
    while (first <= n_max && !std::isfinite(log_tail_weight_of_log(tail.psi, log_radius_at(tail.r, first)))) ++first;
    rep.first_index = first;
    if (n_max - first < 8) {
        rep.reason = "fewer than 8 terms with a finite tail weight";
        return rep;
    }
    const double log_c = std::log(c_E);
    double acc = -kInf;
    for (int n = first; n <= n_max; ++n) {
        const double log_arg = log_c - std::log(weight_at(tail.alpha, n)) / d + log_radius_at(tail.r, n + 1);
        const double lt = log_phi_of_log(phi, log_arg) - log_tail_weight_of_log(tail.psi, log_radius_at(tail.r, n));
        rep.log_terms.push_back(lt);
        acc = log_add(acc, lt);
        rep.log_partial_sums.push_back(acc);
    }

    const std::size_t last = rep.log_terms.size() - 1;
    const std::size_t mid = last / 2;
    const std::size_t quarter = last / 4;
    const double L_last = rep.log_terms[last];
    const double L_mid = rep.log_terms[mid];
    const double L_quarter = rep.log_terms[quarter];
    const double log_S = rep.log_partial_sums.back();
    auto index_of = [&](std::size_t i) { return static_cast<double>(first + static_cast<int>(i)) + 1.0; };

    if (std::isnan(L_last) || L_last == kInf) {
        rep.verdict = GrowthVerdict::diverging;
        rep.reason = "terms overflow: they do not vanish";
        rep.log_remainder = kInf;
        return rep;
    }
    if (L_last == -kInf) {
        rep.verdict = GrowthVerdict::converged;
        rep.reason = "terms underflow to zero";
        rep.term_ratio = 0.0;
        rep.log_remainder = -kInf;
        return rep;
    }
    const double log_ratio = L_last - rep.log_terms[last - 1];
    rep.term_ratio = std::exp(log_ratio);
    const double s_late = -(L_last - L_mid) / std::log(index_of(last) / index_of(mid));
    const double s_early = -(L_mid - L_quarter) / std::log(index_of(mid) / index_of(quarter));
    rep.decay_exponent = s_late;

    if (!(L_last < L_mid)) {
        rep.verdict = GrowthVerdict::diverging;
        rep.reason = "terms do not decrease over the second half of the range";
        rep.log_remainder = kInf;
        return rep;
    }
    const double log_tol = std::log(1e-9) + log_S;
    if (log_ratio < 0.0) {
        // Geometric bound t_last * rho / (1 - rho), valid while the ratios keep shrinking.
        const double rho = rep.term_ratio;
        const double log_geo = L_last + std::log(rho) - std::log1p(-rho);
        const bool ratios_shrinking = log_ratio <= rep.log_terms[last - 1] - rep.log_terms[last - 2] + 1e-12;
        if (ratios_shrinking && log_geo < log_tol) {
            rep.verdict = GrowthVerdict::converged;
            rep.reason = "geometric remainder bound below 1e-9 of the partial sum";
            rep.log_remainder = log_geo;
            return rep;
        }
    }
    if (s_late > 1.05 && s_early > 1.05) {
        // Power-law remainder: sum_{n > N} C n^{-s} <= t_N N / (s - 1).
        rep.verdict = GrowthVerdict::converged;
        rep.reason = "terms decay like n^-s with s > 1";
        rep.log_remainder = L_last + std::log(index_of(last)) - std::log(s_late - 1.0);
        return rep;
    }
    if (s_late <= 1.0 && s_early <= 1.05) {
        rep.verdict = GrowthVerdict::diverging;
        rep.reason = "terms decay no faster than 1/n";
        rep.log_remainder = kInf;
        return rep;
    }
    rep.reason = "decay too slow or irregular to certify";
    rep.log_remainder = kInf;
    return rep;
}

IntegralReport tail_moment(const SourceDensity& src, const TailWeight& psi) {
    return integrate_mu(src, [&](std::span<const double> x) {
        double r2 = 0.0;
        for (double v : x) r2 += v * v;
        return std::exp(log_tail_weight(psi, std::sqrt(r2)));
    });
}

}  // namespace orliczq
