#include "orliczq/allocation.hpp"

#include "orliczq/error.hpp"
#include "orliczq/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace orliczq {

namespace {

constexpr int kMaxBracketSteps = 40;
// Point densities are floored here before evaluating g, so that g(0) = +inf
// does not turn h = 0+ into an infinite contribution.
constexpr double kMinDensity = 1e-200;

double log_g_at(const GFunction& g, double xi) { return g.log_value(std::max(xi, kMinDensity)); }

// gbar'(kappa / h) jumps where kappa / h hits a kink a, i.e. at log h = log kappa - log a.
void append_levels(const ConjugatePair& cp, double log_kappa, std::vector<double>& out) {
    for (double a : cp.kinks()) out.push_back(log_kappa - std::log(a));
}

std::vector<double> levels_at(const ConjugatePair& cp, double log_kappa) {
    std::vector<double> out;
    append_levels(cp, log_kappa, out);
    return out;
}

}  // namespace

struct PointDensity::State {
    ConjugatePair cp;
    SourceDensity src;
    double log_kappa_plus;
    double log_kappa_minus;
    double alpha;
};

PointDensity::PointDensity(ConjugatePair cp, SourceDensity src, double kappa_plus, double kappa_minus, double alpha) {
    if (!(kappa_plus > 0.0) || !(kappa_minus > 0.0)) throw DomainError("point density needs kappa > 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("point density mixing weight must lie in [0, 1]");
    state_ = std::make_shared<const State>(
        State{std::move(cp), std::move(src), std::log(kappa_plus), std::log(kappa_minus), alpha});
}

double PointDensity::alpha() const noexcept { return state_ ? state_->alpha : 0.0; }

double PointDensity::at_log_density(double log_h) const {
    if (!state_ || log_h == -kInf) return 0.0;
    const State& st = *state_;
    double value = 0.0;
    if (st.alpha < 1.0) value += (1.0 - st.alpha) * st.cp.gbar_derivative_log(st.log_kappa_minus - log_h, Side::minus);
    if (st.alpha > 0.0) value += st.alpha * st.cp.gbar_derivative_log(st.log_kappa_plus - log_h, Side::plus);
    return value;
}

std::vector<double> PointDensity::log_levels() const {
    std::vector<double> out;
    if (!state_) return out;
    append_levels(state_->cp, state_->log_kappa_plus, out);
    if (state_->log_kappa_minus != state_->log_kappa_plus) append_levels(state_->cp, state_->log_kappa_minus, out);
    return out;
}

double PointDensity::operator()(std::span<const double> x) const {
    if (!state_) return 0.0;
    return at_log_density(state_->src.log_density(x));
}

double constraint_integral(const ConjugatePair& cp, const SourceDensity& src, double kappa, Side side,
                           double rel_tol) {
    if (!(kappa > 0.0)) throw DomainError("constraint integral needs kappa > 0, got " + std::to_string(kappa));
    const double log_kappa = std::log(kappa);
    const GFunction& g = cp.g();
    return integrate_lebesgue(
               src,
               [&](std::span<const double>, double log_h) {
                   if (log_h == -kInf) return 0.0;
                   const double xi = cp.gbar_derivative_log(log_kappa - log_h, side);
                   return std::exp(log_g_at(g, xi) + log_h);
               },
               rel_tol, levels_at(cp, log_kappa))
        .value;
}

double constraint_of(const GFunction& g, const SourceDensity& src, const PointDensity& xi, double rel_tol) {
    return integrate_lebesgue(
               src,
               [&](std::span<const double>, double log_h) {
                   if (log_h == -kInf) return 0.0;
                   return std::exp(log_g_at(g, xi.at_log_density(log_h)) + log_h);
               },
               rel_tol, xi.log_levels())
        .value;
}

double dual_eval(const ConjugatePair& cp, const SourceDensity& src, double kappa, double rel_tol) {
    if (!(kappa > 0.0)) throw DomainError("dual objective needs kappa > 0, got " + std::to_string(kappa));
    const double log_kappa = std::log(kappa);
    // gbar(kappa / h) h = kappa * (gbar(a) / a) at a = kappa / h.
    const double integral = integrate_lebesgue(
                                src,
                                [&](std::span<const double>, double log_h) {
                                    if (log_h == -kInf) return 0.0;
                                    return cp.gbar_over_a(log_kappa - log_h);
                                },
                                rel_tol, levels_at(cp, log_kappa))
                                .value;
    return integral - 1.0 / kappa;
}

DualMaximum maximize_dual(const ConjugatePair& cp, const SourceDensity& src, double kappa_start) {
    if (!(kappa_start > 0.0)) throw DomainError("dual maximization needs a positive starting kappa");
    constexpr double kLogKappaTol = 1e-5;
    auto neg = [&](double u) { return -dual_eval(cp, src, std::exp(u)); };
    const double lim = kMaxBracketSteps * std::log(2.0);
    const BracketedMinimum m = minimize_unimodal(neg, std::log(kappa_start), -lim, lim, kLogKappaTol);
    return DualMaximum{std::exp(m.x), -m.value, kLogKappaTol};
}

AllocationSolution solve(const ConjugatePair& cp, const SourceDensity& src, double phi_sup, const SolveOptions& opt) {
    if (!(phi_sup > 0.0)) throw DomainError("sup phi must be > 0");
    const double ac = src.ac_mass();
    AllocationSolution sol;
    if (ac * phi_sup <= 1.0) {
        // Every codebook size reaches zero error asymptotically: xi = 0 is optimal.
        sol.degenerate = true;
        sol.constraint_value = ac * phi_sup;
        return sol;
    }
    auto C = [&](double kappa, Side side) { return constraint_integral(cp, src, kappa, side, opt.quad_rel_tol); };

    double lo = 1.0;
    double hi = 1.0;
    double c_lo = C(1.0, Side::minus);
    int steps = 0;
    if (c_lo > 1.0) {
        do {
            hi = lo;
            lo *= 0.5;
            c_lo = C(lo, Side::minus);
            if (++steps > kMaxBracketSteps) {
                throw SolverError("allocation: constraint stays above 1 for kappa down to " + std::to_string(lo));
            }
        } while (c_lo > 1.0);
    } else {
        double c_hi = c_lo;
        do {
            lo = hi;
            c_lo = c_hi;
            hi *= 2.0;
            c_hi = C(hi, Side::minus);
            if (++steps > kMaxBracketSteps) {
                throw SolverError("allocation: constraint " + std::to_string(c_hi) +
                                  " never reaches 1 for kappa up to " + std::to_string(hi) +
                                  "; ac_mass * sup phi = " + std::to_string(ac * phi_sup) +
                                  " (the problem is degenerate at or below 1)");
            }
        } while (c_hi <= 1.0);
    }
    // Invariant: C_-(lo) <= 1 < C_-(hi).
    while (hi / lo - 1.0 > opt.kappa_rel_tol) {
        const double mid = std::sqrt(lo * hi);
        if (mid <= lo || mid >= hi) break;
        ++sol.kappa_iterations;
        const double c = C(mid, Side::minus);
        if (c <= 1.0) {
            lo = mid;
            c_lo = c;
        } else {
            hi = mid;
        }
    }
    sol.kappa_lo = lo;
    sol.kappa_hi = hi;
    sol.kappa0 = std::sqrt(lo * hi);
    sol.constraint_minus = c_lo;
    sol.constraint_plus = C(hi, Side::plus);

    double alpha = 0.0;
    if (sol.constraint_plus - sol.constraint_minus > opt.side_gap_tol && 1.0 - c_lo > opt.side_gap_tol) {
        // g is affine on a stretch of densities: mix the two one-sided solutions.
        const GFunction& g = cp.g();
        double a_lo = 0.0;
        double a_hi = 1.0;
        while (a_hi - a_lo > opt.alpha_tol) {
            const double a = 0.5 * (a_lo + a_hi);
            const double c = constraint_of(g, src, PointDensity(cp, src, hi, lo, a), opt.quad_rel_tol);
            if (c <= 1.0) {
                a_lo = a;
            } else {
                a_hi = a;
            }
        }
        alpha = 0.5 * (a_lo + a_hi);
    }
    sol.alpha_mix = alpha;
    sol.xi = PointDensity(cp, src, hi, lo, alpha);
    sol.constraint_value = constraint_of(cp.g(), src, sol.xi, opt.quad_rel_tol);

    const PointDensity& xi = sol.xi;
    const IntegralReport primal = integrate_lebesgue(
        src, [&](std::span<const double>, double log_h) { return xi.at_log_density(log_h); }, opt.quad_rel_tol,
        xi.log_levels());
    sol.I = primal.value;
    sol.primal_error = primal.error;
    sol.dual_value = dual_eval(cp, src, *sol.kappa0, opt.quad_rel_tol);
    return sol;
}

MembershipVerdict membership_check(const AllocationSolution& sol, const GFunction& g,
                                   const std::function<double(std::span<const double>)>& nu,
                                   const SourceDensity& src, double tol) {
    if (sol.degenerate) throw UsageError("membership check needs a non-degenerate solution");
    MembershipVerdict v;
    const double I = sol.I;
    try {
        const double c = integrate_lebesgue(
                             src,
                             [&](std::span<const double> x, double log_h) {
                                 if (log_h == -kInf) return 0.0;
                                 return std::exp(log_g_at(g, I * nu(x)) + log_h);
                             },
                             1e-9)
                             .value;
        v.constraint_residual = std::isfinite(c) ? c - 1.0 : kInf;
    } catch (const NumericError&) {
        v.constraint_residual = kInf;
    }
    try {
        const double mass = integrate_lebesgue(src, [&](std::span<const double> x, double) { return nu(x); }, 1e-9).value;
        v.mass_residual = mass - 1.0;
    } catch (const NumericError&) {
        v.mass_residual = kInf;
    }
    v.member = std::abs(v.constraint_residual) <= tol && std::abs(v.mass_residual) <= tol;
    v.detail = "constraint residual " + std::to_string(v.constraint_residual) + ", mass residual " +
               std::to_string(v.mass_residual);
    return v;
}

}  // namespace orliczq
