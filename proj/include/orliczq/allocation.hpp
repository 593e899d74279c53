#pragma once

// The point allocation problem: minimize int xi over point densities xi with
// int g(xi) dmu <= 1, solved through the conjugate of g and a scalar
// multiplier kappa.

#include "orliczq/conjugate.hpp"
#include "orliczq/source.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace orliczq {

// xi(x) = alpha gbar'_+(kappa_plus / h(x)) + (1 - alpha) gbar'_-(kappa_minus / h(x)),
// and 0 where h(x) = 0.
class PointDensity {
public:
    PointDensity() = default;  // xi = 0
    PointDensity(ConjugatePair cp, SourceDensity src, double kappa_plus, double kappa_minus, double alpha);

    double operator()(std::span<const double> x) const;
    double operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }
    // xi as a function of log h.
    double at_log_density(double log_h) const;

    // Values of log h at which xi may jump (kinks of the conjugate).
    std::vector<double> log_levels() const;

    bool is_zero() const noexcept { return !state_; }
    double alpha() const noexcept;

private:
    struct State;
    std::shared_ptr<const State> state_;
};

struct SolveOptions {
    // Relative width of the final kappa bracket.
    double kappa_rel_tol = 1e-12;
    double alpha_tol = 1e-12;
    double quad_rel_tol = 1e-10;
    // Plus/minus constraint values closer than this are treated as equal.
    double side_gap_tol = 1e-9;
};

struct AllocationSolution {
    std::optional<double> kappa0;
    // Final bisection bracket: the minus side is evaluated at kappa_lo, the plus side at kappa_hi.
    double kappa_lo = 0.0;
    double kappa_hi = 0.0;
    double I = 0.0;
    PointDensity xi;
    double alpha_mix = 0.0;
    double constraint_value = 0.0;
    double constraint_plus = 0.0;
    double constraint_minus = 0.0;
    double dual_value = 0.0;
    double primal_error = 0.0;
    bool degenerate = false;
    int kappa_iterations = 0;
};

// int g(gbar'_side(kappa / h)) dmu.
double constraint_integral(const ConjugatePair& cp, const SourceDensity& src, double kappa, Side side,
                           double rel_tol = 1e-10);

// The same integral for an arbitrary point density.
double constraint_of(const GFunction& g, const SourceDensity& src, const PointDensity& xi, double rel_tol = 1e-10);

AllocationSolution solve(const ConjugatePair& cp, const SourceDensity& src, double phi_sup,
                         const SolveOptions& opt = {});

// (1 / kappa) (int gbar(kappa / h) dmu - 1).
double dual_eval(const ConjugatePair& cp, const SourceDensity& src, double kappa, double rel_tol = 1e-10);

struct DualMaximum {
    double kappa = 0.0;
    double value = 0.0;
    // Width of the final search interval in log kappa.
    double log_kappa_tol = 0.0;
};

// sup over kappa of the dual objective, by golden section in log kappa
// starting from kappa_start (the objective is unimodal in kappa).
DualMaximum maximize_dual(const ConjugatePair& cp, const SourceDensity& src, double kappa_start = 1.0);

struct MembershipVerdict {
    bool member = false;
    // int g(I nu) dmu - 1 and int nu - 1.
    double constraint_residual = 0.0;
    double mass_residual = 0.0;
    std::string detail;
};

// Whether the density nu (a probability density on R^d) is an optimal
// normalized point density: int g(I nu) dmu = 1 and int nu = 1 within tol.
MembershipVerdict membership_check(const AllocationSolution& sol, const GFunction& g,
                                   const std::function<double(std::span<const double>)>& nu,
                                   const SourceDensity& src, double tol = 1e-4);

}  // namespace orliczq
