#pragma once

// Tail weights, shell sequences and the summability check that makes
// epsilon-net tail codebooks cost O(N^{-1/d}).

#include "orliczq/orlicz.hpp"
#include "orliczq/source.hpp"

#include <string>
#include <variant>
#include <vector>

namespace orliczq {

// Psi(t) = t^p (log+ t)^beta.
struct PowerLogPsi {
    double p;
    double beta;
};

// Psi(t) = exp(t^kappa).
struct ExpPowerPsi {
    double kappa;
};

using TailWeight = std::variant<PowerLogPsi, ExpPowerPsi>;

double log_tail_weight(const TailWeight& psi, double t);

// r_n = scale * base^n.
struct GeometricRadii {
    double base = 2.0;
    double scale = 1.0;
};

// r_n = scale * (n + 1)^exponent.
struct PolynomialRadii {
    double exponent = 1.0;
    double scale = 1.0;
};

// alpha_n = scale * (n + 2)^(-gamma).
struct PolynomialWeights {
    double gamma = 2.0;
    double scale = 1.0;
};

// User-supplied values, index n at position n.
struct TabulatedSequence {
    std::vector<double> values;
};

using RadiusSequence = std::variant<GeometricRadii, PolynomialRadii, TabulatedSequence>;
using WeightSequence = std::variant<PolynomialWeights, TabulatedSequence>;

double radius_at(const RadiusSequence& r, int n);
double weight_at(const WeightSequence& alpha, int n);
// sum_{n >= from} alpha_n; +infinity when the closed family diverges (gamma <= 1).
double weight_tail_sum(const WeightSequence& alpha, int from);
// Largest usable index, or -1 for unbounded generators.
int sequence_limit(const RadiusSequence& r, const WeightSequence& alpha);

struct TailSpec {
    TailWeight psi;
    RadiusSequence r;
    WeightSequence alpha;

    // r strictly increasing and positive, alpha positive and nonincreasing on [0, n_check].
    void validate(int n_check) const;
};

enum class GrowthVerdict { converged, diverging, inconclusive };

const char* to_string(GrowthVerdict v);

struct GrowthReport {
    // Terms t_n = phi(c_E alpha_n^{-1/d} r_{n+1}) / Psi(r_n), n = first_index, ...
    int first_index = 0;
    std::vector<double> log_terms;
    std::vector<double> log_partial_sums;
    // t_{last} / t_{last - 1}.
    double term_ratio = 0.0;
    // Local power-law decay exponent over the second half of the range.
    double decay_exponent = 0.0;
    // log of the estimated remainder sum_{n > last} t_n.
    double log_remainder = 0.0;
    GrowthVerdict verdict = GrowthVerdict::inconclusive;
    std::string reason;

    double final_partial_sum() const;
};

GrowthReport check_growth_condition(const TailSpec& tail, const PhiFunction& phi, int d, double c_E, int n_max);

// E Psi(|X|) over the quad_domain of a one-dimensional source.
IntegralReport tail_moment(const SourceDensity& src, const TailWeight& psi);

}  // namespace orliczq
