#pragma once

// Loss functions, norms on R^d and the empirical Orlicz norm.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace orliczq {

// Arguments above this cap make exp(t) - 1 report +infinity.
inline constexpr double kExpArgumentCap = 700.0;

class PhiFunction;

struct Power {
    double p;
};

struct ExpMinusOne {};

// phi(t) = base(t) / delta.
struct ScaledLoss {
    std::shared_ptr<const PhiFunction> base;
    double delta;
};

// Piecewise-linear interpolation through (t, phi(t)) knots, constant past the
// last knot. A knot at the origin with value zero is implied.
struct Tabulated {
    std::vector<std::pair<double, double>> knots;
};

// The Orlicz loss: nondecreasing, left-continuous, vanishing at 0+.
class PhiFunction {
public:
    using Kind = std::variant<Power, ExpMinusOne, ScaledLoss, Tabulated>;

    static PhiFunction power(double p);
    static PhiFunction exp_minus_one();
    static PhiFunction scaled(const PhiFunction& base, double delta);
    static PhiFunction tabulated(std::vector<std::pair<double, double>> knots);

    // phi(t); throws DomainError for negative or NaN t.
    double operator()(double t) const;

    // log phi(t), finite wherever phi(t) > 0 (including where phi overflows).
    double log_value(double t) const;

    // phi'(t) when phi is smooth (power, exp and their scalings); nullopt otherwise.
    std::optional<double> derivative(double t) const;

    // log phi'(t) for smooth losses; nullopt otherwise.
    std::optional<double> log_derivative(double t) const;

    // Integral of phi over [0, T].
    double primitive(double T) const;

    // sup over t >= 0 of phi(t); +infinity for unbounded losses.
    double sup_value() const;

    // Arguments where phi has a kink (tabulated knots); empty for smooth losses.
    std::vector<double> kinks() const;

    bool is_smooth() const;

    const Kind& kind() const noexcept { return kind_; }

    // Strips nested ScaledLoss layers: phi = factor * base.
    struct Peeled {
        const PhiFunction* base;
        double factor;
    };
    Peeled peel() const noexcept;

private:
    explicit PhiFunction(Kind kind) : kind_(std::move(kind)) {}
    Kind kind_;
    double sup_ = 0.0;
};

double phi_eval(const PhiFunction& phi, double t);

// inf{t >= 0 : mean phi(d_i / t) <= 1}. Returns 0 when every t > 0 qualifies.
double orlicz_norm_of_samples(const PhiFunction& phi, std::span<const double> distances);

enum class NormKind { SupNorm, Euclidean };

class NormSpace {
public:
    NormSpace(int dimension, NormKind kind);

    int dimension() const noexcept { return dimension_; }
    NormKind kind() const noexcept { return kind_; }

    double norm(std::span<const double> x) const;
    double distance(std::span<const double> x, std::span<const double> y) const;

    // Constants (lower, upper) with lower * |x|_2 <= ||x|| <= upper * |x|_2.
    std::pair<double, double> euclidean_equivalence() const;

    // sup over x in [0,1)^d of ||x||, i.e. ||(1,...,1)||.
    double unit_cube_radius() const;

private:
    int dimension_;
    NormKind kind_;
};

}  // namespace orliczq
