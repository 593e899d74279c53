#pragma once

// The quantization-complexity function g(eta): the limiting per-cell loss of
// optimal codebooks for the uniform cube at point density eta.

#include "orliczq/numerics.hpp"
#include "orliczq/orlicz.hpp"

#include <cstdint>
#include <variant>
#include <vector>

namespace orliczq {

// g(eta) = 2 * int_0^{1/2} phi(t / eta) dt on (R, |.|).
struct OneDimAbs {
    PhiFunction phi;
};

// R^d with the sup-norm: the cube cell of volume 1/eta is itself a ball.
struct SupNormCube {
    PhiFunction phi;
    int d;
};

// Euclidean plane: g(eta) = E phi(eta^{-1/2} |U|), U uniform on the unit-area hexagon.
struct Hexagon2D {
    PhiFunction phi;
};

// User-supplied power law g(eta) = c * eta^{-p/d}.
struct PowerLaw {
    double c;
    double p;
    int d;
};

class GFunction {
public:
    using Variant = std::variant<OneDimAbs, SupNormCube, Hexagon2D, PowerLaw>;

    static GFunction one_dim_abs(const PhiFunction& phi);
    static GFunction sup_norm_cube(const PhiFunction& phi, int d);
    static GFunction hexagon_2d(const PhiFunction& phi);
    static GFunction power_law(double c, double p, int d);

    // g(eta) for eta >= 0, with g(0) = sup phi; +infinity where the value overflows.
    double operator()(double eta) const;
    // g'(eta) <= 0.
    double derivative(double eta) const;
    // log g(eta), finite even where g itself overflows.
    double log_value(double eta) const;
    // log(-g'(eta)).
    double log_neg_derivative(double eta) const;
    // Central difference with step eta * 1e-6.
    double finite_difference_derivative(double eta) const;

    // True when g' is not a finite difference (every supported variant).
    bool has_analytic_derivative() const;
    // g(0) = lim_{eta -> 0} g(eta) = sup phi.
    double at_zero() const;
    int dimension() const;
    const Variant& variant() const noexcept { return variant_; }
    // The loss behind the quadrature variants; nullptr for PowerLaw.
    const PhiFunction* phi() const noexcept;

    void set_quadrature(const QuadOptions& opt) { quad_ = opt; }
    const QuadOptions& quadrature() const noexcept { return quad_; }

    // Law of the normalized distance from a uniform point of a unit-volume
    // cell to its center: density on [0, rho].
    struct CellLaw {
        enum class Shape { Cube, Hexagon } shape = Shape::Cube;
        int d = 1;
        double rho = 0.5;
        double inradius = 0.5;
        std::vector<double> breaks;

        double density(double r) const;
        // density(rho - eps), accurate for tiny eps.
        double density_from_end(double eps) const;
    };
    const CellLaw& cell_law() const noexcept { return law_; }

private:
    explicit GFunction(Variant v);

    double scale_of(double eta) const;
    double direct_expectation(double s, bool derivative_moment) const;
    double log_shifted_expectation(double s, bool derivative_moment) const;
    double tabulated_expectation(const Tabulated& tab, double s) const;
    double tabulated_log_slope_moment(const Tabulated& tab, double s) const;

    Variant variant_;
    CellLaw law_;
    double power_moment_ = 0.0;
    QuadOptions quad_{1e-11, 2000, 1e4, 1e-300};
};

double g_eval(const GFunction& g, double eta);
double g_prime(const GFunction& g, double eta);

struct FNOracleResult {
    int n = 0;
    double eta = 0.0;
    double value = 0.0;
    std::vector<double> codebook;
};

// f_N(eta) for d = 1 and X uniform on [0,1): minimizes E phi((n/eta)|X - nearest|)
// over n codepoints by alternating cell/point descent with multiple starts.
FNOracleResult f_n_oracle(const PhiFunction& phi, int n, double eta, int restarts,
                          std::uint64_t seed = 0x0F0F0F0FULL);

}  // namespace orliczq
