#pragma once

// Absolutely continuous source laws on R^d (d = 1, 2): density, sampling and
// quadrature against the source measure.

#include "orliczq/random.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace orliczq {

// Axis-aligned box [lower, upper) per axis.
struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    int dimension() const noexcept { return static_cast<int>(lower.size()); }
    double volume() const;
    bool contains(std::span<const double> x) const;
};

struct Gaussian1D {
    double mean = 0.0;
    double sigma = 1.0;
};

struct UniformBox {
    Box box;
};

struct GaussianMixture1D {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> sigmas;
};

// Density values on a tensor grid: values[i * ys.size() + j] at (xs[i], ys[j]);
// ys is empty in one dimension. Interpolated (bi)linearly, zero off the grid.
struct GridDensity {
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> values;
};

struct IntegralReport {
    double value = 0.0;
    double error = 0.0;
    // Bound on the mass of the source outside the integration domain.
    double truncation_bound = 0.0;
};

class SourceDensity {
public:
    using Variant = std::variant<Gaussian1D, UniformBox, GaussianMixture1D, GridDensity>;

    // ac_mass in (0, 1] scales the density: h integrates to ac_mass.
    static SourceDensity gaussian(double mean, double sigma, double ac_mass = 1.0);
    static SourceDensity uniform_box(Box box, double ac_mass = 1.0);
    static SourceDensity gaussian_mixture(std::vector<double> weights, std::vector<double> means,
                                          std::vector<double> sigmas, double ac_mass = 1.0);
    // Values are rescaled so the interpolated density integrates to ac_mass.
    static SourceDensity grid(GridDensity grid, double ac_mass = 1.0);
    // CSV with header "x,h" or "x,y,h"; strictly increasing axes, full tensor grid.
    static SourceDensity grid_from_csv(std::istream& in, double ac_mass = 1.0);
    static SourceDensity grid_from_csv_file(const std::string& path, double ac_mass = 1.0);

    int dimension() const noexcept;
    double ac_mass() const noexcept;
    const Variant& variant() const noexcept;

    // Integration domain: +-8 sigma for Gaussian laws, the support otherwise.
    const Box& quad_domain() const noexcept;
    SourceDensity with_quad_domain(Box domain) const;
    // True when the support extends past quad_domain (Gaussian laws).
    bool unbounded_support() const noexcept;

    double density(std::span<const double> x) const;
    double density(double x) const { return density(std::span<const double>(&x, 1)); }
    // log h(x); -infinity off the support, accurate far into Gaussian tails.
    double log_density(std::span<const double> x) const;
    double log_density(double x) const { return log_density(std::span<const double>(&x, 1)); }

    // Distribution function of the normalized law (d = 1 only).
    double cdf(double x) const;
    // Source mass outside a box.
    double mass_outside(const Box& box) const;

    // Points where the density or its derivative has a kink, or where mass
    // concentrates; useful quadrature breakpoints per axis.
    std::vector<double> breakpoints(int axis) const;

    // One draw from the normalized law into out (size d).
    void sample(CounterRng& rng, std::span<double> out) const;
    // n draws, row-major n x d.
    std::vector<double> sample(std::size_t n, std::uint64_t seed, std::uint64_t stream = 0) const;

    // Shared immutable representation; opaque outside the implementation.
    struct State;

private:
    explicit SourceDensity(std::shared_ptr<const State> state) : state_(std::move(state)) {}
    std::shared_ptr<const State> state_;
};

double density_eval(const SourceDensity& src, std::span<const double> x);

// Integral of f h over quad_domain (tensorized in d = 2), with the tail mass
// of the source outside the domain as truncation bound.
IntegralReport integrate_mu(const SourceDensity& src, const std::function<double(std::span<const double>)>& f,
                            double rel_tol = 1e-8);

// Lebesgue integral of F(x, log h(x)) over R^d. For unbounded supports the
// two semi-infinite tails beyond quad_domain are integrated as well, so F must
// decay there. Where h = 0, F receives log h = -infinity. F may jump where
// log h crosses one of log_levels; those crossings become breakpoints.
IntegralReport integrate_lebesgue(const SourceDensity& src,
                                  const std::function<double(std::span<const double>, double)>& F,
                                  double rel_tol = 1e-10, std::span<const double> log_levels = {});

}  // namespace orliczq
