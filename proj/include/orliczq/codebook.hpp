#pragma once

// Finite codebooks: stratified constructions from a point density, shell-wise
// covering nets for the tails, nearest-neighbour search, Monte Carlo
// distortion and empirical measures.

#include "orliczq/growth.hpp"
#include "orliczq/orlicz.hpp"
#include "orliczq/source.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace orliczq {

struct TailNetParams {
    // First shell index.
    int J = 0;
    RadiusSequence r = GeometricRadii{};
    WeightSequence alpha = PolynomialWeights{};
    // Covering constant; 0 selects covering_constant(geometry).
    double c_E = 0.0;
    // Upper bound for sum_{k >= J} alpha_k.
    double eps_tail = std::numeric_limits<double>::infinity();

    void validate() const;
    std::string describe() const;
};

// Covering constant of the cubic-grid nets: with a budget of k >= 1 points,
// every point of B(0, r) lies within c_E r k^{-1/d} of the net.
double covering_constant(const NormSpace& geometry);

struct ConstructionInfo {
    std::string kind;  // "stratified", "tail_net", "union", "loaded", ...
    long long target_n = 0;
    long long cells = 0;
    double safety_kappa = 0.0;
    std::optional<TailNetParams> tail;
};

struct Nearest {
    std::size_t index = 0;
    double distance = std::numeric_limits<double>::infinity();
};

// Immutable point set with a nearest-neighbour index. Points are stored in
// lexicographic order with near-duplicates (within 1e-12 per coordinate)
// removed.
class Codebook {
public:
    Codebook(NormSpace geometry, std::vector<double> coordinates, ConstructionInfo info = {});

    const NormSpace& geometry() const noexcept;
    int dimension() const noexcept;
    std::size_t size() const noexcept;
    std::span<const double> point(std::size_t i) const;
    // Row-major size() x dimension().
    const std::vector<double>& coordinates() const noexcept;
    const ConstructionInfo& construction() const noexcept;

    Nearest nearest(std::span<const double> x) const;
    Nearest nearest(double x) const { return nearest(std::span<const double>(&x, 1)); }
    // Linear scan; reference for the index.
    Nearest nearest_brute_force(std::span<const double> x) const;

    // Union of two codebooks over the same geometry.
    static Codebook unite(const Codebook& a, const Codebook& b);

    struct State;

private:
    std::shared_ptr<const State> state_;
};

// Partitions the box into 2^{(m+1)d} congruent cells, places floor(n nu(C_i))
// points per cell in a uniform pattern (nu = integral of xi over the cell) and
// adds the lattice safety_kappa n^{-1/d} Z^d inside the box (safety_kappa <= 0
// disables it).
Codebook build_stratified(const std::function<double(std::span<const double>)>& xi, long long n,
                          const Box& support_box, int m, double safety_kappa, const NormSpace& geometry);

// Per-cell point counts of build_stratified, before any safety lattice.
std::vector<long long> stratified_cell_counts(const std::function<double(std::span<const double>)>& xi,
                                              long long n, const Box& support_box, int m);

// Cubic-grid nets of B(0, r_{k+1}) with at most alpha_k n points for each
// shell k >= J while alpha_k n >= 1, plus the origin.
Codebook build_tail_net(const TailNetParams& params, long long n, const NormSpace& geometry);

// Smallest subdivision level m >= 0 whose cells receive at least
// min_per_cell points on average at codebook size n (at least m = 0).
int default_subdivision_level(long long n, int d, long long min_per_cell = 32);

// Nearest distances for rows of a row-major sample matrix.
std::vector<double> nearest_distances(const Codebook& cb, std::span<const double> samples, unsigned threads = 1);

struct DistortionOptions {
    std::size_t mc_samples = 200000;
    std::uint64_t seed = 0;
    unsigned shards = 16;
    unsigned threads = 1;
};

struct DistortionEstimate {
    double orlicz_value = 0.0;
    // Jackknife over shards.
    double std_error = 0.0;
    std::size_t samples = 0;
    unsigned shards = 0;
};

// Empirical Orlicz norm of the distance from source draws to the codebook.
// Shard s draws from stream s of the seed; the result depends only on the
// seed, the sample count and the shard count.
DistortionEstimate distortion(const Codebook& cb, const SourceDensity& src, const PhiFunction& phi,
                              const DistortionOptions& opt);

// Tensor histogram: bins[k] equal bins on [lower[k], upper[k]) along axis k.
struct HistogramSpec {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<int> bins;

    int dimension() const noexcept { return static_cast<int>(bins.size()); }
    std::size_t bin_count() const;
    Box bin_box(std::size_t flat) const;
};

struct Histogram {
    HistogramSpec spec;
    // |points in bin| / |points|, flat index row-major in the axes.
    std::vector<double> mass;
    std::size_t points_outside = 0;
};

Histogram empirical_measure(const Codebook& cb, const HistogramSpec& spec);

// sum over bins of |mass_b - integral of reference over bin b|.
double l1_distance(const Histogram& hist, const std::function<double(std::span<const double>)>& reference,
                   double rel_tol = 1e-8);

// One point per row with '#' metadata comments and a header row.
void write_codebook_csv(std::ostream& out, const Codebook& cb);
Codebook read_codebook_csv(std::istream& in, const NormSpace& geometry);

}  // namespace orliczq
