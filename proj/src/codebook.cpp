#include "orliczq/codebook.hpp"

#include "orliczq/error.hpp"
#include "orliczq/numerics.hpp"
#include "orliczq/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace orliczq {

namespace {

constexpr double kDuplicateTol = 1e-12;
// Rough number of points per bucket of the two-dimensional index.
constexpr double kPointsPerBucket = 2.0;
constexpr std::size_t kBruteForceBelow = 32;
constexpr long long kMaxShells = 1000000;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void require_supported_dimension(int d, const char* what) {
    if (d != 1 && d != 2) throw UsageError(std::string(what) + ": only dimensions 1 and 2 are supported");
}

double point_distance(NormKind kind, const double* a, const double* b, int d) {
    if (d == 1) return std::abs(a[0] - b[0]);
    const double dx = std::abs(a[0] - b[0]);
    const double dy = std::abs(a[1] - b[1]);
    return kind == NormKind::SupNorm ? std::max(dx, dy) : std::sqrt(dx * dx + dy * dy);
}

// Sorts points lexicographically and drops near-duplicates.
std::vector<double> canonical_points(std::vector<double> coords, int d) {
    if (coords.size() % static_cast<std::size_t>(d) != 0) {
        throw UsageError("codebook coordinates are not a multiple of the dimension");
    }
    for (double v : coords) {
        if (!std::isfinite(v)) throw UsageError("codebook coordinates must be finite");
    }
    const std::size_t n = coords.size() / static_cast<std::size_t>(d);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto at = [&](std::size_t i, int k) { return coords[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)]; };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        for (int k = 0; k < d; ++k) {
            if (at(a, k) != at(b, k)) return at(a, k) < at(b, k);
        }
        return false;
    });
    std::vector<double> out;
    out.reserve(coords.size());
    auto close = [](double a, double b) { return std::abs(a - b) <= kDuplicateTol * std::max(1.0, std::abs(a)); };
    for (std::size_t i : order) {
        bool duplicate = false;
        // Kept points are sorted by first coordinate; scan back over the close ones.
        for (std::size_t j = out.size() / static_cast<std::size_t>(d); j-- > 0;) {
            const double* q = &out[j * static_cast<std::size_t>(d)];
            if (!close(q[0], at(i, 0))) break;
            bool same = true;
            for (int k = 1; k < d && same; ++k) same = close(q[k], at(i, k));
            if (same) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) {
            for (int k = 0; k < d; ++k) out.push_back(at(i, k));
        }
    }
    return out;
}

// Uniform-grid buckets over the bounding box of planar points.
struct BucketGrid {
    double x0 = 0.0;
    double y0 = 0.0;
    double cell = 1.0;
    long long nx = 1;
    long long ny = 1;
    std::vector<std::size_t> start;
    std::vector<std::size_t> items;

    long long bucket_coord(double v, double origin) const {
        const double c = std::floor((v - origin) / cell);
        return static_cast<long long>(std::clamp(c, -1e15, 1e15));
    }
};

BucketGrid make_buckets(const std::vector<double>& pts) {
    BucketGrid b;
    const std::size_t n = pts.size() / 2;
    double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
    for (std::size_t i = 0; i < n; ++i) {
        xmin = std::min(xmin, pts[2 * i]);
        xmax = std::max(xmax, pts[2 * i]);
        ymin = std::min(ymin, pts[2 * i + 1]);
        ymax = std::max(ymax, pts[2 * i + 1]);
    }
    const double wx = xmax - xmin;
    const double wy = ymax - ymin;
    const double extent = std::max({wx, wy, 1e-300});
    double cell = std::sqrt(std::max(wx, extent * 1e-6) * std::max(wy, extent * 1e-6) * kPointsPerBucket /
                            static_cast<double>(n));
    // Keep the bucket count proportional to the point count.
    const double max_side = std::max(2.0, std::sqrt(4.0 * static_cast<double>(n)) * 4.0);
    cell = std::max({cell, wx / max_side, wy / max_side, extent * 1e-12});
    b.x0 = xmin;
    b.y0 = ymin;
    b.cell = cell;
    b.nx = static_cast<long long>(std::floor(wx / cell)) + 1;
    b.ny = static_cast<long long>(std::floor(wy / cell)) + 1;
    const std::size_t buckets = static_cast<std::size_t>(b.nx * b.ny);
    std::vector<std::size_t> counts(buckets + 1, 0);
    std::vector<std::size_t> key(n);
    for (std::size_t i = 0; i < n; ++i) {
        const long long ix = std::min(b.bucket_coord(pts[2 * i], b.x0), b.nx - 1);
        const long long iy = std::min(b.bucket_coord(pts[2 * i + 1], b.y0), b.ny - 1);
        key[i] = static_cast<std::size_t>(ix * b.ny + iy);
        ++counts[key[i] + 1];
    }
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    b.start = counts;
    b.items.resize(n);
    std::vector<std::size_t> fill(counts.begin(), counts.end() - 1);
    for (std::size_t i = 0; i < n; ++i) b.items[fill[key[i]]++] = i;
    return b;
}

}  // namespace

struct Codebook::State {
    NormSpace geometry;
    std::vector<double> coords;
    ConstructionInfo info;
    BucketGrid grid;
};

Codebook::Codebook(NormSpace geometry, std::vector<double> coordinates, ConstructionInfo info) {
    const int d = geometry.dimension();
    require_supported_dimension(d, "codebook");
    auto st = std::make_shared<State>(State{geometry, canonical_points(std::move(coordinates), d), std::move(info), {}});
    if (st->coords.empty()) throw UsageError("codebook needs at least one point");
    if (d == 2 && st->coords.size() / 2 >= kBruteForceBelow) st->grid = make_buckets(st->coords);
    state_ = std::move(st);
}

const NormSpace& Codebook::geometry() const noexcept { return state_->geometry; }
int Codebook::dimension() const noexcept { return state_->geometry.dimension(); }
std::size_t Codebook::size() const noexcept { return state_->coords.size() / static_cast<std::size_t>(dimension()); }

std::span<const double> Codebook::point(std::size_t i) const {
    if (i >= size()) throw UsageError("codebook point index out of range");
    const std::size_t d = static_cast<std::size_t>(dimension());
    return std::span<const double>(state_->coords.data() + i * d, d);
}

const std::vector<double>& Codebook::coordinates() const noexcept { return state_->coords; }
const ConstructionInfo& Codebook::construction() const noexcept { return state_->info; }

Nearest Codebook::nearest_brute_force(std::span<const double> x) const {
    const int d = dimension();
    if (static_cast<int>(x.size()) != d) throw UsageError("nearest: query dimension mismatch");
    const NormKind kind = geometry().kind();
    Nearest best;
    for (std::size_t i = 0; i < size(); ++i) {
        const double dist = point_distance(kind, x.data(), &state_->coords[i * static_cast<std::size_t>(d)], d);
        if (dist < best.distance) best = {i, dist};
    }
    return best;
}

Nearest Codebook::nearest(std::span<const double> x) const {
    const int d = dimension();
    if (static_cast<int>(x.size()) != d) throw UsageError("nearest: query dimension mismatch");
    const std::vector<double>& c = state_->coords;
    const std::size_t n = size();
    if (d == 1) {
        const auto it = std::lower_bound(c.begin(), c.end(), x[0]);
        const std::size_t hi = static_cast<std::size_t>(it - c.begin());
        Nearest best;
        if (hi > 0) best = {hi - 1, std::abs(x[0] - c[hi - 1])};
        if (hi < n && std::abs(c[hi] - x[0]) < best.distance) best = {hi, std::abs(c[hi] - x[0])};
        return best;
    }
    if (n < kBruteForceBelow) return nearest_brute_force(x);

    const BucketGrid& g = state_->grid;
    const NormKind kind = geometry().kind();
    const long long ix = g.bucket_coord(x[0], g.x0);
    const long long iy = g.bucket_coord(x[1], g.y0);
    Nearest best;
    auto scan = [&](long long i, long long j) {
        const std::size_t b = static_cast<std::size_t>(i * g.ny + j);
        for (std::size_t k = g.start[b]; k < g.start[b + 1]; ++k) {
            const std::size_t p = g.items[k];
            const double dist = point_distance(kind, x.data(), &c[2 * p], 2);
            if (dist < best.distance || (dist == best.distance && p < best.index)) best = {p, dist};
        }
    };
    // Rings of buckets at Chebyshev distance k from the query bucket; points in
    // ring k are at least (k - 1) * cell away in some coordinate.
    const long long k_first = std::max({0LL, -ix, ix - (g.nx - 1), -iy, iy - (g.ny - 1)});
    const long long k_last = std::max({ix, g.nx - 1 - ix, iy, g.ny - 1 - iy});
    for (long long k = k_first; k <= k_last; ++k) {
        if (k >= 1 && static_cast<double>(k - 1) * g.cell > best.distance) break;
        if (k == 0) {
            scan(ix, iy);
            continue;
        }
        const long long i_lo = std::max(0LL, ix - k);
        const long long i_hi = std::min(g.nx - 1, ix + k);
        for (long long j : {iy - k, iy + k}) {
            if (j < 0 || j >= g.ny) continue;
            for (long long i = i_lo; i <= i_hi; ++i) scan(i, j);
        }
        const long long j_lo = std::max(0LL, iy - k + 1);
        const long long j_hi = std::min(g.ny - 1, iy + k - 1);
        for (long long i : {ix - k, ix + k}) {
            if (i < 0 || i >= g.nx) continue;
            for (long long j = j_lo; j <= j_hi; ++j) scan(i, j);
        }
    }
    return best;
}

Codebook Codebook::unite(const Codebook& a, const Codebook& b) {
    if (a.dimension() != b.dimension() || a.geometry().kind() != b.geometry().kind()) {
        throw UsageError("codebook union needs a common geometry");
    }
    std::vector<double> coords = a.coordinates();
    coords.insert(coords.end(), b.coordinates().begin(), b.coordinates().end());
    const ConstructionInfo& ia = a.construction();
    const ConstructionInfo& ib = b.construction();
    ConstructionInfo info;
    info.kind = ia.kind.empty() ? ib.kind : ib.kind.empty() ? ia.kind : ia.kind + "+" + ib.kind;
    info.target_n = std::max(ia.target_n, ib.target_n);
    info.cells = ia.cells + ib.cells;
    info.safety_kappa = std::max(ia.safety_kappa, ib.safety_kappa);
    info.tail = ia.tail ? ia.tail : ib.tail;
    return Codebook(a.geometry(), std::move(coords), std::move(info));
}

double covering_constant(const NormSpace& geometry) {
    // A grid of m points per axis on [-r, r]^d has sup-norm covering radius r / m,
    // and m = floor(k^{1/d}) >= k^{1/d} / 2 for a budget of k >= 1 points.
    return 2.0 * geometry.unit_cube_radius();
}

void TailNetParams::validate() const {
    if (J < 0) throw DomainError("tail net start index J must be >= 0");
    if (c_E < 0.0 || !std::isfinite(c_E)) throw DomainError("tail net c_E must be finite and >= 0");
    TailSpec{PowerLogPsi{1.0, 0.0}, r, alpha}.validate(J + 64);
    const double tail_sum = weight_tail_sum(alpha, J);
    if (!(tail_sum < eps_tail)) {
        throw DomainError("tail net weights sum to " + format_double(tail_sum) + " from J = " + std::to_string(J) +
                          ", not below eps_tail = " + format_double(eps_tail));
    }
}

std::string TailNetParams::describe() const {
    std::string s = "J=" + std::to_string(J) + ";r=";
    if (const auto* g = std::get_if<GeometricRadii>(&r)) {
        s += "geometric(base=" + format_double(g->base) + ",scale=" + format_double(g->scale) + ")";
    } else if (const auto* p = std::get_if<PolynomialRadii>(&r)) {
        s += "polynomial(exponent=" + format_double(p->exponent) + ",scale=" + format_double(p->scale) + ")";
    } else {
        s += "tabulated(" + std::to_string(std::get<TabulatedSequence>(r).values.size()) + ")";
    }
    s += ";alpha=";
    if (const auto* p = std::get_if<PolynomialWeights>(&alpha)) {
        s += "polynomial(gamma=" + format_double(p->gamma) + ",scale=" + format_double(p->scale) + ")";
    } else {
        s += "tabulated(" + std::to_string(std::get<TabulatedSequence>(alpha).values.size()) + ")";
    }
    s += ";c_E=" + format_double(c_E);
    return s;
}

int default_subdivision_level(long long n, int d, long long min_per_cell) {
    require_supported_dimension(d, "subdivision level");
    int m = 0;
    // Cells at level m + 1: 2^{(m+2) d}.
    while (m < 20 && (n / min_per_cell) >= (1LL << ((m + 2) * d))) ++m;
    return m;
}

namespace {

double cell_integral(const std::function<double(std::span<const double>)>& xi, const Box& cell,
                     double rel_tol = 1e-10) {
    QuadOptions opt;
    opt.rel_tol = rel_tol;
    opt.abs_floor = 1e-200;
    if (cell.dimension() == 1) {
        return integrate([&](double x) { return xi(std::span<const double>(&x, 1)); }, cell.lower[0], cell.upper[0], opt)
            .value;
    }
    return integrate(
               [&](double x) {
                   return integrate(
                              [&](double y) {
                                  const double p[2] = {x, y};
                                  return xi(std::span<const double>(p, 2));
                              },
                              cell.lower[1], cell.upper[1], opt)
                       .value;
               },
               cell.lower[0], cell.upper[0], opt)
        .value;
}

void check_stratified_args(long long n, const Box& box, int m) {
    if (n < 1) throw UsageError("stratified codebook needs n >= 1");
    require_supported_dimension(box.dimension(), "stratified codebook");
    if (box.upper.size() != box.lower.size()) throw UsageError("support box bounds differ in dimension");
    for (int k = 0; k < box.dimension(); ++k) {
        if (!(box.upper[k] > box.lower[k]) || !std::isfinite(box.lower[k]) || !std::isfinite(box.upper[k])) {
            throw UsageError("stratified codebook: empty or unbounded support box");
        }
    }
    if (m < 0 || m > 20) throw UsageError("subdivision level m must lie in [0, 20]");
}

Box cell_box(const Box& box, long long per_axis, long long i, long long j) {
    Box c;
    const double wx = (box.upper[0] - box.lower[0]) / static_cast<double>(per_axis);
    c.lower.push_back(box.lower[0] + static_cast<double>(i) * wx);
    c.upper.push_back(box.lower[0] + static_cast<double>(i + 1) * wx);
    if (box.dimension() == 2) {
        const double wy = (box.upper[1] - box.lower[1]) / static_cast<double>(per_axis);
        c.lower.push_back(box.lower[1] + static_cast<double>(j) * wy);
        c.upper.push_back(box.lower[1] + static_cast<double>(j + 1) * wy);
    }
    return c;
}

long long floor_root(long long k, int d) {
    if (d == 1) return k;
    long long m = static_cast<long long>(std::floor(std::sqrt(static_cast<double>(k))));
    while (m * m > k) --m;
    while ((m + 1) * (m + 1) <= k) ++m;
    return m;
}

void place_pattern(const Box& cell, long long count, NormKind kind, std::vector<double>& out) {
    if (count <= 0) return;
    const double x0 = cell.lower[0];
    const double wx = cell.upper[0] - x0;
    if (cell.dimension() == 1) {
        for (long long i = 0; i < count; ++i) {
            out.push_back(x0 + (static_cast<double>(i) + 0.5) * wx / static_cast<double>(count));
        }
        return;
    }
    const double y0 = cell.lower[1];
    const double wy = cell.upper[1] - y0;
    if (kind == NormKind::SupNorm) {
        const long long k = floor_root(count, 2);
        for (long long i = 0; i < k; ++i) {
            for (long long j = 0; j < k; ++j) {
                out.push_back(x0 + (static_cast<double>(i) + 0.5) * wx / static_cast<double>(k));
                out.push_back(y0 + (static_cast<double>(j) + 0.5) * wy / static_cast<double>(k));
            }
        }
        return;
    }
    // Hexagonal pattern fitted to the cell: rows spaced sqrt(3)/2 of the
    // column spacing, alternate rows shifted by half a column.
    const long long cols = std::max(1LL, static_cast<long long>(std::floor(std::sqrt(count * std::sqrt(3.0) / 2.0))));
    const long long rows = count / cols;
    const double sx = wx / static_cast<double>(cols);
    const double sy = wy / static_cast<double>(rows);
    for (long long j = 0; j < rows; ++j) {
        const double shift = (j % 2 == 0) ? 0.25 : 0.75;
        for (long long i = 0; i < cols; ++i) {
            out.push_back(x0 + (static_cast<double>(i) + shift) * sx);
            out.push_back(y0 + (static_cast<double>(j) + 0.5) * sy);
        }
    }
}

}  // namespace

std::vector<long long> stratified_cell_counts(const std::function<double(std::span<const double>)>& xi,
                                              long long n, const Box& support_box, int m) {
    check_stratified_args(n, support_box, m);
    const int d = support_box.dimension();
    const long long per_axis = 1LL << (m + 1);
    const long long cells = d == 1 ? per_axis : per_axis * per_axis;
    std::vector<long long> counts(static_cast<std::size_t>(cells));
    for (long long c = 0; c < cells; ++c) {
        const long long i = d == 1 ? c : c / per_axis;
        const long long j = d == 1 ? 0 : c % per_axis;
        const double nu = cell_integral(xi, cell_box(support_box, per_axis, i, j));
        if (!(nu >= 0.0) || !std::isfinite(nu)) {
            throw NumericError("point density integral over a cell is negative or not finite", nu);
        }
        counts[static_cast<std::size_t>(c)] = static_cast<long long>(std::floor(static_cast<double>(n) * nu));
    }
    return counts;
}

Codebook build_stratified(const std::function<double(std::span<const double>)>& xi, long long n,
                          const Box& support_box, int m, double safety_kappa, const NormSpace& geometry) {
    if (geometry.dimension() != support_box.dimension()) throw UsageError("support box and geometry differ in dimension");
    const std::vector<long long> counts = stratified_cell_counts(xi, n, support_box, m);
    const int d = support_box.dimension();
    const long long per_axis = 1LL << (m + 1);
    std::vector<double> coords;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        const long long cl = static_cast<long long>(c);
        const long long i = d == 1 ? cl : cl / per_axis;
        const long long j = d == 1 ? 0 : cl % per_axis;
        place_pattern(cell_box(support_box, per_axis, i, j), counts[c], geometry.kind(), coords);
    }
    if (safety_kappa > 0.0) {
        const double step = safety_kappa * std::pow(static_cast<double>(n), -1.0 / d);
        std::vector<std::vector<double>> axes(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) {
            for (double t = std::ceil(support_box.lower[k] / step); t * step < support_box.upper[k]; t += 1.0) {
                axes[static_cast<std::size_t>(k)].push_back(t * step);
            }
        }
        if (d == 1) {
            coords.insert(coords.end(), axes[0].begin(), axes[0].end());
        } else {
            for (double x : axes[0]) {
                for (double y : axes[1]) {
                    coords.push_back(x);
                    coords.push_back(y);
                }
            }
        }
    }
    if (coords.empty()) {
        throw UsageError("stratified codebook is empty: the point density allots no points and the safety lattice is off");
    }
    ConstructionInfo info;
    info.kind = "stratified";
    info.target_n = n;
    info.cells = static_cast<long long>(counts.size());
    info.safety_kappa = std::max(safety_kappa, 0.0);
    return Codebook(geometry, std::move(coords), std::move(info));
}

Codebook build_tail_net(const TailNetParams& params, long long n, const NormSpace& geometry) {
    if (n < 1) throw UsageError("tail net needs n >= 1");
    params.validate();
    const int d = geometry.dimension();
    require_supported_dimension(d, "tail net");
    std::vector<double> coords(static_cast<std::size_t>(d), 0.0);
    const int limit = sequence_limit(params.r, params.alpha);
    for (long long k = params.J; k < params.J + kMaxShells; ++k) {
        if (limit >= 0 && k > limit) break;
        const double budget = weight_at(params.alpha, static_cast<int>(k)) * static_cast<double>(n);
        if (!(budget >= 1.0)) break;
        const double r = radius_at(params.r, static_cast<int>(k) + 1);
        long long per_axis = static_cast<long long>(std::floor(std::pow(budget, 1.0 / d) + 1e-9));
        while (per_axis > 1 && std::pow(static_cast<double>(per_axis), d) > budget) --per_axis;
        per_axis = std::max(per_axis, 1LL);
        const double step = 2.0 * r / static_cast<double>(per_axis);
        for (long long i = 0; i < per_axis; ++i) {
            const double x = -r + (static_cast<double>(i) + 0.5) * step;
            if (d == 1) {
                coords.push_back(x);
                continue;
            }
            for (long long j = 0; j < per_axis; ++j) {
                coords.push_back(x);
                coords.push_back(-r + (static_cast<double>(j) + 0.5) * step);
            }
        }
    }
    ConstructionInfo info;
    info.kind = "tail_net";
    info.target_n = n;
    TailNetParams p = params;
    if (p.c_E == 0.0) p.c_E = covering_constant(geometry);
    info.tail = p;
    return Codebook(geometry, std::move(coords), std::move(info));
}

std::vector<double> nearest_distances(const Codebook& cb, std::span<const double> samples, unsigned threads) {
    const std::size_t d = static_cast<std::size_t>(cb.dimension());
    if (samples.size() % d != 0) throw UsageError("sample matrix is not a multiple of the dimension");
    const std::size_t n = samples.size() / d;
    std::vector<double> out(n);
    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    parallel_for(chunks, threads, [&](std::size_t c) {
        const std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) out[i] = cb.nearest(samples.subspan(i * d, d)).distance;
    });
    return out;
}

DistortionEstimate distortion(const Codebook& cb, const SourceDensity& src, const PhiFunction& phi,
                              const DistortionOptions& opt) {
    if (opt.mc_samples < 1000) throw UsageError("distortion needs at least 1000 Monte Carlo samples");
    if (opt.shards < 2) throw UsageError("distortion needs at least 2 shards");
    if (src.dimension() != cb.dimension()) throw UsageError("source and codebook differ in dimension");
    const std::size_t shards = opt.shards;
    std::vector<std::size_t> begin(shards + 1, 0);
    for (std::size_t s = 0; s < shards; ++s) {
        begin[s + 1] = begin[s] + opt.mc_samples / shards + (s < opt.mc_samples % shards ? 1 : 0);
    }
    std::vector<double> dist(opt.mc_samples);
    parallel_for(shards, opt.threads, [&](std::size_t s) {
        const std::size_t count = begin[s + 1] - begin[s];
        const std::vector<double> xs = src.sample(count, opt.seed, s);
        const std::size_t d = static_cast<std::size_t>(cb.dimension());
        for (std::size_t i = 0; i < count; ++i) {
            dist[begin[s] + i] = cb.nearest(std::span<const double>(xs).subspan(i * d, d)).distance;
        }
    });
    DistortionEstimate est;
    est.samples = opt.mc_samples;
    est.shards = opt.shards;
    est.orlicz_value = orlicz_norm_of_samples(phi, dist);

    std::vector<double> leave_out(shards);
    parallel_for(shards, opt.threads, [&](std::size_t s) {
        std::vector<double> rest;
        rest.reserve(opt.mc_samples - (begin[s + 1] - begin[s]));
        rest.insert(rest.end(), dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(begin[s]));
        rest.insert(rest.end(), dist.begin() + static_cast<std::ptrdiff_t>(begin[s + 1]), dist.end());
        leave_out[s] = orlicz_norm_of_samples(phi, rest);
    });
    const double mean = std::accumulate(leave_out.begin(), leave_out.end(), 0.0) / static_cast<double>(shards);
    double ss = 0.0;
    for (double v : leave_out) ss += (v - mean) * (v - mean);
    est.std_error = std::sqrt(static_cast<double>(shards - 1) / static_cast<double>(shards) * ss);
    return est;
}

std::size_t HistogramSpec::bin_count() const {
    std::size_t n = 1;
    for (int b : bins) n *= static_cast<std::size_t>(b);
    return n;
}

Box HistogramSpec::bin_box(std::size_t flat) const {
    Box b;
    b.lower.resize(bins.size());
    b.upper.resize(bins.size());
    for (std::size_t k = bins.size(); k-- > 0;) {
        const std::size_t nb = static_cast<std::size_t>(bins[k]);
        const std::size_t i = flat % nb;
        flat /= nb;
        const double w = (upper[k] - lower[k]) / static_cast<double>(nb);
        b.lower[k] = lower[k] + static_cast<double>(i) * w;
        b.upper[k] = lower[k] + static_cast<double>(i + 1) * w;
    }
    return b;
}

Histogram empirical_measure(const Codebook& cb, const HistogramSpec& spec) {
    const int d = cb.dimension();
    if (spec.dimension() != d || spec.lower.size() != spec.bins.size() || spec.upper.size() != spec.bins.size()) {
        throw UsageError("histogram spec and codebook differ in dimension");
    }
    for (int k = 0; k < d; ++k) {
        if (spec.bins[static_cast<std::size_t>(k)] < 1 || !(spec.upper[static_cast<std::size_t>(k)] > spec.lower[static_cast<std::size_t>(k)])) {
            throw UsageError("histogram needs at least one bin and lower < upper on every axis");
        }
    }
    Histogram h;
    h.spec = spec;
    h.mass.assign(spec.bin_count(), 0.0);
    for (std::size_t i = 0; i < cb.size(); ++i) {
        const auto p = cb.point(i);
        std::size_t flat = 0;
        bool inside = true;
        for (std::size_t k = 0; k < spec.bins.size() && inside; ++k) {
            const double u = (p[k] - spec.lower[k]) / (spec.upper[k] - spec.lower[k]);
            const double b = std::floor(u * spec.bins[k]);
            inside = b >= 0.0 && b < spec.bins[k];
            flat = flat * static_cast<std::size_t>(spec.bins[k]) + static_cast<std::size_t>(inside ? b : 0.0);
        }
        if (inside) {
            h.mass[flat] += 1.0;
        } else {
            ++h.points_outside;
        }
    }
    for (double& m : h.mass) m /= static_cast<double>(cb.size());
    return h;
}

double l1_distance(const Histogram& hist, const std::function<double(std::span<const double>)>& reference,
                   double rel_tol) {
    double total = 0.0;
    for (std::size_t b = 0; b < hist.mass.size(); ++b) {
        total += std::abs(hist.mass[b] - cell_integral(reference, hist.spec.bin_box(b), rel_tol));
    }
    return total;
}

void write_codebook_csv(std::ostream& out, const Codebook& cb) {
    const ConstructionInfo& info = cb.construction();
    const int d = cb.dimension();
    out << "# orliczq codebook\n";
    out << "# kind=" << (info.kind.empty() ? "unspecified" : info.kind) << "\n";
    out << "# dimension=" << d << "\n";
    out << "# norm=" << (cb.geometry().kind() == NormKind::SupNorm ? "sup" : "euclidean") << "\n";
    out << "# target_n=" << info.target_n << "\n";
    out << "# cells=" << info.cells << "\n";
    out << "# safety_kappa=" << format_double(info.safety_kappa) << "\n";
    if (info.tail) out << "# tail=" << info.tail->describe() << "\n";
    out << "# size=" << cb.size() << "\n";
    out << (d == 1 ? "x\n" : "x,y\n");
    for (std::size_t i = 0; i < cb.size(); ++i) {
        const auto p = cb.point(i);
        out << format_double(p[0]);
        for (int k = 1; k < d; ++k) out << ',' << format_double(p[static_cast<std::size_t>(k)]);
        out << '\n';
    }
}

Codebook read_codebook_csv(std::istream& in, const NormSpace& geometry) {
    const int d = geometry.dimension();
    require_supported_dimension(d, "codebook csv");
    ConstructionInfo info;
    info.kind = "loaded";
    std::vector<double> coords;
    std::string line;
    bool header_seen = false;
    long long line_no = 0;
    auto parse_number = [&](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
            throw UsageError("codebook csv line " + std::to_string(line_no) + ": not a number: '" + std::string(s) + "'");
        }
        return v;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(1, eq - 1);
            key.erase(0, key.find_first_not_of(' '));
            const std::string value = line.substr(eq + 1);
            if (key == "target_n") info.target_n = static_cast<long long>(parse_number(value));
            if (key == "safety_kappa") info.safety_kappa = parse_number(value);
            if (key == "cells") info.cells = static_cast<long long>(parse_number(value));
            continue;
        }
        if (!header_seen) {
            const std::string expected = d == 1 ? "x" : "x,y";
            if (line != expected) {
                throw UsageError("codebook csv line " + std::to_string(line_no) + ": expected header '" + expected + "'");
            }
            header_seen = true;
            continue;
        }
        std::string_view rest(line);
        int fields = 0;
        while (true) {
            const auto comma = rest.find(',');
            coords.push_back(parse_number(rest.substr(0, comma)));
            ++fields;
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (fields != d) {
            throw UsageError("codebook csv line " + std::to_string(line_no) + ": expected " + std::to_string(d) + " fields");
        }
    }
    if (!header_seen) throw UsageError("codebook csv has no header row");
    return Codebook(geometry, std::move(coords), std::move(info));
}

}  // namespace orliczq
