#include "orliczq/source.hpp"

#include "orliczq/error.hpp"
#include "orliczq/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace orliczq {

namespace {

constexpr double kGaussianHalfWidth = 8.0;  // default quad_domain in standard deviations

double log_normal_pdf(double x, double mean, double sigma) {
    const double z = (x - mean) / sigma;
    return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double normal_cdf(double x, double mean, double sigma) {
    return 0.5 * std::erfc(-(x - mean) / (sigma * std::numbers::sqrt2));
}

double normal_sf(double x, double mean, double sigma) {
    return 0.5 * std::erfc((x - mean) / (sigma * std::numbers::sqrt2));
}

// Position w in [0, 1] inside a cell whose density is linear from v0 to v1,
// such that the cell mass below w is the fraction u of the cell mass.
double linear_inverse(double v0, double v1, double u) {
    const double total = v0 + v1;
    if (!(total > 0.0)) return u;
    const double disc = v0 * v0 + (v1 - v0) * u * total;
    const double denom = v0 + std::sqrt(std::max(disc, 0.0));
    if (!(denom > 0.0)) return u;
    return std::clamp(u * total / denom, 0.0, 1.0);
}

void require_increasing(const std::vector<double>& axis, const char* name) {
    if (axis.size() < 2) throw UsageError(std::string("grid axis ") + name + " needs at least 2 nodes");
    for (std::size_t i = 0; i < axis.size(); ++i) {
        if (!std::isfinite(axis[i])) throw UsageError(std::string("grid axis ") + name + " has a non-finite node");
        if (i > 0 && !(axis[i] > axis[i - 1])) {
            throw UsageError(std::string("grid axis ") + name + " is not strictly increasing at node " +
                             std::to_string(i));
        }
    }
}

void require_ac_mass(double ac_mass) {
    if (!(ac_mass > 0.0 && ac_mass <= 1.0)) {
        throw DomainError("ac_mass must lie in (0, 1], got " + std::to_string(ac_mass));
    }
}

// Index of the grid cell [axis[i], axis[i+1]) containing x, or npos off the grid.
std::size_t cell_of(const std::vector<double>& axis, double x) {
    if (!(x >= axis.front() && x <= axis.back())) return static_cast<std::size_t>(-1);
    auto it = std::upper_bound(axis.begin(), axis.end(), x);
    std::size_t i = static_cast<std::size_t>(it - axis.begin());
    return std::min(i, axis.size() - 1) - 1;
}

}  // namespace

double Box::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lower.size(); ++i) v *= upper[i] - lower[i];
    return v;
}

bool Box::contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < lower.size(); ++i) {
        if (!(x[i] >= lower[i] && x[i] < upper[i])) return false;
    }
    return true;
}

struct SourceDensity::State {
    Variant variant;
    int dimension = 1;
    double ac_mass = 1.0;
    Box domain;
    bool unbounded = false;
    // Grid sampling tables: cumulative cell masses.
    std::vector<double> cell_cdf;
};

namespace {

std::shared_ptr<SourceDensity::State> make_state(SourceDensity::Variant v, int d, double ac_mass) {
    require_ac_mass(ac_mass);
    auto st = std::make_shared<SourceDensity::State>();
    st->variant = std::move(v);
    st->dimension = d;
    st->ac_mass = ac_mass;
    return st;
}

// Bilinear corner values of grid cell (i, j).
struct Corners {
    double a, b, c, d;  // (x0,y0), (x1,y0), (x0,y1), (x1,y1)
};

Corners corners(const GridDensity& g, std::size_t i, std::size_t j) {
    const std::size_t ny = g.ys.size();
    return {g.values[i * ny + j], g.values[(i + 1) * ny + j], g.values[i * ny + j + 1],
            g.values[(i + 1) * ny + j + 1]};
}

}  // namespace

SourceDensity SourceDensity::gaussian(double mean, double sigma, double ac_mass) {
    if (!std::isfinite(mean) || !(sigma > 0.0) || !std::isfinite(sigma)) {
        throw DomainError("Gaussian source needs finite mean and sigma > 0");
    }
    auto st = make_state(Gaussian1D{mean, sigma}, 1, ac_mass);
    st->domain = Box{{mean - kGaussianHalfWidth * sigma}, {mean + kGaussianHalfWidth * sigma}};
    st->unbounded = true;
    return SourceDensity(std::move(st));
}

SourceDensity SourceDensity::uniform_box(Box box, double ac_mass) {
    const int d = box.dimension();
    if (d < 1 || d > 2 || box.upper.size() != box.lower.size()) {
        throw DomainError("uniform source needs a box of dimension 1 or 2");
    }
    for (int i = 0; i < d; ++i) {
        if (!std::isfinite(box.lower[i]) || !std::isfinite(box.upper[i]) || !(box.upper[i] > box.lower[i])) {
            throw DomainError("uniform source box must have finite lower < upper on every axis");
        }
    }
    auto st = make_state(UniformBox{box}, d, ac_mass);
    st->domain = box;
    return SourceDensity(std::move(st));
}

SourceDensity SourceDensity::gaussian_mixture(std::vector<double> weights, std::vector<double> means,
                                              std::vector<double> sigmas, double ac_mass) {
    if (weights.empty() || weights.size() != means.size() || weights.size() != sigmas.size()) {
        throw DomainError("Gaussian mixture needs equally many (>= 1) weights, means and sigmas");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (!(weights[k] > 0.0) || !std::isfinite(weights[k]) || !std::isfinite(means[k]) ||
            !(sigmas[k] > 0.0) || !std::isfinite(sigmas[k])) {
            throw DomainError("Gaussian mixture component " + std::to_string(k) +
                              " needs weight > 0, finite mean and sigma > 0");
        }
        total += weights[k];
    }
    for (double& w : weights) w /= total;
    double lo = kInf;
    double hi = -kInf;
    for (std::size_t k = 0; k < means.size(); ++k) {
        lo = std::min(lo, means[k] - kGaussianHalfWidth * sigmas[k]);
        hi = std::max(hi, means[k] + kGaussianHalfWidth * sigmas[k]);
    }
    auto st = make_state(GaussianMixture1D{std::move(weights), std::move(means), std::move(sigmas)}, 1, ac_mass);
    st->domain = Box{{lo}, {hi}};
    st->unbounded = true;
    return SourceDensity(std::move(st));
}

SourceDensity SourceDensity::grid(GridDensity g, double ac_mass) {
    require_increasing(g.xs, "x");
    const int d = g.ys.empty() ? 1 : 2;
    if (d == 2) require_increasing(g.ys, "y");
    const std::size_t expected = g.xs.size() * (d == 2 ? g.ys.size() : 1);
    if (g.values.size() != expected) {
        throw UsageError("grid density has " + std::to_string(g.values.size()) + " values, expected " +
                         std::to_string(expected));
    }
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        if (!(g.values[i] >= 0.0) || !std::isfinite(g.values[i])) {
            throw UsageError("grid density value " + std::to_string(i) + " is negative or not finite");
        }
    }
    std::vector<double> masses;
    if (d == 1) {
        for (std::size_t i = 0; i + 1 < g.xs.size(); ++i) {
            masses.push_back(0.5 * (g.values[i] + g.values[i + 1]) * (g.xs[i + 1] - g.xs[i]));
        }
    } else {
        for (std::size_t i = 0; i + 1 < g.xs.size(); ++i) {
            for (std::size_t j = 0; j + 1 < g.ys.size(); ++j) {
                const Corners c = corners(g, i, j);
                masses.push_back(0.25 * (c.a + c.b + c.c + c.d) * (g.xs[i + 1] - g.xs[i]) * (g.ys[j + 1] - g.ys[j]));
            }
        }
    }
    const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
    if (!(total > 0.0)) throw UsageError("grid density has zero total mass");
    for (double& v : g.values) v *= ac_mass / total;
    std::vector<double> cdf(masses.size());
    std::partial_sum(masses.begin(), masses.end(), cdf.begin());
    for (double& c : cdf) c /= total;

    Box domain{{g.xs.front()}, {g.xs.back()}};
    if (d == 2) {
        domain.lower.push_back(g.ys.front());
        domain.upper.push_back(g.ys.back());
    }
    auto st = make_state(std::move(g), d, ac_mass);
    st->domain = std::move(domain);
    st->cell_cdf = std::move(cdf);
    return SourceDensity(std::move(st));
}

SourceDensity SourceDensity::grid_from_csv(std::istream& in, double ac_mass) {
    std::string line;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const auto b = cell.find_first_not_of(" \t\r");
            const auto e = cell.find_last_not_of(" \t\r");
            out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
        }
        return out;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split(line);
        if (header.empty()) {
            header = cells;
            const bool one = header == std::vector<std::string>{"x", "h"};
            const bool two = header == std::vector<std::string>{"x", "y", "h"};
            if (!one && !two) throw UsageError("grid CSV header must be 'x,h' or 'x,y,h' (line " + std::to_string(line_no) + ")");
            continue;
        }
        if (cells.size() != header.size()) {
            throw UsageError("grid CSV line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " columns");
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(c, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != c.size() || c.empty()) {
                throw UsageError("grid CSV line " + std::to_string(line_no) + ": '" + c + "' is not a number");
            }
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (header.empty()) throw UsageError("grid CSV is empty");
    GridDensity g;
    if (header.size() == 2) {
        for (const auto& r : rows) {
            g.xs.push_back(r[0]);
            g.values.push_back(r[1]);
        }
        return grid(std::move(g), ac_mass);
    }
    // x-major order: each x block lists the same strictly increasing y axis.
    std::size_t i = 0;
    while (i < rows.size()) {
        const double x = rows[i][0];
        std::vector<double> ys;
        while (i < rows.size() && rows[i][0] == x) {
            ys.push_back(rows[i][1]);
            g.values.push_back(rows[i][2]);
            ++i;
        }
        if (g.xs.empty()) {
            g.ys = ys;
        } else if (ys != g.ys) {
            throw UsageError("grid CSV: the y axis of block x = " + std::to_string(x) +
                             " differs from the first block");
        }
        g.xs.push_back(x);
    }
    return grid(std::move(g), ac_mass);
}

SourceDensity SourceDensity::grid_from_csv_file(const std::string& path, double ac_mass) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open grid CSV '" + path + "'");
    return grid_from_csv(in, ac_mass);
}

int SourceDensity::dimension() const noexcept { return state_->dimension; }
double SourceDensity::ac_mass() const noexcept { return state_->ac_mass; }
const SourceDensity::Variant& SourceDensity::variant() const noexcept { return state_->variant; }
const Box& SourceDensity::quad_domain() const noexcept { return state_->domain; }
bool SourceDensity::unbounded_support() const noexcept { return state_->unbounded; }

SourceDensity SourceDensity::with_quad_domain(Box domain) const {
    if (domain.dimension() != dimension()) throw DomainError("quad_domain dimension mismatch");
    for (int i = 0; i < domain.dimension(); ++i) {
        if (!(domain.upper[i] > domain.lower[i])) throw DomainError("quad_domain must have lower < upper");
    }
    auto st = std::make_shared<State>(*state_);
    st->domain = std::move(domain);
    return SourceDensity(std::move(st));
}

double SourceDensity::log_density(std::span<const double> x) const {
    const State& st = *state_;
    const double log_mass = std::log(st.ac_mass);
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Gaussian1D>) {
                return log_mass + log_normal_pdf(x[0], v.mean, v.sigma);
            } else if constexpr (std::is_same_v<T, GaussianMixture1D>) {
                double acc = -kInf;
                for (std::size_t k = 0; k < v.weights.size(); ++k) {
                    acc = log_add(acc, std::log(v.weights[k]) + log_normal_pdf(x[0], v.means[k], v.sigmas[k]));
                }
                return log_mass + acc;
            } else {
                return std::log(density(x));
            }
        },
        st.variant);
}

double SourceDensity::density(std::span<const double> x) const {
    const State& st = *state_;
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Gaussian1D> || std::is_same_v<T, GaussianMixture1D>) {
                return std::exp(log_density(x));
            } else if constexpr (std::is_same_v<T, UniformBox>) {
                return v.box.contains(x) ? st.ac_mass / v.box.volume() : 0.0;
            } else {
                const std::size_t i = cell_of(v.xs, x[0]);
                if (i == static_cast<std::size_t>(-1)) return 0.0;
                const double s = (x[0] - v.xs[i]) / (v.xs[i + 1] - v.xs[i]);
                if (v.ys.empty()) return (1.0 - s) * v.values[i] + s * v.values[i + 1];
                const std::size_t j = cell_of(v.ys, x[1]);
                if (j == static_cast<std::size_t>(-1)) return 0.0;
                const double t = (x[1] - v.ys[j]) / (v.ys[j + 1] - v.ys[j]);
                const Corners c = corners(v, i, j);
                return (1.0 - s) * (1.0 - t) * c.a + s * (1.0 - t) * c.b + (1.0 - s) * t * c.c + s * t * c.d;
            }
        },
        st.variant);
}

double SourceDensity::cdf(double x) const {
    const State& st = *state_;
    if (st.dimension != 1) throw DomainError("cdf is defined for one-dimensional sources only");
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Gaussian1D>) {
                return normal_cdf(x, v.mean, v.sigma);
            } else if constexpr (std::is_same_v<T, GaussianMixture1D>) {
                double acc = 0.0;
                for (std::size_t k = 0; k < v.weights.size(); ++k) acc += v.weights[k] * normal_cdf(x, v.means[k], v.sigmas[k]);
                return acc;
            } else if constexpr (std::is_same_v<T, UniformBox>) {
                return std::clamp((x - v.box.lower[0]) / (v.box.upper[0] - v.box.lower[0]), 0.0, 1.0);
            } else {
                if (x <= v.xs.front()) return 0.0;
                if (x >= v.xs.back()) return 1.0;
                const std::size_t i = cell_of(v.xs, x);
                const double below = i == 0 ? 0.0 : st.cell_cdf[i - 1];
                const double width = v.xs[i + 1] - v.xs[i];
                const double w = (x - v.xs[i]) / width;
                const double v0 = v.values[i];
                const double v1 = v.values[i + 1];
                const double partial = (v0 * w + 0.5 * (v1 - v0) * w * w) * width / st.ac_mass;
                return std::min(below + partial, 1.0);
            }
        },
        st.variant);
}

double SourceDensity::mass_outside(const Box& box) const {
    const State& st = *state_;
    if (box.dimension() != st.dimension) throw DomainError("mass_outside: box dimension mismatch");
    if (st.dimension == 1) {
        const double lo = box.lower[0];
        const double hi = box.upper[0];
        double p = 0.0;
        if (const auto* g = std::get_if<Gaussian1D>(&st.variant)) {
            p = normal_cdf(lo, g->mean, g->sigma) + normal_sf(hi, g->mean, g->sigma);
        } else if (const auto* m = std::get_if<GaussianMixture1D>(&st.variant)) {
            for (std::size_t k = 0; k < m->weights.size(); ++k) {
                p += m->weights[k] * (normal_cdf(lo, m->means[k], m->sigmas[k]) + normal_sf(hi, m->means[k], m->sigmas[k]));
            }
        } else {
            p = cdf(lo) + (1.0 - cdf(hi));
        }
        return st.ac_mass * std::clamp(p, 0.0, 1.0);
    }
    // Two-dimensional sources are compactly supported: integrate h over box and support.
    const Box& dom = st.domain;
    const double x0 = std::max(box.lower[0], dom.lower[0]);
    const double x1 = std::min(box.upper[0], dom.upper[0]);
    const double y0 = std::max(box.lower[1], dom.lower[1]);
    const double y1 = std::min(box.upper[1], dom.upper[1]);
    if (!(x1 > x0) || !(y1 > y0)) return st.ac_mass;
    QuadOptions opt;
    opt.rel_tol = 1e-10;
    const auto bx = breakpoints(0);
    const auto by = breakpoints(1);
    const double inside =
        integrate(
            [&](double x) {
                return integrate(
                           [&](double y) {
                               const double p[2] = {x, y};
                               return density(p);
                           },
                           y0, y1, opt, by)
                    .value;
            },
            x0, x1, opt, bx)
            .value;
    return std::max(st.ac_mass - inside, 0.0);
}

std::vector<double> SourceDensity::breakpoints(int axis) const {
    const State& st = *state_;
    return std::visit(
        [&](const auto& v) -> std::vector<double> {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Gaussian1D>) {
                return {v.mean};
            } else if constexpr (std::is_same_v<T, GaussianMixture1D>) {
                return v.means;
            } else if constexpr (std::is_same_v<T, UniformBox>) {
                return {v.box.lower[axis], v.box.upper[axis]};
            } else {
                return axis == 0 ? v.xs : v.ys;
            }
        },
        st.variant);
}

void SourceDensity::sample(CounterRng& rng, std::span<double> out) const {
    const State& st = *state_;
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Gaussian1D>) {
                out[0] = v.mean + v.sigma * rng.normal();
            } else if constexpr (std::is_same_v<T, GaussianMixture1D>) {
                const double u = rng.uniform();
                std::size_t k = 0;
                double acc = v.weights[0];
                while (k + 1 < v.weights.size() && u >= acc) acc += v.weights[++k];
                out[0] = v.means[k] + v.sigmas[k] * rng.normal();
            } else if constexpr (std::is_same_v<T, UniformBox>) {
                for (int i = 0; i < st.dimension; ++i) {
                    out[i] = v.box.lower[i] + (v.box.upper[i] - v.box.lower[i]) * rng.uniform();
                }
            } else {
                const double u = rng.uniform();
                auto it = std::upper_bound(st.cell_cdf.begin(), st.cell_cdf.end(), u);
                std::size_t cell = std::min(static_cast<std::size_t>(it - st.cell_cdf.begin()), st.cell_cdf.size() - 1);
                if (v.ys.empty()) {
                    const double w = linear_inverse(v.values[cell], v.values[cell + 1], rng.uniform());
                    out[0] = v.xs[cell] + w * (v.xs[cell + 1] - v.xs[cell]);
                    return;
                }
                const std::size_t ny = v.ys.size() - 1;
                const std::size_t i = cell / ny;
                const std::size_t j = cell % ny;
                const Corners c = corners(v, i, j);
                // Marginal along x is linear; the conditional along y given x is linear too.
                const double s = linear_inverse(0.5 * (c.a + c.c), 0.5 * (c.b + c.d), rng.uniform());
                const double t = linear_inverse((1.0 - s) * c.a + s * c.b, (1.0 - s) * c.c + s * c.d, rng.uniform());
                out[0] = v.xs[i] + s * (v.xs[i + 1] - v.xs[i]);
                out[1] = v.ys[j] + t * (v.ys[j + 1] - v.ys[j]);
            }
        },
        st.variant);
}

std::vector<double> SourceDensity::sample(std::size_t n, std::uint64_t seed, std::uint64_t stream) const {
    const std::size_t d = static_cast<std::size_t>(dimension());
    std::vector<double> out(n * d);
    CounterRng rng(seed, stream);
    for (std::size_t i = 0; i < n; ++i) sample(rng, std::span<double>(out.data() + i * d, d));
    return out;
}

double density_eval(const SourceDensity& src, std::span<const double> x) { return src.density(x); }

IntegralReport integrate_mu(const SourceDensity& src, const std::function<double(std::span<const double>)>& f,
                            double rel_tol) {
    QuadOptions opt;
    opt.rel_tol = rel_tol;
    const Box& dom = src.quad_domain();
    IntegralReport rep;
    rep.truncation_bound = src.mass_outside(dom);
    const auto bx = src.breakpoints(0);
    if (src.dimension() == 1) {
        const QuadResult r = integrate(
            [&](double x) {
                const double h = src.density(x);
                return h > 0.0 ? f(std::span<const double>(&x, 1)) * h : 0.0;
            },
            dom.lower[0], dom.upper[0], opt, bx);
        rep.value = r.value;
        rep.error = r.error;
        return rep;
    }
    const auto by = src.breakpoints(1);
    double inner_error = 0.0;
    const QuadResult r = integrate(
        [&](double x) {
            const QuadResult in = integrate(
                [&](double y) {
                    const double p[2] = {x, y};
                    const double h = src.density(p);
                    return h > 0.0 ? f(p) * h : 0.0;
                },
                dom.lower[1], dom.upper[1], opt, by);
            inner_error = std::max(inner_error, in.error);
            return in.value;
        },
        dom.lower[0], dom.upper[0], opt, bx);
    rep.value = r.value;
    rep.error = r.error + inner_error * (dom.upper[0] - dom.lower[0]);
    return rep;
}

namespace {

constexpr int kLevelScanCells = 2048;
constexpr int kLevelScanCells2D = 256;

// Bisects [lo, hi] for the point where log_h crosses L; above_lo tells on
// which side lo lies.
template <class LogH>
double level_crossing(LogH&& log_h, double lo, double hi, double L, bool above_lo) {
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if ((log_h(mid) > L) == above_lo) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Appends the points of [a, b] where log_h crosses a level. The scan grid
// includes the given breakpoints (modes, grid nodes), so narrow peaks above a
// level are not stepped over.
template <class LogH>
void append_level_crossings(LogH&& log_h, double a, double b, std::span<const double> levels, int cells,
                            std::vector<double>& breaks) {
    if (levels.empty()) return;
    std::vector<double> nodes;
    nodes.reserve(static_cast<std::size_t>(cells) + 1 + breaks.size());
    for (int i = 0; i <= cells; ++i) nodes.push_back(a + (b - a) * static_cast<double>(i) / cells);
    for (double x : breaks) {
        if (x > a && x < b) nodes.push_back(x);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    std::vector<double> vals(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) vals[i] = log_h(nodes[i]);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        for (double L : levels) {
            const bool above0 = vals[i] > L;
            if (above0 == (vals[i + 1] > L)) continue;
            breaks.push_back(level_crossing(log_h, nodes[i], nodes[i + 1], L, above0));
        }
    }
}

// Integral of f over the semi-infinite tail beyond edge (direction -1 or +1),
// split where the monotone tail of log_h drops below a level.
template <class Fn, class LogH>
QuadResult tail_integral(Fn&& f, LogH&& log_h, double edge, double direction, double width,
                         std::span<const double> levels, const QuadOptions& opt) {
    std::vector<double> cuts;
    const double at_edge = log_h(edge);
    for (double L : levels) {
        if (!(at_edge > L)) continue;
        double step = width;
        double far = edge + direction * step;
        int grow = 0;
        while (log_h(far) > L && ++grow < 200) {
            step *= 2.0;
            far = edge + direction * step;
        }
        if (!(log_h(far) > L)) cuts.push_back(level_crossing(log_h, edge, far, L, true));
    }
    std::sort(cuts.begin(), cuts.end(), [&](double x, double y) { return direction * x < direction * y; });
    QuadResult total;
    double from = edge;
    for (double c : cuts) {
        const QuadResult piece = integrate(f, std::min(from, c), std::max(from, c), opt);
        total.value += piece.value;
        total.error += piece.error;
        from = c;
    }
    const QuadResult rest = direction > 0 ? integrate(f, from, kInf, opt) : integrate(f, -kInf, from, opt);
    total.value += rest.value;
    total.error += rest.error;
    return total;
}

}  // namespace

IntegralReport integrate_lebesgue(const SourceDensity& src,
                                  const std::function<double(std::span<const double>, double)>& F,
                                  double rel_tol, std::span<const double> log_levels) {
    QuadOptions opt;
    opt.rel_tol = rel_tol;
    const Box& dom = src.quad_domain();
    IntegralReport rep;
    auto bx = src.breakpoints(0);
    if (src.dimension() == 1) {
        auto log_h = [&](double x) { return src.log_density(x); };
        auto f = [&](double x) { return F(std::span<const double>(&x, 1), src.log_density(x)); };
        append_level_crossings(log_h, dom.lower[0], dom.upper[0], log_levels, kLevelScanCells, bx);
        QuadResult r = integrate(f, dom.lower[0], dom.upper[0], opt, bx);
        if (src.unbounded_support()) {
            const double width = dom.upper[0] - dom.lower[0];
            const QuadResult left = tail_integral(f, log_h, dom.lower[0], -1.0, width, log_levels, opt);
            const QuadResult right = tail_integral(f, log_h, dom.upper[0], 1.0, width, log_levels, opt);
            r.value += left.value + right.value;
            r.error += left.error + right.error;
        } else {
            rep.truncation_bound = src.mass_outside(dom);
        }
        rep.value = r.value;
        rep.error = r.error;
        return rep;
    }
    const auto by = src.breakpoints(1);
    double inner_error = 0.0;
    const QuadResult r = integrate(
        [&](double x) {
            auto log_h = [&](double y) {
                const double p[2] = {x, y};
                return src.log_density(p);
            };
            std::vector<double> breaks_y = by;
            append_level_crossings(log_h, dom.lower[1], dom.upper[1], log_levels, kLevelScanCells2D, breaks_y);
            const QuadResult in = integrate(
                [&](double y) {
                    const double p[2] = {x, y};
                    return F(p, src.log_density(p));
                },
                dom.lower[1], dom.upper[1], opt, breaks_y);
            inner_error = std::max(inner_error, in.error);
            return in.value;
        },
        dom.lower[0], dom.upper[0], opt, bx);
    rep.value = r.value;
    rep.error = r.error + inner_error * (dom.upper[0] - dom.lower[0]);
    rep.truncation_bound = src.mass_outside(dom);
    return rep;
}

}  // namespace orliczq
