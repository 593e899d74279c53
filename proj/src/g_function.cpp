#include "orliczq/g_function.hpp"

#include "orliczq/error.hpp"
#include "orliczq/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace orliczq {

namespace {

// Beyond this value of s * rho the exp-loss integrals are evaluated in log space.
constexpr double kShiftThreshold = 40.0;
// Truncation of the shifted integrals: e^{-60} is far below quadrature accuracy.
constexpr double kShiftWindow = 60.0;

void require_eta(double eta) {
    if (!(eta > 0.0)) throw DomainError("g: eta must be > 0, got " + std::to_string(eta));
}

const PhiFunction& phi_of(const GFunction::Variant& v) {
    if (const auto* a = std::get_if<OneDimAbs>(&v)) return a->phi;
    if (const auto* c = std::get_if<SupNormCube>(&v)) return c->phi;
    return std::get<Hexagon2D>(v).phi;
}

// -g'(eta) / factor for OneDimAbs with exp(t) - 1, as a function of x = 1/(2 eta):
// 2 (1 + (x - 1) e^x) = 2 sum_{k >= 2} (k - 1) x^k / k!.
double one_dim_exp_neg_gprime(double x) {
    if (x < 0.5) {
        double term = x;  // x^k / k! at k = 1
        double sum = 0.0;
        for (int k = 2; k < 60; ++k) {
            term *= x / k;
            const double add = (k - 1) * term;
            sum += add;
            if (add < 1e-18 * sum) break;
        }
        return 2.0 * sum;
    }
    if (x > kExpArgumentCap) return kInf;
    return 2.0 * (1.0 + (x - 1.0) * std::exp(x));
}

double one_dim_exp_log_neg_gprime(double x) {
    if (x <= 30.0) return std::log(one_dim_exp_neg_gprime(x));
    return std::numbers::ln2 + x + std::log((x - 1.0) + std::exp(-x));
}

// Integral over [lo, hi] where the integrand may behave like sqrt(|r - kink|)
// near the kink: each side is mapped by r = kink -+ L w^2, which makes the
// integrand smooth in w.
template <class F>
double integrate_across_sqrt_kink(F&& f, double lo, double hi, double kink, const QuadOptions& opt,
                                  const std::vector<double>& breaks) {
    if (!(kink > lo && kink < hi)) return integrate(f, lo, hi, opt, breaks).value;
    auto side = [&](double a, double b, bool kink_at_b) {
        const double len = b - a;
        std::vector<double> w_breaks;
        for (double x : breaks) {
            if (x > a && x < b) w_breaks.push_back(std::sqrt((kink_at_b ? b - x : x - a) / len));
        }
        return integrate(
                   [&](double w) {
                       const double r = kink_at_b ? b - len * w * w : a + len * w * w;
                       return f(r) * 2.0 * len * w;
                   },
                   0.0, 1.0, opt, w_breaks)
            .value;
    };
    return side(lo, kink, true) + side(kink, hi, false);
}

// Slope of a piecewise-linear loss at t (right derivative); zero past the last knot.
double tabulated_slope(const Tabulated& tab, double t) {
    double t0 = 0.0;
    double v0 = 0.0;
    for (const auto& [tk, vk] : tab.knots) {
        if (tk > t0 && t < tk) return (vk - v0) / (tk - t0);
        t0 = tk;
        v0 = vk;
    }
    return 0.0;
}

// Where the cell-distance density has its square-root kink (hexagon inradius);
// outside (0, rho) for cubes.
double kink_of(const GFunction::CellLaw& law) {
    return law.shape == GFunction::CellLaw::Shape::Hexagon ? law.inradius : -1.0;
}

}  // namespace

double GFunction::CellLaw::density(double r) const {
    if (r < 0.0 || r > rho) return 0.0;
    if (shape == Shape::Cube) return d * std::pow(2.0, d) * std::pow(r, d - 1);
    if (r <= inradius) return 2.0 * std::numbers::pi * r;
    return density_from_end(rho - r);
}

double GFunction::CellLaw::density_from_end(double eps) const {
    const double r = rho - eps;
    if (eps < 0.0 || r < 0.0) return 0.0;
    if (shape == Shape::Cube) return d * std::pow(2.0, d) * std::pow(r, d - 1);
    if (r <= inradius) return 2.0 * std::numbers::pi * r;
    // Arc length of the circle of radius r inside the hexagon: the six edges at
    // distance a each cut out an arc of angle 2 arccos(a / r).
    const double a = inradius;
    const double big = std::sqrt(rho * rho - a * a);
    const double small = std::sqrt(std::max(r * r - a * a, 0.0));
    const double diff = eps * (2.0 * rho - eps) / (a * (big + small));
    const double angle = std::atan(diff / (1.0 + big * small / (a * a)));
    return 12.0 * r * angle;
}

GFunction::GFunction(Variant v) : variant_(std::move(v)) {
    if (const auto* pl = std::get_if<PowerLaw>(&variant_)) {
        if (!(pl->c > 0.0) || !(pl->p > 0.0) || pl->d < 1) {
            throw DomainError("PowerLaw g needs c > 0, p > 0, d >= 1");
        }
        return;
    }
    if (const auto* cube = std::get_if<SupNormCube>(&variant_)) {
        if (cube->d < 1) throw DomainError("SupNormCube g needs d >= 1");
        law_.d = cube->d;
    } else if (std::holds_alternative<Hexagon2D>(variant_)) {
        law_.shape = CellLaw::Shape::Hexagon;
        law_.d = 2;
        // Unit area: (3 sqrt(3) / 2) R^2 = 1.
        law_.rho = std::sqrt(2.0 / (3.0 * std::sqrt(3.0)));
        law_.inradius = 0.5 * std::sqrt(3.0) * law_.rho;
        law_.breaks = {law_.inradius};
    }
    const auto peeled = phi_of(variant_).peel();
    if (const auto* pw = std::get_if<Power>(&peeled.base->kind())) {
        const CellLaw& law = law_;
        const double p = pw->p;
        power_moment_ = integrate_across_sqrt_kink([&](double r) { return std::pow(r, p) * law.density(r); },
                                                   0.0, law.rho, kink_of(law), quad_, {});
    }
}

GFunction GFunction::one_dim_abs(const PhiFunction& phi) { return GFunction(OneDimAbs{phi}); }
GFunction GFunction::sup_norm_cube(const PhiFunction& phi, int d) { return GFunction(SupNormCube{phi, d}); }
GFunction GFunction::hexagon_2d(const PhiFunction& phi) { return GFunction(Hexagon2D{phi}); }
GFunction GFunction::power_law(double c, double p, int d) { return GFunction(PowerLaw{c, p, d}); }

const PhiFunction* GFunction::phi() const noexcept {
    if (std::holds_alternative<PowerLaw>(variant_)) return nullptr;
    return &phi_of(variant_);
}

int GFunction::dimension() const {
    if (const auto* pl = std::get_if<PowerLaw>(&variant_)) return pl->d;
    return law_.d;
}

double GFunction::at_zero() const {
    if (std::holds_alternative<PowerLaw>(variant_)) return kInf;
    return phi_of(variant_).sup_value();
}

double GFunction::scale_of(double eta) const { return std::pow(eta, -1.0 / law_.d); }

// int_0^rho phi(s r) f(r) dr, or int_0^rho phi'(s r) r f(r) dr for the derivative moment.
double GFunction::direct_expectation(double s, bool derivative_moment) const {
    const PhiFunction& base = *phi_of(variant_).peel().base;
    std::vector<double> breaks = law_.breaks;
    const CellLaw& law = law_;
    if (derivative_moment) {
        return integrate_across_sqrt_kink(
            [&](double r) { return base.derivative(s * r).value() * r * law.density(r); }, 0.0, law.rho,
            kink_of(law), quad_, breaks);
    }
    return integrate_across_sqrt_kink([&](double r) { return base(s * r) * law.density(r); }, 0.0, law.rho,
                                      kink_of(law), quad_, breaks);
}

// log of the same integrals for exp(t) - 1 when s * rho is large, after the
// substitution r = rho - v / s that pulls out the factor e^{s rho} / s.
double GFunction::log_shifted_expectation(double s, bool derivative_moment) const {
    const CellLaw& law = law_;
    const double top = s * law.rho;
    const double window = std::min(top, kShiftWindow);
    const double kink = s * (law.rho - kink_of(law));
    const std::vector<double> breaks;
    const double tail = std::exp(-top);
    double J = 0.0;
    if (derivative_moment) {
        J = integrate_across_sqrt_kink(
                [&](double v) {
                    const double eps = v / s;
                    return std::exp(-v) * (law.rho - eps) * law.density_from_end(eps);
                },
                0.0, window, kink, quad_, breaks);
    } else {
        J = integrate_across_sqrt_kink(
                [&](double v) {
                    const double eps = v / s;
                    return (std::exp(-v) - tail) * law.density_from_end(eps);
                },
                0.0, window, kink, quad_, breaks);
    }
    return top - std::log(s) + std::log(J);
}

// Piecewise-linear losses are integrated in the scaled variable t = s r, where
// the knots stay put however small eta gets. With K the last knot and
// T = min(K, s rho):
//   E phi(sD) = (1/s) int_0^T phi(t) f(t/s) dt + phi(K) P(D > K/s).
double GFunction::tabulated_expectation(const Tabulated& tab, double s) const {
    const CellLaw& law = law_;
    const double K = tab.knots.back().first;
    const double T = std::min(K, s * law.rho);
    std::vector<double> breaks;
    for (const auto& kn : tab.knots) breaks.push_back(kn.first);
    const PhiFunction& base = *phi_of(variant_).peel().base;
    const double body = integrate_across_sqrt_kink([&](double t) { return base(t) * law.density(t / s); }, 0.0, T,
                                                   s * kink_of(law), quad_, breaks) /
                        s;
    if (T < K) return body;
    const double r0 = K / s;
    double tail = 0.0;
    if (law.shape == CellLaw::Shape::Cube) {
        tail = 1.0 - std::pow(2.0 * r0, law.d);
    } else if (r0 <= law.inradius) {
        tail = 1.0 - std::numbers::pi * r0 * r0;
    } else {
        tail = integrate([&](double r) { return law.density(r); }, r0, law.rho, quad_).value;
    }
    return body + tab.knots.back().second * std::max(tail, 0.0);
}

// log of int_0^T phi'(t) t f(t/s) dt = s^2 E[phi'(sD) D].
double GFunction::tabulated_log_slope_moment(const Tabulated& tab, double s) const {
    const CellLaw& law = law_;
    const double T = std::min(tab.knots.back().first, s * law.rho);
    std::vector<double> breaks;
    for (const auto& kn : tab.knots) breaks.push_back(kn.first);
    const double J = integrate_across_sqrt_kink(
        [&](double t) { return tabulated_slope(tab, t) * t * law.density(t / s); }, 0.0, T, s * kink_of(law), quad_,
        breaks);
    return std::log(J);
}

double GFunction::operator()(double eta) const {
    if (eta == 0.0) return at_zero();
    require_eta(eta);
    if (const auto* pl = std::get_if<PowerLaw>(&variant_)) return pl->c * std::pow(eta, -pl->p / pl->d);
    const auto peeled = phi_of(variant_).peel();
    const double s = scale_of(eta);
    if (const auto* pw = std::get_if<Power>(&peeled.base->kind())) {
        return peeled.factor * std::pow(s, pw->p) * power_moment_;
    }
    if (const auto* tab = std::get_if<Tabulated>(&peeled.base->kind())) {
        return peeled.factor * tabulated_expectation(*tab, s);
    }
    if (std::holds_alternative<ExpMinusOne>(peeled.base->kind()) && s * law_.rho > kShiftThreshold) {
        return std::exp(log_value(eta));
    }
    return peeled.factor * direct_expectation(s, false);
}

double GFunction::log_value(double eta) const {
    if (eta == 0.0) return std::log(at_zero());
    require_eta(eta);
    if (const auto* pl = std::get_if<PowerLaw>(&variant_)) return std::log(pl->c) - pl->p / pl->d * std::log(eta);
    const auto peeled = phi_of(variant_).peel();
    const double s = scale_of(eta);
    if (const auto* pw = std::get_if<Power>(&peeled.base->kind())) {
        return std::log(peeled.factor) + pw->p * std::log(s) + std::log(power_moment_);
    }
    if (const auto* tab = std::get_if<Tabulated>(&peeled.base->kind())) {
        return std::log(peeled.factor * tabulated_expectation(*tab, s));
    }
    if (std::holds_alternative<ExpMinusOne>(peeled.base->kind()) && s * law_.rho > kShiftThreshold) {
        return std::log(peeled.factor) + log_shifted_expectation(s, false);
    }
    return std::log(peeled.factor * direct_expectation(s, false));
}

bool GFunction::has_analytic_derivative() const { return true; }

double GFunction::finite_difference_derivative(double eta) const {
    require_eta(eta);
    const double h = eta * 1e-6;
    return ((*this)(eta + h) - (*this)(eta - h)) / (2.0 * h);
}

double GFunction::derivative(double eta) const {
    require_eta(eta);
    if (const auto* pl = std::get_if<PowerLaw>(&variant_)) {
        return -(pl->c * pl->p / pl->d) * std::pow(eta, -pl->p / pl->d - 1.0);
    }
    const auto peeled = phi_of(variant_).peel();
    const double s = scale_of(eta);
    if (const auto* pw = std::get_if<Power>(&peeled.base->kind())) {
        return -peeled.factor * (pw->p / law_.d) * std::pow(s, pw->p) * power_moment_ / eta;
    }
    if (std::holds_alternative<Tabulated>(peeled.base->kind())) return -std::exp(log_neg_derivative(eta));
    // exp(t) - 1
    if (std::holds_alternative<OneDimAbs>(variant_)) {
        return -peeled.factor * one_dim_exp_neg_gprime(0.5 / eta);
    }
    if (s * law_.rho > kShiftThreshold) return -std::exp(log_neg_derivative(eta));
    return -peeled.factor * s / (law_.d * eta) * direct_expectation(s, true);
}

double GFunction::log_neg_derivative(double eta) const {
    require_eta(eta);
    if (const auto* pl = std::get_if<PowerLaw>(&variant_)) {
        return std::log(pl->c * pl->p / pl->d) - (pl->p / pl->d + 1.0) * std::log(eta);
    }
    const auto peeled = phi_of(variant_).peel();
    const double s = scale_of(eta);
    const double log_factor = std::log(peeled.factor);
    if (const auto* pw = std::get_if<Power>(&peeled.base->kind())) {
        return log_factor + std::log(pw->p / law_.d) + pw->p * std::log(s) + std::log(power_moment_) -
               std::log(eta);
    }
    if (const auto* tab = std::get_if<Tabulated>(&peeled.base->kind())) {
        // -g' = (s^{d-1} / d) int_0^T phi'(t) t f(t/s) dt.
        return log_factor + (law_.d - 1) * std::log(s) - std::log(static_cast<double>(law_.d)) +
               tabulated_log_slope_moment(*tab, s);
    }
    if (std::holds_alternative<OneDimAbs>(variant_)) {
        return log_factor + one_dim_exp_log_neg_gprime(0.5 / eta);
    }
    if (s * law_.rho > kShiftThreshold) {
        return log_factor + std::log(s / (law_.d * eta)) + log_shifted_expectation(s, true);
    }
    return log_factor + std::log(s / (law_.d * eta) * direct_expectation(s, true));
}

double g_eval(const GFunction& g, double eta) { return g(eta); }
double g_prime(const GFunction& g, double eta) { return g.derivative(eta); }

namespace {

// Expected loss of one Voronoi interval [lo, hi] served by codepoint c, for X
// uniform on [0,1) and distances scaled by k.
double cell_cost(const PhiFunction& phi, double k, double lo, double hi, double c) {
    auto signed_primitive = [&](double u) {
        const double v = phi.primitive(k * std::abs(u)) / k;
        return u < 0.0 ? -v : v;
    };
    return signed_primitive(hi - c) - signed_primitive(lo - c);
}

double codebook_cost(const PhiFunction& phi, double k, std::vector<double>& pts) {
    std::sort(pts.begin(), pts.end());
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double lo = i == 0 ? 0.0 : 0.5 * (pts[i - 1] + pts[i]);
        const double hi = i + 1 == pts.size() ? 1.0 : 0.5 * (pts[i] + pts[i + 1]);
        total += cell_cost(phi, k, lo, hi, pts[i]);
    }
    return total;
}

double descend(const PhiFunction& phi, double k, std::vector<double>& pts) {
    double cost = codebook_cost(phi, k, pts);
    for (int iter = 0; iter < 4000; ++iter) {
        std::vector<double> next(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double lo = i == 0 ? 0.0 : 0.5 * (pts[i - 1] + pts[i]);
            const double hi = i + 1 == pts.size() ? 1.0 : 0.5 * (pts[i] + pts[i + 1]);
            next[i] = golden_section([&](double c) { return cell_cost(phi, k, lo, hi, c); }, lo, hi, 1e-13).x;
        }
        const double next_cost = codebook_cost(phi, k, next);
        if (!(next_cost < cost)) break;
        const double gain = cost - next_cost;
        pts = std::move(next);
        cost = next_cost;
        if (gain <= 1e-15 * cost) break;
    }
    return cost;
}

}  // namespace

FNOracleResult f_n_oracle(const PhiFunction& phi, int n, double eta, int restarts, std::uint64_t seed) {
    if (n < 1 || n > 256) throw DomainError("f_n_oracle: n must lie in [1, 256]");
    if (!(eta > 0.0)) throw DomainError("f_n_oracle: eta must be > 0");
    restarts = std::max(restarts, 1);
    const double k = n / eta;

    FNOracleResult best{n, eta, kInf, {}};
    for (int r = 0; r < restarts; ++r) {
        std::vector<double> pts(static_cast<std::size_t>(n));
        CounterRng rng(seed, static_cast<std::uint64_t>(r));
        for (int i = 0; i < n; ++i) {
            const double mid = (i + 0.5) / n;
            const double jitter = r == 0 ? 0.0 : (rng.uniform() - 0.5) * 0.9 / n;
            pts[static_cast<std::size_t>(i)] = std::clamp(mid + jitter, 0.0, 1.0);
        }
        const double cost = descend(phi, k, pts);
        if (cost < best.value) {
            best.value = cost;
            best.codebook = pts;
        }
    }
    return best;
}

}  // namespace orliczq
