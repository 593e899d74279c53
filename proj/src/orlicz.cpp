#include "orliczq/orlicz.hpp"

#include "orliczq/error.hpp"
#include "orliczq/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace orliczq {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_argument(double t) {
    if (!(t >= 0.0)) throw DomainError("phi: argument must be >= 0, got " + std::to_string(t));
}

double tabulated_value(const Tabulated& tab, double t) {
    const auto& k = tab.knots;
    if (t <= k.front().first) return k.front().second;
    if (t >= k.back().first) return k.back().second;
    auto it = std::upper_bound(k.begin(), k.end(), t,
                               [](double v, const std::pair<double, double>& kn) { return v < kn.first; });
    const auto& [t1, v1] = *it;
    const auto& [t0, v0] = *(it - 1);
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
}

double tabulated_primitive(const Tabulated& tab, double T) {
    const auto& k = tab.knots;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < k.size(); ++i) {
        const double a = k[i].first;
        const double b = k[i + 1].first;
        if (T <= a) return acc;
        const double e = std::min(T, b);
        acc += 0.5 * (k[i].second + tabulated_value(tab, e)) * (e - a);
    }
    if (T > k.back().first) acc += k.back().second * (T - k.back().first);
    return acc;
}

}  // namespace

PhiFunction PhiFunction::power(double p) {
    if (!(p > 0.0) || !std::isfinite(p)) {
        throw DomainError("Power loss needs a finite exponent p > 0, got " + std::to_string(p));
    }
    PhiFunction phi(Power{p});
    phi.sup_ = kInf;
    return phi;
}

PhiFunction PhiFunction::exp_minus_one() {
    PhiFunction phi(ExpMinusOne{});
    phi.sup_ = kInf;
    return phi;
}

PhiFunction PhiFunction::scaled(const PhiFunction& base, double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw DomainError("ScaledLoss needs delta > 0, got " + std::to_string(delta));
    }
    PhiFunction phi(ScaledLoss{std::make_shared<const PhiFunction>(base), delta});
    phi.sup_ = base.sup_value() / delta;
    return phi;
}

PhiFunction PhiFunction::tabulated(std::vector<std::pair<double, double>> knots) {
    if (knots.empty()) throw UsageError("Tabulated loss needs at least one knot");
    if (knots.front().first > 0.0) knots.insert(knots.begin(), {0.0, 0.0});
    for (std::size_t i = 0; i < knots.size(); ++i) {
        const auto [t, v] = knots[i];
        if (!std::isfinite(t) || !std::isfinite(v) || t < 0.0 || v < 0.0) {
            throw UsageError("Tabulated loss: knot " + std::to_string(i) + " must be finite and >= 0");
        }
        if (i > 0 && !(t > knots[i - 1].first)) {
            throw UsageError("Tabulated loss: knot abscissae must be strictly increasing");
        }
        if (i > 0 && v < knots[i - 1].second) {
            throw UsageError("Tabulated loss: values must be nondecreasing");
        }
    }
    if (knots.front().second != 0.0) {
        throw UsageError("Tabulated loss: value at t = 0 must be 0");
    }
    const double sup = knots.back().second;
    PhiFunction phi(Tabulated{std::move(knots)});
    phi.sup_ = sup;
    return phi;
}

double PhiFunction::operator()(double t) const {
    require_argument(t);
    return std::visit(
        overloaded{
            [t](const Power& k) { return t == 0.0 ? 0.0 : std::pow(t, k.p); },
            [t](const ExpMinusOne&) { return t > kExpArgumentCap ? kInf : std::expm1(t); },
            [t](const ScaledLoss& k) { return (*k.base)(t) / k.delta; },
            [t](const Tabulated& k) { return tabulated_value(k, t); },
        },
        kind_);
}

double PhiFunction::log_value(double t) const {
    require_argument(t);
    return std::visit(
        overloaded{
            [t](const Power& k) { return t == 0.0 ? -kInf : k.p * std::log(t); },
            [t](const ExpMinusOne&) {
                if (t == 0.0) return -kInf;
                if (t > 1.0) return t + std::log1p(-std::exp(-t));
                return std::log(std::expm1(t));
            },
            [t](const ScaledLoss& k) { return k.base->log_value(t) - std::log(k.delta); },
            [t](const Tabulated& k) { return std::log(tabulated_value(k, t)); },
        },
        kind_);
}

std::optional<double> PhiFunction::derivative(double t) const {
    require_argument(t);
    return std::visit(
        overloaded{
            [t](const Power& k) -> std::optional<double> {
                if (t == 0.0) return k.p < 1.0 ? kInf : (k.p == 1.0 ? 1.0 : 0.0);
                return k.p * std::pow(t, k.p - 1.0);
            },
            [t](const ExpMinusOne&) -> std::optional<double> {
                return t > kExpArgumentCap ? kInf : std::exp(t);
            },
            [t](const ScaledLoss& k) -> std::optional<double> {
                auto d = k.base->derivative(t);
                if (!d) return std::nullopt;
                return *d / k.delta;
            },
            [](const Tabulated&) -> std::optional<double> { return std::nullopt; },
        },
        kind_);
}

std::optional<double> PhiFunction::log_derivative(double t) const {
    require_argument(t);
    return std::visit(
        overloaded{
            [t](const Power& k) -> std::optional<double> {
                if (t == 0.0) return k.p < 1.0 ? kInf : (k.p == 1.0 ? 0.0 : -kInf);
                return std::log(k.p) + (k.p - 1.0) * std::log(t);
            },
            [t](const ExpMinusOne&) -> std::optional<double> { return t; },
            [t](const ScaledLoss& k) -> std::optional<double> {
                auto d = k.base->log_derivative(t);
                if (!d) return std::nullopt;
                return *d - std::log(k.delta);
            },
            [](const Tabulated&) -> std::optional<double> { return std::nullopt; },
        },
        kind_);
}

double PhiFunction::primitive(double T) const {
    require_argument(T);
    return std::visit(
        overloaded{
            [T](const Power& k) { return std::pow(T, k.p + 1.0) / (k.p + 1.0); },
            [T](const ExpMinusOne&) { return T > kExpArgumentCap ? kInf : std::expm1(T) - T; },
            [T](const ScaledLoss& k) { return k.base->primitive(T) / k.delta; },
            [T](const Tabulated& k) { return tabulated_primitive(k, T); },
        },
        kind_);
}

double PhiFunction::sup_value() const { return sup_; }

std::vector<double> PhiFunction::kinks() const {
    return std::visit(overloaded{
                          [](const ScaledLoss& k) { return k.base->kinks(); },
                          [](const Tabulated& k) {
                              std::vector<double> out;
                              for (const auto& kn : k.knots) {
                                  if (kn.first > 0.0) out.push_back(kn.first);
                              }
                              return out;
                          },
                          [](const auto&) { return std::vector<double>{}; },
                      },
                      kind_);
}

bool PhiFunction::is_smooth() const {
    return std::visit(overloaded{
                          [](const ScaledLoss& k) { return k.base->is_smooth(); },
                          [](const Tabulated&) { return false; },
                          [](const auto&) { return true; },
                      },
                      kind_);
}

PhiFunction::Peeled PhiFunction::peel() const noexcept {
    Peeled out{this, 1.0};
    while (const auto* s = std::get_if<ScaledLoss>(&out.base->kind_)) {
        out.factor /= s->delta;
        out.base = s->base.get();
    }
    return out;
}

double phi_eval(const PhiFunction& phi, double t) { return phi(t); }

double orlicz_norm_of_samples(const PhiFunction& phi, std::span<const double> distances) {
    if (distances.empty()) throw UsageError("orlicz_norm_of_samples: empty sample");
    double dmax = 0.0;
    for (double d : distances) {
        if (!(d >= 0.0) || !std::isfinite(d)) {
            throw UsageError("orlicz_norm_of_samples: distances must be finite and >= 0");
        }
        dmax = std::max(dmax, d);
    }
    if (dmax == 0.0) return 0.0;

    const auto peeled = phi.peel();
    const auto* power = std::get_if<Power>(&peeled.base->kind());
    const double n = static_cast<double>(distances.size());
    auto mean_loss = [&](double t) {
        double acc = 0.0;
        if (power) {
            for (double d : distances) acc += std::pow(d / t, power->p);
            return peeled.factor * acc / n;
        }
        for (double d : distances) {
            acc += phi(d / t);
            if (std::isinf(acc)) return kInf;
        }
        return acc / n;
    };

    double hi = dmax;
    for (int i = 0; mean_loss(hi) > 1.0; ++i) {
        if (i > 2100) throw NumericError("orlicz_norm_of_samples: no finite upper bracket", mean_loss(hi));
        hi *= 2.0;
    }
    double lo = 0.5 * hi;
    while (mean_loss(lo) <= 1.0) {
        hi = lo;
        lo *= 0.5;
        if (lo < dmax * 1e-300) return 0.0;
    }
    while (hi - lo > 1e-13 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mean_loss(mid) > 1.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return hi;
}

NormSpace::NormSpace(int dimension, NormKind kind) : dimension_(dimension), kind_(kind) {
    if (dimension < 1) throw DomainError("NormSpace: dimension must be >= 1");
}

double NormSpace::norm(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dimension_) throw UsageError("NormSpace::norm: dimension mismatch");
    if (kind_ == NormKind::SupNorm) {
        double m = 0.0;
        for (double v : x) m = std::max(m, std::abs(v));
        return m;
    }
    if (dimension_ == 1) return std::abs(x[0]);
    if (dimension_ == 2) return std::hypot(x[0], x[1]);
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double NormSpace::distance(std::span<const double> x, std::span<const double> y) const {
    if (x.size() != y.size() || static_cast<int>(x.size()) != dimension_) {
        throw UsageError("NormSpace::distance: dimension mismatch");
    }
    if (kind_ == NormKind::SupNorm) {
        double m = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
        return m;
    }
    if (dimension_ == 1) return std::abs(x[0] - y[0]);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(s);
}

std::pair<double, double> NormSpace::euclidean_equivalence() const {
    if (kind_ == NormKind::SupNorm) return {1.0 / std::sqrt(static_cast<double>(dimension_)), 1.0};
    return {1.0, 1.0};
}

double NormSpace::unit_cube_radius() const {
    return kind_ == NormKind::SupNorm ? 1.0 : std::sqrt(static_cast<double>(dimension_));
}

}  // namespace orliczq
