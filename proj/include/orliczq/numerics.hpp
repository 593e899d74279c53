#pragma once

// Shared one-dimensional numerics: adaptive quadrature, monotone bisection
// and golden-section search.

#include "orliczq/error.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace orliczq {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct QuadOptions {
    double rel_tol = 1e-10;
    // Subinterval budget of the adaptive refinement, per piece.
    unsigned max_intervals = 2000;
    // Results whose error estimate exceeds failure_factor * rel_tol * L1 are rejected.
    double failure_factor = 1e4;
    // Error estimates below this absolute floor are always accepted.
    double abs_floor = 1e-300;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    double l1 = 0.0;
};

namespace detail {

// 31-point Kronrod rule with its embedded 15-point Gauss rule on [a, b];
// the error estimate is |K - G|.
template <class F>
QuadResult kronrod_31(F& f, double a, double b) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    using G = boost::math::quadrature::gauss<double, 15>;
    const auto& x = GK::abscissa();
    const auto& wk = GK::weights();
    const auto& wg = G::weights();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double f0 = f(mid);
    double k = f0 * wk[0];
    double g = f0 * wg[0];
    double l1 = std::abs(f0) * wk[0];
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double fp = f(mid + half * x[i]);
        const double fm = f(mid - half * x[i]);
        k += (fp + fm) * wk[i];
        l1 += (std::abs(fp) + std::abs(fm)) * wk[i];
        if (i % 2 == 0) g += (fp + fm) * wg[i / 2];
    }
    QuadResult r;
    r.value = k * half;
    r.l1 = l1 * std::abs(half);
    r.error = std::max(std::abs((k - g) * half), 2.0 * std::numeric_limits<double>::epsilon() * std::abs(r.value));
    return r;
}

struct Panel {
    double a, b;
    QuadResult r;
    bool operator<(const Panel& o) const { return r.error < o.r.error; }
};

// Globally adaptive bisection on a finite interval: the panel with the
// largest error is split until the summed error meets rel_tol * L1.
template <class F>
QuadResult adaptive_piece(F& f, double a, double b, const QuadOptions& opt) {
    std::vector<Panel> heap;
    heap.push_back(Panel{a, b, kronrod_31(f, a, b)});
    QuadResult total = heap.front().r;
    while (heap.size() < opt.max_intervals) {
        if (std::isnan(total.value)) break;
        if (total.error <= std::max(opt.rel_tol * total.l1, opt.abs_floor)) break;
        std::pop_heap(heap.begin(), heap.end());
        const Panel worst = heap.back();
        heap.pop_back();
        const double m = 0.5 * (worst.a + worst.b);
        if (!(m > worst.a && m < worst.b)) {
            heap.push_back(worst);
            std::push_heap(heap.begin(), heap.end());
            break;
        }
        const Panel left{worst.a, m, kronrod_31(f, worst.a, m)};
        const Panel right{m, worst.b, kronrod_31(f, m, worst.b)};
        heap.push_back(left);
        std::push_heap(heap.begin(), heap.end());
        heap.push_back(right);
        std::push_heap(heap.begin(), heap.end());
        // Re-sum rather than update incrementally to avoid cancellation drift.
        total = {};
        for (const Panel& p : heap) {
            total.value += p.r.value;
            total.error += p.r.error;
            total.l1 += p.r.l1;
        }
    }
    return total;
}

inline void check_quadrature(const QuadResult& r, const QuadOptions& opt, double a, double b) {
    if (std::isnan(r.value)) {
        throw NumericError("quadrature produced NaN on [" + std::to_string(a) + ", " +
                               std::to_string(b) + "]",
                           r.error);
    }
    if (std::isinf(r.value)) return;
    const double allowed = std::max(opt.failure_factor * opt.rel_tol * r.l1, opt.abs_floor);
    if (r.error > allowed) {
        throw NumericError("quadrature did not converge on [" + std::to_string(a) + ", " +
                               std::to_string(b) + "]",
                           r.error);
    }
}

}  // namespace detail

// Adaptive Gauss-Kronrod integral of f over [a, b]. Either end may be infinite
// (mapped to a finite interval by x = a + t / (1 - t) and its mirror images).
// Finite interior breakpoints split the interval so kinks do not stall refinement.
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadOptions& opt = {},
                     std::span<const double> breaks = {}) {
    if (a == b) return {};
    if (a > b) {
        QuadResult r = integrate(f, b, a, opt, breaks);
        r.value = -r.value;
        return r;
    }
    if (std::isinf(a) || std::isinf(b)) {
        std::function<double(double)> mapped;
        if (std::isinf(a) && std::isinf(b)) {
            mapped = [&f](double t) {
                const double u = 1.0 - t * t;
                return f(t / u) * (1.0 + t * t) / (u * u);
            };
            QuadResult r = detail::adaptive_piece(mapped, -1.0, 1.0, opt);
            detail::check_quadrature(r, opt, a, b);
            return r;
        }
        if (std::isinf(b)) {
            mapped = [&f, a](double t) {
                const double u = 1.0 - t;
                return f(a + t / u) / (u * u);
            };
        } else {
            mapped = [&f, b](double t) {
                const double u = 1.0 - t;
                return f(b - t / u) / (u * u);
            };
        }
        QuadResult r = detail::adaptive_piece(mapped, 0.0, 1.0, opt);
        detail::check_quadrature(r, opt, a, b);
        return r;
    }
    std::vector<double> nodes;
    nodes.reserve(breaks.size() + 2);
    nodes.push_back(a);
    for (double x : breaks) {
        if (std::isfinite(x) && x > a && x < b) nodes.push_back(x);
    }
    nodes.push_back(b);
    std::sort(nodes.begin() + 1, nodes.end() - 1);
    // Pieces narrower than a relative 1e-12 of the interval are merged into
    // their neighbours: they carry no weight but stall the error test.
    const double min_width = 1e-12 * (b - a);
    std::vector<double> kept{nodes.front()};
    for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
        if (nodes[i] - kept.back() > min_width && b - nodes[i] > min_width) kept.push_back(nodes[i]);
    }
    kept.push_back(b);

    auto g = [&f](double x) -> double { return f(x); };
    QuadResult total;
    for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
        QuadResult piece = detail::adaptive_piece(g, kept[i], kept[i + 1], opt);
        detail::check_quadrature(piece, opt, kept[i], kept[i + 1]);
        total.value += piece.value;
        total.error += piece.error;
        total.l1 += piece.l1;
    }
    return total;
}

// Smallest x in [lo, hi] at which a monotone (false -> true) predicate holds,
// located to absolute tolerance tol. Returns hi when the predicate never holds
// below hi; callers test the endpoints themselves when that matters.
template <class Pred>
double bisect_first_true(Pred&& pred, double lo, double hi, double tol, int max_iter = 400) {
    for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (pred(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

struct Minimum {
    double x = 0.0;
    double value = 0.0;
};

// Golden-section search for the minimum of a unimodal function on [lo, hi].
template <class F>
Minimum golden_section(F&& f, double lo, double hi, double tol, int max_iter = 400) {
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? Minimum{x1, f1} : Minimum{x2, f2};
}

struct BracketedMinimum {
    double x = 0.0;
    double value = 0.0;
    // Final search interval before the golden-section refinement.
    double lo = 0.0;
    double hi = 0.0;
    bool at_lower_limit = false;
    bool at_upper_limit = false;
};

// Minimum of a unimodal function on [lower, upper]: walks downhill from start
// with doubling steps until the objective stops decreasing, then refines the
// bracket by golden section to tolerance tol.
template <class F>
BracketedMinimum minimize_unimodal(F&& f, double start, double lower, double upper, double tol) {
    const double f0 = f(start);
    double direction = 0.0;
    if (start + 1.0 <= upper && f(start + 1.0) < f0) {
        direction = 1.0;
    } else if (start - 1.0 >= lower && f(start - 1.0) < f0) {
        direction = -1.0;
    }
    BracketedMinimum out;
    out.lo = std::max(start - 1.0, lower);
    out.hi = std::min(start + 1.0, upper);
    if (direction != 0.0) {
        double prev = start;
        double cur = start + direction;
        double f_cur = f(cur);
        double step = 2.0;
        while (true) {
            double next = cur + direction * step;
            const bool at_edge = next <= lower || next >= upper;
            if (at_edge) next = direction < 0.0 ? lower : upper;
            const double f_next = f(next);
            if (!(f_next < f_cur) || at_edge) {
                out.lo = std::min(prev, next);
                out.hi = std::max(prev, next);
                break;
            }
            prev = cur;
            cur = next;
            f_cur = f_next;
            step *= 2.0;
        }
    }
    out.at_lower_limit = out.lo <= lower;
    out.at_upper_limit = out.hi >= upper;
    const Minimum m = golden_section(f, out.lo, out.hi, tol);
    out.x = m.x;
    out.value = m.value;
    return out;
}

// log(exp(a) + exp(b)) without overflow.
inline double log_add(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    if (a < b) std::swap(a, b);
    return a + std::log1p(std::exp(b - a));
}

}  // namespace orliczq
