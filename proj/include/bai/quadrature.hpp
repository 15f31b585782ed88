#pragma once
#include <algorithm>
#include <cmath>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "bai/errors.hpp"

namespace bai::quadrature {

struct Result {
    double value;  // integral estimate
    double error;  // sum of per-panel |fine - coarse| estimates
    int panels;
};

namespace detail {

// 20-point Gauss–Legendre rule on [lo, hi].
template <class F>
double gauss_legendre(F& f, double lo, double hi) {
    using rule = boost::math::quadrature::gauss<double, 20>;
    const auto& x = rule::abscissa();
    const auto& w = rule::weights();
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    // Even order: storage holds the 10 positive nodes of the symmetric rule.
    double sum = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sum += w[k] * (f(mid - half * x[k]) + f(mid + half * x[k]));
    }
    return half * sum;
}

struct Panel {
    double lo, hi, coarse, fine;
    double error() const { return std::abs(fine - coarse); }
    bool operator<(const Panel& o) const { return error() < o.error(); }
};

}  // namespace detail

// Globally adaptive Gauss–Legendre integration of f over the partition given
// by sorted breakpoints. Each panel is estimated by the 20-point rule on the
// whole panel (coarse) and on its two halves (fine); the panel with the
// largest |fine - coarse| is bisected until the summed estimate falls below
// rel_tol * |integral| + abs_tol.
template <class F>
Result integrate(F&& f, std::span<const double> breakpoints, double rel_tol, double abs_tol,
                 int max_panels = 4000) {
    std::priority_queue<detail::Panel> queue;
    double total = 0.0, err = 0.0;
    auto make = [&](double lo, double hi) {
        const double mid = 0.5 * (lo + hi);
        detail::Panel p{lo, hi, detail::gauss_legendre(f, lo, hi),
                        detail::gauss_legendre(f, lo, mid) + detail::gauss_legendre(f, mid, hi)};
        total += p.fine;
        err += p.error();
        queue.push(p);
    };
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
        if (breakpoints[k + 1] > breakpoints[k]) make(breakpoints[k], breakpoints[k + 1]);
    }
    std::vector<detail::Panel> frozen;
    int panels = static_cast<int>(queue.size());
    while (!queue.empty() && err > rel_tol * std::abs(total) + abs_tol) {
        if (panels >= max_panels)
            throw numerical_error("adaptive quadrature did not converge: error estimate " +
                                  std::to_string(err) + " on integral " + std::to_string(total) +
                                  " after " + std::to_string(panels) + " panels");
        const detail::Panel p = queue.top();
        queue.pop();
        const double mid = 0.5 * (p.lo + p.hi);
        if (!(mid > p.lo && mid < p.hi)) {
            // Cannot be split further in floating point; accept as is.
            err -= p.error();
            frozen.push_back(p);
            continue;
        }
        total -= p.fine;
        err -= p.error();
        make(p.lo, mid);
        make(mid, p.hi);
        ++panels;
    }
    // Recompute from panels to shed accumulated cancellation in the running sums.
    double value = 0.0, error = 0.0;
    for (const auto& p : frozen) {
        value += p.fine;
        error += p.error();
    }
    while (!queue.empty()) {
        value += queue.top().fine;
        error += queue.top().error();
        queue.pop();
    }
    return {value, error, panels};
}

}  // namespace bai::quadrature
