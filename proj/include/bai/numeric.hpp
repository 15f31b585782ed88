#pragma once
#include <cmath>
#include <utility>

namespace bai::numeric {

struct Minimum {
    double x;
    double value;
    int iterations;
};

// Golden-section search for the minimizer of a unimodal f on [lo, hi];
// stops once the bracket is narrower than tol.
template <class F>
Minimum golden_section_minimize(F&& f, double lo, double hi, double tol, int max_iter = 500) {
    constexpr double inv_phi = 0.6180339887498948482;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    int it = 0;
    while (b - a > tol && it < max_iter) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        ++it;
    }
    // Endpoints are part of the feasible set; keep them in the comparison.
    Minimum best{c, fc, it};
    if (fd < best.value) best = {d, fd, it};
    const double fa = f(lo), fb = f(hi);
    if (fa < best.value) best = {lo, fa, it};
    if (fb < best.value) best = {hi, fb, it};
    return best;
}

// Bisection for an increasing predicate-style root: returns the last bracket
// [lo, hi] with f(lo) < 0 <= f(hi) after the interval shrinks below tol or
// stops shrinking in floating point.
template <class F>
std::pair<double, double> bisect_increasing(F&& f, double lo, double hi, double tol, int max_iter = 200) {
    for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return {lo, hi};
}

}  // namespace bai::numeric
