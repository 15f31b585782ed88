#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "bai/errors.hpp"

// Scalar special functions used by the posterior computations. Everything
// that can underflow has a log-domain variant.
namespace bai::special {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// log(1 - exp(z)) for z <= 0.
inline double log1mexp(double z) noexcept {
    if (z >= 0.0) return neg_inf;
    return z > -std::numbers::ln2 ? std::log(-std::expm1(z)) : std::log1p(-std::exp(z));
}

// log(exp(a) + exp(b)).
inline double logaddexp(double a, double b) noexcept {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_pdf(double z) noexcept {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

// log Φ(z), accurate in the far lower tail where Φ underflows.
inline double log_normal_cdf(double z) noexcept {
    if (z > 5.0) return std::log1p(-0.5 * std::erfc(z / std::numbers::sqrt2));
    if (z > -37.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
    // Mills-ratio asymptotic series; truncation error below 1e-13 for z <= -37.
    const double r = 1.0 / (z * z);
    const double series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
    return -0.5 * z * z - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

inline double log_beta_fn(double a, double b) {
    return boost::math::lgamma(a) + boost::math::lgamma(b) - boost::math::lgamma(a + b);
}

inline double log_beta_pdf(double x, double a, double b, double log_beta_ab) noexcept {
    if (x < 0.0 || x > 1.0) return neg_inf;
    const double lx = (a == 1.0) ? 0.0 : (a - 1.0) * std::log(x);
    const double l1x = (b == 1.0) ? 0.0 : (b - 1.0) * std::log1p(-x);
    return lx + l1x - log_beta_ab;
}

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double ibeta_continued_fraction(double x, double a, double b) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const int max_iter = 2000 + static_cast<int>(20.0 * std::sqrt(std::max(a, b)));
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    throw numerical_error("incomplete beta continued fraction did not converge (a=" +
                          std::to_string(a) + ", b=" + std::to_string(b) +
                          ", x=" + std::to_string(x) + ")");
}

// log I_x(a, b) evaluated directly by the continued fraction; valid (fast
// convergence) for x < (a + 1) / (a + b + 2).
inline double log_ibeta_direct(double x, double a, double b, double log_beta_ab) {
    const double front = a * std::log(x) + b * std::log1p(-x) - log_beta_ab;
    return front + std::log(ibeta_continued_fraction(x, a, b) / a);
}

}  // namespace detail

// log of the regularized incomplete beta function I_x(a, b), i.e. the log-cdf
// of Beta(a, b) at x. log_beta_ab must equal log B(a, b).
inline double log_ibeta(double x, double a, double b, double log_beta_ab) {
    if (x <= 0.0) return neg_inf;
    if (x >= 1.0) return 0.0;
    if (x < (a + 1.0) / (a + b + 2.0)) return detail::log_ibeta_direct(x, a, b, log_beta_ab);
    return log1mexp(detail::log_ibeta_direct(1.0 - x, b, a, log_beta_ab));
}

inline double log_ibeta(double x, double a, double b) { return log_ibeta(x, a, b, log_beta_fn(a, b)); }

inline double ibeta(double x, double a, double b) { return std::exp(log_ibeta(x, a, b)); }

}  // namespace bai::special
