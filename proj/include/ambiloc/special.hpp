#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>

#include "ambiloc/types.hpp"

namespace ambiloc {

inline double normal_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

// Phi(x); absolute error at erfc level (~1e-16).
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

// ---------------------------------------------------------------------------
// Log-factorials and binomials.

inline double log_factorial(std::int64_t n) {
    static const auto table = [] {
        std::array<double, 64> t{};
        double acc = 0.0;
        for (std::size_t k = 1; k < t.size(); ++k) {
            acc += std::log(static_cast<double>(k));
            t[k] = acc;
        }
        return t;
    }();
    if (n < 0) throw validation_error("log_factorial: negative argument");
    if (n < static_cast<std::int64_t>(table.size())) return table[static_cast<std::size_t>(n)];
    return std::lgamma(static_cast<double>(n) + 1.0);
}

inline double log_binomial(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

// ---------------------------------------------------------------------------
// Lower incomplete gamma for integer shape v >= 1, any real x (including
// negative). Returned in log space with an explicit sign because values
// overflow double for large v, and x < 0 flips sign with the parity of v.

struct signed_log {
    double log_abs = -std::numeric_limits<double>::infinity();
    int sign = 0;  // -1, 0, +1

    double value() const {
        return sign == 0 ? 0.0 : static_cast<double>(sign) * std::exp(log_abs);
    }
};

namespace detail {

// log of sum_{j>=0} y^j / (j! (v+j)) for y > 0; all terms positive.
// Rescales the running sum to stay inside double range (y can reach ~700).
inline double log_tail_series(double v, double y) {
    double term = 1.0 / v;
    double sum = term;
    double offset = 0.0;  // log of the factor divided out so far
    for (int j = 1; j < 100000; ++j) {
        term *= y * (v + j - 1.0) / (static_cast<double>(j) * (v + j));
        sum += term;
        if (sum > 1e280) {
            sum *= 0x1.0p-512;
            term *= 0x1.0p-512;
            offset += 512.0 * M_LN2;
        }
        if (j > y && term < sum * 1e-18) return std::log(sum) + offset;
    }
    throw numerical_error("incomplete gamma series failed to converge");
}

}  // namespace detail

// gamma_lower(v, x) = integral of t^(v-1) e^(-t) dt from 0 to x.
inline signed_log log_lower_gamma_int(std::int32_t v, double x) {
    if (v < 1) throw validation_error("log_lower_gamma_int: v must be >= 1");
    const double dv = static_cast<double>(v);
    if (x == 0.0) return {};
    if (x < 0.0) {
        // Substituting t = -s gives (-1)^v * integral of s^(v-1) e^s ds on
        // [0, -x]; the integrand is positive, so the alternating closed form
        // (catastrophic cancellation for large |x|) is avoided entirely.
        const double y = -x;
        const double log_j = dv * std::log(y) + detail::log_tail_series(dv, y);
        return {log_j, (v % 2 == 0) ? +1 : -1};
    }
    if (x < dv + 1.0) {
        // Ascending series, all terms positive.
        double term = 1.0 / dv;
        double sum = term;
        for (int j = 1; j < 10000; ++j) {
            term *= x / (dv + j);
            sum += term;
            if (term < sum * 1e-18) break;
        }
        return {dv * std::log(x) - x + std::log(sum), +1};
    }
    // x beyond the mean: go through the upper gamma, which for integer v is
    // (v-1)! e^(-x) sum_{k<v} x^k/k!, again all positive terms. The ratio
    // upper/Gamma(v) is e^(-x) sum < ~1/2 here, so log1p loses nothing.
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < v; ++k) {
        term *= x / k;
        sum += term;
    }
    const double log_ratio = -x + std::log(sum);  // upper / Gamma(v)
    return {std::lgamma(dv) + std::log1p(-std::exp(log_ratio)), +1};
}

inline double lower_gamma_int(std::int32_t v, double x) {
    return log_lower_gamma_int(v, x).value();
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod (G7/K15) quadrature.

struct quadrature_spec {
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    int max_depth = 30;
};

struct quadrature_result {
    double value = 0.0;
    double error = 0.0;  // accumulated error estimate
};

namespace detail {

// Positive-half K15 abscissae and weights; G7 uses the even-indexed nodes.
inline constexpr double k15_x[8] = {
    0.0000000000000000, 0.2077849550078985, 0.4058451513773972, 0.5860872354676911,
    0.7415311855993944, 0.8648644233597691, 0.9491079123427585, 0.9914553711208126};
inline constexpr double k15_w[8] = {
    0.2094821410847278, 0.2044329400752989, 0.1903505780647854, 0.1690047266392679,
    0.1406532597155259, 0.1047900103222502, 0.0630920926299785, 0.0229353220105292};
inline constexpr double g7_w[4] = {
    0.4179591836734694, 0.3818300505051189, 0.2797053914892767, 0.1294849661688697};

template <class F>
inline void gk15(const F& f, double a, double b, double& kron, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fk = 0.0, fg = 0.0;
    const double f0 = f(c);
    fk += k15_w[0] * f0;
    fg += g7_w[0] * f0;
    for (int i = 1; i < 8; ++i) {
        const double dx = h * k15_x[i];
        const double s = f(c - dx) + f(c + dx);
        fk += k15_w[i] * s;
        if (i % 2 == 0) fg += g7_w[i / 2] * s;
    }
    kron = fk * h;
    err = std::abs((fk - fg) * h);
}

template <class F>
inline void adapt(const F& f, double a, double b, double abs_tol, int depth, int max_depth,
                  double& value, double& err_acc, bool& converged) {
    double kron = 0.0, err = 0.0;
    gk15(f, a, b, kron, err);
    if (err <= abs_tol || depth >= max_depth) {
        value += kron;
        err_acc += err;
        if (err > abs_tol && depth >= max_depth) converged = false;
        return;
    }
    const double c = 0.5 * (a + b);
    adapt(f, a, c, 0.5 * abs_tol, depth + 1, max_depth, value, err_acc, converged);
    adapt(f, c, b, 0.5 * abs_tol, depth + 1, max_depth, value, err_acc, converged);
}

}  // namespace detail

// Integrates f over [a, b]. Throws numerical_error (message carries the
// achieved error) when the requested tolerance cannot be met.
template <class F>
inline quadrature_result integrate_1d(const F& f, double a, double b,
                                      const quadrature_spec& spec = {}) {
    if (a == b) return {0.0, 0.0};
    if (b < a) {
        auto r = integrate_1d(f, b, a, spec);
        r.value = -r.value;
        return r;
    }
    // First pass with the absolute target; the relative criterion is checked
    // against the resulting magnitude afterwards.
    double value = 0.0, err = 0.0;
    bool converged = true;
    detail::adapt(f, a, b, spec.abs_tol, 0, spec.max_depth, value, err, converged);
    const double bound = std::max(spec.abs_tol, spec.rel_tol * std::abs(value));
    if (!converged && err > bound)
        throw numerical_error("quadrature failed to converge (achieved error " +
                              std::to_string(err) + ")");
    return {value, err};
}

}  // namespace ambiloc
