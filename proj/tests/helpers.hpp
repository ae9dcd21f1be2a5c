#pragma once

// Statistical machinery shared by the test suite: goodness-of-fit and
// Kolmogorov-Smirnov checks, and an independent brute-force evaluation of
// the pair compatibility probability. Critical values are pinned at
// alpha = 1e-3; with fixed seeds the verdicts are reproducible.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ambiloc/special.hpp"

namespace testutil {

// Upper chi-square critical value at alpha = 1e-3 (Wilson-Hilferty).
inline double chi2_crit(double df) {
    const double z = 3.090232306167814;
    const double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
    return df * t * t * t;
}

struct gof_result {
    double stat = 0.0;
    std::size_t bins = 0;
    bool pass = false;
};

// Pearson test of observed counts against expected probabilities (same
// length, probabilities summing to ~1 including any tail bin). Adjacent
// bins are pooled until each group expects at least min_expected counts.
inline gof_result chi2_gof(const std::vector<std::uint64_t>& observed,
                           const std::vector<double>& expected_prob,
                           double min_expected = 8.0) {
    double n = 0.0;
    for (auto c : observed) n += static_cast<double>(c);
    std::vector<double> exp_group, obs_group;
    double e_acc = 0.0, o_acc = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        e_acc += n * expected_prob[i];
        o_acc += static_cast<double>(observed[i]);
        if (e_acc >= min_expected) {
            exp_group.push_back(e_acc);
            obs_group.push_back(o_acc);
            e_acc = o_acc = 0.0;
        }
    }
    if (e_acc > 0.0 || o_acc > 0.0) {
        if (exp_group.empty()) {
            exp_group.push_back(e_acc);
            obs_group.push_back(o_acc);
        } else {
            exp_group.back() += e_acc;
            obs_group.back() += o_acc;
        }
    }
    gof_result r;
    r.bins = exp_group.size();
    for (std::size_t i = 0; i < exp_group.size(); ++i) {
        const double d = obs_group[i] - exp_group[i];
        r.stat += d * d / exp_group[i];
    }
    r.pass = r.bins >= 2 && r.stat <= chi2_crit(static_cast<double>(r.bins - 1));
    return r;
}

// One-sample Kolmogorov-Smirnov pass/fail at alpha = 1e-3.
template <class Cdf>
inline bool ks_pass(std::vector<double> xs, const Cdf& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, f - static_cast<double>(i) / n,
                      static_cast<double>(i + 1) / n - f});
    }
    return d * std::sqrt(n) <= 1.9495;
}

inline double poisson_pmf(std::uint64_t k, double mean) {
    return std::exp(static_cast<double>(k) * std::log(mean) - mean -
                    std::lgamma(static_cast<double>(k) + 1.0));
}

// Brute-force pair compatibility probability by nested quadrature over the
// two noise variables. This decomposes by measurement noise rather than by
// the sum/difference coordinates of the shipped evaluation, so the two
// routes share no derivation. One-sided-noise cases reduce to a single
// Gaussian interval.
inline double pair_test_oracle(double r1, double r2, double s1, double s2, double d) {
    if (s1 < s2) {  // the pass event is symmetric in the two measurements
        std::swap(r1, r2);
        std::swap(s1, s2);
    }
    if (s1 == 0.0) return (d >= std::abs(r1 - r2) && d <= r1 + r2) ? 1.0 : 0.0;
    if (s2 == 0.0) {
        // Only measurement 1 is noisy: r1 + m1 must land in [|r2-d|, r2+d].
        const double lo = std::abs(r2 - d) - r1;
        const double hi = r2 + d - r1;
        if (hi <= lo) return 0.0;
        return std::max(0.0, ambiloc::normal_cdf(hi / s1) - ambiloc::normal_cdf(lo / s1));
    }
    ambiloc::quadrature_spec inner_spec;
    inner_spec.abs_tol = 1e-12;
    inner_spec.rel_tol = 1e-12;
    ambiloc::quadrature_spec outer_spec;
    outer_spec.abs_tol = 1e-10;
    outer_spec.rel_tol = 1e-10;
    const auto f = [&](double m1) {
        const double rho1 = r1 + m1;
        const double lo = std::abs(rho1 - d) - r2;
        const double hi = rho1 + d - r2;
        if (hi <= lo) return 0.0;
        const double a = std::max(lo, -9.75 * s2);
        const double b = std::min(hi, 9.75 * s2);
        if (b <= a) return 0.0;
        const auto g = [&](double m2) { return ambiloc::normal_pdf(m2 / s2) / s2; };
        const double win = ambiloc::integrate_1d(g, a, b, inner_spec).value;
        return ambiloc::normal_pdf(m1 / s1) / s1 * win;
    };
    return ambiloc::integrate_1d(f, -9.75 * s1, 9.75 * s1, outer_spec).value;
}

}  // namespace testutil
