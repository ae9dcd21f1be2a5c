#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "ambiloc/constraints.hpp"
#include "ambiloc/special.hpp"
#include "ambiloc/types.hpp"

namespace ambiloc {

// ---------------------------------------------------------------------------
// Distance laws.

// Density of the distance between two independent uniform points in a disk
// of radius R ("line picking"), supported on [0, 2R].
inline double disk_distance_pdf(double s, double R) {
    if (s <= 0.0 || s >= 2.0 * R) return 0.0;
    const double u = s / (2.0 * R);
    return (2.0 * s / (R * R)) *
           ((2.0 / M_PI) * std::acos(u) - (s / (M_PI * R)) * std::sqrt(1.0 - u * u));
}

// Closed-form CDF of the same law. With u = s/(2R):
//   F = (2 asin u + 8 u^2 acos u - 2u sqrt(1-u^2) - 4u^3 sqrt(1-u^2)) / pi.
inline double disk_distance_cdf(double s, double R) {
    if (s <= 0.0) return 0.0;
    if (s >= 2.0 * R) return 1.0;
    const double u = s / (2.0 * R);
    const double root = std::sqrt(std::max(0.0, 1.0 - u * u));
    return (2.0 * std::asin(u) + 8.0 * u * u * std::acos(u) - 2.0 * u * root -
            4.0 * u * u * u * root) /
           M_PI;
}

inline double disk_distance_mean(double R) { return 128.0 * R / (45.0 * M_PI); }

// CDF of the separation of two landmarks observed at ranges r1 and r2 from
// a common target, each with an independent uniform bearing:
//   D = sqrt(r1^2 + r2^2 - 2 r1 r2 cos Theta), Theta uniform.
// Supported on [|r1-r2|, r1+r2].
inline double observed_pair_distance_cdf(double s, double r1, double r2) {
    if (s <= std::abs(r1 - r2)) return 0.0;
    if (s >= r1 + r2) return 1.0;
    const double c = std::clamp((r1 * r1 + r2 * r2 - s * s) / (2.0 * r1 * r2), -1.0, 1.0);
    return std::acos(c) / M_PI;
}

// ---------------------------------------------------------------------------
// Threshold interval and per-pair pass rates.

namespace detail {

// Root of f on [lo, hi] with f(lo), f(hi) of opposite sign (Illinois method).
template <class F>
inline double bracketed_root(const F& f, double lo, double hi, double flo, double fhi) {
    for (int it = 0; it < 200; ++it) {
        const double mid = (hi * flo - lo * fhi) / (flo - fhi);
        if (!(mid > lo && mid < hi)) {
            const double m = 0.5 * (lo + hi);
            const double fm = f(m);
            (fm * flo <= 0.0 ? hi : lo) = m;
            (fm * flo <= 0.0 ? fhi : flo) = fm;
        } else {
            const double fm = f(mid);
            if (fm * flo <= 0.0) {
                hi = mid;
                fhi = fm;
                flo *= 0.5;  // Illinois damping
            } else {
                lo = mid;
                flo = fm;
                fhi *= 0.5;
            }
        }
        if (hi - lo < 1e-12 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
}

struct pass_slopes {
    double dr1 = 0.0;
    double dr2 = 0.0;
    double ds = 0.0;
};

// Gradient of triangle_probability in (r1, r2, s). The equal-noise case has
// a closed form; other noise mixes fall back to central differences (one-
// sided next to the domain edge, since negative arguments are rejected).
inline pass_slopes pass_probability_slopes(double r1, double r2, double sigma1, double sigma2,
                                           double s) {
    pass_slopes out;
    if (sigma1 == sigma2 && sigma1 > 0.0) {
        const double st = std::sqrt(2.0) * sigma1;
        const double w = (r1 + r2 - s) / st;
        const double vh = (r1 - r2 + s) / st;
        const double vl = (r1 - r2 - s) / st;
        const double cw = normal_cdf(w);
        const double gap = normal_cdf(vh) - normal_cdf(vl);
        const double pw = normal_pdf(w) / st;
        const double ph = normal_pdf(vh) / st;
        const double pl = normal_pdf(vl) / st;
        out.dr1 = pw * gap + cw * (ph - pl);
        out.dr2 = pw * gap - cw * (ph - pl);
        out.ds = -pw * gap + cw * (ph + pl);
        return out;
    }
    const double x[3] = {r1, r2, s};
    double* slot[3] = {&out.dr1, &out.dr2, &out.ds};
    for (int i = 0; i < 3; ++i) {
        const double h = 1e-5 * (1.0 + std::abs(x[i]));
        double v[3] = {x[0], x[1], x[2]};
        v[i] = x[i] + h;
        const double up = triangle_probability(v[0], v[1], sigma1, sigma2, v[2]);
        v[i] = x[i] - h;
        const bool central = v[i] >= 0.0;
        if (!central) v[i] = x[i];
        const double dn = triangle_probability(v[0], v[1], sigma1, sigma2, v[2]);
        *slot[i] = (up - dn) / (central ? 2.0 * h : h);
    }
    return out;
}

// Standard deviation of an interval endpoint under the two range errors. The
// endpoint s(m1, m2) is defined implicitly by P(m1, m2, s) = T, so
// ds/dm_i = -(dP/dm_i)/(dP/ds). Tangential crossings and roots so deep in
// the tails that the gradient underflows fall back to zero width, keeping
// the endpoint sharp.
inline double endpoint_noise_sd(double r1, double r2, double sigma1, double sigma2, double s) {
    const auto sl = pass_probability_slopes(r1, r2, sigma1, sigma2, s);
    if (!std::isfinite(sl.ds) || std::abs(sl.ds) < 1e-30) return 0.0;
    const double a = sl.dr1 / sl.ds;
    const double b = sl.dr2 / sl.ds;
    const double var = sigma1 * sigma1 * a * a + sigma2 * sigma2 * b * b;
    return std::isfinite(var) ? std::sqrt(var) : 0.0;
}

// E over the bearing law of normal_cdf((s - D)/w): the chance that a pass
// endpoint jittered by N(0, w^2) still clears the true separation D.
// Integrating over the bearing angle instead of D absorbs the law's
// inverse-square-root edge spikes into a smooth integrand.
//
// Widths below 5e-3 are treated as sharp and use the plain CDF: the ramp is
// then too steep to resolve (its angular width can reach w / min(r1, r2)),
// and such widths only arise next to the r1 == r2 diagonal, where symmetry
// cancels the endpoint slopes and the nearby separation mass is flat anyway.
inline double smoothed_separation_cdf(double s, double w, double r1, double r2) {
    if (w <= 5e-3) return observed_pair_distance_cdf(s, r1, r2);
    if (s - (r1 + r2) >= 6.0 * w) return 1.0;
    if (s - std::abs(r1 - r2) <= -6.0 * w) return 0.0;
    const auto f = [&](double th) {
        const double dd = r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * std::cos(th);
        return normal_cdf((s - std::sqrt(std::max(dd, 0.0))) / w);
    };
    quadrature_spec spec;
    spec.abs_tol = 1e-6;
    spec.rel_tol = 1e-6;
    spec.max_depth = 24;
    return integrate_1d(f, 0.0, M_PI, spec).value / M_PI;
}

}  // namespace detail

// The set {s : triangle_probability(r1,r2,s1,s2,s) >= T} is an interval
// [s_lo, s_hi] (the pass probability rises from 0, plateaus, and falls).
// Returns nothing when the curve never reaches T.
inline std::optional<std::pair<double, double>> threshold_interval(double r1, double r2,
                                                                  double sigma1, double sigma2,
                                                                  double threshold) {
    const double lo_edge = std::abs(r1 - r2);
    const double hi_edge = r1 + r2;
    if (sigma1 == 0.0 && sigma2 == 0.0) return std::make_pair(lo_edge, hi_edge);
    const double spread = std::sqrt(sigma1 * sigma1 + sigma2 * sigma2);
    const auto prob = [&](double s) {
        return triangle_probability(r1, r2, sigma1, sigma2, s);
    };
    // Peak hunt: the plateau midpoint plus near-edge candidates, then a
    // coarse scan as fallback.
    double s_peak = 0.5 * (lo_edge + hi_edge);
    double p_peak = prob(s_peak);
    for (double cand : {lo_edge + 4.0 * spread, hi_edge - 4.0 * spread}) {
        if (cand > 0.0 && cand < hi_edge + 4.0 * spread) {
            const double p = prob(cand);
            if (p > p_peak) {
                p_peak = p;
                s_peak = cand;
            }
        }
    }
    if (p_peak < threshold) {
        const double span_lo = std::max(0.0, lo_edge - 10.0 * spread);
        const double span_hi = hi_edge + 10.0 * spread;
        for (int i = 0; i <= 128; ++i) {
            const double s = span_lo + (span_hi - span_lo) * i / 128.0;
            const double p = prob(s);
            if (p > p_peak) {
                p_peak = p;
                s_peak = s;
            }
        }
        if (p_peak < threshold) return std::nullopt;
    }
    const auto shifted = [&](double s) { return prob(s) - threshold; };
    const double hi_far = hi_edge + 12.0 * spread + 1.0;
    const double s_lo = detail::bracketed_root(shifted, 0.0, s_peak, -threshold,
                                               p_peak - threshold);
    const double s_hi = detail::bracketed_root(shifted, s_peak, hi_far, p_peak - threshold,
                                               prob(hi_far) - threshold);
    return std::make_pair(s_lo, s_hi);
}

struct pair_rate_result {
    double tpr = 0.0;  // chance the true pair passes, over its separation law
    double fpr = 0.0;  // chance an unrelated AOI pair passes, over the disk law
};

// Rates for one measurement pair at true ranges (r1, r2). The pass region of
// the compatibility test is an interval in separation; candidates are scored
// against it under two laws: the disk law for unrelated pairs (FPR) and the
// bearing law for the true pair (TPR).
//
// The interval the candidates actually face sits at the *measured* ranges.
// For the disk law the endpoint jitter averages out to first order, so fpr
// keeps the centered interval. The bearing law instead piles its mass
// against the support edges, exactly where the endpoints sit, so the same
// jitter knocks out a few percent of true pairs: tpr linearizes each
// endpoint in the two range errors and averages the pass indicator over the
// resulting Gaussian.
inline pair_rate_result pair_rates(double r1, double r2, double sigma1, double sigma2,
                                   double threshold, double aoi_radius) {
    const auto iv = threshold_interval(r1, r2, sigma1, sigma2, threshold);
    if (!iv) return {};
    pair_rate_result out;
    out.fpr = disk_distance_cdf(iv->second, aoi_radius) - disk_distance_cdf(iv->first, aoi_radius);
    if (sigma1 == 0.0 && sigma2 == 0.0) {
        out.tpr = observed_pair_distance_cdf(iv->second, r1, r2) -
                  observed_pair_distance_cdf(iv->first, r1, r2);
    } else {
        const double w_lo = detail::endpoint_noise_sd(r1, r2, sigma1, sigma2, iv->first);
        const double w_hi = detail::endpoint_noise_sd(r1, r2, sigma1, sigma2, iv->second);
        out.tpr = detail::smoothed_separation_cdf(iv->second, w_hi, r1, r2) -
                  detail::smoothed_separation_cdf(iv->first, w_lo, r1, r2);
    }
    out.fpr = std::clamp(out.fpr, 0.0, 1.0);
    out.tpr = std::clamp(out.tpr, 0.0, 1.0);
    return out;
}

// ---------------------------------------------------------------------------
// Solution-set size law and conditional localizability.

// PMF of the number of surviving combinations given |C| = m candidates,
// per-wrong-candidate pass probability p_f, and whether the true combination
// survived. Wrong candidates pass independently, so the count is binomial
// over the m-1 wrong candidates, shifted by one when the truth is in.
inline double solution_size_pmf(std::int64_t k, std::int64_t m, double p_f,
                                bool truth_in_set) {
    if (m < 1) throw validation_error("solution_size_pmf: m must be >= 1");
    if (!(p_f >= 0.0 && p_f <= 1.0)) throw validation_error("solution_size_pmf: p_f range");
    const std::int64_t wrong = truth_in_set ? k - 1 : k;
    const std::int64_t trials = m - 1;
    if (wrong < 0 || wrong > trials) return 0.0;
    if (p_f == 0.0) return wrong == 0 ? 1.0 : 0.0;
    if (p_f == 1.0) return wrong == trials ? 1.0 : 0.0;
    const double lp = log_binomial(trials, wrong) + wrong * std::log(p_f) +
                      (trials - wrong) * std::log1p(-p_f);
    return std::exp(lp);
}

// P[picked combination is the true one | |C| = m], marginalizing the
// uniform tie-break over the surviving set:
//   p_t * (1 - (1-p_f)^m) / (m * p_f),  ->  p_t as p_f -> 0.
inline double conditional_localizability(double p_t, double p_f, std::int64_t m) {
    if (m < 1) throw validation_error("conditional_localizability: m must be >= 1");
    if (!(p_f >= 0.0 && p_f <= 1.0))
        throw validation_error("conditional_localizability: p_f range");
    if (p_f < 1e-13) return p_t * (1.0 - 0.5 * static_cast<double>(m - 1) * p_f);
    const double dm = static_cast<double>(m);
    return p_t * (-std::expm1(dm * std::log1p(-p_f))) / (dm * p_f);
}

// ---------------------------------------------------------------------------
// Mark-level quantities induced by the scenario.

namespace detail {

struct mark_moments {
    std::vector<double> visible_mean;  // b_m = lambda_m pi d_m^2
    std::vector<double> hidden_mean;   // c_m = lambda_m pi (d_a^2 - d_m^2)
    double total_visible = 0.0;        // a = sum of b_m
};

inline mark_moments mark_moments_of(const scenario_config& cfg) {
    mark_moments mm;
    const auto m = static_cast<std::size_t>(cfg.mark_count);
    mm.visible_mean.resize(m);
    mm.hidden_mean.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double d2 = cfg.visibility[i] * cfg.visibility[i];
        mm.visible_mean[i] = cfg.densities[i] * M_PI * d2;
        mm.hidden_mean[i] = cfg.densities[i] * M_PI * (cfg.aoi_radius * cfg.aoi_radius - d2);
        mm.total_visible += mm.visible_mean[i];
    }
    return mm;
}

// Poisson pmf table covering all but ~1e-13 of the mass.
inline std::vector<double> poisson_table(double mean) {
    std::vector<double> pmf;
    if (mean == 0.0) {
        pmf.push_back(1.0);
        return pmf;
    }
    double term = std::exp(-mean);
    if (term == 0.0) {  // large mean: build in log space around the mode
        const auto hi = static_cast<std::size_t>(mean + 12.0 * std::sqrt(mean) + 30.0);
        pmf.resize(hi + 1);
        for (std::size_t k = 0; k <= hi; ++k)
            pmf[k] = std::exp(k * std::log(mean) - mean - log_factorial(static_cast<std::int64_t>(k)));
        return pmf;
    }
    double cum = term;
    pmf.push_back(term);
    const auto cap = static_cast<std::size_t>(mean + 14.0 * std::sqrt(mean) + 60.0);
    for (std::size_t k = 1; k <= cap && cum < 1.0 - 1e-13; ++k) {
        term *= mean / static_cast<double>(k);
        pmf.push_back(term);
        cum += term;
    }
    return pmf;
}

}  // namespace detail

// Probability that a measurement pair carries marks (p, q), in order.
// Selection chance is proportional to each mark's expected visible count.
inline double mark_pair_pmf(std::int32_t p, std::int32_t q, const scenario_config& cfg) {
    if (p < 0 || q < 0 || p >= cfg.mark_count || q >= cfg.mark_count)
        throw validation_error("mark_pair_pmf: mark out of range");
    const auto mm = detail::mark_moments_of(cfg);
    return mm.visible_mean[static_cast<std::size_t>(p)] *
           mm.visible_mean[static_cast<std::size_t>(q)] /
           (mm.total_visible * mm.total_visible);
}

// Joint density of the two ranges given marks: independent, each linear in
// r on (0, d_mark].
inline double range_density_given_marks(double r1, double r2, std::int32_t p, std::int32_t q,
                                        const scenario_config& cfg) {
    const double dp = cfg.visibility.at(static_cast<std::size_t>(p));
    const double dq = cfg.visibility.at(static_cast<std::size_t>(q));
    if (r1 <= 0.0 || r1 > dp || r2 <= 0.0 || r2 > dq) return 0.0;
    return (2.0 * r1 / (dp * dp)) * (2.0 * r2 / (dq * dq));
}

// ---------------------------------------------------------------------------
// Count laws for candidate-set sizes, conditioned on observed marks.
//
// N_p (landmarks of mark p in the AOI) splits into the visible count V_p
// and a hidden Poisson(c_p) remainder. Observing a mark-p measurement
// size-biases V_p: selecting one of W visible landmarks uniformly weights
// the joint law of (V_p, W) by v/w. Two independent evaluations of that
// law are kept: a closed form through the incomplete gamma function, and
// the direct weighted double series from the underlying joint law. They
// must agree to 1e-9 relative or the caller gets an internal-consistency
// error. Both are normalized over v >= 1, which also absorbs the
// no-visible-landmark mass excluded by conditioning on an observation.

namespace detail {

// Closed-form route: P[V_p = v | observed mark p] proportional to
//   b_p^v * gamma_lower(v, b_p - a) / ((b_p - a)^v (v-1)!),
// evaluated in log space; the sign of the gamma factor cancels against
// (b_p - a)^v for every v.
inline std::vector<double> size_biased_visible_closed(double b, double y, std::size_t vcap) {
    std::vector<double> w(vcap + 1, 0.0);
    const double log_b = std::log(b);
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> logw(vcap + 1, -std::numeric_limits<double>::infinity());
    for (std::size_t v = 1; v <= vcap; ++v) {
        const auto iv = static_cast<std::int32_t>(v);
        double log_rho;
        if (y == 0.0) {
            log_rho = -log_factorial(static_cast<std::int64_t>(v));
        } else {
            const auto g = log_lower_gamma_int(iv, -y);
            if (g.sign != ((v % 2 == 0) ? 1 : -1))
                throw numerical_error("incomplete gamma sign mismatch");
            log_rho = g.log_abs - static_cast<double>(v) * std::log(y) - std::lgamma(static_cast<double>(v));
        }
        logw[v] = static_cast<double>(v) * log_b + log_rho;
        best = std::max(best, logw[v]);
        if (logw[v] < best - 46.0 && static_cast<double>(v) > b + 8.0) {
            logw.resize(v + 1);
            w.resize(v + 1);
            break;
        }
    }
    double total = 0.0;
    for (std::size_t v = 1; v < w.size(); ++v) {
        w[v] = std::exp(logw[v] - best);
        total += w[v];
    }
    for (auto& x : w) x /= total;
    return w;
}

// Series route: the same law from the joint (V_p, W) sum,
//   P[v] proportional to pois_b(v) * E_J[ v / (v + J) ],  J ~ Poisson(y),
// truncated when the remaining Poisson mass drops below 1e-14.
inline std::vector<double> size_biased_visible_series(double b, double y, std::size_t vcap) {
    const auto pj = poisson_table(y);
    std::vector<double> w(vcap + 1, 0.0);
    double pois_b = std::exp(-b);  // pois_b(v) iterated below
    double best = 0.0;
    for (std::size_t v = 1; v <= vcap; ++v) {
        pois_b *= b / static_cast<double>(v);
        double e = 0.0;
        for (std::size_t j = 0; j < pj.size(); ++j)
            e += pj[j] * (static_cast<double>(v) / static_cast<double>(v + j));
        w[v] = pois_b * e;
        best = std::max(best, w[v]);
        if (w[v] < best * 1e-20 && static_cast<double>(v) > b + 8.0) {
            w.resize(v + 1);
            break;
        }
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= total;
    return w;
}

// Same-mark variant: both measurements carry mark p, so the two selected
// landmarks are distinct mark-p landmarks and the joint law is weighted by
// v (v-1) / (w (w-1)). No closed form is used; this is the series law the
// simulation oracle confirms.
inline std::vector<double> size_biased_visible_same_mark(double b, double y, std::size_t vcap) {
    const auto pj = poisson_table(y);
    std::vector<double> w(vcap + 1, 0.0);
    double pois_b = std::exp(-b) * b;  // pois_b(1); loop starts at v = 2
    double best = 0.0;
    for (std::size_t v = 2; v <= vcap; ++v) {
        pois_b *= b / static_cast<double>(v);
        double e = 0.0;
        for (std::size_t j = 0; j < pj.size(); ++j) {
            const double wv = static_cast<double>(v + j);
            e += pj[j] / (wv * (wv - 1.0));
        }
        w[v] = pois_b * static_cast<double>(v) * static_cast<double>(v - 1) * e;
        best = std::max(best, w[v]);
        if (w[v] < best * 1e-20 && static_cast<double>(v) > b + 8.0) {
            w.resize(v + 1);
            break;
        }
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (total <= 0.0) throw numerical_error("same-mark count law degenerate");
    for (auto& x : w) x /= total;
    return w;
}

inline std::vector<double> convolve_poisson(const std::vector<double>& base, double mean) {
    const auto ph = poisson_table(mean);
    std::vector<double> out(base.size() + ph.size() - 1, 0.0);
    for (std::size_t v = 0; v < base.size(); ++v) {
        if (base[v] == 0.0) continue;
        for (std::size_t h = 0; h < ph.size(); ++h) out[v + h] += base[v] * ph[h];
    }
    return out;
}

inline std::size_t visible_cap(double b) {
    return static_cast<std::size_t>(b + 12.0 * std::sqrt(b + 1.0) + 40.0);
}

}  // namespace detail

// PMF of N_p given one observed measurement of mark p (index = count).
// Dual-evaluated; throws numerical_error if the routes disagree.
inline std::vector<double> single_mark_count_pmf(std::int32_t p, const scenario_config& cfg) {
    validate_scenario(cfg);
    if (p < 0 || p >= cfg.mark_count)
        throw validation_error("single_mark_count_pmf: mark out of range");
    const auto mm = detail::mark_moments_of(cfg);
    const double b = mm.visible_mean[static_cast<std::size_t>(p)];
    const double c = mm.hidden_mean[static_cast<std::size_t>(p)];
    const double y = mm.total_visible - b;
    const auto vcap = detail::visible_cap(b);
    const auto closed =
        detail::convolve_poisson(detail::size_biased_visible_closed(b, y, vcap), c);
    const auto series =
        detail::convolve_poisson(detail::size_biased_visible_series(b, y, vcap), c);
    const auto n = std::max(closed.size(), series.size());
    for (std::size_t v = 0; v < n; ++v) {
        const double a0 = v < closed.size() ? closed[v] : 0.0;
        const double b0 = v < series.size() ? series[v] : 0.0;
        const double m = std::max(std::abs(a0), std::abs(b0));
        if (m > 1e-12 && std::abs(a0 - b0) > 1e-9 * m)
            throw numerical_error("count-law cross-check failed at n=" + std::to_string(v));
    }
    return closed;
}

// PMF of N_p given both measurements carry mark p.
inline std::vector<double> same_mark_count_pmf(std::int32_t p, const scenario_config& cfg) {
    validate_scenario(cfg);
    if (p < 0 || p >= cfg.mark_count)
        throw validation_error("same_mark_count_pmf: mark out of range");
    const auto mm = detail::mark_moments_of(cfg);
    const double b = mm.visible_mean[static_cast<std::size_t>(p)];
    const double c = mm.hidden_mean[static_cast<std::size_t>(p)];
    const double y = mm.total_visible - b;
    return detail::convolve_poisson(
        detail::size_biased_visible_same_mark(b, y, detail::visible_cap(b)), c);
}

// PMF of the candidate-set size |C| = N_p * N_q for a two-measurement
// observation with distinct marks p != q. The same-mark case has no closed
// form here (the two counts coincide); use the simulation path for it.
inline double comb_size_pmf_given_marks(std::uint64_t n, std::int32_t p, std::int32_t q,
                                        const scenario_config& cfg) {
    if (p == q)
        throw validation_error(
            "comb_size_pmf_given_marks: same-mark pair unsupported; use the simulation path");
    const auto pp = single_mark_count_pmf(p, cfg);
    const auto pq = single_mark_count_pmf(q, cfg);
    if (n == 0) return 0.0;
    double total = 0.0;
    for (std::uint64_t d = 1; d * d <= n; ++d) {
        if (n % d != 0) continue;
        const std::uint64_t e = n / d;
        if (d < pp.size() && e < pq.size()) total += pp[d] * pq[e];
        if (d != e && e < pp.size() && d < pq.size()) total += pp[e] * pq[d];
    }
    return total;
}

// Joint law of (marks, ranges, candidate count) for a two-measurement
// observation: mark-pair weight x range density x count pmf. Same-mark
// points use the distinct-pair count law, where |C| = N_p (N_p - 1).
inline double joint_observation_density(std::int32_t p, std::int32_t q, double r1, double r2,
                                        std::uint64_t n, const scenario_config& cfg) {
    const double base = mark_pair_pmf(p, q, cfg) * range_density_given_marks(r1, r2, p, q, cfg);
    if (base == 0.0) return 0.0;
    if (p != q) return base * comb_size_pmf_given_marks(n, p, q, cfg);
    const auto pmf = same_mark_count_pmf(p, cfg);
    double mass = 0.0;
    for (std::size_t k = 2; k < pmf.size(); ++k)
        if (static_cast<std::uint64_t>(k) * (k - 1) == n) mass += pmf[k];
    return base * mass;
}

// ---------------------------------------------------------------------------
// Closed-form localizability for the random policy with two measurements,
// and the single-known-landmark upper bound.

struct analytic_result {
    double value = 0.0;
    double error_budget = 0.0;  // quadrature + truncation allowance
};

namespace detail {

// E over (n1, n2) of (1 - qf^(n1 n2)) / (n1 n2 pf), with qf = 1 - pf,
// factored through g(z) = sum_k coef[k] z^k so each node costs O(N1 * N2).
class product_count_kernel {
  public:
    product_count_kernel(const std::vector<double>& pmf1, const std::vector<double>& pmf2)
        : pmf1_(pmf1), coef2_(pmf2) {
        for (std::size_t k = 1; k < coef2_.size(); ++k) coef2_[k] /= static_cast<double>(k);
        coef2_[0] = 0.0;
        s2_ = std::accumulate(coef2_.begin(), coef2_.end(), 0.0);
        // suffix1_[n] = sum over n1 >= n of pmf1[n1] / n1, for the tail
        // shortcut below.
        suffix1_.assign(pmf1_.size() + 1, 0.0);
        for (std::size_t n = pmf1_.size(); n-- > 1;)
            suffix1_[n] = suffix1_[n + 1] + pmf1_[n] / static_cast<double>(n);
    }

    double expectation(double pf) const {
        if (pf < 1e-13) return 1.0;
        const double qf = 1.0 - pf;
        double acc = 0.0;
        double z = 1.0;
        for (std::size_t n1 = 1; n1 < pmf1_.size(); ++n1) {
            z *= qf;  // z = qf^n1
            // coef2 is nonnegative with coef2[0] = 0, so g(z) <= z * s2_ on
            // [0, 1]: once z is negligible the remaining terms are all s2_.
            if (z <= 1e-17) {
                acc += suffix1_[n1] * s2_;
                break;
            }
            if (pmf1_[n1] == 0.0) continue;
            acc += pmf1_[n1] / static_cast<double>(n1) * (s2_ - horner_(z));
        }
        return acc / pf;
    }

  private:
    double horner_(double z) const {
        double acc = 0.0;
        for (std::size_t k = coef2_.size(); k-- > 0;) acc = acc * z + coef2_[k];
        return acc;
    }

    std::vector<double> pmf1_;
    std::vector<double> coef2_;
    std::vector<double> suffix1_;
    double s2_ = 0.0;
};

// Same-mark pairs draw both slots from one candidate list, so the n(n-1)
// ordered combinations come in reversed twins that share one separation and
// survive or fall together: the reversed truth always rides along, and the
// wrong combinations reduce to K = n(n-1)/2 - 1 independent unordered
// tests. Picking the exact true order from the survivors then succeeds with
// E[1/(2 + 2 Binom(K, pf))], which telescopes to
//   (1 - qf^(n(n-1)/2)) / (n(n-1) pf),  ->  1/2 as pf -> 0.
inline double pair_within_mark_expectation(const std::vector<double>& pmf, double pf) {
    if (pf < 1e-13) return 0.5;
    const double lq = std::log1p(-pf);
    double acc = 0.0;
    for (std::size_t n = 2; n < pmf.size(); ++n) {
        if (pmf[n] == 0.0) continue;
        const double m = static_cast<double>(n) * static_cast<double>(n - 1);
        acc += pmf[n] * (-std::expm1(0.5 * m * lq)) / m;
    }
    return acc / pf;
}

// E over n of (1 - qf^n) / (n pf) for the single-count bound.

inline double single_count_expectation(const std::vector<double>& pmf, double pf) {
    if (pf < 1e-13) return 1.0;
    const double lq = std::log1p(-pf);
    double acc = 0.0;
    for (std::size_t n = 1; n < pmf.size(); ++n) {
        if (pmf[n] == 0.0) continue;
        const double m = static_cast<double>(n);
        acc += pmf[n] * (-std::expm1(m * lq)) / m;
    }
    return acc / pf;
}

// ---------------------------------------------------------------------------
// Visibility correction for wrong combinations that share a true landmark.
//
// Conditioning on enough visible landmarks pins the visible count near its
// minimum, so the candidates of an observed mark are not the homogeneous
// disk population behind p_f: they split into a few visible extras, uniform
// over that mark's visibility disk, and a hidden remainder, uniform over
// the rest of the AOI. A combination sharing a true member passes exactly
// when its one free candidate lands in the pass annulus around that member,
// so each such member carries the in/out mixture rate instead of p_f. The
// shift is folded in to first order through
//   E[1/(1+X)] ~ K(p_f) - sum_i k_i (p_i - p_f) H(K-1, p_f),
//   H(M, p) = integral_0^1 u (1 - p u)^M du,
// with the class-size-weighted H expectations precomputed on a p_f grid.

// Intersection area of two disks with radii ra, rb and center distance d.
inline double disk_overlap_area(double ra, double rb, double d) {
    if (ra <= 0.0 || rb <= 0.0) return 0.0;
    if (d >= ra + rb) return 0.0;
    if (d + rb <= ra) return M_PI * rb * rb;
    if (d + ra <= rb) return M_PI * ra * ra;
    const double ca = (d * d + ra * ra - rb * rb) / (2.0 * d * ra);
    const double cb = (d * d + rb * rb - ra * ra) / (2.0 * d * rb);
    const double t = (-d + ra + rb) * (d + ra - rb) * (d - ra + rb) * (d + ra + rb);
    return ra * ra * std::acos(std::clamp(ca, -1.0, 1.0)) +
           rb * rb * std::acos(std::clamp(cb, -1.0, 1.0)) -
           0.5 * std::sqrt(std::max(t, 0.0));
}

// E[visible landmarks beyond the two chosen | at least two visible] for a
// Poisson(a) visible total.
inline double expected_visible_extras(double a) {
    if (a <= 1e-8) return 0.0;
    const double p0 = std::exp(-a);
    const double tail = 1.0 - p0 - a * p0;  // P[W >= 2]
    if (tail <= 1e-12) return 0.0;
    return std::max((a - a * p0) / tail - 2.0, 0.0);
}

// Linear interpolation on a uniform p_f grid; reads past the cap clamp to
// the last node and an unbuilt table reads as zero.
struct pf_table {
    double step = 0.0;
    std::vector<double> v;

    double operator()(double pf) const {
        if (v.size() < 2 || step <= 0.0) return 0.0;
        const double x = std::clamp(pf / step, 0.0, static_cast<double>(v.size() - 1));
        const auto i = std::min(static_cast<std::size_t>(x), v.size() - 2);
        const double f = x - static_cast<double>(i);
        return v[i] + f * (v[i + 1] - v[i]);
    }
};

// Cross-mark partner classes: the free candidate sits in the second slot
// (count n2 - 1) or the first (count n1 - 1), with n1 n2 - 1 wrongs total.
//   free_second(pf) = E[(n2 - 1) H(n1 n2 - 2, pf)],  free_first symmetric.
// H is evaluated through incremental powers of qf, so each grid point costs
// O(N1 N2) multiplies; cells with no wrong combination (n1 n2 < 2) carry no
// partner classes and are skipped.
struct partner_tables {
    pf_table free_second;
    pf_table free_first;
};

inline partner_tables build_partner_tables(const std::vector<double>& pmf1,
                                           const std::vector<double>& pmf2, double pf_cap,
                                           std::size_t points) {
    partner_tables out;
    if (points < 2 || pf_cap <= 0.0) return out;
    const double step = pf_cap / static_cast<double>(points - 1);
    out.free_second.step = out.free_first.step = step;
    out.free_second.v.assign(points, 0.0);
    out.free_first.v.assign(points, 0.0);
    for (std::size_t g = 0; g < points; ++g) {
        const double pf = step * static_cast<double>(g);
        const double qf = 1.0 - pf;
        double acc1 = 0.0;
        double acc2 = 0.0;
        double z = 1.0;
        for (std::size_t n1 = 1; n1 < pmf1.size(); ++n1) {
            z *= qf;  // z = qf^n1
            if (pmf1[n1] == 0.0) continue;
            double w = 1.0;
            for (std::size_t n2 = 1; n2 < pmf2.size(); ++n2) {
                w *= z;  // w = qf^(n1 n2)
                const double m = static_cast<double>(n1) * static_cast<double>(n2);
                if (m < 2.0 || pmf2[n2] == 0.0) continue;
                // H(m - 2, pf) = (1 - qf^(m-1) (1 + (m-1) pf)) / (pf^2 (m-1) m)
                const double h = g == 0 ? 0.5
                                        : (1.0 - (w / qf) * (1.0 + (m - 1.0) * pf)) /
                                              (pf * pf * (m - 1.0) * m);
                const double cell = pmf1[n1] * pmf2[n2] * h;
                acc1 += cell * (static_cast<double>(n2) - 1.0);
                acc2 += cell * (static_cast<double>(n1) - 1.0);
            }
        }
        out.free_second.v[g] = acc1;
        out.free_first.v[g] = acc2;
    }
    return out;
}

// Same-mark variant over the unordered wrong-pair count n(n-1)/2 - 1: both
// partner classes have n - 2 members, so one table serves both.
inline pf_table build_twin_table(const std::vector<double>& pmf, double pf_cap,
                                 std::size_t points) {
    pf_table out;
    if (points < 2 || pf_cap <= 0.0) return out;
    out.step = pf_cap / static_cast<double>(points - 1);
    out.v.assign(points, 0.0);
    for (std::size_t g = 0; g < points; ++g) {
        const double pf = out.step * static_cast<double>(g);
        const double qf = 1.0 - pf;
        double acc = 0.0;
        double z = 1.0;
        double w = 1.0;
        for (std::size_t n = 2; n < pmf.size(); ++n) {
            z *= qf;  // z = qf^(n-1)
            w *= z;   // w = qf^(n(n-1)/2)
            const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
            if (pairs < 2.0 || pmf[n] == 0.0) continue;
            const double h = g == 0 ? 0.5
                                    : (1.0 - (w / qf) * (1.0 + (pairs - 1.0) * pf)) /
                                          (pf * pf * (pairs - 1.0) * pairs);
            acc += pmf[n] * (static_cast<double>(n) - 2.0) * h;
        }
        out.v[g] = acc;
    }
    return out;
}

inline void require_closed_form_scenario(const scenario_config& cfg) {
    validate_scenario(cfg);
    if (cfg.policy != observation_policy::random_visible)
        throw numerical_error("no closed form for nearest policy; use compare --semi-empirical");
    if (cfg.n_measurements != 2)
        throw numerical_error("closed form requires exactly 2 measurements");
}

// Shared integration skeleton: sum over mark pairs of the range-weighted
// expectation of kernel(p, q, r1, r2, p_t, p_f).
template <class Kernel>
inline analytic_result integrate_pairs(const scenario_config& cfg, const Kernel& kernel) {
    const auto mm = mark_moments_of(cfg);
    quadrature_spec spec;
    // The outer integral's error estimate cannot drop below the jitter left
    // by the inner adaptive passes, so tightening beyond ~1e-5 multiplies
    // node counts a hundredfold for sub-1e-6 gains. The achieved error is
    // accumulated into error_budget regardless.
    spec.abs_tol = 1e-5;
    spec.rel_tol = 1e-5;
    spec.max_depth = 14;
    analytic_result out;
    for (std::int32_t p = 0; p < cfg.mark_count; ++p) {
        for (std::int32_t q = p; q < cfg.mark_count; ++q) {
            const auto sp = static_cast<std::size_t>(p);
            const auto sq = static_cast<std::size_t>(q);
            const double weight = (p == q ? 1.0 : 2.0) * mm.visible_mean[sp] *
                                  mm.visible_mean[sq] /
                                  (mm.total_visible * mm.total_visible);
            const double dp = cfg.visibility[sp];
            const double dq = cfg.visibility[sq];
            const double sigma = cfg.noise_free ? 0.0 : cfg.noise_dev[sp];
            const double sigma2 = cfg.noise_free ? 0.0 : cfg.noise_dev[sq];
            double inner_err = 0.0;
            std::size_t inner_n = 0;
            const auto outer = [&](double r1) {
                const auto f2 = [&](double r2) {
                    const auto rates =
                        pair_rates(r1, r2, sigma, sigma2, cfg.threshold, cfg.aoi_radius);
                    return (2.0 * r2 / (dq * dq)) * kernel(p, q, r1, r2, rates.tpr, rates.fpr);
                };
                const auto r = integrate_1d(f2, 0.0, dq, spec);
                inner_err += r.error;
                ++inner_n;
                return (2.0 * r1 / (dp * dp)) * r.value;
            };
            const auto r = integrate_1d(outer, 0.0, dp, spec);
            // Each outer node carries one inner integral; their mean error
            // propagates through the outer average (total outer weight ~1).
            const double inner_avg = inner_n ? inner_err / static_cast<double>(inner_n) : 0.0;
            out.value += weight * r.value;
            out.error_budget += weight * (r.error + inner_avg) + 1e-9;
        }
    }
    return out;
}

}  // namespace detail

// Expected probability of identifying the true combination under the random
// policy with two measurements: conditional localizability averaged over
// marks, ranges, and the candidate-count law, with the wrong combinations
// sharing a true landmark scored at their visibility-aware pass rate.
inline analytic_result localizability_analytic(const scenario_config& cfg) {
    detail::require_closed_form_scenario(cfg);
    const auto mm = detail::mark_moments_of(cfg);
    const auto marks = static_cast<std::size_t>(cfg.mark_count);
    std::vector<std::vector<double>> single(marks);
    std::vector<std::vector<double>> same(marks);
    for (std::int32_t p = 0; p < cfg.mark_count; ++p) {
        single[static_cast<std::size_t>(p)] = single_mark_count_pmf(p, cfg);
        same[static_cast<std::size_t>(p)] = same_mark_count_pmf(p, cfg);
    }
    std::vector<std::vector<detail::product_count_kernel>> kernels;
    kernels.reserve(single.size());
    for (std::size_t p = 0; p < single.size(); ++p) {
        kernels.emplace_back();
        for (std::size_t q = 0; q < single.size(); ++q)
            kernels[p].emplace_back(single[p], single[q]);
    }
    // Chance that one partner-class member is a visible extra rather than a
    // hidden landmark, per mark of the free candidate.
    const double extras = detail::expected_visible_extras(mm.total_visible);
    std::vector<double> in_frac(marks, 0.0);
    std::vector<double> in_frac_same(marks, 0.0);
    for (std::size_t p = 0; p < marks; ++p) {
        const double e = extras * mm.visible_mean[p] / mm.total_visible;
        double mean = 0.0;
        double mean_same = 0.0;
        for (std::size_t n = 1; n < single[p].size(); ++n)
            mean += single[p][n] * static_cast<double>(n);
        for (std::size_t n = 2; n < same[p].size(); ++n)
            mean_same += same[p][n] * static_cast<double>(n);
        if (mean - 1.0 > 1e-9) in_frac[p] = std::clamp(e / (mean - 1.0), 0.0, 1.0);
        if (mean_same - 2.0 > 1e-9)
            in_frac_same[p] = std::clamp(e / (mean_same - 2.0), 0.0, 1.0);
    }
    // Sensitivity tables on a grid wide enough for every interval the root
    // finder can return (its upper endpoint stays below d_p + d_q + pad).
    constexpr std::size_t kGridPoints = 129;
    std::vector<std::vector<detail::partner_tables>> part(marks,
                                                          std::vector<detail::partner_tables>(marks));
    std::vector<detail::pf_table> twin(marks);
    for (std::size_t p = 0; p < marks; ++p) {
        for (std::size_t q = p; q < marks; ++q) {
            const double spread =
                cfg.noise_free ? 0.0 : std::hypot(cfg.noise_dev[p], cfg.noise_dev[q]);
            const double pad = 12.0 * spread + 1.0;
            const double cap = disk_distance_cdf(
                cfg.visibility[p] + cfg.visibility[q] + pad, cfg.aoi_radius);
            if (q == p)
                twin[p] = detail::build_twin_table(same[p], cap, kGridPoints);
            else
                part[p][q] = detail::build_partner_tables(single[p], single[q], cap, kGridPoints);
        }
    }
    const auto kernel = [&](std::int32_t p, std::int32_t q, double r1, double r2, double pt,
                            double pf) {
        if (pt == 0.0) return 0.0;
        const auto sp = static_cast<std::size_t>(p);
        const auto sq = static_cast<std::size_t>(q);
        const double base = p == q ? detail::pair_within_mark_expectation(same[sp], pf)
                                   : kernels[sp][sq].expectation(pf);
        if (pf <= 0.0) return pt * base;
        const double s1 = cfg.noise_free ? 0.0 : cfg.noise_dev[sp];
        const double s2 = cfg.noise_free ? 0.0 : cfg.noise_dev[sq];
        const auto iv = threshold_interval(r1, r2, s1, s2, cfg.threshold);
        if (!iv) return pt * base;
        const double lo = std::max(iv->first, 0.0);
        const double hi = iv->second;
        const double R = cfg.aoi_radius;
        const double ring = pf * M_PI * R * R;  // pass-annulus area under the disk law
        // Pass rate of one free candidate inside / outside the visibility
        // disk, for the annulus centered on the true member at range rc.
        const auto member_rates = [&](double rc, double dvis) {
            const double ov = detail::disk_overlap_area(dvis, hi, rc) -
                              detail::disk_overlap_area(dvis, lo, rc);
            const double p_in = std::clamp(ov / (M_PI * dvis * dvis), 0.0, 1.0);
            const double off = M_PI * std::max(R * R - dvis * dvis, 1e-12);
            const double p_out = std::clamp((ring - ov) / off, 0.0, 1.0);
            return std::pair<double, double>{p_in, p_out};
        };
        double corr = 0.0;
        if (p == q) {
            const auto [in1, out1] = member_rates(r1, cfg.visibility[sp]);
            const auto [in2, out2] = member_rates(r2, cfg.visibility[sp]);
            const double f = in_frac_same[sp];
            const double d1 = f * in1 + (1.0 - f) * out1 - pf;
            const double d2 = f * in2 + (1.0 - f) * out2 - pf;
            corr = -0.5 * (d1 + d2) * twin[sp](pf);
        } else {
            const auto [in1, out1] = member_rates(r1, cfg.visibility[sq]);  // free candidate: mark q
            const auto [in2, out2] = member_rates(r2, cfg.visibility[sp]);
            const double d1 = in_frac[sq] * in1 + (1.0 - in_frac[sq]) * out1 - pf;
            const double d2 = in_frac[sp] * in2 + (1.0 - in_frac[sp]) * out2 - pf;
            corr = -(d1 * part[sp][sq].free_second(pf) + d2 * part[sp][sq].free_first(pf));
        }
        return pt * (base + corr);
    };
    return detail::integrate_pairs(cfg, kernel);
}

// Upper bound with one landmark already known: the candidate set for the
// remaining measurement collapses to the landmarks of its own mark.
inline analytic_result localizability_upper_bound(const scenario_config& cfg) {
    detail::require_closed_form_scenario(cfg);
    std::vector<std::vector<double>> single(static_cast<std::size_t>(cfg.mark_count));
    for (std::int32_t p = 0; p < cfg.mark_count; ++p)
        single[static_cast<std::size_t>(p)] = single_mark_count_pmf(p, cfg);
    const auto kernel = [&](std::int32_t, std::int32_t q, double, double, double pt,
                            double pf) {
        if (pt == 0.0) return 0.0;
        return pt * detail::single_count_expectation(single[static_cast<std::size_t>(q)], pf);
    };
    return detail::integrate_pairs(cfg, kernel);
}

// Marginal pass rates over the same joint law (random policy).
struct expected_rate_result {
    double tpr = 0.0;
    double fpr = 0.0;
    double error_budget = 0.0;
};

inline expected_rate_result expected_rates(const scenario_config& cfg) {
    detail::require_closed_form_scenario(cfg);
    const auto kt = [](std::int32_t, std::int32_t, double, double, double pt, double) {
        return pt;
    };
    const auto kf = [](std::int32_t, std::int32_t, double, double, double, double pf) {
        return pf;
    };
    const auto rt = detail::integrate_pairs(cfg, kt);
    const auto rf = detail::integrate_pairs(cfg, kf);
    return {rt.value, rf.value, rt.error_budget + rf.error_budget};
}

// Plug-in localizability from per-trial statistics (any policy): averages
// conditional localizability over observed (truth-survived, fpr, |C|).
inline double semi_empirical_localizability(const std::vector<std::uint8_t>& truth_in_set,
                                            const std::vector<double>& fpr,
                                            const std::vector<std::uint64_t>& comb_size) {
    if (truth_in_set.size() != fpr.size() || fpr.size() != comb_size.size())
        throw validation_error("semi_empirical_localizability: size mismatch");
    if (truth_in_set.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < fpr.size(); ++i) {
        if (!truth_in_set[i] || comb_size[i] == 0) continue;
        acc += conditional_localizability(1.0, std::clamp(fpr[i], 0.0, 1.0),
                                          static_cast<std::int64_t>(comb_size[i]));
    }
    return acc / static_cast<double>(truth_in_set.size());
}

}  // namespace ambiloc
