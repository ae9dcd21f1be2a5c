#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "ambiloc/rng.hpp"
#include "ambiloc/special.hpp"
#include "ambiloc/types.hpp"

namespace ambiloc {

// ---------------------------------------------------------------------------
// Probability that a candidate landmark pair at separation d is compatible
// with ranges r1, r2 measured under zero-mean Gaussian noise (sigma1,
// sigma2). With W = n1 + n2 and V = n1 - n2 this is the rectangle
// probability
//   P[ W <= r1+r2-d,  r1-r2-d <= V <= r1-r2+d ],
// where (W, V) are jointly Gaussian with Var = sigma1^2 + sigma2^2 on both
// coordinates and Cov = sigma1^2 - sigma2^2.

namespace detail {

// Equal-variance case: W and V are independent.
inline double tri_prob_equal_sigma(double w_up, double v_lo, double v_hi, double s) {
    return normal_cdf(w_up / s) * (normal_cdf(v_hi / s) - normal_cdf(v_lo / s));
}

// General case by conditioning V on W and integrating the 1D profile.
inline double tri_prob_general(double w_up, double v_lo, double v_hi, double var, double cov) {
    const double sd_w = std::sqrt(var);
    const double rho = cov / var;
    const double sd_c = sd_w * std::sqrt(std::max(0.0, 1.0 - rho * rho));
    const double hi = std::min(w_up, 9.0 * sd_w);
    if (hi <= -9.0 * sd_w) return 0.0;
    const auto profile = [&](double w) {
        const double mu = rho * w;
        return normal_pdf(w / sd_w) / sd_w *
               (normal_cdf((v_hi - mu) / sd_c) - normal_cdf((v_lo - mu) / sd_c));
    };
    quadrature_spec spec;
    spec.abs_tol = 1e-9;
    spec.rel_tol = 1e-9;
    return integrate_1d(profile, -9.0 * sd_w, hi, spec).value;
}

}  // namespace detail

inline double triangle_probability(double r1, double r2, double sigma1, double sigma2,
                                   double d) {
    if (r1 < 0.0 || r2 < 0.0 || d < 0.0 || sigma1 < 0.0 || sigma2 < 0.0)
        throw validation_error("triangle_probability: negative argument");
    // Canonical order sigma1 >= sigma2. Swapping the measurements negates V
    // and mirrors its interval, which is an exact symmetry.
    if (sigma1 < sigma2) {
        std::swap(r1, r2);
        std::swap(sigma1, sigma2);
    }
    const double w_up = r1 + r2 - d;
    const double v_lo = r1 - r2 - d;
    const double v_hi = r1 - r2 + d;
    if (sigma1 == 0.0) {
        // Noise-free: exact interval test with a small relative slack so
        // boundary cases are not lost to rounding.
        const double slack = 1e-9 * std::max(1.0, r1 + r2);
        return (d >= std::abs(r1 - r2) - slack && d <= r1 + r2 + slack) ? 1.0 : 0.0;
    }
    double p;
    if (sigma2 <= 1e-8 * sigma1) {
        // One exact measurement: V == W, a single Gaussian on an interval.
        const double up = std::min(w_up, v_hi);
        p = up <= v_lo ? 0.0 : normal_cdf(up / sigma1) - normal_cdf(v_lo / sigma1);
    } else if (sigma1 == sigma2) {
        p = detail::tri_prob_equal_sigma(w_up, v_lo, v_hi,
                                         std::sqrt(sigma1 * sigma1 + sigma2 * sigma2));
    } else {
        const double var = sigma1 * sigma1 + sigma2 * sigma2;
        const double cov = sigma1 * sigma1 - sigma2 * sigma2;
        p = detail::tri_prob_general(w_up, v_lo, v_hi, var, cov);
    }
    return std::clamp(p, 0.0, 1.0);
}

struct pair_constraint_result {
    double probability = 0.0;
    bool satisfied = false;
};

inline pair_constraint_result pair_constraint(const measurement& a, const measurement& b,
                                              double separation, double threshold) {
    pair_constraint_result r;
    r.probability = triangle_probability(a.range, b.range, a.noise_dev, b.noise_dev, separation);
    r.satisfied = r.probability >= threshold;
    return r;
}

// ---------------------------------------------------------------------------
// Candidate combinations: ordered tuples of landmark ids whose marks match
// the measurement marks slot by slot, with repeated ids excluded unless
// allow_repeats is set.

namespace detail {

// Both intersection points of circles (c1, r1), (c2, r2). h2 is clamped at
// zero so near-tangent pairs that already passed the interval test yield
// their tangent point instead of failing outright.
inline int circle_points(vec2 c1, double r1, vec2 c2, double r2, vec2 out[2]) {
    const double d = dist(c1, c2);
    if (d == 0.0) return 0;
    const double a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    const double h = std::sqrt(std::max(0.0, r1 * r1 - a * a));
    const vec2 u{(c2.x - c1.x) / d, (c2.y - c1.y) / d};
    const vec2 base{c1.x + a * u.x, c1.y + a * u.y};
    out[0] = {base.x - h * u.y, base.y + h * u.x};
    out[1] = {base.x + h * u.y, base.y - h * u.x};
    return 2;
}

}  // namespace detail

// |C| without enumeration. For a mark appearing t times among the
// measurements the factor is n_m (n_m - 1) ... (n_m - t + 1), or n_m^t with
// repeats allowed.
inline std::uint64_t combination_count(const marked_map& map,
                                       const std::vector<measurement>& ms,
                                       bool allow_repeats = false) {
    std::unordered_map<std::int32_t, std::uint64_t> in_map;
    for (const auto& lm : map.landmarks) ++in_map[lm.mark];
    std::unordered_map<std::int32_t, std::uint64_t> used;
    std::uint64_t total = 1;
    for (const auto& m : ms) {
        const std::uint64_t avail = in_map.count(m.mark) ? in_map[m.mark] : 0;
        const std::uint64_t taken = allow_repeats ? 0 : used[m.mark]++;
        if (avail <= taken) return 0;
        total *= avail - taken;
    }
    return total;
}

// Lazy pairwise separations, keyed by unordered id pair. One instance per
// trial map; not shared across threads.
class distance_cache {
  public:
    explicit distance_cache(const marked_map& map) : map_(&map) {
        for (std::size_t i = 0; i < map.landmarks.size(); ++i)
            index_of_[map.landmarks[i].id] = i;
    }

    double operator()(std::int32_t a, std::int32_t b) {
        const auto key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(std::min(a, b)))
                          << 32) |
                         static_cast<std::uint32_t>(std::max(a, b));
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        const double d = dist(map_->landmarks[index_of_.at(a)].pos,
                              map_->landmarks[index_of_.at(b)].pos);
        cache_.emplace(key, d);
        return d;
    }

  private:
    const marked_map* map_;
    std::unordered_map<std::int32_t, std::size_t> index_of_;
    std::unordered_map<std::uint64_t, double> cache_;
};

struct solution_set {
    std::vector<combination> combinations;
    std::vector<double> min_pair_probability;  // per combination
    std::uint64_t comb_size = 0;               // |C| of the scanned candidate set
};

// Enumerates C depth first and keeps every combination whose pairwise
// constraints all hold. A tuple is pruned as soon as its newest element
// fails against any earlier slot, so failing prefixes are never extended.
//
// Exact mode (every deviation zero) with three or more measurements adds a
// shared-point requirement: some intersection point of the first two range
// circles must lie on every remaining circle. The pairwise interval tests
// alone keep annulus-overlap decoys in roughly a quarter of trials at
// typical densities; the shared point is what makes exact recovery almost
// sure. Noisy mode is untouched: the analytic expressions model the
// pairwise tests only.
inline solution_set filter_solution_set(const marked_map& map, const observation_set& obs,
                                        const scenario_config& cfg) {
    const auto& ms = obs.measurements;
    const auto n = ms.size();
    solution_set out;
    out.comb_size = combination_count(map, ms, cfg.allow_repeats);

    // Candidate ids per measurement slot, ascending by id.
    std::vector<std::vector<std::int32_t>> slots(n);
    for (const auto& lm : map.landmarks)
        for (std::size_t k = 0; k < n; ++k)
            if (lm.mark == ms[k].mark) slots[k].push_back(lm.id);

    bool exact_mode = n >= 3;
    for (const auto& m : ms)
        if (m.noise_dev != 0.0) exact_mode = false;
    std::unordered_map<std::int32_t, std::size_t> index_of;
    if (exact_mode)
        for (std::size_t i = 0; i < map.landmarks.size(); ++i)
            index_of[map.landmarks[i].id] = i;
    const auto pos_of = [&](std::int32_t id) { return map.landmarks[index_of.at(id)].pos; };
    const auto shares_point = [&](const combination& c) {
        vec2 pts[2];
        if (detail::circle_points(pos_of(c[0]), ms[0].range, pos_of(c[1]), ms[1].range, pts) ==
            0)
            return false;
        for (const auto& p : pts) {
            bool ok = true;
            for (std::size_t k = 2; k < n && ok; ++k) {
                const double slack = 1e-7 * std::max(1.0, ms[k].range);
                ok = std::abs(dist(p, pos_of(c[k])) - ms[k].range) <= slack;
            }
            if (ok) return true;
        }
        return false;
    };

    distance_cache sep(map);
    combination current(n, -1);
    std::vector<double> min_prob(n + 1, 1.0);

    auto descend = [&](auto&& self, std::size_t k) -> void {
        if (k == n) {
            if (exact_mode && !shares_point(current)) return;
            out.combinations.push_back(current);
            out.min_pair_probability.push_back(min_prob[n]);
            return;
        }
        for (std::int32_t id : slots[k]) {
            if (!cfg.allow_repeats &&
                std::find(current.begin(), current.begin() + static_cast<std::ptrdiff_t>(k),
                          id) != current.begin() + static_cast<std::ptrdiff_t>(k))
                continue;
            double mp = min_prob[k];
            bool ok = true;
            for (std::size_t j = 0; j < k; ++j) {
                const auto res =
                    pair_constraint(ms[j], ms[k], sep(current[j], id), cfg.threshold);
                if (!res.satisfied) {
                    ok = false;
                    break;
                }
                mp = std::min(mp, res.probability);
            }
            if (!ok) continue;
            current[k] = id;
            min_prob[k + 1] = mp;
            self(self, k + 1);
        }
        current[k] = -1;
    };
    descend(descend, 0);
    return out;
}

inline bool contains_truth(const solution_set& s, const combination& truth) {
    return std::find(s.combinations.begin(), s.combinations.end(), truth) !=
           s.combinations.end();
}

// Uniform tie-break among surviving combinations; empty set yields nothing.
inline std::optional<combination> estimate_combination(const solution_set& s,
                                                       rng_stream& rng) {
    if (s.combinations.empty()) return std::nullopt;
    return s.combinations[rng.below(s.combinations.size())];
}

// ---------------------------------------------------------------------------
// Position estimate from a combination's landmark positions and the ranges.

struct position_estimate {
    vec2 pos;
    bool degenerate = false;  // circles failed to intersect / singular geometry
};

namespace detail {

inline bool lex_less(const vec2& a, const vec2& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
}

// Two-circle intersection. Non-intersecting configurations fall back to the
// midpoint of the closest approach along the centre line, flagged degenerate.
inline position_estimate intersect_two(vec2 c1, double r1, vec2 c2, double r2) {
    const double d = dist(c1, c2);
    if (d == 0.0) return {c1, true};
    const vec2 u{(c2.x - c1.x) / d, (c2.y - c1.y) / d};
    if (d > r1 + r2) {  // separate: gap between the facing arc points
        const double t = 0.5 * (r1 + d - r2);
        return {{c1.x + t * u.x, c1.y + t * u.y}, true};
    }
    if (d < std::abs(r1 - r2)) {  // nested: gap along the same ray
        const double t = r1 >= r2 ? 0.5 * (r1 + d + r2) : -0.5 * (r1 - d + r2);
        return {{c1.x + t * u.x, c1.y + t * u.y}, true};
    }
    const double a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    const double h2 = r1 * r1 - a * a;
    const double h = h2 > 0.0 ? std::sqrt(h2) : 0.0;
    const vec2 base{c1.x + a * u.x, c1.y + a * u.y};
    const vec2 p1{base.x - h * u.y, base.y + h * u.x};
    const vec2 p2{base.x + h * u.y, base.y - h * u.x};
    if (h == 0.0) return {p1, true};  // tangent
    return {lex_less(p1, p2) ? p1 : p2, false};
}

}  // namespace detail

inline position_estimate estimate_position(const combination& comb, const marked_map& map,
                                           const observation_set& obs) {
    const auto n = comb.size();
    if (n != obs.measurements.size() || n < 2)
        throw validation_error("estimate_position: combination/measurement size mismatch");
    std::vector<vec2> centres(n);
    {
        std::unordered_map<std::int32_t, std::size_t> index_of;
        for (std::size_t i = 0; i < map.landmarks.size(); ++i)
            index_of[map.landmarks[i].id] = i;
        for (std::size_t i = 0; i < n; ++i) centres[i] = map.landmarks[index_of.at(comb[i])].pos;
    }
    if (n == 2) {
        return detail::intersect_two(centres[0], obs.measurements[0].range, centres[1],
                                     obs.measurements[1].range);
    }
    // Gauss-Newton on residuals |x - c_i| - r_i from the centroid.
    vec2 x{0.0, 0.0};
    for (const auto& c : centres) {
        x.x += c.x / static_cast<double>(n);
        x.y += c.y / static_cast<double>(n);
    }
    bool degenerate = false;
    for (int iter = 0; iter < 50; ++iter) {
        double a11 = 0.0, a12 = 0.0, a22 = 0.0, b1 = 0.0, b2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = x.x - centres[i].x;
            const double dy = x.y - centres[i].y;
            const double di = std::hypot(dx, dy);
            if (di < 1e-12) continue;
            const double jx = dx / di;
            const double jy = dy / di;
            const double f = di - obs.measurements[i].range;
            a11 += jx * jx;
            a12 += jx * jy;
            a22 += jy * jy;
            b1 -= jx * f;
            b2 -= jy * f;
        }
        const double det = a11 * a22 - a12 * a12;
        if (std::abs(det) < 1e-14) {
            degenerate = true;
            break;
        }
        const double sx = (a22 * b1 - a12 * b2) / det;
        const double sy = (a11 * b2 - a12 * b1) / det;
        x.x += sx;
        x.y += sy;
        if (std::hypot(sx, sy) < 1e-9) break;
    }
    return {x, degenerate};
}

}  // namespace ambiloc
