#pragma once

#include <algorithm>
#include <numeric>

#include "ambiloc/rng.hpp"
#include "ambiloc/types.hpp"

namespace ambiloc {

// Landmarks within their mark's visibility distance of the target,
// sorted ascending by (distance, id).
inline visible_set visible_landmarks(const marked_map& map, vec2 target,
                                     const scenario_config& cfg) {
    visible_set out;
    for (const auto& lm : map.landmarks) {
        const double d = dist(lm.pos, target);
        if (d <= cfg.visibility[static_cast<std::size_t>(lm.mark)]) {
            out.push_back({lm.id, d, lm.mark});
        }
    }
    std::sort(out.begin(), out.end(), [](const visible_entry& a, const visible_entry& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
    });
    return out;
}

// Picks n of the visible landmarks. The returned order is the measurement
// order. random: uniform without replacement (partial Fisher-Yates).
// nearest: the n smallest distances; the (distance, id) sort makes ties
// deterministic.
inline std::vector<visible_entry> select_observed(const visible_set& visible,
                                                  observation_policy policy, std::int32_t n,
                                                  rng_stream& rng) {
    const auto need = static_cast<std::size_t>(n);
    if (visible.size() < need)
        throw validation_error("select_observed: fewer visible landmarks than measurements");
    if (policy == observation_policy::nearest) {
        return {visible.begin(), visible.begin() + static_cast<std::ptrdiff_t>(need)};
    }
    std::vector<std::size_t> idx(visible.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<visible_entry> out;
    out.reserve(need);
    for (std::size_t k = 0; k < need; ++k) {
        const auto j = k + static_cast<std::size_t>(rng.below(idx.size() - k));
        std::swap(idx[k], idx[j]);
        out.push_back(visible[idx[k]]);
    }
    return out;
}

// Builds the measurement list for the chosen landmarks. Ranges get
// mark-dependent Gaussian noise; a draw that would make the range negative
// is redrawn. In noise-free mode ranges are exact and noise_dev is stored
// as 0 so downstream checks degenerate to exact interval tests.
inline observation_set measure(vec2 target, const std::vector<visible_entry>& chosen,
                               const scenario_config& cfg, rng_stream& rng) {
    observation_set obs;
    obs.target = target;
    obs.measurements.reserve(chosen.size());
    obs.true_combination.reserve(chosen.size());
    for (const auto& e : chosen) {
        measurement m;
        m.mark = e.mark;
        m.true_id = e.id;
        if (cfg.noise_free) {
            m.noise_dev = 0.0;
            m.range = e.distance;
        } else {
            m.noise_dev = cfg.noise_dev[static_cast<std::size_t>(e.mark)];
            do {
                m.range = e.distance + m.noise_dev * rng.normal();
            } while (m.range < 0.0);
        }
        obs.measurements.push_back(m);
        obs.true_combination.push_back(e.id);
    }
    return obs;
}

}  // namespace ambiloc
