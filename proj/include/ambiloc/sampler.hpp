#pragma once

#include <cmath>

#include "ambiloc/rng.hpp"
#include "ambiloc/types.hpp"

namespace ambiloc {

// Draws one marked Poisson map on the disk of radius aoi_radius: per mark,
// a Poisson count with mean lambda_m * pi * d_a^2, then that many uniform
// positions. Ids are assigned in generation order, so a fixed stream yields
// a bit-identical map.
inline marked_map sample_map(const scenario_config& cfg, rng_stream& rng) {
    marked_map map;
    map.aoi_radius = cfg.aoi_radius;
    const double area = M_PI * cfg.aoi_radius * cfg.aoi_radius;
    std::int32_t next_id = 0;
    for (std::int32_t m = 0; m < cfg.mark_count; ++m) {
        const auto count = rng.poisson(cfg.densities[static_cast<std::size_t>(m)] * area);
        for (std::uint64_t k = 0; k < count; ++k) {
            map.landmarks.push_back({next_id++, rng.point_in_disk({0.0, 0.0}, cfg.aoi_radius), m});
        }
    }
    return map;
}

// Target position. uniform_core shrinks the support by the largest
// visibility distance so every mark's visibility disk stays inside the AOI.
inline vec2 sample_target(const scenario_config& cfg, rng_stream& rng) {
    double radius = cfg.aoi_radius;
    if (cfg.placement == target_placement::uniform_core) {
        double max_vis = 0.0;
        for (double v : cfg.visibility) max_vis = std::max(max_vis, v);
        radius -= max_vis;
    }
    return rng.point_in_disk({0.0, 0.0}, radius);
}

}  // namespace ambiloc
