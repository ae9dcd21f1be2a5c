#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ambiloc {

// Thrown when a config or argument violates a documented precondition.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a numerical routine cannot reach its accuracy target or an
// internal cross-check disagrees beyond tolerance.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a trial cannot be conditioned (too few visible landmarks
// after exhausting the retry budget).
struct conditioning_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double dist(const vec2& a, const vec2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

// Landmark marks are small integers in [0, mark_count). Identity is the
// map-local id; marks are non-identifying by design.
struct landmark {
    std::int32_t id = 0;
    vec2 pos;
    std::int32_t mark = 0;
};

struct marked_map {
    double aoi_radius = 0.0;
    std::vector<landmark> landmarks;
};

enum class observation_policy { random_visible, nearest };
enum class target_placement { uniform_core, uniform_full };

inline const char* to_string(observation_policy p) {
    return p == observation_policy::random_visible ? "random" : "nearest";
}
inline const char* to_string(target_placement p) {
    return p == target_placement::uniform_core ? "uniform_core" : "uniform_full";
}

struct scenario_config {
    double aoi_radius = 500.0;
    std::int32_t mark_count = 16;
    std::vector<double> densities;   // lambda_m, points per unit area, length mark_count
    std::vector<double> visibility;  // d_m, length mark_count
    std::vector<double> noise_dev;   // sigma_m, length mark_count
    double threshold = 0.2;
    observation_policy policy = observation_policy::random_visible;
    std::int32_t n_measurements = 2;
    target_placement placement = target_placement::uniform_core;
    std::uint64_t master_seed = 1;
    bool allow_repeats = false;
    bool noise_free = false;  // measurements carry zero noise; noise_dev still validated
};

inline void validate_scenario(const scenario_config& c) {
    auto fail = [](const std::string& msg) { throw validation_error("scenario: " + msg); };
    if (!(c.aoi_radius > 0.0)) fail("aoi_radius must be positive");
    if (c.mark_count < 1) fail("mark_count must be >= 1");
    const auto m = static_cast<std::size_t>(c.mark_count);
    if (c.densities.size() != m) fail("densities must have one entry per mark");
    if (c.visibility.size() != m) fail("visibility must have one entry per mark");
    if (c.noise_dev.size() != m) fail("noise_dev must have one entry per mark");
    for (double v : c.densities)
        if (!(v > 0.0) || !std::isfinite(v)) fail("densities must be positive and finite");
    double max_vis = 0.0;
    for (double v : c.visibility) {
        if (!(v > 0.0) || !std::isfinite(v)) fail("visibility must be positive and finite");
        if (v > c.aoi_radius) fail("visibility must not exceed aoi_radius");
        max_vis = std::max(max_vis, v);
    }
    for (double v : c.noise_dev)
        if (!(v > 0.0) || !std::isfinite(v)) fail("noise_dev must be positive and finite");
    if (!(c.threshold > 0.0 && c.threshold < 1.0)) fail("threshold must lie in (0, 1)");
    if (c.n_measurements < 2) fail("n_measurements must be >= 2");
    if (c.placement == target_placement::uniform_core && !(c.aoi_radius - max_vis > 0.0))
        fail("uniform_core placement needs aoi_radius > max visibility");
}

// One range measurement. true_id is ground truth kept for scoring only;
// the identification algorithm never reads it.
struct measurement {
    std::int32_t mark = 0;
    double range = 0.0;
    double noise_dev = 0.0;  // 0 only in noise-free mode
    std::int32_t true_id = -1;
};

// Ordered tuple of landmark ids, aligned index-by-index with the
// measurement list it was built against.
using combination = std::vector<std::int32_t>;

struct observation_set {
    vec2 target;  // ground truth, for scoring only
    std::vector<measurement> measurements;
    combination true_combination;
};

struct visible_entry {
    std::int32_t id = 0;
    double distance = 0.0;
    std::int32_t mark = 0;
};

// Sorted ascending by (distance, id).
using visible_set = std::vector<visible_entry>;

}  // namespace ambiloc
