#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "ambiloc/constraints.hpp"
#include "helpers.hpp"

using namespace ambiloc;
using Catch::Approx;

TEST_CASE("noise-free compatibility is the triangle interval test", "[constraints]") {
    REQUIRE(triangle_probability(3.0, 4.0, 0.0, 0.0, 5.0) == 1.0);
    REQUIRE(triangle_probability(3.0, 4.0, 0.0, 0.0, 1.0) == 1.0);
    REQUIRE(triangle_probability(3.0, 4.0, 0.0, 0.0, 7.0) == 1.0);
    REQUIRE(triangle_probability(3.0, 4.0, 0.0, 0.0, 0.5) == 0.0);
    REQUIRE(triangle_probability(3.0, 4.0, 0.0, 0.0, 8.0) == 0.0);
    // Rounding-scale boundary violations stay accepted, gross ones do not.
    REQUIRE(triangle_probability(3.0, 4.0, 0.0, 0.0, 7.0 * (1.0 + 1e-12)) == 1.0);
    REQUIRE(triangle_probability(3.0, 4.0, 0.0, 0.0, 1.0 - 7e-12) == 1.0);
    REQUIRE(triangle_probability(3.0, 4.0, 0.0, 0.0, 7.0001) == 0.0);
    REQUIRE_THROWS_AS(triangle_probability(-1.0, 4.0, 0.3, 0.3, 5.0), validation_error);
    REQUIRE_THROWS_AS(triangle_probability(1.0, 4.0, -0.3, 0.3, 5.0), validation_error);
}

TEST_CASE("compatibility probability is symmetric in the measurements", "[constraints]") {
    for (double d : {2.0, 7.0, 10.5}) {
        const double a = triangle_probability(4.0, 6.0, 0.5, 0.2, d);
        const double b = triangle_probability(6.0, 4.0, 0.2, 0.5, d);
        REQUIRE(a == Approx(b).margin(1e-12));
    }
}

TEST_CASE("compatibility probability rises and falls across the interval", "[constraints]") {
    const double r1 = 8.0, r2 = 11.0, s = 0.4;
    const double mid = triangle_probability(r1, r2, s, s, 0.5 * (3.0 + 19.0));
    REQUIRE(mid > 0.999);
    REQUIRE(triangle_probability(r1, r2, s, s, 3.0 - 5.0 * s) < 0.05);
    REQUIRE(triangle_probability(r1, r2, s, s, 19.0 + 5.0 * s) < 0.05);
}

TEST_CASE("compatibility probability matches brute-force quadrature", "[constraints]") {
    const struct {
        double r1, r2, s1, s2;
    } noises[] = {
        {3.0, 4.0, 0.3, 0.3},   // equal deviations: closed form path
        {4.0, 6.0, 0.5, 0.2},   // general path
        {10.0, 7.0, 0.8, 0.05}, // strongly unequal
        {5.0, 9.0, 0.4, 0.0},   // one exact measurement
    };
    for (const auto& c : noises) {
        const double lo = std::abs(c.r1 - c.r2), hi = c.r1 + c.r2;
        for (double d : {lo + 0.15 * (hi - lo), 0.5 * (lo + hi), hi - 0.3, hi + 0.4}) {
            const double got = triangle_probability(c.r1, c.r2, c.s1, c.s2, d);
            const double want = testutil::pair_test_oracle(c.r1, c.r2, c.s1, c.s2, d);
            INFO("r1=" << c.r1 << " r2=" << c.r2 << " s1=" << c.s1 << " s2=" << c.s2
                       << " d=" << d);
            REQUIRE(got == Approx(want).margin(5e-7));
        }
    }
}

TEST_CASE("compatibility probability matches monte carlo", "[constraints]") {
    const double r1 = 4.0, r2 = 6.0, s1 = 0.5, s2 = 0.2, d = 9.0;
    rng_stream rng(3, 1);
    const int n = 2000000;
    std::int64_t hits = 0;
    for (int i = 0; i < n; ++i) {
        const double rho1 = r1 + s1 * rng.normal();
        const double rho2 = r2 + s2 * rng.normal();
        if (std::abs(rho1 - rho2) <= d && d <= rho1 + rho2) ++hits;
    }
    const double mc = static_cast<double>(hits) / n;
    const double se = std::sqrt(mc * (1.0 - mc) / n);
    const double got = triangle_probability(r1, r2, s1, s2, d);
    INFO("mc=" << mc << " got=" << got << " se=" << se);
    REQUIRE(std::abs(got - mc) <= 5.0 * se + 1e-4);
}

TEST_CASE("pair constraint thresholds the probability", "[constraints]") {
    measurement a{0, 3.0, 0.3, -1};
    measurement b{1, 4.0, 0.3, -1};
    const auto pass = pair_constraint(a, b, 5.0, 0.2);
    REQUIRE(pass.satisfied);
    REQUIRE(pass.probability > 0.99);
    const auto fail = pair_constraint(a, b, 9.8489, 0.2);
    REQUIRE_FALSE(fail.satisfied);
    REQUIRE(fail.probability < 1e-6);
}

namespace {

marked_map mark_counts_map() {
    marked_map map;
    map.aoi_radius = 100.0;
    map.landmarks = {{0, {1.0, 0.0}, 0}, {1, {2.0, 0.0}, 0}, {2, {3.0, 0.0}, 0},
                     {3, {4.0, 0.0}, 1}, {4, {5.0, 0.0}, 1}};
    return map;
}

std::vector<measurement> marks_only(std::initializer_list<std::int32_t> marks) {
    std::vector<measurement> ms;
    for (auto m : marks) ms.push_back({m, 1.0, 0.3, -1});
    return ms;
}

}  // namespace

TEST_CASE("candidate counts use falling factorials per mark", "[constraints]") {
    const auto map = mark_counts_map();
    REQUIRE(combination_count(map, marks_only({0, 1})) == 6);
    REQUIRE(combination_count(map, marks_only({0, 0})) == 6);
    REQUIRE(combination_count(map, marks_only({0, 0}), true) == 9);
    REQUIRE(combination_count(map, marks_only({0, 0, 0})) == 6);
    REQUIRE(combination_count(map, marks_only({0, 0, 0}), true) == 27);
    REQUIRE(combination_count(map, marks_only({1, 1, 1})) == 0);
    REQUIRE(combination_count(map, marks_only({1, 1, 1}), true) == 8);
    REQUIRE(combination_count(map, marks_only({5})) == 0);
}

namespace {

scenario_config filter_cfg(std::int32_t marks) {
    scenario_config cfg;
    cfg.aoi_radius = 100.0;
    cfg.mark_count = marks;
    cfg.densities.assign(static_cast<std::size_t>(marks), 1e-4);
    cfg.visibility.assign(static_cast<std::size_t>(marks), 50.0);
    cfg.noise_dev.assign(static_cast<std::size_t>(marks), 0.3);
    cfg.threshold = 0.2;
    return cfg;
}

observation_set make_obs(vec2 target, std::vector<measurement> ms, combination truth) {
    observation_set obs;
    obs.target = target;
    obs.measurements = std::move(ms);
    obs.true_combination = std::move(truth);
    return obs;
}

}  // namespace

TEST_CASE("filtering keeps compatible tuples and drops the rest", "[constraints]") {
    marked_map map;
    map.aoi_radius = 100.0;
    map.landmarks = {{0, {3.0, 0.0}, 0}, {1, {0.0, 4.0}, 1}, {2, {-9.0, 0.0}, 0}};
    const auto cfg = filter_cfg(2);
    const auto obs = make_obs({0.0, 0.0},
                              {{0, 3.0, 0.3, 0}, {1, 4.0, 0.3, 1}}, {0, 1});
    const auto sols = filter_solution_set(map, obs, cfg);
    REQUIRE(sols.comb_size == 2);
    REQUIRE(sols.combinations.size() == 1);
    REQUIRE(sols.combinations[0] == combination{0, 1});
    REQUIRE(sols.min_pair_probability[0] > 0.9);
    REQUIRE(contains_truth(sols, obs.true_combination));
}

TEST_CASE("filtering records survivors in candidate order", "[constraints]") {
    marked_map map;
    map.aoi_radius = 100.0;
    // The second mark-0 landmark sits on an annulus overlap: compatible with
    // the pairwise test even though it is not the measured landmark.
    map.landmarks = {{0, {3.0, 0.0}, 0}, {1, {0.0, 4.0}, 1}, {2, {-5.0, 0.0}, 0}};
    const auto cfg = filter_cfg(2);
    const auto obs = make_obs({0.0, 0.0},
                              {{0, 3.0, 0.3, 0}, {1, 4.0, 0.3, 1}}, {0, 1});
    const auto sols = filter_solution_set(map, obs, cfg);
    REQUIRE(sols.combinations.size() == 2);
    REQUIRE(sols.combinations[0] == combination{0, 1});
    REQUIRE(sols.combinations[1] == combination{2, 1});
    REQUIRE(sols.min_pair_probability[1] == Approx(0.92).margin(0.02));
}

TEST_CASE("repeated ids are excluded unless allowed", "[constraints]") {
    marked_map map;
    map.aoi_radius = 100.0;
    map.landmarks = {{0, {3.0, 0.0}, 0}, {1, {-5.0, 0.0}, 0}};
    auto cfg = filter_cfg(1);
    // Exact duplicate measurements of the same landmark.
    const auto obs = make_obs({0.0, 0.0},
                              {{0, 3.0, 0.0, 0}, {0, 3.0, 0.0, 0}}, {0, 0});
    const auto strict = filter_solution_set(map, obs, cfg);
    REQUIRE(strict.comb_size == 2);
    REQUIRE(strict.combinations.empty());

    cfg.allow_repeats = true;
    const auto loose = filter_solution_set(map, obs, cfg);
    REQUIRE(loose.comb_size == 4);
    REQUIRE(loose.combinations.size() == 2);
    REQUIRE(loose.combinations[0] == combination{0, 0});
    REQUIRE(loose.combinations[1] == combination{1, 1});
}

TEST_CASE("exact mode demands a shared intersection point", "[constraints]") {
    marked_map map;
    map.aoi_radius = 100.0;
    map.landmarks = {{0, {0.0, 0.0}, 0},
                     {1, {6.0, 0.0}, 1},
                     {2, {3.0, 9.0}, 2},    // passes through (3, 4)
                     {3, {3.0, -9.0}, 2},   // passes through the mirror point
                     {4, {8.0, 3.0}, 2}};   // pairwise compatible, no shared point
    const auto cfg = filter_cfg(3);
    const auto exact = make_obs({3.0, 4.0},
                                {{0, 5.0, 0.0, 0}, {1, 5.0, 0.0, 1}, {2, 5.0, 0.0, 2}},
                                {0, 1, 2});
    const auto sols = filter_solution_set(map, exact, cfg);
    REQUIRE(sols.comb_size == 3);
    REQUIRE(sols.combinations.size() == 2);
    REQUIRE(contains_truth(sols, {0, 1, 2}));
    REQUIRE(contains_truth(sols, {0, 1, 3}));  // genuinely ambiguous mirror tuple
    REQUIRE_FALSE(contains_truth(sols, {0, 1, 4}));

    // The same geometry under noise keeps the pairwise-only semantics.
    const auto noisy = make_obs({3.0, 4.0},
                                {{0, 5.0, 0.3, 0}, {1, 5.0, 0.3, 1}, {2, 5.0, 0.3, 2}},
                                {0, 1, 2});
    const auto loose = filter_solution_set(map, noisy, cfg);
    REQUIRE(loose.combinations.size() == 3);
}

TEST_CASE("combination pick is uniform over the survivors", "[constraints]") {
    solution_set sols;
    sols.combinations = {{0, 1}, {2, 1}, {3, 1}};
    sols.min_pair_probability = {1.0, 1.0, 1.0};
    sols.comb_size = 6;
    rng_stream rng(5, 5);
    std::vector<std::uint64_t> counts(3, 0);
    for (int i = 0; i < 30000; ++i) {
        const auto pick = estimate_combination(sols, rng);
        REQUIRE(pick.has_value());
        ++counts[static_cast<std::size_t>((*pick)[0] > 0 ? ((*pick)[0] == 2 ? 1 : 2) : 0)];
    }
    const std::vector<double> probs(3, 1.0 / 3.0);
    REQUIRE(testutil::chi2_gof(counts, probs).pass);

    solution_set empty;
    REQUIRE_FALSE(estimate_combination(empty, rng).has_value());
}

TEST_CASE("two-circle position estimates", "[constraints]") {
    marked_map map;
    map.aoi_radius = 100.0;
    map.landmarks = {{0, {0.0, 0.0}, 0}, {1, {6.0, 0.0}, 1}};
    const auto mk = [&](double r1, double r2) {
        return make_obs({0.0, 0.0}, {{0, r1, 0.3, 0}, {1, r2, 0.3, 1}}, {0, 1});
    };
    // Proper intersection: the lexicographically smaller of (3, +-4).
    auto est = estimate_position({0, 1}, map, mk(5.0, 5.0));
    REQUIRE_FALSE(est.degenerate);
    REQUIRE(est.pos.x == Approx(3.0).margin(1e-12));
    REQUIRE(est.pos.y == Approx(-4.0).margin(1e-12));
    // Tangent circles meet at one point.
    est = estimate_position({0, 1}, map, mk(3.0, 3.0));
    REQUIRE(est.degenerate);
    REQUIRE(est.pos.x == Approx(3.0).margin(1e-12));
    REQUIRE(est.pos.y == Approx(0.0).margin(1e-12));
    // Separate circles: midpoint of the facing gap.
    est = estimate_position({0, 1}, map, mk(2.0, 2.0));
    REQUIRE(est.degenerate);
    REQUIRE(est.pos.x == Approx(3.0).margin(1e-12));
    // Nested circles: midpoint of the gap along the shared ray.
    est = estimate_position({0, 1}, map, mk(16.0, 2.0));
    REQUIRE(est.degenerate);
}

TEST_CASE("multilateration recovers the target and flags singular layouts", "[constraints]") {
    marked_map map;
    map.aoi_radius = 100.0;
    map.landmarks = {{0, {0.0, 0.0}, 0}, {1, {6.0, 0.0}, 1}, {2, {3.0, 9.0}, 2}};
    const auto obs = make_obs({3.0, 4.0},
                              {{0, 5.0, 0.3, 0}, {1, 5.0, 0.3, 1}, {2, 5.0, 0.3, 2}},
                              {0, 1, 2});
    const auto est = estimate_position({0, 1, 2}, map, obs);
    REQUIRE_FALSE(est.degenerate);
    REQUIRE(est.pos.x == Approx(3.0).margin(1e-6));
    REQUIRE(est.pos.y == Approx(4.0).margin(1e-6));

    marked_map line;
    line.aoi_radius = 100.0;
    line.landmarks = {{0, {0.0, 0.0}, 0}, {1, {4.0, 0.0}, 1}, {2, {8.0, 0.0}, 2}};
    const auto mirrored = make_obs({4.0, 3.0},
                                   {{0, 5.0, 0.3, 0}, {1, 3.0, 0.3, 1}, {2, 5.0, 0.3, 2}},
                                   {0, 1, 2});
    const auto sing = estimate_position({0, 1, 2}, line, mirrored);
    REQUIRE(sing.degenerate);

    REQUIRE_THROWS_AS(estimate_position({0, 1}, map, obs), validation_error);
}

TEST_CASE("distance cache agrees with direct distances", "[constraints]") {
    marked_map map;
    map.aoi_radius = 100.0;
    map.landmarks = {{0, {0.0, 0.0}, 0}, {1, {3.0, 4.0}, 1}, {2, {-6.0, 8.0}, 0}};
    distance_cache cache(map);
    REQUIRE(cache(0, 1) == Approx(5.0));
    REQUIRE(cache(1, 0) == Approx(5.0));
    REQUIRE(cache(1, 2) == Approx(std::hypot(9.0, 4.0)));
    REQUIRE(cache(0, 1) == Approx(5.0));  // cached lookup
}
