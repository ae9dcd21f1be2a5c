#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>

#include "ambiloc/analytics.hpp"
#include "ambiloc/montecarlo.hpp"

using namespace ambiloc;
using Catch::Approx;

namespace {

// Around 25 landmarks per map, two marks, a third of targets see two of them.
scenario_config mc_cfg() {
    scenario_config cfg;
    cfg.aoi_radius = 60.0;
    cfg.mark_count = 2;
    cfg.densities = {0.5 / (M_PI * 144.0), 0.78 / (M_PI * 225.0)};
    cfg.visibility = {12.0, 15.0};
    cfg.noise_dev = {0.3, 0.3};
    cfg.master_seed = 77;
    return cfg;
}

bool same_outcome(const trial_outcome& a, const trial_outcome& b) {
    return a.comb_size == b.comb_size && a.sol_size == b.sol_size &&
           a.truth_in_set == b.truth_in_set && a.picked_correct == b.picked_correct &&
           a.n_visible == b.n_visible && a.target_retries == b.target_retries &&
           a.map_retries == b.map_retries && a.position_error == b.position_error;
}

}  // namespace

TEST_CASE("trials are pure functions of config and index", "[montecarlo]") {
    const auto cfg = mc_cfg();
    for (std::uint64_t i : {0ull, 5ull, 17ull}) {
        const auto a = run_trial(cfg, i);
        const auto b = run_trial(cfg, i);
        REQUIRE(same_outcome(a, b));
    }
    // Distinct indices draw from distinct streams.
    const auto first = run_trial(cfg, 0);
    bool any_differ = false;
    for (std::uint64_t i = 1; i < 20 && !any_differ; ++i)
        any_differ = !same_outcome(first, run_trial(cfg, i));
    REQUIRE(any_differ);
    // A stream offset relocates the whole experiment.
    REQUIRE(same_outcome(run_trial(cfg, 9, 100), run_trial(cfg, 109)));
}

TEST_CASE("worker count does not change any outcome", "[montecarlo]") {
    const auto cfg = mc_cfg();
    const auto seq = run_experiment(cfg, 200, 1);
    const auto par = run_experiment(cfg, 200, 3);
    REQUIRE(seq.outcomes.size() == 200);
    REQUIRE(par.outcomes.size() == 200);
    for (std::size_t i = 0; i < 200; ++i) {
        INFO("trial " << i);
        REQUIRE(same_outcome(seq.outcomes[i], par.outcomes[i]));
    }
    REQUIRE(seq.aggregate.localizability == par.aggregate.localizability);
    REQUIRE(seq.aggregate.fpr == par.aggregate.fpr);
    REQUIRE(seq.aggregate.mean_position_error == par.aggregate.mean_position_error);
}

TEST_CASE("aggregation arithmetic on a hand-built batch", "[montecarlo]") {
    std::vector<trial_outcome> batch(4);
    batch[0] = {4, 2, true, true, 5, 0, 0, 1.5};
    batch[1] = {1, 1, true, true, 2, 2, 0, std::nullopt};
    batch[2] = {6, 3, false, false, 4, 0, 0, 0.7};
    batch[3] = {2, 1, true, true, 3, 0, 1, 0.2};
    const auto agg = aggregate_outcomes(batch);
    REQUIRE(agg.trials == 4);
    REQUIRE(agg.localizability == Approx(0.75).epsilon(1e-15));
    REQUIRE(agg.localizability_se == Approx(std::sqrt(0.046875)).epsilon(1e-15));
    REQUIRE(agg.tpr == Approx(0.75).epsilon(1e-15));
    // Wrong-survivor fractions: 1/3, 3/5 and 0; only multi-candidate trials count.
    REQUIRE(agg.fpr == Approx(14.0 / 45.0).epsilon(1e-12));
    REQUIRE(agg.fpr_se == Approx(std::sqrt(122.0 / 6075.0)).epsilon(1e-12));
    REQUIRE(agg.mean_comb_size == Approx(3.25).epsilon(1e-15));
    REQUIRE(agg.mean_sol_size == Approx(1.75).epsilon(1e-15));
    REQUIRE(agg.removal_pct == Approx(6.0 / 13.0).epsilon(1e-12));
    REQUIRE(agg.position_samples == 3);
    REQUIRE(agg.mean_position_error == Approx(0.8).epsilon(1e-12));
    REQUIRE(agg.mean_target_retries == Approx(0.5).epsilon(1e-15));

    const auto empty = aggregate_outcomes({});
    REQUIRE(empty.trials == 0);
    REQUIRE(empty.fpr == 0.0);
    REQUIRE(empty.mean_position_error == 0.0);
}

TEST_CASE("noise-free pairs always retain the true combination", "[montecarlo]") {
    auto cfg = mc_cfg();
    cfg.noise_free = true;
    const auto res = run_experiment(cfg, 300, 1);
    REQUIRE(res.aggregate.tpr == 1.0);
    for (const auto& t : res.outcomes) {
        REQUIRE(t.truth_in_set);
        REQUIRE(t.sol_size >= 1);
        REQUIRE(t.sol_size <= t.comb_size);
    }
}

TEST_CASE("unreachable visibility exhausts the retry budget", "[montecarlo]") {
    scenario_config cfg;
    cfg.aoi_radius = 60.0;
    cfg.mark_count = 1;
    cfg.densities = {1e-6};
    cfg.visibility = {5.0};
    cfg.noise_dev = {0.3};
    REQUIRE_THROWS_AS(run_trial(cfg, 0), conditioning_error);

    const auto entries = sweep({mc_cfg(), cfg}, 50, 1);
    REQUIRE(entries.size() == 2);
    REQUIRE(entries[0].aggregate.has_value());
    REQUIRE(entries[0].error.empty());
    REQUIRE(entries[0].aggregate->trials == 50);
    REQUIRE_FALSE(entries[1].aggregate.has_value());
    REQUIRE_FALSE(entries[1].error.empty());
}

TEST_CASE("plug-in estimate over outcomes matches its definition", "[montecarlo]") {
    const auto res = run_experiment(mc_cfg(), 200, 1);
    double acc = 0.0;
    for (const auto& t : res.outcomes) {
        if (!t.truth_in_set) continue;
        const double f = t.comb_size > 1 ? static_cast<double>(t.sol_size - 1) /
                                               static_cast<double>(t.comb_size - 1)
                                         : 0.0;
        acc += conditional_localizability(1.0, f, static_cast<std::int64_t>(t.comb_size));
    }
    REQUIRE(semi_empirical_from_outcomes(res.outcomes) ==
            Approx(acc / static_cast<double>(res.outcomes.size())).epsilon(1e-12));
}

TEST_CASE("worker default honors the environment override", "[montecarlo]") {
    ::setenv("AMBILOC_WORKERS", "3", 1);
    REQUIRE(default_workers() == 3);
    ::setenv("AMBILOC_WORKERS", "0", 1);
    REQUIRE(default_workers() >= 1);
    ::setenv("AMBILOC_WORKERS", "junk", 1);
    REQUIRE(default_workers() >= 1);
    ::unsetenv("AMBILOC_WORKERS");
    REQUIRE(default_workers() >= 1);
}
