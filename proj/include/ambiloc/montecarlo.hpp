#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ambiloc/analytics.hpp"
#include "ambiloc/constraints.hpp"
#include "ambiloc/observation.hpp"
#include "ambiloc/sampler.hpp"
#include "ambiloc/types.hpp"

namespace ambiloc {

struct trial_outcome {
    std::uint64_t comb_size = 0;
    std::uint64_t sol_size = 0;
    bool truth_in_set = false;
    bool picked_correct = false;
    std::int32_t n_visible = 0;
    std::int32_t target_retries = 0;  // rejected (map, target) draws before N were visible
    std::int32_t map_retries = 0;     // always equals target_retries: the pair is redrawn jointly
    std::optional<double> position_error;
};

// Conditioning is by rejection on (map, target) drawn jointly: the accepted
// pair then follows the unconditional law restricted to the event that at
// least N landmarks are visible, which is the law the closed forms describe.
// Reusing one map across several target placements would instead weight each
// map by its chance of ever qualifying rather than by its share of qualifying
// pairs, thinning landmark-dense maps out of the accepted stream. Configs
// where the event is essentially unreachable fail with conditioning_error.
inline constexpr int kConditioningRetries = 1000000;

// One end-to-end trial. Everything is drawn from the stream derived from
// (master_seed, stream_offset + trial_index), so the result is a pure
// function of the config and the trial index.
inline trial_outcome run_trial(const scenario_config& cfg, std::uint64_t trial_index,
                               std::uint64_t stream_offset = 0) {
    rng_stream rng(cfg.master_seed, stream_offset + trial_index);
    trial_outcome out;

    marked_map map;
    vec2 target;
    visible_set visible;
    bool conditioned = false;
    for (int attempt = 0; attempt < kConditioningRetries && !conditioned; ++attempt) {
        map = sample_map(cfg, rng);
        target = sample_target(cfg, rng);
        visible = visible_landmarks(map, target, cfg);
        if (visible.size() >= static_cast<std::size_t>(cfg.n_measurements)) {
            conditioned = true;
        } else {
            ++out.target_retries;
            ++out.map_retries;
        }
    }
    if (!conditioned)
        throw conditioning_error("run_trial: could not place " +
                                 std::to_string(cfg.n_measurements) +
                                 " visible landmarks within the retry budget");
    out.n_visible = static_cast<std::int32_t>(visible.size());

    const auto chosen = select_observed(visible, cfg.policy, cfg.n_measurements, rng);
    const auto obs = measure(target, chosen, cfg, rng);
    const auto sols = filter_solution_set(map, obs, cfg);
    out.comb_size = sols.comb_size;
    out.sol_size = sols.combinations.size();
    out.truth_in_set = contains_truth(sols, obs.true_combination);
    const auto picked = estimate_combination(sols, rng);
    if (picked) {
        out.picked_correct = *picked == obs.true_combination;
        const auto est = estimate_position(*picked, map, obs);
        out.position_error = dist(est.pos, obs.target);
    }
    return out;
}

struct trial_aggregate {
    std::uint64_t trials = 0;
    double localizability = 0.0;
    double localizability_se = 0.0;
    double tpr = 0.0;
    double tpr_se = 0.0;
    double fpr = 0.0;  // mean over trials of (wrong survivors)/(|C|-1)
    double fpr_se = 0.0;
    double mean_comb_size = 0.0;
    double mean_sol_size = 0.0;
    double removal_pct = 0.0;  // 1 - mean_sol/mean_comb, a fraction in [0,1]
    double mean_position_error = 0.0;
    std::uint64_t position_samples = 0;
    double mean_target_retries = 0.0;
};

namespace detail {

inline double binom_se(double p, std::uint64_t n) {
    return n ? std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n)) : 0.0;
}

}  // namespace detail

// Order-independent reduction: outcomes are reduced in trial order no matter
// how many workers produced them.
inline trial_aggregate aggregate_outcomes(const std::vector<trial_outcome>& outcomes) {
    trial_aggregate agg;
    agg.trials = outcomes.size();
    if (outcomes.empty()) return agg;
    std::uint64_t picked = 0, truth = 0, retries = 0;
    double sum_fpr = 0.0, sum_fpr2 = 0.0;
    std::uint64_t n_fpr = 0;
    double sum_comb = 0.0, sum_sol = 0.0, sum_pos = 0.0;
    for (const auto& t : outcomes) {
        picked += t.picked_correct ? 1 : 0;
        truth += t.truth_in_set ? 1 : 0;
        retries += static_cast<std::uint64_t>(t.target_retries);
        sum_comb += static_cast<double>(t.comb_size);
        sum_sol += static_cast<double>(t.sol_size);
        if (t.comb_size > 1) {
            const double f = static_cast<double>(t.sol_size - (t.truth_in_set ? 1 : 0)) /
                             static_cast<double>(t.comb_size - 1);
            sum_fpr += f;
            sum_fpr2 += f * f;
            ++n_fpr;
        }
        if (t.position_error) {
            sum_pos += *t.position_error;
            ++agg.position_samples;
        }
    }
    const double n = static_cast<double>(agg.trials);
    agg.localizability = static_cast<double>(picked) / n;
    agg.localizability_se = detail::binom_se(agg.localizability, agg.trials);
    agg.tpr = static_cast<double>(truth) / n;
    agg.tpr_se = detail::binom_se(agg.tpr, agg.trials);
    if (n_fpr) {
        agg.fpr = sum_fpr / static_cast<double>(n_fpr);
        const double var =
            std::max(0.0, sum_fpr2 / static_cast<double>(n_fpr) - agg.fpr * agg.fpr);
        agg.fpr_se = std::sqrt(var / static_cast<double>(n_fpr));
    }
    agg.mean_comb_size = sum_comb / n;
    agg.mean_sol_size = sum_sol / n;
    if (agg.mean_comb_size > 0.0) agg.removal_pct = 1.0 - agg.mean_sol_size / agg.mean_comb_size;
    if (agg.position_samples)
        agg.mean_position_error = sum_pos / static_cast<double>(agg.position_samples);
    agg.mean_target_retries = static_cast<double>(retries) / n;
    return agg;
}

struct experiment_result {
    trial_aggregate aggregate;
    std::vector<trial_outcome> outcomes;  // indexed by trial
};

inline unsigned default_workers() {
    if (const char* env = std::getenv("AMBILOC_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1 && v <= 4096) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Runs n_trials trials across the given number of workers. Trials are
// dispatched by index and written to their own slot, so the aggregate is
// bit-identical for any worker count.
inline experiment_result run_experiment(const scenario_config& cfg, std::uint64_t n_trials,
                                        unsigned workers = 0, std::uint64_t stream_offset = 0) {
    validate_scenario(cfg);
    if (workers == 0) workers = default_workers();
    experiment_result res;
    res.outcomes.resize(n_trials);
    std::atomic<std::uint64_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= n_trials) return;
            try {
                res.outcomes[i] = run_trial(cfg, i, stream_offset);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(n_trials);
                return;
            }
        }
    };
    if (workers <= 1 || n_trials < 2) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const auto n = std::min<std::uint64_t>(workers, n_trials);
        pool.reserve(n);
        for (std::uint64_t w = 0; w < n; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    res.aggregate = aggregate_outcomes(res.outcomes);
    return res;
}

// Semi-empirical plug-in estimate from simulated outcomes.
inline double semi_empirical_from_outcomes(const std::vector<trial_outcome>& outcomes) {
    std::vector<std::uint8_t> truth;
    std::vector<double> fpr;
    std::vector<std::uint64_t> m;
    truth.reserve(outcomes.size());
    fpr.reserve(outcomes.size());
    m.reserve(outcomes.size());
    for (const auto& t : outcomes) {
        truth.push_back(t.truth_in_set ? 1 : 0);
        fpr.push_back(t.comb_size > 1
                          ? static_cast<double>(t.sol_size - (t.truth_in_set ? 1 : 0)) /
                                static_cast<double>(t.comb_size - 1)
                          : 0.0);
        m.push_back(t.comb_size);
    }
    return semi_empirical_localizability(truth, fpr, m);
}

struct sweep_entry {
    scenario_config config;
    std::optional<trial_aggregate> aggregate;
    std::string error;  // set when the grid point failed
};

// Runs each grid point with a disjoint stream-id block so no two points can
// share a trial stream. A failing point is recorded and the sweep continues.
inline std::vector<sweep_entry> sweep(const std::vector<scenario_config>& grid,
                                      std::uint64_t n_trials, unsigned workers = 0) {
    std::vector<sweep_entry> out;
    out.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        sweep_entry e;
        e.config = grid[i];
        try {
            e.aggregate =
                run_experiment(grid[i], n_trials, workers, (static_cast<std::uint64_t>(i) + 1)
                                                               << 40).aggregate;
        } catch (const std::exception& ex) {
            e.error = ex.what();
        }
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace ambiloc
