#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "ambiloc/analytics.hpp"
#include "ambiloc/montecarlo.hpp"
#include "ambiloc/scenario_io.hpp"
#include "ambiloc/svg.hpp"

// Canned study configurations and the report figures built from them.

namespace ambiloc {

enum class visibility_profile { low, medium, high };

inline const char* to_string(visibility_profile p) {
    switch (p) {
        case visibility_profile::low: return "low";
        case visibility_profile::medium: return "medium";
        default: return "high";
    }
}

inline constexpr std::uint64_t kStudySeed = 1729;

// Study scenario: disk of radius 500 with 16 marks sharing one total
// intensity. Visibility distances are staggered per mark so no two marks
// behave identically; the profile shifts the whole ladder.
inline scenario_config study_config(double expected_landmarks,
                                    visibility_profile prof = visibility_profile::medium,
                                    observation_policy policy = observation_policy::random_visible,
                                    std::int32_t n_measurements = 2,
                                    std::uint64_t seed = kStudySeed) {
    scenario_config cfg;
    cfg.aoi_radius = 500.0;
    cfg.mark_count = 16;
    const double base = prof == visibility_profile::low    ? 10.0
                        : prof == visibility_profile::high ? 30.0
                                                           : 20.0;
    const double area = M_PI * cfg.aoi_radius * cfg.aoi_radius;
    const double per_mark = expected_landmarks / static_cast<double>(cfg.mark_count);
    for (std::int32_t m = 0; m < cfg.mark_count; ++m) {
        cfg.densities.push_back(per_mark / area);
        cfg.visibility.push_back(base + static_cast<double>(m));
        cfg.noise_dev.push_back(0.3);
    }
    cfg.threshold = 0.2;
    cfg.policy = policy;
    cfg.n_measurements = n_measurements;
    cfg.placement = target_placement::uniform_core;
    cfg.master_seed = seed;
    return cfg;
}

inline const std::vector<double>& study_density_grid() {
    static const std::vector<double> grid{100.0, 200.0, 300.0, 400.0, 500.0, 600.0};
    return grid;
}

struct figure_spec {
    std::string id;
    std::string summary;
};

inline const std::vector<figure_spec>& figure_catalog() {
    static const std::vector<figure_spec> cat{
        {"set-size", "candidate and surviving set sizes vs landmark count (random policy)"},
        {"removal", "fraction of candidates removed vs landmark count, both policies"},
        {"rates", "expected pair pass rates (true and unrelated) vs landmark count"},
        {"loc2-random", "localizability, two measurements, random policy: simulated, "
                        "closed form, upper bound"},
        {"loc2-nearest", "localizability, two measurements, nearest policy: simulated, "
                         "plug-in estimate, upper bound"},
        {"locN", "localizability vs landmark count for 2, 3 and 4 measurements"},
    };
    return cat;
}

struct figure_artifacts {
    std::string id;
    line_chart chart;
    std::string csv;
};

namespace detail {

struct mc_grid {
    std::vector<sweep_entry> entries;  // aligned with study_density_grid()
    std::vector<std::vector<trial_outcome>> outcomes;
};

inline mc_grid run_grid(visibility_profile prof, observation_policy policy,
                        std::int32_t n_measurements, std::uint64_t trials, unsigned workers,
                        bool keep_outcomes, std::uint64_t seed) {
    const auto& grid = study_density_grid();
    mc_grid out;
    out.entries.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        sweep_entry e;
        e.config = study_config(grid[i], prof, policy, n_measurements, seed);
        try {
            auto res = run_experiment(e.config, trials, workers,
                                      (static_cast<std::uint64_t>(i) + 1) << 40);
            e.aggregate = res.aggregate;
            if (keep_outcomes)
                out.outcomes.push_back(std::move(res.outcomes));
            else
                out.outcomes.emplace_back();
        } catch (const std::exception& ex) {
            e.error = ex.what();
            out.outcomes.emplace_back();
        }
        out.entries.push_back(std::move(e));
    }
    return out;
}

inline std::string csv_line(std::initializer_list<double> vals) {
    std::string s;
    for (double v : vals) {
        if (!s.empty()) s += ',';
        s += fmt_double(v);
    }
    return s + "\n";
}

}  // namespace detail

// Builds one figure. trials applies to every simulated series; analytic
// series are exact up to their quadrature budget.
inline figure_artifacts build_figure(const std::string& id, std::uint64_t trials,
                                     unsigned workers = 0,
                                     visibility_profile prof = visibility_profile::medium,
                                     std::uint64_t seed = kStudySeed) {
    const auto& grid = study_density_grid();
    figure_artifacts art;
    art.id = id;
    line_chart& ch = art.chart;
    ch.x_label = "expected landmarks in region";
    std::ostringstream csv;

    auto series_from = [&](const detail::mc_grid& g, auto&& pick, auto&& pick_err) {
        plot_series s;
        for (std::size_t i = 0; i < g.entries.size(); ++i) {
            if (!g.entries[i].aggregate) continue;
            s.x.push_back(grid[i]);
            s.y.push_back(pick(*g.entries[i].aggregate));
            s.yerr.push_back(pick_err(*g.entries[i].aggregate));
        }
        return s;
    };

    if (id == "set-size") {
        const auto g = detail::run_grid(prof, observation_policy::random_visible, 2, trials,
                                        workers, false, seed);
        ch.title = "candidate vs surviving combinations (random policy)";
        ch.y_label = "mean set size";
        ch.log_y = true;
        auto cand = series_from(
            g, [](const trial_aggregate& a) { return a.mean_comb_size; },
            [](const trial_aggregate&) { return 0.0; });
        cand.label = "candidate set |C|";
        auto sol = series_from(
            g, [](const trial_aggregate& a) { return a.mean_sol_size; },
            [](const trial_aggregate&) { return 0.0; });
        sol.label = "surviving set |S|";
        ch.series = {cand, sol};
        csv << "landmarks,mean_comb_size,mean_sol_size,removal_pct\n";
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (g.entries[i].aggregate)
                csv << detail::csv_line({grid[i], g.entries[i].aggregate->mean_comb_size,
                                         g.entries[i].aggregate->mean_sol_size,
                                         g.entries[i].aggregate->removal_pct});
    } else if (id == "removal") {
        const auto gr = detail::run_grid(prof, observation_policy::random_visible, 2, trials,
                                         workers, false, seed);
        const auto gn = detail::run_grid(prof, observation_policy::nearest, 2, trials, workers,
                                         false, seed);
        ch.title = "candidate removal by the pairwise test";
        ch.y_label = "removed fraction of |C|";
        auto r = series_from(
            gr, [](const trial_aggregate& a) { return a.removal_pct; },
            [](const trial_aggregate&) { return 0.0; });
        r.label = "random policy";
        auto n = series_from(
            gn, [](const trial_aggregate& a) { return a.removal_pct; },
            [](const trial_aggregate&) { return 0.0; });
        n.label = "nearest policy";
        ch.series = {r, n};
        csv << "landmarks,removal_random,removal_nearest\n";
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (gr.entries[i].aggregate && gn.entries[i].aggregate)
                csv << detail::csv_line({grid[i], gr.entries[i].aggregate->removal_pct,
                                         gn.entries[i].aggregate->removal_pct});
    } else if (id == "rates") {
        const auto g = detail::run_grid(prof, observation_policy::random_visible, 2, trials,
                                        workers, false, seed);
        ch.title = "pairwise test pass rates (random policy)";
        ch.y_label = "pass probability";
        ch.log_y = true;
        auto st = series_from(
            g, [](const trial_aggregate& a) { return a.tpr; },
            [](const trial_aggregate& a) { return a.tpr_se; });
        st.label = "true pair, simulated";
        auto sf = series_from(
            g, [](const trial_aggregate& a) { return a.fpr; },
            [](const trial_aggregate& a) { return a.fpr_se; });
        sf.label = "unrelated pair, simulated";
        plot_series at{"true pair, expected", {}, {}, {}};
        plot_series af{"unrelated pair, expected", {}, {}, {}};
        csv << "landmarks,tpr_sim,tpr_sim_se,fpr_sim,fpr_sim_se,tpr_expected,fpr_expected\n";
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto cfg = study_config(grid[i], prof, observation_policy::random_visible, 2,
                                          seed);
            const auto r = expected_rates(cfg);
            at.x.push_back(grid[i]);
            at.y.push_back(r.tpr);
            af.x.push_back(grid[i]);
            af.y.push_back(r.fpr);
            if (g.entries[i].aggregate) {
                const auto& a = *g.entries[i].aggregate;
                csv << detail::csv_line({grid[i], a.tpr, a.tpr_se, a.fpr, a.fpr_se, r.tpr, r.fpr});
            }
        }
        ch.series = {st, sf, at, af};
    } else if (id == "loc2-random" || id == "loc2-nearest") {
        const bool nearest = id == "loc2-nearest";
        const auto policy =
            nearest ? observation_policy::nearest : observation_policy::random_visible;
        const auto g = detail::run_grid(prof, policy, 2, trials, workers, nearest, seed);
        ch.title = nearest ? "localizability, nearest policy, 2 measurements"
                           : "localizability, random policy, 2 measurements";
        ch.y_label = "probability of picking the true pair";
        auto sim = series_from(
            g, [](const trial_aggregate& a) { return a.localizability; },
            [](const trial_aggregate& a) { return a.localizability_se; });
        sim.label = "simulated";
        plot_series mid{nearest ? "plug-in estimate" : "closed form", {}, {}, {}};
        plot_series ub{"upper bound (one landmark known)", {}, {}, {}};
        csv << "landmarks,localizability,localizability_se,"
            << (nearest ? "plug_in" : "closed_form") << ",upper_bound\n";
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto cfg = study_config(grid[i], prof, observation_policy::random_visible, 2,
                                          seed);
            double midv;
            if (nearest) {
                if (!g.entries[i].aggregate) continue;
                midv = semi_empirical_from_outcomes(g.outcomes[i]);
            } else {
                midv = localizability_analytic(cfg).value;
            }
            const double ubv = localizability_upper_bound(cfg).value;
            mid.x.push_back(grid[i]);
            mid.y.push_back(midv);
            ub.x.push_back(grid[i]);
            ub.y.push_back(ubv);
            if (g.entries[i].aggregate) {
                const auto& a = *g.entries[i].aggregate;
                csv << detail::csv_line(
                    {grid[i], a.localizability, a.localizability_se, midv, ubv});
            }
        }
        ch.series = {sim, mid, ub};
    } else if (id == "locN") {
        ch.title = "localizability vs measurement count (random policy)";
        ch.y_label = "probability of picking the true tuple";
        csv << "landmarks,n_measurements,localizability,localizability_se\n";
        for (std::int32_t n : {2, 3, 4}) {
            const auto g = detail::run_grid(prof, observation_policy::random_visible, n, trials,
                                            workers, false, seed);
            auto s = series_from(
                g, [](const trial_aggregate& a) { return a.localizability; },
                [](const trial_aggregate& a) { return a.localizability_se; });
            s.label = "N = " + std::to_string(n);
            ch.series.push_back(std::move(s));
            for (std::size_t i = 0; i < grid.size(); ++i)
                if (g.entries[i].aggregate)
                    csv << detail::csv_line({grid[i], static_cast<double>(n),
                                             g.entries[i].aggregate->localizability,
                                             g.entries[i].aggregate->localizability_se});
        }
    } else {
        throw validation_error("unknown figure id: " + id);
    }
    art.csv = csv.str();
    return art;
}

}  // namespace ambiloc
