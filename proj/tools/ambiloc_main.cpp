// Command line front end: simulation runs, closed-form evaluation, their
// comparison, map sampling, and the canned report figures.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ambiloc/figures.hpp"
#include "ambiloc/montecarlo.hpp"
#include "ambiloc/scenario_io.hpp"
#include "ambiloc/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ambiloc::scenario_config load_config(const std::string& path, std::uint64_t seed_override,
                                     bool has_seed) {
    auto cfg = ambiloc::load_scenario(path);
    if (has_seed) cfg.master_seed = seed_override;
    return cfg;
}

json scenario_to_json(const ambiloc::scenario_config& cfg) {
    return json{{"aoi_radius", cfg.aoi_radius},
                {"mark_count", cfg.mark_count},
                {"densities", cfg.densities},
                {"visibility", cfg.visibility},
                {"noise_dev", cfg.noise_dev},
                {"threshold", cfg.threshold},
                {"policy", ambiloc::to_string(cfg.policy)},
                {"n_measurements", cfg.n_measurements},
                {"placement", ambiloc::to_string(cfg.placement)},
                {"master_seed", cfg.master_seed},
                {"allow_repeats", cfg.allow_repeats},
                {"noise_free", cfg.noise_free}};
}

json aggregate_to_json(const ambiloc::trial_aggregate& a) {
    return json{{"trials", a.trials},
                {"localizability", a.localizability},
                {"localizability_se", a.localizability_se},
                {"tpr", a.tpr},
                {"tpr_se", a.tpr_se},
                {"fpr", a.fpr},
                {"fpr_se", a.fpr_se},
                {"mean_comb_size", a.mean_comb_size},
                {"mean_sol_size", a.mean_sol_size},
                {"removal_pct", a.removal_pct},
                {"mean_position_error", a.mean_position_error},
                {"position_samples", a.position_samples},
                {"mean_target_retries", a.mean_target_retries}};
}

void emit(const json& j, const std::string& out_path) {
    const auto text = j.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        ambiloc::write_text_file(out_path, text);
}

int run_simulate(const std::string& config_path, std::uint64_t trials, unsigned workers,
                 const std::string& out_dir, std::uint64_t seed, bool has_seed) {
    const auto cfg = load_config(config_path, seed, has_seed);
    const auto res = ambiloc::run_experiment(cfg, trials, workers);
    json j{{"version", ambiloc::version_string},
           {"scenario", scenario_to_json(cfg)},
           {"aggregate", aggregate_to_json(res.aggregate)}};
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        ambiloc::write_text_file((fs::path(out_dir) / "trials.csv").string(),
                                 ambiloc::trials_to_csv(res.outcomes));
        ambiloc::write_text_file((fs::path(out_dir) / "scenario.txt").string(),
                                 ambiloc::serialize_scenario(cfg));
        emit(j, (fs::path(out_dir) / "aggregate.json").string());
    }
    emit(j, "");
    return 0;
}

int run_analytic(const std::string& config_path, const std::string& out_path, std::uint64_t seed,
                 bool has_seed) {
    const auto cfg = load_config(config_path, seed, has_seed);
    const auto loc = ambiloc::localizability_analytic(cfg);
    const auto ub = ambiloc::localizability_upper_bound(cfg);
    const auto rates = ambiloc::expected_rates(cfg);
    json j{{"version", ambiloc::version_string},
           {"scenario", scenario_to_json(cfg)},
           {"localizability", {{"value", loc.value}, {"error_budget", loc.error_budget}}},
           {"upper_bound", {{"value", ub.value}, {"error_budget", ub.error_budget}}},
           {"expected_rates",
            {{"tpr", rates.tpr}, {"fpr", rates.fpr}, {"error_budget", rates.error_budget}}}};
    emit(j, out_path);
    return 0;
}

int run_compare(const std::string& config_path, std::uint64_t trials, unsigned workers,
                bool semi_empirical, const std::string& out_path, std::uint64_t seed,
                bool has_seed) {
    const auto cfg = load_config(config_path, seed, has_seed);
    const auto res = ambiloc::run_experiment(cfg, trials, workers);
    json j{{"version", ambiloc::version_string},
           {"scenario", scenario_to_json(cfg)},
           {"simulated", aggregate_to_json(res.aggregate)}};
    const bool closed_form_applies =
        cfg.policy == ambiloc::observation_policy::random_visible && cfg.n_measurements == 2;
    if (closed_form_applies) {
        const auto loc = ambiloc::localizability_analytic(cfg);
        const auto ub = ambiloc::localizability_upper_bound(cfg);
        j["closed_form"] = {{"value", loc.value}, {"error_budget", loc.error_budget}};
        j["upper_bound"] = {{"value", ub.value}, {"error_budget", ub.error_budget}};
        const double se = res.aggregate.localizability_se;
        j["gap_in_se"] = se > 0.0
                             ? (res.aggregate.localizability - loc.value) / se
                             : 0.0;
    }
    if (semi_empirical)
        j["plug_in"] = ambiloc::semi_empirical_from_outcomes(res.outcomes);
    emit(j, out_path);
    return 0;
}

int run_sample_map(const std::string& config_path, const std::string& out_path,
                   std::uint64_t stream, std::uint64_t seed, bool has_seed) {
    const auto cfg = load_config(config_path, seed, has_seed);
    ambiloc::validate_scenario(cfg);
    ambiloc::rng_stream rng(cfg.master_seed, stream);
    const auto map = ambiloc::sample_map(cfg, rng);
    const auto csv = ambiloc::map_to_csv(map);
    if (out_path.empty())
        std::cout << csv;
    else
        ambiloc::write_text_file(out_path, csv);
    return 0;
}

int run_reproduce(const std::string& figure, const std::string& out_dir, std::uint64_t trials,
                  unsigned workers, const std::string& profile_name, std::uint64_t seed,
                  bool has_seed) {
    ambiloc::visibility_profile prof;
    if (profile_name == "low")
        prof = ambiloc::visibility_profile::low;
    else if (profile_name == "medium")
        prof = ambiloc::visibility_profile::medium;
    else if (profile_name == "high")
        prof = ambiloc::visibility_profile::high;
    else
        throw ambiloc::validation_error("unknown profile: " + profile_name);
    const std::uint64_t use_seed = has_seed ? seed : ambiloc::kStudySeed;

    std::vector<std::string> ids;
    if (figure == "all") {
        for (const auto& f : ambiloc::figure_catalog()) ids.push_back(f.id);
    } else {
        ids.push_back(figure);
    }
    fs::create_directories(out_dir);
    json manifest{{"version", ambiloc::version_string},
                  {"trials", trials},
                  {"profile", profile_name},
                  {"seed", use_seed},
                  {"figures", json::array()}};
    for (const auto& id : ids) {
        std::cerr << "building figure " << id << "...\n";
        const auto art = ambiloc::build_figure(id, trials, workers, prof, use_seed);
        const auto svg_path = fs::path(out_dir) / (id + ".svg");
        const auto csv_path = fs::path(out_dir) / (id + ".csv");
        ambiloc::write_text_file(svg_path.string(), ambiloc::render_svg(art.chart));
        ambiloc::write_text_file(csv_path.string(), art.csv);
        manifest["figures"].push_back(
            {{"id", id}, {"svg", svg_path.filename().string()},
             {"csv", csv_path.filename().string()}});
    }
    emit(manifest, (fs::path(out_dir) / "manifest.json").string());
    std::cout << "wrote " << ids.size() << " figure(s) to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"range-only localization with indistinguishable landmarks"};
    app.set_version_flag("--version", ambiloc::version_string);
    app.require_subcommand(1);

    std::string config_path, out_path, figure = "all", profile = "medium";
    std::string rep_out = "report";
    std::uint64_t trials = 10000, rep_trials = 2000, stream = 0, seed = 0;
    unsigned workers = 0;
    bool semi_empirical = false;

    auto* sim = app.add_subcommand("simulate", "run trials and report aggregates");
    sim->add_option("--config", config_path, "scenario file")->required();
    sim->add_option("--trials", trials, "number of trials");
    sim->add_option("--workers", workers, "worker threads (0 = auto)");
    sim->add_option("--out", out_path, "output directory for trials.csv + aggregate.json");
    auto* sim_seed = sim->add_option("--seed", seed, "override master seed");

    auto* ana = app.add_subcommand("analytic", "closed-form localizability and rates");
    ana->add_option("--config", config_path, "scenario file")->required();
    ana->add_option("--out", out_path, "output JSON file (default stdout)");
    auto* ana_seed = ana->add_option("--seed", seed, "override master seed");

    auto* cmp = app.add_subcommand("compare", "simulate and evaluate closed form side by side");
    cmp->add_option("--config", config_path, "scenario file")->required();
    cmp->add_option("--trials", trials, "number of trials");
    cmp->add_option("--workers", workers, "worker threads (0 = auto)");
    cmp->add_flag("--semi-empirical", semi_empirical, "add the per-trial plug-in estimate");
    cmp->add_option("--out", out_path, "output JSON file (default stdout)");
    auto* cmp_seed = cmp->add_option("--seed", seed, "override master seed");

    auto* smap = app.add_subcommand("sample-map", "draw one landmark map as CSV");
    smap->add_option("--config", config_path, "scenario file")->required();
    smap->add_option("--out", out_path, "output CSV file (default stdout)");
    smap->add_option("--stream", stream, "stream id within the seed");
    auto* smap_seed = smap->add_option("--seed", seed, "override master seed");

    auto* rep = app.add_subcommand("reproduce", "build the report figures");
    rep->add_option("--figure", figure, "figure id or 'all'");
    rep->add_option("--out", rep_out, "output directory");
    rep->add_option("--trials", rep_trials, "trials per simulated point");
    rep->add_option("--workers", workers, "worker threads (0 = auto)");
    rep->add_option("--profile", profile, "visibility profile: low, medium, high");
    auto* rep_seed = rep->add_option("--seed", seed, "override master seed");

    auto* list = app.add_subcommand("list-figures", "print the figure catalog");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage errors map to 1
    }

    try {
        if (sim->parsed())
            return run_simulate(config_path, trials, workers, out_path, seed,
                                !sim_seed->empty());
        if (ana->parsed()) return run_analytic(config_path, out_path, seed, !ana_seed->empty());
        if (cmp->parsed())
            return run_compare(config_path, trials, workers, semi_empirical, out_path, seed,
                               !cmp_seed->empty());
        if (smap->parsed())
            return run_sample_map(config_path, out_path, stream, seed, !smap_seed->empty());
        if (rep->parsed())
            return run_reproduce(figure, rep_out, rep_trials, workers, profile, seed,
                                 !rep_seed->empty());
        if (list->parsed()) {
            for (const auto& f : ambiloc::figure_catalog())
                std::cout << f.id << "\t" << f.summary << "\n";
            return 0;
        }
    } catch (const ambiloc::validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ambiloc::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const ambiloc::conditioning_error& e) {
        std::cerr << "conditioning error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
