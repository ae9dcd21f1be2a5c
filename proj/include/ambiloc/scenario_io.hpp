#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ambiloc/montecarlo.hpp"
#include "ambiloc/types.hpp"

// Plain-text scenario files: one `key = value` pair per line, `#` comments,
// numeric arrays in brackets. A deliberately small surface so files written
// by hand, by the serializer, or by other tooling stay interchangeable.

namespace ambiloc {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw validation_error("scenario file: bad number '" + s + "' for key '" + key + "'");
    }
}

inline std::vector<double> parse_array(const std::string& s, const std::string& key) {
    std::vector<double> out;
    std::string body = trim(s);
    if (body.size() < 2 || body.front() != '[' || body.back() != ']')
        throw validation_error("scenario file: expected [..] array for key '" + key + "'");
    body = body.substr(1, body.size() - 2);
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(item, key));
    }
    if (out.empty())
        throw validation_error("scenario file: empty array for key '" + key + "'");
    return out;
}

inline std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

}  // namespace detail

// Per-mark keys accept either a scalar (broadcast to all marks) or an array
// of length mark_count.
inline scenario_config parse_scenario(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw validation_error("scenario file: line " + std::to_string(lineno) +
                                   " is not 'key = value'");
        const auto key = detail::trim(line.substr(0, eq));
        const auto val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw validation_error("scenario file: line " + std::to_string(lineno) +
                                   " is not 'key = value'");
        if (!kv.emplace(key, val).second)
            throw validation_error("scenario file: duplicate key '" + key + "'");
    }

    scenario_config cfg;
    auto take = [&](const char* key) -> std::string {
        auto it = kv.find(key);
        if (it == kv.end()) return {};
        auto v = it->second;
        kv.erase(it);
        return v;
    };
    auto take_per_mark = [&](const char* key, std::vector<double>& dst) {
        const auto v = take(key);
        if (v.empty()) return;
        if (!v.empty() && v.front() == '[')
            dst = detail::parse_array(v, key);
        else
            dst.assign(1, detail::parse_double(v, key));
    };

    if (auto v = take("aoi_radius"); !v.empty()) cfg.aoi_radius = detail::parse_double(v, "aoi_radius");
    if (auto v = take("mark_count"); !v.empty())
        cfg.mark_count = static_cast<std::int32_t>(detail::parse_double(v, "mark_count"));
    take_per_mark("densities", cfg.densities);
    take_per_mark("visibility", cfg.visibility);
    take_per_mark("noise_dev", cfg.noise_dev);
    if (auto v = take("threshold"); !v.empty()) cfg.threshold = detail::parse_double(v, "threshold");
    if (auto v = take("policy"); !v.empty()) {
        const auto p = detail::unquote(v);
        if (p == "random_visible" || p == "random")
            cfg.policy = observation_policy::random_visible;
        else if (p == "nearest")
            cfg.policy = observation_policy::nearest;
        else
            throw validation_error("scenario file: unknown policy '" + p + "'");
    }
    if (auto v = take("n_measurements"); !v.empty())
        cfg.n_measurements = static_cast<std::int32_t>(detail::parse_double(v, "n_measurements"));
    if (auto v = take("placement"); !v.empty()) {
        const auto p = detail::unquote(v);
        if (p == "uniform_core")
            cfg.placement = target_placement::uniform_core;
        else if (p == "uniform_full")
            cfg.placement = target_placement::uniform_full;
        else
            throw validation_error("scenario file: unknown placement '" + p + "'");
    }
    if (auto v = take("master_seed"); !v.empty())
        cfg.master_seed = static_cast<std::uint64_t>(std::stoull(detail::unquote(v)));
    if (auto v = take("allow_repeats"); !v.empty()) cfg.allow_repeats = detail::unquote(v) == "true";
    if (auto v = take("noise_free"); !v.empty()) cfg.noise_free = detail::unquote(v) == "true";
    if (!kv.empty())
        throw validation_error("scenario file: unknown key '" + kv.begin()->first + "'");

    const auto m = static_cast<std::size_t>(cfg.mark_count);
    auto broadcast = [&](std::vector<double>& v, const char* key) {
        if (v.size() == 1 && m > 1) v.assign(m, v.front());
        if (v.size() != m)
            throw validation_error(std::string("scenario file: '") + key + "' has " +
                                   std::to_string(v.size()) + " entries for " +
                                   std::to_string(m) + " marks");
    };
    broadcast(cfg.densities, "densities");
    broadcast(cfg.visibility, "visibility");
    broadcast(cfg.noise_dev, "noise_dev");
    validate_scenario(cfg);
    return cfg;
}

inline std::string serialize_scenario(const scenario_config& cfg) {
    std::ostringstream os;
    auto arr = [](const std::vector<double>& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ", ";
            s += detail::fmt_double(v[i]);
        }
        return s + "]";
    };
    os << "aoi_radius = " << detail::fmt_double(cfg.aoi_radius) << "\n";
    os << "mark_count = " << cfg.mark_count << "\n";
    os << "densities = " << arr(cfg.densities) << "\n";
    os << "visibility = " << arr(cfg.visibility) << "\n";
    os << "noise_dev = " << arr(cfg.noise_dev) << "\n";
    os << "threshold = " << detail::fmt_double(cfg.threshold) << "\n";
    os << "policy = \"" << to_string(cfg.policy) << "\"\n";
    os << "n_measurements = " << cfg.n_measurements << "\n";
    os << "placement = \"" << to_string(cfg.placement) << "\"\n";
    os << "master_seed = " << cfg.master_seed << "\n";
    os << "allow_repeats = " << (cfg.allow_repeats ? "true" : "false") << "\n";
    os << "noise_free = " << (cfg.noise_free ? "true" : "false") << "\n";
    return os.str();
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot write file: " + path);
    out << text;
    if (!out) throw validation_error("write failed: " + path);
}

inline scenario_config load_scenario(const std::string& path) {
    return parse_scenario(read_text_file(path));
}

// --- CSV emitters ---------------------------------------------------------
// All numeric fields use %.17g so files round-trip and byte-compare across
// runs.

inline std::string map_to_csv(const marked_map& map) {
    std::ostringstream os;
    os << "# aoi_radius=" << detail::fmt_double(map.aoi_radius) << "\n";
    os << "id,x,y,mark\n";
    for (const auto& lm : map.landmarks)
        os << lm.id << ',' << detail::fmt_double(lm.pos.x) << ',' << detail::fmt_double(lm.pos.y)
           << ',' << lm.mark << "\n";
    return os.str();
}

inline marked_map map_from_csv(const std::string& text) {
    marked_map map;
    std::stringstream ss(text);
    std::string line;
    bool seen_header = false;
    while (std::getline(ss, line)) {
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.rfind("# aoi_radius=", 0) == 0) {
            map.aoi_radius = detail::parse_double(line.substr(13), "aoi_radius");
            continue;
        }
        if (line.front() == '#') continue;
        if (!seen_header) {  // column header row
            seen_header = true;
            continue;
        }
        std::stringstream ls(line);
        std::string f;
        landmark lm;
        std::getline(ls, f, ',');
        lm.id = static_cast<std::int32_t>(std::stol(f));
        std::getline(ls, f, ',');
        lm.pos.x = detail::parse_double(f, "x");
        std::getline(ls, f, ',');
        lm.pos.y = detail::parse_double(f, "y");
        std::getline(ls, f, ',');
        lm.mark = static_cast<std::int32_t>(std::stol(f));
        map.landmarks.push_back(lm);
    }
    if (map.aoi_radius <= 0.0)
        throw validation_error("map csv: missing '# aoi_radius=' header");
    return map;
}

inline std::string observations_to_csv(const observation_set& obs) {
    std::ostringstream os;
    os << "# target=" << detail::fmt_double(obs.target.x) << ','
       << detail::fmt_double(obs.target.y) << "\n";
    os << "index,mark,range,sigma,true_id\n";
    for (std::size_t i = 0; i < obs.measurements.size(); ++i) {
        const auto& m = obs.measurements[i];
        os << i << ',' << m.mark << ',' << detail::fmt_double(m.range) << ','
           << detail::fmt_double(m.noise_dev) << ',' << m.true_id << "\n";
    }
    return os.str();
}

inline std::string solutions_to_csv(const solution_set& sols, const combination& truth = {}) {
    std::ostringstream os;
    os << "# comb_size=" << sols.comb_size << "\n";
    os << "index,ids,min_pair_probability,is_truth\n";
    for (std::size_t i = 0; i < sols.combinations.size(); ++i) {
        os << i << ',';
        const auto& c = sols.combinations[i];
        for (std::size_t j = 0; j < c.size(); ++j) {
            if (j) os << ';';
            os << c[j];
        }
        os << ',' << detail::fmt_double(sols.min_pair_probability[i]) << ','
           << (c == truth ? 1 : 0) << "\n";
    }
    return os.str();
}

inline std::string trials_to_csv(const std::vector<trial_outcome>& outcomes) {
    std::ostringstream os;
    os << "trial,comb_size,sol_size,truth_in_set,picked_correct,n_visible,target_retries,"
          "map_retries,position_error\n";
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& t = outcomes[i];
        os << i << ',' << t.comb_size << ',' << t.sol_size << ',' << (t.truth_in_set ? 1 : 0)
           << ',' << (t.picked_correct ? 1 : 0) << ',' << t.n_visible << ',' << t.target_retries
           << ',' << t.map_retries << ',';
        if (t.position_error) os << detail::fmt_double(*t.position_error);
        os << "\n";
    }
    return os.str();
}

inline std::string aggregate_csv_header() {
    return "density_scale,n_measurements,policy,trials,localizability,localizability_se,"
           "tpr,tpr_se,fpr,fpr_se,mean_comb_size,mean_sol_size,removal_pct,"
           "mean_position_error,error\n";
}

// One sweep row. density_scale is a caller-supplied label for the grid axis
// (total landmark intensity for the default figures).
inline std::string aggregate_csv_row(double density_scale, const sweep_entry& e) {
    std::ostringstream os;
    os << detail::fmt_double(density_scale) << ',' << e.config.n_measurements << ','
       << to_string(e.config.policy) << ',';
    if (e.aggregate) {
        const auto& a = *e.aggregate;
        os << a.trials << ',' << detail::fmt_double(a.localizability) << ','
           << detail::fmt_double(a.localizability_se) << ',' << detail::fmt_double(a.tpr) << ','
           << detail::fmt_double(a.tpr_se) << ',' << detail::fmt_double(a.fpr) << ','
           << detail::fmt_double(a.fpr_se) << ',' << detail::fmt_double(a.mean_comb_size) << ','
           << detail::fmt_double(a.mean_sol_size) << ',' << detail::fmt_double(a.removal_pct)
           << ',' << detail::fmt_double(a.mean_position_error) << ',';
    } else {
        os << "0,,,,,,,,,,,";
    }
    os << '"' << e.error << '"' << "\n";
    return os.str();
}

}  // namespace ambiloc
