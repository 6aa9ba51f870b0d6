#include "cavsim/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace cavsim {

namespace pt = boost::property_tree;

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::single_run: return "single-run";
        case ExperimentKind::sweep_kappa: return "sweep-kappa";
        case ExperimentKind::sweep_eta: return "sweep-eta";
        case ExperimentKind::escape_times: return "escape-times";
        case ExperimentKind::flight_times: return "flight-times";
        case ExperimentKind::baseline: return "baseline";
    }
    return "?";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
    for (auto k : {ExperimentKind::single_run, ExperimentKind::sweep_kappa, ExperimentKind::sweep_eta,
                   ExperimentKind::escape_times, ExperimentKind::flight_times,
                   ExperimentKind::baseline}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown experiment kind '" + name + "'");
}

namespace {

const std::map<std::string, std::set<std::string>> known_keys = {
    {"system",
     {"gamma_si", "g", "delta_A", "delta_C", "kappa", "eta", "epsilon_recoil", "ubar2"}},
    {"ensemble",
     {"n_trajectories", "t_total", "dt", "t_burnin", "sample_interval", "master_seed", "workers",
      "batch_duration", "windows", "position_bins"}},
    {"initial", {"kind", "well", "temperature", "well_confined", "x", "p", "field"}},
    {"experiment", {"kind", "grid", "eta_over_kappa", "grid_unit", "trap_sweep"}},
    {"trapping",
     {"tau_min_us", "tail_bins", "tail_span", "min_tail_events", "cutoff_us",
      "flight_duration_us", "bins_per_decade", "peak_significance", "baseline_atoms",
      "baseline_temperature", "baseline_depth"}},
    {"output", {"directory", "plots"}},
};

template <class T>
T get(const pt::ptree& tree, const std::string& path, T fallback) {
    const auto node = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'));
    if (!node) return fallback;
    std::string text = boost::algorithm::trim_copy(*node);
    if constexpr (std::is_same_v<T, bool>) {
        boost::algorithm::to_lower(text);
        if (text == "true" || text == "yes" || text == "1" || text == "on") return true;
        if (text == "false" || text == "no" || text == "0" || text == "off") return false;
        throw ConfigError("'" + path + "' is not a boolean: " + *node);
    } else if constexpr (std::is_same_v<T, std::string>) {
        return text;
    } else {
        std::istringstream is(text);
        T value{};
        is >> value;
        if (is.fail() || !is.eof()) throw ConfigError("'" + path + "' is not a number: " + *node);
        return value;
    }
}

std::optional<double> get_optional(const pt::ptree& tree, const std::string& path) {
    if (!tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return std::nullopt;
    return get<double>(tree, path, 0.0);
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    std::vector<std::string> parts;
    boost::algorithm::split(parts, text, boost::algorithm::is_any_of(", \t"),
                            boost::algorithm::token_compress_on);
    for (const auto& part : parts) {
        if (part.empty()) continue;
        try {
            std::size_t used = 0;
            grid.push_back(std::stod(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw ConfigError("bad grid value '" + part + "'");
        }
    }
    return grid;
}

std::string format(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

void RunConfig::validate() const {
    system.validate();
    ensemble.validate();
    const bool sweep = kind == ExperimentKind::sweep_kappa || kind == ExperimentKind::sweep_eta;
    if (sweep) {
        if (grid.empty()) throw ConfigError("sweep grid must not be empty");
        for (std::size_t i = 1; i < grid.size(); ++i) {
            if (!(grid[i] > grid[i - 1])) throw ConfigError("sweep grid must be strictly increasing");
        }
        if (kind == ExperimentKind::sweep_kappa && grid.front() <= 0.0) {
            throw ConfigError("kappa grid values must be > 0");
        }
        if (kind == ExperimentKind::sweep_eta && grid.front() < 0.0) {
            throw ConfigError("eta grid values must be >= 0");
        }
    }
    const bool trapping_run = kind == ExperimentKind::escape_times ||
                              kind == ExperimentKind::flight_times || trap_sweep;
    if (trapping_run && ensemble.sample_interval > 0.5) {
        throw ConfigError("trapping runs need sample_interval <= 0.5 / gamma");
    }
    if (!(trapping.tau_min_us >= 0.0)) throw ConfigError("tau_min_us must be >= 0");
    if (!(trapping.flight_duration_us > 0.0)) throw ConfigError("flight_duration_us must be > 0");
    if (trapping.tail_bins < 3) throw ConfigError("tail_bins must be >= 3");
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
    std::vector<std::pair<std::string, std::string>> e;
    auto add = [&](const std::string& k, const std::string& v) { e.emplace_back(k, v); };
    add("system.gamma_si", format(system.gamma_si));
    add("system.g", format(system.g));
    add("system.delta_A", format(system.delta_A));
    add("system.delta_C", delta_C_follows_U0 ? "U0" : format(system.delta_C));
    add("system.kappa", format(system.kappa));
    add("system.eta", format(system.eta));
    add("system.epsilon_recoil", format(system.epsilon_recoil));
    add("system.ubar2", format(system.ubar2));
    add("ensemble.n_trajectories", std::to_string(ensemble.n_trajectories));
    add("ensemble.t_total", format(ensemble.t_total));
    add("ensemble.dt", format(ensemble.dt));
    add("ensemble.t_burnin", format(ensemble.t_burnin));
    add("ensemble.sample_interval", format(ensemble.sample_interval));
    add("ensemble.master_seed", std::to_string(ensemble.master_seed));
    add("ensemble.workers", std::to_string(ensemble.workers));
    add("ensemble.batch_duration", format(ensemble.stats.batch_duration));
    add("ensemble.windows", std::to_string(ensemble.stats.n_windows));
    add("ensemble.position_bins", std::to_string(ensemble.stats.position_bins));
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, HarmonicGroundState>) {
                add("initial.kind", "harmonic");
                add("initial.well", std::to_string(m.well));
            } else if constexpr (std::is_same_v<T, ThermalState>) {
                add("initial.kind", "thermal");
                add("initial.temperature", format(m.temperature));
                add("initial.well_confined", m.well_confined ? "true" : "false");
                add("initial.well", std::to_string(m.well));
            } else {
                add("initial.kind", "point");
                add("initial.x", format(m.x));
                add("initial.p", format(m.p));
            }
        },
        initial.motion);
    add("initial.field", initial.field == FieldStart::pinned ? "pinned" : "empty");
    add("experiment.kind", to_string(kind));
    std::string g;
    for (std::size_t i = 0; i < grid.size(); ++i) g += (i ? ", " : "") + format(grid[i]);
    add("experiment.grid", g);
    add("experiment.eta_over_kappa", format(eta_over_kappa));
    add("experiment.grid_unit", eta_grid_in_kappa ? "kappa" : "gamma");
    add("experiment.trap_sweep", trap_sweep ? "true" : "false");
    add("trapping.tau_min_us", format(trapping.tau_min_us));
    add("trapping.tail_bins", std::to_string(trapping.tail_bins));
    add("trapping.tail_span", format(trapping.tail_span));
    add("trapping.min_tail_events", std::to_string(trapping.min_tail_events));
    add("trapping.cutoff_us", trapping.cutoff_us ? format(*trapping.cutoff_us) : "auto");
    add("trapping.flight_duration_us", format(trapping.flight_duration_us));
    add("trapping.bins_per_decade", std::to_string(trapping.bins_per_decade));
    add("trapping.peak_significance", format(trapping.peak_significance));
    add("trapping.baseline_atoms", std::to_string(trapping.baseline_atoms));
    add("trapping.baseline_temperature",
        trapping.baseline_temperature ? format(*trapping.baseline_temperature) : "measured");
    add("trapping.baseline_depth",
        trapping.baseline_depth ? format(*trapping.baseline_depth) : "measured");
    add("output.directory", output_dir);
    add("output.plots", plots ? "true" : "false");
    return e;
}

RunConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    for (const auto& [section, body] : tree) {
        const auto it = known_keys.find(section);
        if (it == known_keys.end()) throw ConfigError("unknown section [" + section + "]");
        if (!body.data().empty()) throw ConfigError("key outside a section: " + section);
        for (const auto& [key, value] : body) {
            if (!it->second.count(key)) throw ConfigError("unknown key " + section + "." + key);
        }
    }

    RunConfig cfg;
    auto& s = cfg.system;
    s.gamma_si = get(tree, "system.gamma_si", s.gamma_si);
    s.g = get(tree, "system.g", s.g);
    s.delta_A = get(tree, "system.delta_A", s.delta_A);
    const std::string delta_C = get<std::string>(tree, "system.delta_C", "0");
    if (delta_C == "U0") {
        cfg.delta_C_follows_U0 = true;
    } else {
        s.delta_C = get(tree, "system.delta_C", 0.0);
    }
    s.kappa = get(tree, "system.kappa", s.kappa);
    s.eta = get(tree, "system.eta", s.eta);
    s.epsilon_recoil = get(tree, "system.epsilon_recoil", s.epsilon_recoil);
    s.ubar2 = get(tree, "system.ubar2", s.ubar2);
    if (cfg.delta_C_follows_U0) s.delta_C = derive(s).U0;

    auto& e = cfg.ensemble;
    e.n_trajectories = get<std::size_t>(tree, "ensemble.n_trajectories", 100);
    e.t_total = get(tree, "ensemble.t_total", 2000.0);
    e.dt = get(tree, "ensemble.dt", 1e-3);
    e.t_burnin = get(tree, "ensemble.t_burnin", 200.0);
    e.sample_interval = get(tree, "ensemble.sample_interval", 0.5);
    e.master_seed = get<std::uint64_t>(tree, "ensemble.master_seed", 1);
    e.workers = get<unsigned>(tree, "ensemble.workers", 1);
    e.stats.batch_duration = get(tree, "ensemble.batch_duration", 50.0);
    e.stats.n_windows = get<std::size_t>(tree, "ensemble.windows", 2);
    e.stats.position_bins = get<std::size_t>(tree, "ensemble.position_bins", 64);
    if (e.stats.n_windows > 0) {
        e.stats.window_length = (e.t_total - e.t_burnin) / static_cast<double>(e.stats.n_windows);
    }

    const std::string ic = get<std::string>(tree, "initial.kind", "harmonic");
    const long well = get<long>(tree, "initial.well", 0);
    if (ic == "harmonic") {
        cfg.initial.motion = HarmonicGroundState{well};
    } else if (ic == "thermal") {
        cfg.initial.motion = ThermalState{get(tree, "initial.temperature", 1.0),
                                          get(tree, "initial.well_confined", false), well};
    } else if (ic == "point") {
        cfg.initial.motion = PointState{get(tree, "initial.x", 0.0), get(tree, "initial.p", 0.0)};
    } else {
        throw ConfigError("unknown initial.kind '" + ic + "'");
    }
    const std::string field = get<std::string>(tree, "initial.field", "pinned");
    if (field == "pinned") {
        cfg.initial.field = FieldStart::pinned;
    } else if (field == "empty") {
        cfg.initial.field = FieldStart::empty_cavity;
    } else {
        throw ConfigError("unknown initial.field '" + field + "'");
    }

    cfg.kind = parse_experiment_kind(get<std::string>(tree, "experiment.kind", "single-run"));
    cfg.grid = parse_grid(get<std::string>(tree, "experiment.grid", ""));
    cfg.eta_over_kappa = get(tree, "experiment.eta_over_kappa", cfg.eta_over_kappa);
    const std::string unit = get<std::string>(tree, "experiment.grid_unit", "kappa");
    if (unit != "kappa" && unit != "gamma") throw ConfigError("grid_unit must be kappa or gamma");
    cfg.eta_grid_in_kappa = unit == "kappa";
    cfg.trap_sweep = get(tree, "experiment.trap_sweep", false);

    auto& t = cfg.trapping;
    t.tau_min_us = get(tree, "trapping.tau_min_us", t.tau_min_us);
    t.tail_bins = get(tree, "trapping.tail_bins", t.tail_bins);
    t.tail_span = get(tree, "trapping.tail_span", t.tail_span);
    t.min_tail_events = get(tree, "trapping.min_tail_events", t.min_tail_events);
    t.cutoff_us = get_optional(tree, "trapping.cutoff_us");
    t.flight_duration_us = get(tree, "trapping.flight_duration_us", t.flight_duration_us);
    t.bins_per_decade = get(tree, "trapping.bins_per_decade", t.bins_per_decade);
    t.peak_significance = get(tree, "trapping.peak_significance", t.peak_significance);
    t.baseline_atoms = get(tree, "trapping.baseline_atoms", t.baseline_atoms);
    t.baseline_temperature = get_optional(tree, "trapping.baseline_temperature");
    t.baseline_depth = get_optional(tree, "trapping.baseline_depth");

    cfg.output_dir = get<std::string>(tree, "output.directory", cfg.output_dir);
    cfg.plots = get(tree, "output.plots", cfg.plots);

    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse_config(in);
}

}  // namespace cavsim
