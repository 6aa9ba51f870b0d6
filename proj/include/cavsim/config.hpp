// config.hpp - run configuration read from an INI-style key/value file.
//
//   [system]      physical parameters in reduced units (+ gamma_si anchor)
//   [ensemble]    trajectory count, durations, step, sampling, seed
//   [initial]     initial condition
//   [experiment]  kind and sweep grid
//   [trapping]    tail-fit and flight-time settings
//   [output]      directory and plot toggle
//
// See README.md for every key and its default.

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cavsim/ensemble.hpp"
#include "cavsim/model.hpp"
#include "cavsim/trapping.hpp"

namespace cavsim {

enum class ExperimentKind { single_run, sweep_kappa, sweep_eta, escape_times, flight_times, baseline };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

struct TrappingSettings {
    double tau_min_us = 100.0;
    std::size_t tail_bins = 15;
    double tail_span = 3.0;
    std::size_t min_tail_events = 50;
    std::optional<double> cutoff_us;
    double flight_duration_us = 20000.0;
    std::size_t bins_per_decade = 20;
    double peak_significance = 3.0;
    std::size_t baseline_atoms = 4000;
    std::optional<double> baseline_temperature;  // hbar gamma
    std::optional<double> baseline_depth;        // hbar gamma
};

struct RunConfig {
    SystemParams system;
    // delta_C tied to the light shift (delta_C = U0) and kept so across sweeps.
    bool delta_C_follows_U0 = false;
    EnsembleConfig ensemble;
    InitialCondition initial;
    ExperimentKind kind = ExperimentKind::single_run;
    std::vector<double> grid;
    double eta_over_kappa = 3.0;    // sweep-kappa ties eta to kappa
    bool eta_grid_in_kappa = true;  // sweep-eta grid given as eta/kappa
    bool trap_sweep = false;        // also fit T_trap at every sweep point
    TrappingSettings trapping;
    std::string output_dir = "out";
    bool plots = false;

    // Throws ConfigError.
    void validate() const;
    // Resolved "key = value" lines, written as comment headers.
    std::vector<std::pair<std::string, std::string>> entries() const;
};

// Throws ConfigError on unknown sections/keys or malformed values.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

}  // namespace cavsim
