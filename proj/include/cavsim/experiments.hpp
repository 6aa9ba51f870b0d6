// experiments.hpp - steady-state, sweep and trapping-time protocols built on
// the ensemble engine. Results are in reduced units; writers convert to
// microseconds where columns say so.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cavsim/config.hpp"
#include "cavsim/ensemble.hpp"
#include "cavsim/observables.hpp"
#include "cavsim/trapping.hpp"

namespace cavsim {

inline constexpr std::size_t ks_resamples = 1000;

struct SteadyState {
    SystemParams params;
    DerivedParams derived;
    Estimate temperature;  // hbar gamma
    Estimate photons;
    double potential = 0.0;  // U0 <n>
    double ratio = 0.0;      // T / (U0 <n>)
    double psd_violation_rate = 0.0;
    std::size_t trajectories = 0;
    std::size_t aborted = 0;
    PositionDistribution positions;
    double ks_distance = 0.0;   // against the thermal reference at (T, U0 <n>)
    double ks_threshold = 0.0;  // 99% trajectory-bootstrap null; nan below two trajectories
    EnsembleStats stats;
};

// Harmonic starts fall back to an atom at rest at the would-be minimum when
// the potential does not confine (eta = 0).
InitialCondition effective_initial(const InitialCondition& ic, const Model& model);

SteadyState run_steady_state(const SystemParams& params, const EnsembleConfig& ensemble,
                             const InitialCondition& ic);

// Parameters at one sweep value, following the config's coupling rules.
SystemParams sweep_point(const RunConfig& config, double value);

struct FlightRun {
    FlightRecord flights;
    std::optional<FlightAnalysis> analysis;
    std::string error;
    Estimate temperature;
    Estimate photons;
    double depth = 0.0;  // U0 <n>
    double above_barrier = 0.0;
    StepDiagnostics diagnostics;
};

// One long trajectory; residencies come from boundary crossings.
FlightRun run_flight(const SystemParams& params, const RunConfig& config);

struct EscapeRun {
    EscapeAnalysis analysis;
    std::size_t aborted = 0;
    StepDiagnostics diagnostics;
};

// Ensemble stopped at the first boundary crossing, each trajectory capped at
// ensemble.t_total.
EscapeRun run_escape(const SystemParams& params, const RunConfig& config);

struct BaselineRun {
    BaselineAnalysis analysis;
    double temperature = 0.0;
    double depth = 0.0;
    bool measured = false;  // T and depth came from a steady-state run
};

BaselineRun run_baseline(const SystemParams& params, const RunConfig& config);

struct SweepRow {
    double value = 0.0;
    std::optional<SteadyState> steady;
    std::string error;
    std::optional<FlightRun> trap;  // only with trap_sweep
};

// Rows are passed to `on_row` as soon as they are computed.
std::vector<SweepRow> run_sweep(const RunConfig& config,
                                const std::function<void(const SweepRow&)>& on_row = {});

TailFitOptions tail_options(const SystemParams& params, const TrappingSettings& settings);

}  // namespace cavsim
