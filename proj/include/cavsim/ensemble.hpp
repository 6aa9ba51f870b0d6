// ensemble.hpp - initial conditions and ensembles of independent trajectories.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cavsim/dynamics.hpp"
#include "cavsim/lattice.hpp"
#include "cavsim/observables.hpp"

namespace cavsim {

// Minimum-uncertainty Gaussian in the harmonic approximation of well `well`.
struct HarmonicGroundState {
    long well = 0;
};

// Boltzmann distribution at `temperature` (units of hbar gamma) in the static
// potential U0 <n> f^2. With `well_confined` only bound atoms of `well` are kept.
struct ThermalState {
    double temperature = 1.0;
    bool well_confined = false;
    long well = 0;
};

struct PointState {
    double x = 0.0;
    double p = 0.0;
};

enum class FieldStart {
    pinned,        // stationary field for an atom held at the sampled x
    empty_cavity,  // stationary field of the cavity without atom
};

struct InitialCondition {
    std::variant<HarmonicGroundState, ThermalState, PointState> motion = HarmonicGroundState{};
    FieldStart field = FieldStart::pinned;
};

// Depth data of the well an atom is prepared in.
struct WellGeometry {
    WellLattice lattice;
    double minimum = 0.0;      // position of the first well minimum (well 0)
    double photons = 0.0;      // pinned-atom photon number at the minimum
    double depth = 0.0;        // |U0| * photons, barrier height
    double frequency = 0.0;    // harmonic frequency sqrt(2 eps |U0| n)
    double sigma_x = 0.0;
    double sigma_p = 0.0;
};

// Throws ConfigError when the potential does not confine (U0 n == 0).
WellGeometry well_geometry(const Model& model);

PhaseState sample_initial(const InitialCondition& ic, const Model& model, Rng& rng);

struct EnsembleConfig {
    std::size_t n_trajectories = 1;
    double t_total = 1000.0;
    double dt = 1e-3;
    double t_burnin = 0.0;
    double sample_interval = 0.1;
    std::uint64_t master_seed = 1;
    unsigned workers = 1;

    bool keep_samples = false;
    // Stop a trajectory at the first boundary crossing (escape-time runs).
    bool stop_on_exit = false;
    StepMode step_mode{};
    StatsLayout stats{};

    // Throws ConfigError.
    void validate() const;
    std::size_t steps_per_sample() const;
};

struct Sample {
    double t = 0.0;
    PhaseState state;
};

struct AbortInfo {
    std::uint64_t step = 0;
    double t = 0.0;
    std::string reason;
};

struct TrajectoryRecord {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    double t_end = 0.0;
    long initial_well = 0;
    std::vector<Sample> samples;          // only with keep_samples
    std::vector<CrossingEvent> crossings;
    EnsembleStats stats;
    std::optional<AbortInfo> aborted;

    StepDiagnostics diagnostics() const { return stats.diagnostics; }
};

TrajectoryRecord run_trajectory(std::size_t index, const EnsembleConfig& config,
                                const InitialCondition& ic, const Model& model);

// Trajectory i is seeded with derive_seed(master_seed, i), so records do not
// depend on the worker count or scheduling order.
std::vector<TrajectoryRecord> run_ensemble(const EnsembleConfig& config,
                                           const InitialCondition& ic, const Model& model);

// Pools the statistics of all non-aborted records.
EnsembleStats pooled_stats(const std::vector<TrajectoryRecord>& records, const StatsLayout& layout);

}  // namespace cavsim
