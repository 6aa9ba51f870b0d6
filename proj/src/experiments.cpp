#include "cavsim/experiments.hpp"

#include <cmath>
#include <limits>

namespace cavsim {

InitialCondition effective_initial(const InitialCondition& ic, const Model& model) {
    if (std::holds_alternative<PointState>(ic.motion)) return ic;
    try {
        (void)well_geometry(model);
        return ic;
    } catch (const ConfigError&) {
        const long well = std::visit(
            [](const auto& m) -> long {
                if constexpr (std::is_same_v<std::decay_t<decltype(m)>, PointState>) {
                    return 0;
                } else {
                    return m.well;
                }
            },
            ic.motion);
        InitialCondition rest = ic;
        rest.motion = PointState{WellLattice::for_light_shift(model.derived.U0).center(well), 0.0};
        return rest;
    }
}

SteadyState run_steady_state(const SystemParams& params, const EnsembleConfig& ensemble,
                             const InitialCondition& ic) {
    const Model model = Model::from(params, ModeFunction::standing_wave());
    const auto records = run_ensemble(ensemble, effective_initial(ic, model), model);

    SteadyState out;
    out.params = params;
    out.derived = model.derived;
    StatsLayout layout = ensemble.stats;
    layout.t_begin = ensemble.t_burnin;
    out.stats = pooled_stats(records, layout);
    out.trajectories = records.size();
    for (const auto& r : records) {
        if (r.aborted) ++out.aborted;
    }
    if (out.stats.count() == 0) throw InsufficientData("no post-burn-in samples");

    out.temperature = temperature(out.stats, params.epsilon_recoil);
    out.photons = photon_number(out.stats);
    out.potential = model.derived.U0 * out.photons.value;
    out.ratio = out.temperature.value / out.potential;
    out.psd_violation_rate = out.stats.diagnostics.violation_rate();
    out.positions = position_distribution(out.stats, 0);
    if (out.positions.samples > 0 && out.temperature.value > 0.0) {
        const ThermalReference ref(out.temperature.value, model.derived.U0, out.photons.value);
        out.ks_distance = ks_distance(out.positions, ref);
        std::vector<const EnsembleStats*> kept;
        for (const auto& r : records) {
            if (!r.aborted && r.stats.count() > 0) kept.push_back(&r.stats);
        }
        out.ks_threshold = std::numeric_limits<double>::quiet_NaN();
        if (kept.size() >= 2) {
            try {
                out.ks_threshold = ks_bootstrap_threshold(kept, params.epsilon_recoil, model.derived.U0,
                                                          0.01, ks_resamples, derive_seed(ensemble.master_seed, ~0ULL));
            } catch (const std::exception&) {
            }
        }
    }
    return out;
}

SystemParams sweep_point(const RunConfig& config, double value) {
    SystemParams p = config.system;
    if (config.kind == ExperimentKind::sweep_kappa) {
        p.kappa = value;
        p.eta = config.eta_over_kappa * value;
    } else if (config.kind == ExperimentKind::sweep_eta) {
        p.eta = config.eta_grid_in_kappa ? value * p.kappa : value;
    }
    if (config.delta_C_follows_U0) p.delta_C = derive(p).U0;
    return p;
}

TailFitOptions tail_options(const SystemParams& params, const TrappingSettings& settings) {
    TailFitOptions o;
    o.tau_min = params.from_us(settings.tau_min_us);
    o.bins = settings.tail_bins;
    o.span = settings.tail_span;
    o.min_events = settings.min_tail_events;
    return o;
}

namespace {

HistogramOptions histogram_options(const TrappingSettings& settings) {
    HistogramOptions h;
    h.bins_per_decade = settings.bins_per_decade;
    return h;
}

}  // namespace

FlightRun run_flight(const SystemParams& params, const RunConfig& config) {
    const Model model = Model::from(params, ModeFunction::standing_wave());
    EnsembleConfig ens = config.ensemble;
    ens.n_trajectories = 1;
    ens.t_total = params.from_us(config.trapping.flight_duration_us);
    ens.keep_samples = false;
    ens.stop_on_exit = false;
    ens.stats.n_windows = 0;
    ens.stats.window_length = 0.0;
    if (ens.t_burnin >= ens.t_total) ens.t_burnin = 0.0;
    ens.validate();

    const TrajectoryRecord rec =
        run_trajectory(0, ens, effective_initial(config.initial, model), model);

    FlightRun out;
    out.diagnostics = rec.stats.diagnostics;
    out.flights = assemble_flights(rec.crossings, rec.initial_well, 0.0, rec.t_end);
    if (rec.aborted) {
        out.error = "trajectory aborted at t=" + std::to_string(rec.t_end) + ": " + rec.aborted->reason;
    }
    if (rec.stats.count() > 0) {
        out.temperature = temperature(rec.stats, params.epsilon_recoil);
        out.photons = photon_number(rec.stats);
        out.depth = std::abs(model.derived.U0 * out.photons.value);
        if (out.temperature.value > 0.0 && out.depth > 0.0) {
            out.above_barrier = above_barrier_fraction(out.temperature.value, out.depth);
        }
    }

    FlightOptions opts;
    opts.fit = tail_options(params, config.trapping);
    opts.histogram = histogram_options(config.trapping);
    if (config.trapping.cutoff_us) opts.cutoff = params.from_us(*config.trapping.cutoff_us);
    opts.peak_significance = config.trapping.peak_significance;
    try {
        out.analysis = flight_time_distribution(out.flights, opts);
        if (out.error.empty()) out.error = out.analysis->fit_error;
    } catch (const FitRefused& e) {
        if (out.error.empty()) out.error = e.what();
    }
    return out;
}

EscapeRun run_escape(const SystemParams& params, const RunConfig& config) {
    const Model model = Model::from(params, ModeFunction::standing_wave());
    EnsembleConfig ens = config.ensemble;
    ens.stop_on_exit = true;
    ens.keep_samples = false;
    ens.t_burnin = 0.0;
    ens.stats.n_windows = 0;
    ens.stats.window_length = 0.0;

    const auto records = run_ensemble(ens, effective_initial(config.initial, model), model);
    EscapeRun out;
    for (const auto& r : records) {
        if (r.aborted) ++out.aborted;
        out.diagnostics.merge(r.stats.diagnostics);
    }
    out.analysis = escape_time_distribution(records, tail_options(params, config.trapping),
                                            histogram_options(config.trapping));
    return out;
}

BaselineRun run_baseline(const SystemParams& params, const RunConfig& config) {
    BaselineRun out;
    if (config.trapping.baseline_temperature && config.trapping.baseline_depth) {
        out.temperature = *config.trapping.baseline_temperature;
        out.depth = *config.trapping.baseline_depth;
    } else {
        const SteadyState s = run_steady_state(params, config.ensemble, config.initial);
        out.temperature = config.trapping.baseline_temperature.value_or(s.temperature.value);
        out.depth = config.trapping.baseline_depth.value_or(std::abs(s.potential));
        out.measured = true;
    }
    BaselineOptions opts;
    opts.atoms = config.trapping.baseline_atoms;
    opts.dt = std::max(config.ensemble.dt, 1e-3);
    opts.seed = config.ensemble.master_seed;
    opts.histogram = histogram_options(config.trapping);
    out.analysis = conservative_baseline(out.temperature, out.depth, params.epsilon_recoil, opts);
    return out;
}

std::vector<SweepRow> run_sweep(const RunConfig& config,
                                const std::function<void(const SweepRow&)>& on_row) {
    config.validate();
    std::vector<SweepRow> rows;
    for (double value : config.grid) {
        SweepRow row;
        row.value = value;
        try {
            const SystemParams p = sweep_point(config, value);
            row.steady = run_steady_state(p, config.ensemble, config.initial);
            if (config.trap_sweep) row.trap = run_flight(p, config);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        if (on_row) on_row(row);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace cavsim
