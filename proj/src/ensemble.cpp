#include "cavsim/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace cavsim {

WellGeometry well_geometry(const Model& model) {
    WellGeometry geo;
    geo.lattice = WellLattice::for_light_shift(model.derived.U0);
    geo.minimum = geo.lattice.center(0);
    geo.photons = pinned_field(geo.minimum, model).field_intensity();
    geo.depth = std::abs(model.derived.U0) * geo.photons;
    if (!(geo.depth > 0.0)) {
        throw ConfigError("potential does not confine: U0 <n> = 0 (need g > 0, eta > 0, delta_A != 0)");
    }
    const double eps = model.params.epsilon_recoil;
    geo.frequency = std::sqrt(2.0 * eps * geo.depth);
    geo.sigma_p = std::sqrt(geo.frequency / (2.0 * eps));
    geo.sigma_x = std::sqrt(eps / (2.0 * geo.frequency));
    return geo;
}

namespace {

PhaseState with_field(double x, double p, FieldStart field, const Model& model) {
    PhaseState s;
    if (field == FieldStart::pinned) {
        s = pinned_field(x, model);
    } else {
        const auto& prm = model.params;
        const double denom = prm.kappa * prm.kappa + prm.delta_C * prm.delta_C;
        s = {x, 0.0, -prm.eta * prm.kappa / denom, -prm.eta * prm.delta_C / denom};
    }
    s.x = x;
    s.p = p;
    return s;
}

PhaseState sample_thermal(const ThermalState& th, FieldStart field, const Model& model, Rng& rng) {
    if (!(th.temperature > 0.0)) throw ConfigError("thermal initial condition needs T > 0");
    const WellGeometry geo = well_geometry(model);
    const double f_min = model.mode(geo.minimum).f;
    const double scale = model.derived.U0 * geo.photons;
    const double sigma_p = std::sqrt(th.temperature / model.params.epsilon_recoil);
    const double lo = geo.lattice.boundary(th.well);

    constexpr int max_attempts = 10'000'000;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        const double x = lo + WellLattice::period * rng.uniform();
        const double f = model.mode(x).f;
        const double v = scale * (f * f - f_min * f_min);  // >= 0
        if (rng.uniform() >= std::exp(-v / th.temperature)) continue;
        const double p = sigma_p * rng.normal();
        if (th.well_confined &&
            0.5 * model.params.epsilon_recoil * p * p + v >= geo.depth) {
            continue;
        }
        return with_field(x, p, field, model);
    }
    throw ConfigError("thermal sampling failed: no bound state accepted");
}

}  // namespace

PhaseState sample_initial(const InitialCondition& ic, const Model& model, Rng& rng) {
    return std::visit(
        [&](const auto& motion) -> PhaseState {
            using T = std::decay_t<decltype(motion)>;
            if constexpr (std::is_same_v<T, HarmonicGroundState>) {
                const WellGeometry geo = well_geometry(model);
                const double x = geo.lattice.center(motion.well) + geo.sigma_x * rng.normal();
                const double p = geo.sigma_p * rng.normal();
                return with_field(x, p, ic.field, model);
            } else if constexpr (std::is_same_v<T, ThermalState>) {
                return sample_thermal(motion, ic.field, model, rng);
            } else {
                return with_field(motion.x, motion.p, ic.field, model);
            }
        },
        ic.motion);
}

void EnsembleConfig::validate() const {
    if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
    if (!(t_total > 0.0)) throw ConfigError("t_total must be > 0");
    if (!(t_burnin >= 0.0 && t_burnin < t_total)) throw ConfigError("need 0 <= t_burnin < t_total");
    if (!(sample_interval >= dt * (1.0 - 1e-9))) throw ConfigError("sample_interval must be >= dt");
    if (workers == 0) throw ConfigError("workers must be >= 1");
}

std::size_t EnsembleConfig::steps_per_sample() const {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(sample_interval / dt)));
}

TrajectoryRecord run_trajectory(std::size_t index, const EnsembleConfig& config,
                                const InitialCondition& ic, const Model& model) {
    StatsLayout layout = config.stats;
    layout.t_begin = config.t_burnin;

    TrajectoryRecord rec;
    rec.index = index;
    rec.seed = derive_seed(config.master_seed, index);
    rec.stats = EnsembleStats(layout);
    Rng rng(rec.seed);
    PhaseState state = sample_initial(ic, model, rng);

    const WellLattice lattice = WellLattice::for_light_shift(model.derived.U0);
    CrossingDetector detector(lattice);
    rec.initial_well = lattice.index(state.x);

    const std::size_t per_sample = config.steps_per_sample();
    const auto total_steps = static_cast<std::uint64_t>(std::llround(config.t_total / config.dt));
    StepDiagnostics& diag = rec.stats.diagnostics;

    auto record_sample = [&](double t) -> bool {
        if (config.keep_samples) rec.samples.push_back({t, state});
        const double f = model.mode(state.x).f;
        rec.stats.add(t, state, f * f);
        if (auto event = detector.feed(t, state.x)) {
            rec.crossings.push_back(*event);
            if (config.stop_on_exit) return false;
        }
        return true;
    };

    try {
        record_sample(0.0);
        rec.t_end = 0.0;
        for (std::uint64_t k = 1; k <= total_steps; ++k) {
            state = step(state, model, config.dt, rng, diag, config.step_mode);
            const double t = static_cast<double>(k) * config.dt;
            rec.t_end = t;
            if (!state.finite()) {
                rec.aborted = AbortInfo{k, t, "non-finite state"};
                break;
            }
            if (k % per_sample == 0 && !record_sample(t)) break;
        }
    } catch (const SamplingTooCoarse& e) {
        rec.aborted = AbortInfo{diag.steps, rec.t_end, e.what()};
    }
    rec.stats.finish_trajectory();
    return rec;
}

std::vector<TrajectoryRecord> run_ensemble(const EnsembleConfig& config,
                                           const InitialCondition& ic, const Model& model) {
    config.validate();
    std::vector<TrajectoryRecord> records(config.n_trajectories);
    if (records.empty()) return records;

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        try {
            for (std::size_t i = next++; i < records.size(); i = next++) {
                records[i] = run_trajectory(i, config, ic, model);
            }
        } catch (...) {
            const std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = records.size();
        }
    };
    const unsigned n_threads =
        static_cast<unsigned>(std::min<std::size_t>(config.workers, records.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
    return records;
}

EnsembleStats pooled_stats(const std::vector<TrajectoryRecord>& records, const StatsLayout& layout) {
    EnsembleStats pooled(layout);
    for (const auto& rec : records) {
        if (!rec.aborted) pooled.merge(rec.stats);
    }
    return pooled;
}

}  // namespace cavsim
