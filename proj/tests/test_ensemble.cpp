#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "cavsim/ensemble.hpp"

using namespace cavsim;

namespace {

Model trap_model(double eta_over_kappa = 3.0) {
    SystemParams p;
    p.kappa = 0.5;
    p.eta = eta_over_kappa * p.kappa;
    return Model::from(p);
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

}  // namespace

TEST_CASE("harmonic ground state geometry") {
    const Model m = trap_model();
    const WellGeometry g = well_geometry(m);
    CHECK(g.photons == doctest::Approx(9.0));
    CHECK(g.minimum == doctest::Approx(std::numbers::pi / 2));
    CHECK(g.frequency == doctest::Approx(std::sqrt(2 * 2.514e-3 * (125.0 / 401.0) * 9.0)).epsilon(1e-3));
    CHECK(g.frequency == doctest::Approx(0.1188).epsilon(1e-3));
    CHECK(g.sigma_x * g.sigma_p == doctest::Approx(0.5));

    SystemParams p = m.params;
    p.delta_A = -20.0;
    p.delta_C = derive(p).U0;
    const WellGeometry red = well_geometry(Model::from(p));
    CHECK(red.minimum == doctest::Approx(std::numbers::pi));
    CHECK(red.sigma_x * red.sigma_p == doctest::Approx(0.5));
}

TEST_CASE("non-confining parameters are rejected") {
    SystemParams p;
    p.eta = 0.0;
    const Model m = Model::from(p);
    CHECK_THROWS_AS(well_geometry(m), ConfigError);
    Rng rng(1);
    CHECK_THROWS_AS(sample_initial(InitialCondition{}, m, rng), ConfigError);
}

TEST_CASE("harmonic ground state sampling moments") {
    const Model m = trap_model();
    const WellGeometry g = well_geometry(m);
    Rng rng(4);
    Moments x, p;
    InitialCondition ic;
    ic.motion = HarmonicGroundState{2};
    for (int k = 0; k < 40000; ++k) {
        const PhaseState s = sample_initial(ic, m, rng);
        x.add(s.x);
        p.add(s.p);
    }
    CHECK(x.mean == doctest::Approx(g.lattice.center(2)).epsilon(1e-3));
    CHECK(std::sqrt(x.variance()) == doctest::Approx(g.sigma_x).epsilon(0.02));
    CHECK(std::sqrt(p.variance()) == doctest::Approx(g.sigma_p).epsilon(0.02));
}

TEST_CASE("point initial condition is exact") {
    const Model m = trap_model();
    Rng rng(1);
    InitialCondition ic;
    ic.motion = PointState{std::numbers::pi / 2, 0.0};
    const PhaseState s = sample_initial(ic, m, rng);
    CHECK(s.x == std::numbers::pi / 2);
    CHECK(s.p == 0.0);
    ic.field = FieldStart::empty_cavity;
    const PhaseState e = sample_initial(ic, m, rng);
    CHECK(e.alpha_r == doctest::Approx(-3.0));
    CHECK(e.alpha_i == doctest::Approx(0.0));
}

TEST_CASE("well-confined thermal states stay below the barrier") {
    const Model m = trap_model();
    const WellGeometry g = well_geometry(m);
    Rng rng(9);
    InitialCondition ic;
    ic.motion = ThermalState{1.0, true, 0};
    for (int k = 0; k < 2000; ++k) {
        const PhaseState s = sample_initial(ic, m, rng);
        CHECK(g.lattice.index(s.x) == 0);
        const double f = std::cos(s.x);
        CHECK(0.5 * m.params.epsilon_recoil * s.p * s.p + m.derived.U0 * g.photons * f * f < g.depth);
    }
}

TEST_CASE("empty ensemble") {
    EnsembleConfig cfg;
    cfg.n_trajectories = 0;
    CHECK(run_ensemble(cfg, {}, trap_model()).empty());
}

TEST_CASE("config validation") {
    EnsembleConfig cfg;
    cfg.t_burnin = cfg.t_total;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.t_burnin = 0.0;
    cfg.sample_interval = cfg.dt / 2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("records are reproducible and independent of the worker count") {
    const Model m = trap_model(2.0);
    EnsembleConfig cfg;
    cfg.n_trajectories = 7;
    cfg.t_total = 200.0;
    cfg.dt = 5e-3;
    cfg.sample_interval = 0.5;
    cfg.keep_samples = true;
    cfg.master_seed = 42;
    const auto a = run_ensemble(cfg, {}, m);
    cfg.workers = 3;
    const auto b = run_ensemble(cfg, {}, m);
    REQUIRE(a.size() == b.size());
    std::set<std::uint64_t> seeds;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].seed == derive_seed(42, i));
        seeds.insert(a[i].seed);
        REQUIRE(a[i].samples.size() == b[i].samples.size());
        for (std::size_t k = 0; k < a[i].samples.size(); ++k) {
            CHECK(a[i].samples[k].state == b[i].samples[k].state);
            if (k) CHECK(a[i].samples[k].t > a[i].samples[k - 1].t);
        }
        CHECK(a[i].stats.p2.mean == b[i].stats.p2.mean);
        CHECK(a[i].diagnostics().psd_violations == b[i].diagnostics().psd_violations);
    }
    CHECK(seeds.size() == a.size());
}

TEST_CASE("different master seeds give statistically independent ensembles") {
    const Model m = trap_model();
    EnsembleConfig cfg;
    cfg.n_trajectories = 300;
    cfg.t_total = 20.0;
    cfg.dt = 5e-3;
    cfg.sample_interval = 20.0;
    cfg.keep_samples = true;
    auto final_p = [&](std::uint64_t seed) {
        cfg.master_seed = seed;
        std::vector<double> ps;
        for (const auto& r : run_ensemble(cfg, {}, m)) ps.push_back(r.samples.back().state.p);
        return ps;
    };
    const auto a = final_p(1), b = final_p(2);
    CHECK(a != b);
    const double n = static_cast<double>(a.size());
    // 0.1% two-sample critical value.
    CHECK(ks_two_sample(a, b) < 1.95 * std::sqrt(2.0 / n));
}

TEST_CASE("crossings lie on boundaries within one sample of travel") {
    const Model m = trap_model(1.5);
    EnsembleConfig cfg;
    cfg.n_trajectories = 2;
    cfg.t_total = 3000.0;
    cfg.dt = 5e-3;
    cfg.sample_interval = 0.5;
    cfg.keep_samples = true;
    const auto recs = run_ensemble(cfg, {}, m);
    const WellLattice lattice = WellLattice::for_light_shift(m.derived.U0);
    std::size_t total = 0;
    for (const auto& r : recs) {
        for (const auto& c : r.crossings) {
            ++total;
            CHECK(std::abs(c.to_well - c.from_well) == 1);
            const auto it = std::lower_bound(r.samples.begin(), r.samples.end(), c.t,
                                             [](const Sample& s, double t) { return s.t < t; });
            REQUIRE(it != r.samples.end());
            REQUIRE(it != r.samples.begin());
            CHECK(lattice.index(std::prev(it)->state.x) == c.from_well);
            CHECK(lattice.index(it->state.x) == c.to_well);
        }
    }
    CHECK(total > 0);
}

TEST_CASE("stop on exit ends the trajectory at the first crossing") {
    const Model m = trap_model(1.5);
    EnsembleConfig cfg;
    cfg.n_trajectories = 4;
    cfg.t_total = 5000.0;
    cfg.dt = 5e-3;
    cfg.sample_interval = 0.5;
    cfg.stop_on_exit = true;
    for (const auto& r : run_ensemble(cfg, {}, m)) {
        CHECK(r.crossings.size() <= 1);
        if (!r.crossings.empty()) CHECK(r.t_end < cfg.t_total);
    }
}
