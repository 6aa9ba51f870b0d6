// trapping.hpp - well residency (flight) times, escape times and exponential
// tail fits of their distributions.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavsim/ensemble.hpp"
#include "cavsim/lattice.hpp"

namespace cavsim {

class FitRefused : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Flight {
    long well = 0;
    double entry = 0.0;
    double exit = 0.0;
    bool left_censored = false;   // entry not observed (trajectory start)
    bool right_censored = false;  // exit not observed (trajectory end)

    double duration() const { return exit - entry; }
    bool complete() const { return !left_censored && !right_censored; }
};

// Contiguous well residencies covering [t_start, t_end].
struct FlightRecord {
    std::vector<Flight> flights;
    double t_start = 0.0;
    double t_end = 0.0;

    std::vector<double> complete_durations() const;
    double total_time() const { return t_end - t_start; }
};

// Builds residencies from a crossing stream.
FlightRecord assemble_flights(const std::vector<CrossingEvent>& crossings, long initial_well,
                              double t_start, double t_end);

// Uses the stored samples when present, otherwise the crossings recorded
// online by the engine (same detector). Throws SamplingTooCoarse.
FlightRecord detect_crossings(const TrajectoryRecord& record, const WellLattice& lattice);

// Histogram of residency times, P(tau) as probability density per unit tau.
struct TauHistogram {
    std::vector<double> edges;
    std::vector<double> counts;  // possibly weighted
    double total = 0.0;
    bool logarithmic = false;

    std::size_t bins() const { return counts.size(); }
    double center(std::size_t i) const;  // geometric for log bins
    double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
    double density(std::size_t i) const;
    // Poisson error of density(i) for unweighted counts.
    double density_error(std::size_t i) const;
};

TauHistogram log_histogram(const std::vector<double>& taus, double lo, double hi,
                           std::size_t bins_per_decade,
                           const std::vector<double>* weights = nullptr);
TauHistogram linear_histogram(const std::vector<double>& taus, double lo, double hi,
                              std::size_t bins);

struct TailFitOptions {
    double tau_min = 0.0;         // fit region tau > tau_min (1/gamma)
    std::size_t bins = 15;
    double span = 3.0;            // region width in units of the mean excess
    std::uint64_t min_count = 5;  // bins below this count are ignored
    std::size_t min_events = 50;
};

struct TailFit {
    double t_trap = 0.0;       // 1/gamma
    double t_trap_error = 0.0;
    double t_trap_mle = 0.0;   // mean excess over tau_min, for comparison
    double amplitude = 0.0;    // fitted density at tau_min
    double tau_min = 0.0;
    double r2 = 0.0;
    std::size_t n_tail = 0;
    std::size_t bins_used = 0;
    TauHistogram histogram;

    // Fitted P(tau) extrapolated to any tau.
    double density(double tau) const;
};

// Unweighted least squares of ln(density) against tau over linear bins
// spanning [tau_min, tau_min + span * mean_excess]. Throws FitRefused.
TailFit fit_exponential_tail(const std::vector<double>& taus, const TailFitOptions& options);

struct EscapeAnalysis {
    std::vector<double> escape_times;
    std::size_t censored = 0;  // never left within the run
    TauHistogram histogram;
    std::optional<TailFit> fit;
    std::string fit_error;
    // Count in [0, tau_min / 10) versus the fit extrapolated over that bin.
    double onset_observed = 0.0;
    double onset_extrapolated = 0.0;
};

struct HistogramOptions {
    double lo = 0.1;  // 1/gamma
    double hi = 1e6;
    std::size_t bins_per_decade = 20;
};

// First exit time of every trajectory from the well it started in.
EscapeAnalysis escape_time_distribution(const std::vector<TrajectoryRecord>& records,
                                        const TailFitOptions& fit_options,
                                        const HistogramOptions& hist_options = {});

struct FlightAnalysis {
    FlightRecord flights;
    std::vector<double> durations;
    TauHistogram histogram;
    std::optional<TailFit> fit;
    std::string fit_error;
    double cutoff = 0.0;
    bool cutoff_from_minimum = false;
    double first_maximum = 0.0;
    double second_maximum = 0.0;
    double untrapped_fraction = 0.0;  // time in flights shorter than the cutoff
    double trapped_fraction = 0.0;
};

struct FlightOptions {
    TailFitOptions fit;
    HistogramOptions histogram;
    std::optional<double> cutoff;  // overrides the inter-maxima minimum
    double peak_significance = 3.0;
};

struct Bimodality {
    std::size_t first = 0;
    std::size_t dip = 0;
    std::size_t second = 0;
};

// Highest bin, then the later bin whose rise above the lowest bin in between
// is largest and exceeds `significance` combined Poisson errors.
std::optional<Bimodality> find_bimodality(const TauHistogram& hist, double significance);

// Throws FitRefused when no cutoff can be determined.
FlightAnalysis flight_time_distribution(const FlightRecord& flights, const FlightOptions& options);

// Fraction of the Boltzmann phase-space density exp(-(eps p^2/2 + V)/T),
// V = depth cos^2(x), with energy above the barrier, by 2D quadrature.
double above_barrier_fraction(double temperature, double depth);

struct BaselineOptions {
    std::size_t atoms = 4000;
    double dt = 5e-3;
    double max_time = 1e5;  // per atom, 1/gamma
    std::uint64_t seed = 1;
    HistogramOptions histogram;
};

struct BaselineAnalysis {
    std::vector<double> flight_times;  // one per above-barrier atom
    std::vector<double> weights;       // 1/tau: flights per unit observation time
    TauHistogram histogram;
    double above_barrier_fraction = 0.0;
    double sampled_fraction = 0.0;     // Monte Carlo estimate from the atoms
    double shortest = 0.0;
};

// Thermal atoms moving without noise in depth cos^2(x) (U0 > 0 geometry).
BaselineAnalysis conservative_baseline(double temperature, double depth, double epsilon_recoil,
                                       const BaselineOptions& options);

}  // namespace cavsim
