// observables.hpp - steady-state statistics over sampled trajectories.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cavsim/dynamics.hpp"

namespace cavsim {

class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Count, mean and centred second moment, mergeable in any order.
struct Moments {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double v) {
        ++n;
        const double delta = v - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (v - mean);
    }
    void merge(const Moments& other);
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    // Standard error of the mean, treating the entries as independent.
    double standard_error() const;
};

struct Estimate {
    double value = 0.0;
    double error = 0.0;
};

struct StatsLayout {
    double t_begin = 0.0;          // samples before this time are ignored
    double batch_duration = 50.0;  // batch-means block length (1/gamma)
    double window_length = 0.0;    // 0: no stationarity windows
    std::size_t n_windows = 0;
    std::size_t position_bins = 64;
};

// Sample moments of one or many trajectories. Samples of a trajectory are
// time-correlated, so error bars come from means over consecutive blocks of
// `batch_duration`; the unfinished block of each trajectory is dropped by
// finish_trajectory().
class EnsembleStats {
public:
    explicit EnsembleStats(StatsLayout layout = {});

    void add(double t, const PhaseState& state, double f2);
    void finish_trajectory();
    // Both operands must have finished their trajectories.
    void merge(const EnsembleStats& other);

    const StatsLayout& layout() const { return layout_; }
    std::uint64_t count() const { return p.n; }

    Moments p;
    Moments p2;
    Moments intensity;   // |alpha|^2
    Moments alpha_r;
    Moments alpha_i;
    Moments f2;
    Moments potential;   // (|alpha|^2 - 1/2) f^2, in units of U0
    Moments batch_p2;
    Moments batch_intensity;
    std::vector<Moments> window_p2;  // batch means of p^2 per window
    std::vector<std::uint64_t> position_counts;  // x folded onto [0, pi)
    StepDiagnostics diagnostics;

private:
    void close_batch();

    StatsLayout layout_;
    long open_batch_ = -1;
    double open_p2_ = 0.0;
    double open_intensity_ = 0.0;
    std::uint64_t open_n_ = 0;
};

// k_B T / (hbar gamma) = eps <p^2>.
Estimate temperature(const EnsembleStats& stats, double epsilon_recoil);

// <n> = <|alpha|^2> - 1/2 (Wigner moments are symmetrically ordered).
Estimate photon_number(const EnsembleStats& stats);

struct PositionDistribution {
    std::vector<double> edges;  // bins.size() + 1 edges on [0, pi]
    std::vector<double> mass;   // sums to 1
    std::uint64_t samples = 0;

    double width() const { return edges[1] - edges[0]; }
    double density(std::size_t i) const { return mass[i] / width(); }
};

PositionDistribution position_distribution(const EnsembleStats& stats,
                                           std::uint64_t min_samples = 10000);
PositionDistribution histogram_positions(const std::vector<double>& xs, std::size_t bins);

// Full width at half maximum of the distribution around its highest bin,
// found by linear interpolation; pi when it never drops below half.
double fwhm(const PositionDistribution& dist);

// P(x) ~ exp(-U0 n cos^2(x) / T) normalized on [0, pi).
class ThermalReference {
public:
    ThermalReference(double temperature, double U0, double n_mean);

    double density(double x) const;
    double cdf(double x) const;  // x in [0, pi]
    double norm() const { return norm_; }

private:
    double weight(double x) const;

    double beta_depth_;  // U0 n / T
    double norm_;
};

inline ThermalReference thermal_reference(double temperature, double U0, double n_mean) {
    return ThermalReference(temperature, U0, n_mean);
}

// Largest gap between the binned empirical CDF and the reference CDF,
// evaluated at the bin edges.
double ks_distance(const PositionDistribution& dist, const ThermalReference& ref);

// Asymptotic Kolmogorov critical value sqrt(-ln(alpha/2)/2) / sqrt(n).
double ks_threshold(double alpha, double n_effective);

// Sampling null for ks_distance when samples within a trajectory are
// correlated: trajectories are resampled with replacement, T and <n> are
// re-estimated per resample, and the (1 - alpha) quantile of
// sup |(F* - G*) - (F - G)| is returned (F empirical CDF, G thermal CDF).
double ks_bootstrap_threshold(const std::vector<const EnsembleStats*>& trajectories,
                              double epsilon_recoil, double U0, double alpha,
                              std::size_t resamples, std::uint64_t seed);

}  // namespace cavsim
