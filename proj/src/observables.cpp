#include "cavsim/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/random/uniform_int_distribution.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace cavsim {

namespace {

constexpr double pi = std::numbers::pi;

double fold(double x) {
    const double r = x - pi * std::floor(x / pi);
    return r >= pi ? 0.0 : r;
}

}  // namespace

void Moments::merge(const Moments& other) {
    if (other.n == 0) return;
    if (n == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(other.n);
    const double total = na + nb;
    const double delta = other.mean - mean;
    mean += delta * nb / total;
    m2 += other.m2 + delta * delta * na * nb / total;
    n += other.n;
}

double Moments::standard_error() const {
    return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : INFINITY;
}

EnsembleStats::EnsembleStats(StatsLayout layout)
    : window_p2(layout.n_windows), position_counts(layout.position_bins, 0), layout_(layout) {
    if (layout.position_bins == 0) throw std::invalid_argument("position_bins must be > 0");
    if (!(layout.batch_duration > 0.0)) throw std::invalid_argument("batch_duration must be > 0");
}

void EnsembleStats::add(double t, const PhaseState& state, double f2_value) {
    if (t < layout_.t_begin) return;

    const double p2_value = state.p * state.p;
    const double intensity_value = state.field_intensity();
    p.add(state.p);
    p2.add(p2_value);
    intensity.add(intensity_value);
    alpha_r.add(state.alpha_r);
    alpha_i.add(state.alpha_i);
    f2.add(f2_value);
    potential.add((intensity_value - 0.5) * f2_value);

    const double folded = fold(state.x);
    auto bin = static_cast<std::size_t>(folded / pi * static_cast<double>(layout_.position_bins));
    position_counts[std::min(bin, layout_.position_bins - 1)] += 1;

    const long batch = static_cast<long>(std::floor((t - layout_.t_begin) / layout_.batch_duration));
    if (batch != open_batch_) {
        close_batch();
        open_batch_ = batch;
    }
    open_p2_ += p2_value;
    open_intensity_ += intensity_value;
    ++open_n_;
}

void EnsembleStats::close_batch() {
    if (open_n_ > 0) {
        const double n = static_cast<double>(open_n_);
        batch_p2.add(open_p2_ / n);
        batch_intensity.add(open_intensity_ / n);
        if (layout_.window_length > 0.0) {
            const double start = static_cast<double>(open_batch_) * layout_.batch_duration;
            const auto w = static_cast<std::size_t>(std::floor(start / layout_.window_length));
            if (w < window_p2.size()) window_p2[w].add(open_p2_ / n);
        }
    }
    open_p2_ = 0.0;
    open_intensity_ = 0.0;
    open_n_ = 0;
}

void EnsembleStats::finish_trajectory() {
    // The last block is usually short; dropping it keeps all batches equal.
    open_p2_ = 0.0;
    open_intensity_ = 0.0;
    open_n_ = 0;
    open_batch_ = -1;
}

void EnsembleStats::merge(const EnsembleStats& other) {
    if (other.position_counts.size() != position_counts.size() ||
        other.window_p2.size() != window_p2.size()) {
        throw std::invalid_argument("merging statistics with different layouts");
    }
    p.merge(other.p);
    p2.merge(other.p2);
    intensity.merge(other.intensity);
    alpha_r.merge(other.alpha_r);
    alpha_i.merge(other.alpha_i);
    f2.merge(other.f2);
    potential.merge(other.potential);
    batch_p2.merge(other.batch_p2);
    batch_intensity.merge(other.batch_intensity);
    for (std::size_t w = 0; w < window_p2.size(); ++w) window_p2[w].merge(other.window_p2[w]);
    for (std::size_t i = 0; i < position_counts.size(); ++i) {
        position_counts[i] += other.position_counts[i];
    }
    diagnostics.merge(other.diagnostics);
}

Estimate temperature(const EnsembleStats& stats, double epsilon_recoil) {
    if (stats.count() == 0) throw InsufficientData("temperature of empty statistics");
    return {epsilon_recoil * stats.p2.mean, epsilon_recoil * stats.batch_p2.standard_error()};
}

Estimate photon_number(const EnsembleStats& stats) {
    if (stats.count() == 0) throw InsufficientData("photon number of empty statistics");
    return {stats.intensity.mean - 0.5, stats.batch_intensity.standard_error()};
}

namespace {

PositionDistribution from_counts(const std::vector<std::uint64_t>& counts) {
    PositionDistribution dist;
    const std::size_t bins = counts.size();
    dist.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        dist.edges[i] = pi * static_cast<double>(i) / static_cast<double>(bins);
    }
    for (auto c : counts) dist.samples += c;
    dist.mass.resize(bins, 0.0);
    if (dist.samples == 0) return dist;
    for (std::size_t i = 0; i < bins; ++i) {
        dist.mass[i] = static_cast<double>(counts[i]) / static_cast<double>(dist.samples);
    }
    return dist;
}

}  // namespace

PositionDistribution position_distribution(const EnsembleStats& stats, std::uint64_t min_samples) {
    if (stats.count() < min_samples) {
        throw InsufficientData("position distribution needs " + std::to_string(min_samples) +
                               " samples, have " + std::to_string(stats.count()));
    }
    return from_counts(stats.position_counts);
}

PositionDistribution histogram_positions(const std::vector<double>& xs, std::size_t bins) {
    std::vector<std::uint64_t> counts(bins, 0);
    for (double x : xs) {
        auto bin = static_cast<std::size_t>(fold(x) / pi * static_cast<double>(bins));
        counts[std::min(bin, bins - 1)] += 1;
    }
    return from_counts(counts);
}

double fwhm(const PositionDistribution& dist) {
    const auto& m = dist.mass;
    const std::size_t bins = m.size();
    const auto peak = static_cast<std::size_t>(std::max_element(m.begin(), m.end()) - m.begin());
    const double half = 0.5 * m[peak];
    const double w = dist.width();

    // Walk outwards (periodically) until the mass drops below half.
    const auto n = static_cast<long>(bins);
    auto at = [&](long i) { return m[static_cast<std::size_t>(((i % n) + n) % n)]; };
    auto walk = [&](long dir) -> double {
        const auto start = static_cast<long>(peak);
        for (long k = 1; k < n; ++k) {
            const double cur = at(start + dir * k);
            if (cur < half) {
                const double prev = at(start + dir * (k - 1));
                return (static_cast<double>(k - 1) + (prev - half) / (prev - cur)) * w;
            }
        }
        return pi;
    };
    return std::min(pi, walk(1) + walk(-1));
}

ThermalReference::ThermalReference(double temperature, double U0, double n_mean) {
    if (!(temperature > 0.0)) throw std::invalid_argument("thermal reference needs T > 0");
    beta_depth_ = U0 * n_mean / temperature;
    norm_ = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [this](double x) { return weight(x); }, 0.0, pi, 20, 1e-12);
}

double ThermalReference::weight(double x) const {
    const double c = std::cos(x);
    // Shifted so the largest weight is 1 whichever sign the depth has.
    const double shift = beta_depth_ < 0.0 ? -beta_depth_ : 0.0;
    return std::exp(-beta_depth_ * c * c - shift);
}

double ThermalReference::density(double x) const { return weight(fold(x)) / norm_; }

double ThermalReference::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= pi) return 1.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
               [this](double y) { return weight(y); }, 0.0, x, 20, 1e-12) /
           norm_;
}

double ks_distance(const PositionDistribution& dist, const ThermalReference& ref) {
    double cumulative = 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < dist.mass.size(); ++i) {
        cumulative += dist.mass[i];
        worst = std::max(worst, std::abs(cumulative - ref.cdf(dist.edges[i + 1])));
    }
    return worst;
}

double ks_threshold(double alpha, double n_effective) {
    return std::sqrt(-0.5 * std::log(0.5 * alpha)) / std::sqrt(n_effective);
}

namespace {

// Empirical minus thermal CDF at the upper bin edges.
std::vector<double> cdf_gap(const EnsembleStats& stats, double epsilon_recoil, double U0) {
    const PositionDistribution d = position_distribution(stats, 1);
    const ThermalReference ref(temperature(stats, epsilon_recoil).value, U0,
                               photon_number(stats).value);
    std::vector<double> gap(d.mass.size());
    double cumulative = 0.0;
    for (std::size_t i = 0; i < d.mass.size(); ++i) {
        cumulative += d.mass[i];
        gap[i] = cumulative - ref.cdf(d.edges[i + 1]);
    }
    return gap;
}

}  // namespace

double ks_bootstrap_threshold(const std::vector<const EnsembleStats*>& trajectories,
                              double epsilon_recoil, double U0, double alpha,
                              std::size_t resamples, std::uint64_t seed) {
    if (trajectories.size() < 2) throw InsufficientData("bootstrap needs at least two trajectories");
    if (!(alpha > 0.0 && alpha < 1.0) || resamples == 0) {
        throw std::invalid_argument("bootstrap needs 0 < alpha < 1 and resamples > 0");
    }
    const StatsLayout layout = trajectories.front()->layout();
    EnsembleStats all(layout);
    for (const auto* t : trajectories) all.merge(*t);
    const std::vector<double> base = cdf_gap(all, epsilon_recoil, U0);

    Rng rng(seed);
    boost::random::uniform_int_distribution<std::size_t> pick(0, trajectories.size() - 1);
    std::vector<double> sup(resamples);
    for (auto& s : sup) {
        EnsembleStats boot(layout);
        for (std::size_t k = 0; k < trajectories.size(); ++k) boot.merge(*trajectories[pick(rng.engine())]);
        const std::vector<double> gap = cdf_gap(boot, epsilon_recoil, U0);
        s = 0.0;
        for (std::size_t i = 0; i < gap.size(); ++i) s = std::max(s, std::abs(gap[i] - base[i]));
    }
    std::sort(sup.begin(), sup.end());
    const auto idx = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(resamples))) - 1;
    return sup[std::min(idx, resamples - 1)];
}

}  // namespace cavsim
