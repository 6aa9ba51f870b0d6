#include "cavsim/trapping.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include "cavsim/random.hpp"

namespace cavsim {

namespace {
constexpr double pi = std::numbers::pi;
}

std::vector<double> FlightRecord::complete_durations() const {
    std::vector<double> out;
    out.reserve(flights.size());
    for (const auto& f : flights) {
        if (f.complete()) out.push_back(f.duration());
    }
    return out;
}

FlightRecord assemble_flights(const std::vector<CrossingEvent>& crossings, long initial_well,
                              double t_start, double t_end) {
    FlightRecord rec;
    rec.t_start = t_start;
    rec.t_end = t_end;
    rec.flights.reserve(crossings.size() + 1);
    long well = initial_well;
    double entry = t_start;
    bool first = true;
    for (const auto& c : crossings) {
        rec.flights.push_back({well, entry, c.t, first, false});
        well = c.to_well;
        entry = c.t;
        first = false;
    }
    rec.flights.push_back({well, entry, t_end, first, true});
    return rec;
}

FlightRecord detect_crossings(const TrajectoryRecord& record, const WellLattice& lattice) {
    if (record.samples.empty()) {
        return assemble_flights(record.crossings, record.initial_well, 0.0, record.t_end);
    }
    CrossingDetector detector(lattice);
    std::vector<CrossingEvent> crossings;
    for (const auto& s : record.samples) {
        if (auto event = detector.feed(s.t, s.state.x)) crossings.push_back(*event);
    }
    return assemble_flights(crossings, lattice.index(record.samples.front().state.x),
                            record.samples.front().t, record.samples.back().t);
}

double TauHistogram::center(std::size_t i) const {
    const double a = edges[i], b = edges[i + 1];
    return logarithmic ? std::sqrt(a * b) : 0.5 * (a + b);
}

double TauHistogram::density(std::size_t i) const {
    return total > 0.0 ? counts[i] / (total * width(i)) : 0.0;
}

double TauHistogram::density_error(std::size_t i) const {
    return total > 0.0 ? std::sqrt(counts[i]) / (total * width(i)) : 0.0;
}

namespace {

TauHistogram fill(std::vector<double> edges, bool logarithmic, const std::vector<double>& taus,
                  const std::vector<double>* weights) {
    TauHistogram h;
    h.logarithmic = logarithmic;
    h.edges = std::move(edges);
    h.counts.assign(h.edges.size() - 1, 0.0);
    for (std::size_t k = 0; k < taus.size(); ++k) {
        const double w = weights ? (*weights)[k] : 1.0;
        h.total += w;
        const auto it = std::upper_bound(h.edges.begin(), h.edges.end(), taus[k]);
        if (it == h.edges.begin() || it == h.edges.end()) continue;
        h.counts[static_cast<std::size_t>(it - h.edges.begin()) - 1] += w;
    }
    return h;
}

}  // namespace

TauHistogram log_histogram(const std::vector<double>& taus, double lo, double hi,
                           std::size_t bins_per_decade, const std::vector<double>* weights) {
    if (!(lo > 0.0 && hi > lo) || bins_per_decade == 0) {
        throw std::invalid_argument("log histogram needs 0 < lo < hi");
    }
    const auto n = static_cast<std::size_t>(
        std::ceil(std::log10(hi / lo) * static_cast<double>(bins_per_decade)));
    std::vector<double> edges(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        edges[i] = lo * std::pow(10.0, static_cast<double>(i) / static_cast<double>(bins_per_decade));
    }
    return fill(std::move(edges), true, taus, weights);
}

TauHistogram linear_histogram(const std::vector<double>& taus, double lo, double hi,
                              std::size_t bins) {
    if (!(hi > lo) || bins == 0) throw std::invalid_argument("linear histogram needs lo < hi");
    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    }
    edges.back() = std::nextafter(hi, INFINITY);
    return fill(std::move(edges), false, taus, nullptr);
}

double TailFit::density(double tau) const {
    return amplitude * std::exp(-(tau - tau_min) / t_trap);
}

TailFit fit_exponential_tail(const std::vector<double>& taus, const TailFitOptions& options) {
    std::vector<double> tail;
    for (double t : taus) {
        if (t > options.tau_min) tail.push_back(t);
    }
    if (tail.size() < options.min_events) {
        throw FitRefused("only " + std::to_string(tail.size()) + " events beyond tau_min (need " +
                         std::to_string(options.min_events) + ")");
    }
    double excess = 0.0;
    for (double t : tail) excess += t - options.tau_min;
    excess /= static_cast<double>(tail.size());

    TailFit fit;
    fit.tau_min = options.tau_min;
    fit.n_tail = tail.size();
    fit.t_trap_mle = excess;
    TauHistogram hist = linear_histogram(tail, options.tau_min,
                                         options.tau_min + options.span * excess, options.bins);
    // Densities relative to the whole sample, so the fit is P(tau) itself.
    hist.total = static_cast<double>(taus.size());

    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < hist.bins(); ++i) {
        if (hist.counts[i] < static_cast<double>(options.min_count)) continue;
        xs.push_back(0.5 * (hist.edges[i] + hist.edges[i + 1]));
        ys.push_back(std::log(hist.density(i)));
    }
    fit.histogram = std::move(hist);
    fit.bins_used = xs.size();
    if (xs.size() < 3) throw FitRefused("fewer than 3 tail bins with enough counts");

    const double m = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / m;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    if (!(slope < 0.0)) throw FitRefused("tail is not decaying");

    const double ss_res = std::max(0.0, syy - slope * sxy);
    fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    const double slope_error = xs.size() > 2 ? std::sqrt(ss_res / (m - 2.0) / sxx) : 0.0;
    fit.t_trap = -1.0 / slope;
    fit.t_trap_error = slope_error / (slope * slope);
    fit.amplitude = std::exp(intercept + slope * options.tau_min);
    return fit;
}

EscapeAnalysis escape_time_distribution(const std::vector<TrajectoryRecord>& records,
                                        const TailFitOptions& fit_options,
                                        const HistogramOptions& hist_options) {
    EscapeAnalysis out;
    for (const auto& rec : records) {
        if (rec.aborted) continue;
        if (rec.crossings.empty()) {
            ++out.censored;
        } else {
            out.escape_times.push_back(rec.crossings.front().t);
        }
    }
    out.histogram = log_histogram(out.escape_times, hist_options.lo, hist_options.hi,
                                  hist_options.bins_per_decade);
    try {
        out.fit = fit_exponential_tail(out.escape_times, fit_options);
    } catch (const FitRefused& e) {
        out.fit_error = e.what();
        return out;
    }
    const double edge = fit_options.tau_min / 10.0;
    for (double t : out.escape_times) {
        if (t < edge) out.onset_observed += 1.0;
    }
    // Integral of the fitted density over [0, edge), times the sample size.
    const auto& f = *out.fit;
    out.onset_extrapolated = static_cast<double>(out.escape_times.size()) * f.amplitude *
                             std::exp(f.tau_min / f.t_trap) * f.t_trap *
                             (1.0 - std::exp(-edge / f.t_trap));
    return out;
}

std::optional<Bimodality> find_bimodality(const TauHistogram& hist, double significance) {
    const std::size_t n = hist.bins();
    if (n < 3) return std::nullopt;
    std::vector<double> d(n), e(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = hist.density(i);
        // An empty bin still carries the uncertainty of one count.
        e[i] = std::max(hist.density_error(i), hist.total > 0.0 ? 1.0 / (hist.total * hist.width(i)) : 0.0);
    }
    const auto first = static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());

    std::optional<Bimodality> best;
    double best_rise = 0.0;
    std::size_t dip = first;
    for (std::size_t j = first + 1; j < n; ++j) {
        if (d[j - 1] < d[dip]) dip = j - 1;
        const double rise = d[j] - d[dip];
        if (dip == first || rise <= 0.0) continue;
        const double noise = std::hypot(e[j], e[dip]);
        if (rise > significance * noise && rise > best_rise) {
            best_rise = rise;
            best = Bimodality{first, dip, j};
        }
    }
    return best;
}

FlightAnalysis flight_time_distribution(const FlightRecord& flights, const FlightOptions& options) {
    FlightAnalysis out;
    out.flights = flights;
    out.durations = flights.complete_durations();
    out.histogram = log_histogram(out.durations, options.histogram.lo, options.histogram.hi,
                                  options.histogram.bins_per_decade);
    try {
        out.fit = fit_exponential_tail(out.durations, options.fit);
    } catch (const FitRefused& e) {
        out.fit_error = e.what();
    }

    if (auto modes = find_bimodality(out.histogram, options.peak_significance)) {
        out.first_maximum = out.histogram.center(modes->first);
        out.second_maximum = out.histogram.center(modes->second);
        out.cutoff = out.histogram.center(modes->dip);
        out.cutoff_from_minimum = true;
    }
    if (options.cutoff) {
        out.cutoff = *options.cutoff;
        out.cutoff_from_minimum = false;
    } else if (!out.cutoff_from_minimum) {
        throw FitRefused("flight-time distribution has no minimum between two maxima; "
                         "supply the cutoff explicitly");
    }

    double short_time = 0.0;
    for (double t : out.durations) {
        if (t < out.cutoff) short_time += t;
    }
    out.untrapped_fraction = short_time / flights.total_time();
    out.trapped_fraction = 1.0 - out.untrapped_fraction;
    return out;
}

double above_barrier_fraction(double temperature, double depth) {
    if (!(temperature > 0.0)) throw std::invalid_argument("above_barrier_fraction needs T > 0");
    if (depth <= 0.0) return 1.0;
    // With u = p sqrt(eps / 2T) the weight is exp(-u^2 - b cos^2 x), b = depth / T,
    // and the atom is unbound when u^2 > b sin^2 x.
    const double b = depth / temperature;
    boost::math::quadrature::exp_sinh<double> half_line;
    boost::math::quadrature::sinh_sinh<double> full_line;
    auto gauss = [](double u) { return std::exp(-u * u); };

    const double line = full_line.integrate(gauss);
    auto inner_unbound = [&](double x) {
        const double u0 = std::sqrt(b) * std::abs(std::sin(x));
        const double tail = half_line.integrate([&](double v) { return gauss(u0 + v); });
        return 2.0 * tail * std::exp(-b * std::cos(x) * std::cos(x));
    };
    auto inner_all = [&](double x) { return line * std::exp(-b * std::cos(x) * std::cos(x)); };

    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double unbound = GK::integrate(inner_unbound, 0.0, pi, 15, 1e-10);
    const double all = GK::integrate(inner_all, 0.0, pi, 15, 1e-10);
    return unbound / all;
}

BaselineAnalysis conservative_baseline(double temperature, double depth, double epsilon_recoil,
                                       const BaselineOptions& options) {
    if (!(temperature > 0.0)) throw std::invalid_argument("conservative baseline needs T > 0");
    BaselineAnalysis out;
    out.above_barrier_fraction = above_barrier_fraction(temperature, depth);

    Rng rng(derive_seed(options.seed, 0));
    const double sigma_p = std::sqrt(temperature / epsilon_recoil);
    const double dt = options.dt;
    std::size_t above = 0;
    out.shortest = INFINITY;

    for (std::size_t a = 0; a < options.atoms; ++a) {
        double x = 0.0;
        for (;;) {
            x = pi * rng.uniform();
            const double c = std::cos(x);
            if (rng.uniform() < std::exp(-depth * c * c / temperature)) break;
        }
        double p = sigma_p * rng.normal();
        const double c = std::cos(x);
        if (0.5 * epsilon_recoil * p * p + depth * c * c <= depth) continue;
        ++above;

        // Noise-free motion until the second boundary crossing.
        long well = static_cast<long>(std::floor(x / pi));
        double t = 0.0, entry = -1.0;
        while (t < options.max_time) {
            const double x_old = x;
            x += epsilon_recoil * p * dt;
            p += depth * std::sin(2.0 * x) * dt;
            t += dt;
            const long w = static_cast<long>(std::floor(x / pi));
            if (w == well) continue;
            const double boundary = pi * static_cast<double>(std::max(w, well));
            const double tc = t - dt + (boundary - x_old) / (x - x_old) * dt;
            well = w;
            if (entry < 0.0) {
                entry = tc;
                continue;
            }
            const double tau = tc - entry;
            out.flight_times.push_back(tau);
            out.weights.push_back(1.0 / tau);
            out.shortest = std::min(out.shortest, tau);
            break;
        }
    }
    out.sampled_fraction =
        options.atoms ? static_cast<double>(above) / static_cast<double>(options.atoms) : 0.0;
    out.histogram = log_histogram(out.flight_times, options.histogram.lo, options.histogram.hi,
                                  options.histogram.bins_per_decade, &out.weights);
    return out;
}

}  // namespace cavsim
