#include "cavsim/io.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cavsim {

namespace fs = std::filesystem;

CsvWriter::CsvWriter(const fs::path& path, const RunConfig& config,
                     const std::vector<std::string>& columns)
    : out_(path), columns_(columns.size()) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << std::setprecision(std::numeric_limits<double>::max_digits10);
    out_ << "# cavsim " << to_string(config.kind) << "\n";
    for (const auto& [key, value] : config.entries()) out_ << "# " << key << " = " << value << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
    out_.flush();
}

CsvWriter& CsvWriter::cell(double v) {
    if (pending_++) out_ << ',';
    if (std::isfinite(v)) {
        out_ << v;
    } else {
        out_ << "nan";
    }
    return *this;
}

CsvWriter& CsvWriter::cell(std::size_t v) {
    if (pending_++) out_ << ',';
    out_ << v;
    return *this;
}

CsvWriter& CsvWriter::cell(const std::string& v) {
    if (pending_++) out_ << ',';
    if (v.find_first_of(",\"\n") == std::string::npos) {
        out_ << v;
        return *this;
    }
    out_ << '"';
    for (char c : v) {
        if (c == '"') out_ << '"';
        out_ << (c == '\n' ? ' ' : c);
    }
    out_ << '"';
    return *this;
}

void CsvWriter::end_row() {
    if (pending_ != columns_) {
        throw std::logic_error("CSV row has " + std::to_string(pending_) + " cells, expected " +
                               std::to_string(columns_));
    }
    out_ << '\n';
    out_.flush();
    pending_ = 0;
}

namespace schema {
const std::vector<std::string> steady_summary = {
    "T", "T_err", "T_uK", "n_mean", "n_err", "U0", "potential", "ratio",
    "psd_violation_rate", "trajectories", "aborted", "ks_distance", "ks_threshold"};
const std::vector<std::string> positions = {"x", "density", "thermal_density"};
const std::vector<std::string> sweep_kappa = {
    "kappa", "T", "T_err", "n_mean", "T_over_potential", "psd_violation_rate", "error"};
const std::vector<std::string> sweep_eta = {
    "eta", "T", "T_err", "n_mean", "ratio", "psd_violation_rate", "error"};
const std::vector<std::string> trap_sweep = {
    "value", "T_trap_us", "T_trap_err_us", "T_trap_mle_us", "n_tail", "T", "n_mean", "error"};
const std::vector<std::string> tau_histogram = {
    "tau_lo_us", "tau_hi_us", "tau_us", "count", "density_per_us"};
const std::vector<std::string> escape_summary = {
    "T_trap_us", "T_trap_err_us", "T_trap_mle_us", "fit_lo_us", "fit_hi_us", "r2", "n_tail",
    "bins_used", "trajectories", "censored", "aborted", "onset_observed", "onset_extrapolated",
    "psd_violation_rate", "fit_error"};
const std::vector<std::string> flight_summary = {
    "T_trap_us", "T_trap_err_us", "T_trap_mle_us", "fit_lo_us", "fit_hi_us", "n_tail",
    "first_max_us", "second_max_us", "cutoff_us", "cutoff_from_minimum", "untrapped_fraction",
    "trapped_fraction", "T", "T_err", "n_mean", "depth", "above_barrier_fraction", "flights",
    "psd_violation_rate", "error"};
const std::vector<std::string> baseline_summary = {
    "T", "depth", "above_barrier_fraction", "sampled_fraction", "shortest_us", "atoms",
    "measured"};
}  // namespace schema

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void write_svg_plot(const fs::path& path, const PlotSpec& spec, const std::vector<Series>& series) {
    constexpr double width = 640, height = 420, left = 70, right = 20, top = 40, bottom = 55;
    auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0) && (!spec.log_y || y > 0);
    };

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    }
    if (!(x1 >= x0)) x0 = 0, x1 = 1;
    if (!(y1 >= y0)) y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * (width - left - right); };
    auto py = [&](double v) { return height - bottom - (ty(v) - y0) / (y1 - y0) * (height - top - bottom); };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(6);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << xml_escape(spec.title) << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right
        << "\" height=\"" << height - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
    auto fmt_tick = [](double v, bool log) {
        std::ostringstream os;
        os << std::setprecision(3) << (log ? std::pow(10.0, v) : v);
        return os.str();
    };
    for (int k = 0; k <= 4; ++k) {
        const double fx = x0 + (x1 - x0) * k / 4.0;
        const double fy = y0 + (y1 - y0) * k / 4.0;
        const double sx = left + (width - left - right) * k / 4.0;
        const double sy = height - bottom - (height - top - bottom) * k / 4.0;
        out << "<text x=\"" << sx << "\" y=\"" << height - bottom + 16
            << "\" text-anchor=\"middle\">" << fmt_tick(fx, spec.log_x) << "</text>\n";
        out << "<text x=\"" << left - 6 << "\" y=\"" << sy + 4 << "\" text-anchor=\"end\">"
            << fmt_tick(fy, spec.log_y) << "</text>\n";
    }
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
        << xml_escape(spec.x_label) << "</text>\n";
    out << "<text transform=\"translate(16," << height / 2
        << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(spec.y_label) << "</text>\n";

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = colors[k % 5];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (usable(s.x[i], s.y[i])) out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        }
        out << "\"/>\n";
        out << "<text x=\"" << width - right - 8 << "\" y=\"" << top + 16 + 16 * k
            << "\" text-anchor=\"end\" fill=\"" << color << "\">" << xml_escape(s.label)
            << "</text>\n";
    }
    out << "</svg>\n";
}

namespace {

struct Output {
    const RunConfig& config;
    fs::path dir;
    std::vector<fs::path> written;

    fs::path file(const std::string& name) {
        written.push_back(dir / name);
        return written.back();
    }
};

void write_positions(Output& o, const std::string& name, const SteadyState& s) {
    CsvWriter csv(o.file(name + ".csv"), o.config, schema::positions);
    const auto& d = s.positions;
    Series sim{"simulated", {}, {}}, ref{"thermal", {}, {}};
    const bool have_ref = s.temperature.value > 0.0;
    for (std::size_t i = 0; i < d.mass.size(); ++i) {
        const double x = 0.5 * (d.edges[i] + d.edges[i + 1]);
        double thermal = std::numeric_limits<double>::quiet_NaN();
        if (have_ref) {
            const ThermalReference r(s.temperature.value, s.derived.U0, s.photons.value);
            thermal = (r.cdf(d.edges[i + 1]) - r.cdf(d.edges[i])) / d.width();
        }
        csv.cell(x).cell(d.density(i)).cell(thermal).end_row();
        sim.x.push_back(x);
        sim.y.push_back(d.density(i));
        ref.x.push_back(x);
        ref.y.push_back(thermal);
    }
    if (o.config.plots) {
        write_svg_plot(o.file(name + ".svg"), {"position distribution", "k x (folded)", "P(x)"},
                       {sim, ref});
    }
}

void write_tau_histogram(Output& o, const std::string& name, const TauHistogram& h,
                         const SystemParams& p, const std::optional<TailFit>& fit) {
    CsvWriter csv(o.file(name + ".csv"), o.config, schema::tau_histogram);
    const double unit = p.time_unit_us();
    Series data{"P(tau)", {}, {}}, fitted{"tail fit", {}, {}};
    for (std::size_t i = 0; i < h.bins(); ++i) {
        const double density_us = h.density(i) / unit;
        csv.cell(h.edges[i] * unit)
            .cell(h.edges[i + 1] * unit)
            .cell(h.center(i) * unit)
            .cell(h.counts[i])
            .cell(density_us)
            .end_row();
        if (h.counts[i] > 0) {
            data.x.push_back(h.center(i) * unit);
            data.y.push_back(density_us);
            if (fit && h.center(i) >= fit->tau_min) {
                fitted.x.push_back(h.center(i) * unit);
                fitted.y.push_back(fit->density(h.center(i)) / unit);
            }
        }
    }
    if (o.config.plots) {
        write_svg_plot(o.file(name + ".svg"), {name, "tau (us)", "P(tau) (1/us)", true, true},
                       {data, fitted});
    }
}

void write_steady(Output& o, const SteadyState& s) {
    CsvWriter csv(o.file("summary.csv"), o.config, schema::steady_summary);
    csv.cell(s.temperature.value)
        .cell(s.temperature.error)
        .cell(s.temperature.value * s.params.temperature_unit_uK())
        .cell(s.photons.value)
        .cell(s.photons.error)
        .cell(s.derived.U0)
        .cell(s.potential)
        .cell(s.ratio)
        .cell(s.psd_violation_rate)
        .cell(s.trajectories)
        .cell(s.aborted)
        .cell(s.ks_distance)
        .cell(s.ks_threshold)
        .end_row();
    write_positions(o, "positions", s);
}

double fit_hi(const TailFit& f) { return f.histogram.edges.empty() ? f.tau_min : f.histogram.edges.back(); }

void write_sweep(Output& o) {
    const auto& cfg = o.config;
    const bool kappa = cfg.kind == ExperimentKind::sweep_kappa;
    const std::string stem = kappa ? "sweep_kappa" : "sweep_eta";
    CsvWriter csv(o.file(stem + ".csv"), cfg, kappa ? schema::sweep_kappa : schema::sweep_eta);
    std::optional<CsvWriter> trap;
    if (cfg.trap_sweep) trap.emplace(o.file("trap_" + stem + ".csv"), cfg, schema::trap_sweep);
    Series ratio{"T/(U0 n)", {}, {}}, temp{"T", {}, {}}, trap_series{"T_trap (us)", {}, {}};
    std::size_t index = 0;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    auto on_row = [&](const SweepRow& row) {
        const SystemParams p = sweep_point(cfg, row.value);
        csv.cell(kappa ? p.kappa : p.eta);
        if (row.steady) {
            const auto& s = *row.steady;
            csv.cell(s.temperature.value).cell(s.temperature.error).cell(s.photons.value).cell(s.ratio);
            csv.cell(s.psd_violation_rate);
            temp.x.push_back(kappa ? p.kappa : p.eta);
            temp.y.push_back(s.temperature.value);
            ratio.x.push_back(kappa ? p.kappa : p.eta);
            ratio.y.push_back(s.ratio);
            write_positions(o, "positions_" + stem + "_" + std::to_string(index), s);
        } else {
            csv.cell(nan).cell(nan).cell(nan).cell(nan).cell(nan);
        }
        csv.cell(row.error).end_row();

        if (trap) {
            trap->cell(kappa ? p.kappa : p.eta);
            const FlightRun* f = row.trap ? &*row.trap : nullptr;
            const TailFit* fit = (f && f->analysis && f->analysis->fit) ? &*f->analysis->fit : nullptr;
            if (fit) {
                trap->cell(p.to_us(fit->t_trap)).cell(p.to_us(fit->t_trap_error))
                    .cell(p.to_us(fit->t_trap_mle)).cell(fit->n_tail);
                trap_series.x.push_back(kappa ? p.kappa : p.eta);
                trap_series.y.push_back(p.to_us(fit->t_trap));
            } else {
                trap->cell(nan).cell(nan).cell(nan).cell(std::size_t{0});
            }
            trap->cell(f ? f->temperature.value : nan).cell(f ? f->photons.value : nan);
            trap->cell(f ? f->error : row.error).end_row();
        }
        ++index;
    };
    const auto rows = run_sweep(cfg, on_row);
    if (cfg.plots) {
        const std::string x = kappa ? "kappa (gamma)" : "eta (gamma)";
        write_svg_plot(o.file(stem + ".svg"), {stem, x, "value"}, {temp, ratio});
        if (trap) write_svg_plot(o.file("trap_" + stem + ".svg"), {"trapping time", x, "T_trap (us)"}, {trap_series});
    }
}

void write_escape(Output& o) {
    const SystemParams& p = o.config.system;
    const EscapeRun run = run_escape(p, o.config);
    const auto& a = run.analysis;
    write_tau_histogram(o, "escape_histogram", a.histogram, p, a.fit);
    CsvWriter csv(o.file("escape_summary.csv"), o.config, schema::escape_summary);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (a.fit) {
        const auto& f = *a.fit;
        csv.cell(p.to_us(f.t_trap)).cell(p.to_us(f.t_trap_error)).cell(p.to_us(f.t_trap_mle))
            .cell(p.to_us(f.tau_min)).cell(p.to_us(fit_hi(f))).cell(f.r2).cell(f.n_tail)
            .cell(f.bins_used);
    } else {
        csv.cell(nan).cell(nan).cell(nan).cell(nan).cell(nan).cell(nan).cell(std::size_t{0})
            .cell(std::size_t{0});
    }
    csv.cell(o.config.ensemble.n_trajectories).cell(a.censored).cell(run.aborted)
        .cell(a.onset_observed).cell(a.onset_extrapolated).cell(run.diagnostics.violation_rate())
        .cell(a.fit_error).end_row();
}

void write_flight(Output& o) {
    const SystemParams& p = o.config.system;
    const FlightRun run = run_flight(p, o.config);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (run.analysis) write_tau_histogram(o, "flight_histogram", run.analysis->histogram, p, run.analysis->fit);
    CsvWriter csv(o.file("flight_summary.csv"), o.config, schema::flight_summary);
    const FlightAnalysis* a = run.analysis ? &*run.analysis : nullptr;
    const TailFit* f = (a && a->fit) ? &*a->fit : nullptr;
    if (f) {
        csv.cell(p.to_us(f->t_trap)).cell(p.to_us(f->t_trap_error)).cell(p.to_us(f->t_trap_mle))
            .cell(p.to_us(f->tau_min)).cell(p.to_us(fit_hi(*f))).cell(f->n_tail);
    } else {
        csv.cell(nan).cell(nan).cell(nan).cell(nan).cell(nan).cell(std::size_t{0});
    }
    if (a) {
        csv.cell(p.to_us(a->first_maximum)).cell(p.to_us(a->second_maximum)).cell(p.to_us(a->cutoff))
            .cell(std::string(a->cutoff_from_minimum ? "true" : "false"))
            .cell(a->untrapped_fraction).cell(a->trapped_fraction);
    } else {
        csv.cell(nan).cell(nan).cell(nan).cell(std::string("false")).cell(nan).cell(nan);
    }
    csv.cell(run.temperature.value).cell(run.temperature.error).cell(run.photons.value)
        .cell(run.depth).cell(run.above_barrier).cell(run.flights.flights.size())
        .cell(run.diagnostics.violation_rate()).cell(run.error).end_row();
}

void write_baseline(Output& o) {
    const SystemParams& p = o.config.system;
    const BaselineRun run = run_baseline(p, o.config);
    const auto& a = run.analysis;
    write_tau_histogram(o, "baseline_histogram", a.histogram, p, std::nullopt);
    CsvWriter csv(o.file("baseline_summary.csv"), o.config, schema::baseline_summary);
    csv.cell(run.temperature).cell(run.depth).cell(a.above_barrier_fraction).cell(a.sampled_fraction)
        .cell(p.to_us(a.shortest)).cell(o.config.trapping.baseline_atoms)
        .cell(std::string(run.measured ? "true" : "false")).end_row();
}

}  // namespace

std::vector<fs::path> run_and_write(const RunConfig& config) {
    config.validate();
    Output o{config, fs::path(config.output_dir), {}};
    fs::create_directories(o.dir);
    switch (config.kind) {
        case ExperimentKind::single_run:
            write_steady(o, run_steady_state(config.system, config.ensemble, config.initial));
            break;
        case ExperimentKind::sweep_kappa:
        case ExperimentKind::sweep_eta: write_sweep(o); break;
        case ExperimentKind::escape_times: write_escape(o); break;
        case ExperimentKind::flight_times: write_flight(o); break;
        case ExperimentKind::baseline: write_baseline(o); break;
    }
    return o.written;
}

}  // namespace cavsim
