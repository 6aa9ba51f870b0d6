// io.hpp - CSV and SVG output of experiment results.
//
// Every CSV starts with "# key = value" lines holding the resolved config
// and master seed, followed by one header row and the data rows. Column
// sets are listed in README.md and pinned by tests.

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "cavsim/config.hpp"
#include "cavsim/experiments.hpp"

namespace cavsim {

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const RunConfig& config,
              const std::vector<std::string>& columns);

    // Values are written with full precision; strings are quoted when needed.
    CsvWriter& cell(double v);
    CsvWriter& cell(std::size_t v);
    CsvWriter& cell(const std::string& v);
    void end_row();

    std::size_t columns() const { return columns_; }

private:
    std::ofstream out_;
    std::size_t columns_ = 0;
    std::size_t pending_ = 0;
};

namespace schema {
extern const std::vector<std::string> steady_summary;
extern const std::vector<std::string> positions;
extern const std::vector<std::string> sweep_kappa;
extern const std::vector<std::string> sweep_eta;
extern const std::vector<std::string> trap_sweep;
extern const std::vector<std::string> tau_histogram;
extern const std::vector<std::string> escape_summary;
extern const std::vector<std::string> flight_summary;
extern const std::vector<std::string> baseline_summary;
}  // namespace schema

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
};

// Single-file line plot. Non-positive values are dropped on log axes.
void write_svg_plot(const std::filesystem::path& path, const PlotSpec& spec,
                    const std::vector<Series>& series);

// Runs the configured experiment and writes its files into
// config.output_dir. Returns the files written.
std::vector<std::filesystem::path> run_and_write(const RunConfig& config);

}  // namespace cavsim
