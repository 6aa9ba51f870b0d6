// cavsim - run one configured experiment and write its CSV (and SVG) files.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure (files
// written before the failure are kept).

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cavsim/config.hpp"
#include "cavsim/io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Semiclassical Monte Carlo simulation of an atom in a driven lossy cavity"};
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> output;
    bool plots = false;
    app.add_option("config", config_path, "Experiment config file")->required();
    app.add_option("-s,--seed", seed, "Override ensemble.master_seed");
    app.add_option("-w,--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("-o,--output", output, "Output directory");
    app.add_flag("-p,--plots", plots, "Also write SVG plots");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    cavsim::RunConfig config;
    try {
        config = cavsim::load_config(config_path);
        if (seed) config.ensemble.master_seed = *seed;
        if (workers) config.ensemble.workers = *workers;
        if (output) config.output_dir = *output;
        if (plots) config.plots = true;
        config.validate();
    } catch (const cavsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }

    try {
        for (const auto& file : cavsim::run_and_write(config)) std::cout << file.string() << "\n";
    } catch (const cavsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
