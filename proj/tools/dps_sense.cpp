#include <iostream>

#include <CLI11.hpp>

#include "dps/cli/commands.hpp"

int main(int argc, char** argv) {
    dps::cli::Options opts;
    CLI::App app{"Soil moisture sensor model: extraction, sweeps, band edges, sensitivity, inversion, pulses"};
    app.add_option("command", opts.command, "Subcommand")
        ->required()
        ->check(CLI::IsMember(dps::cli::command_names()));
    app.add_option("--config", opts.config, "Config file")->required();
    app.add_option("--out", opts.out, "Output directory")->capture_default_str();
    app.add_flag("--quantize", opts.quantize, "Quantize detector readings to 0.1 deg / 0.1 dB");
    double fexc = 0.0;
    auto* fexc_opt = app.add_option("--fexc", fexc, "Excitation frequency in Hz")->check(CLI::PositiveNumber);
    int cells = 0;
    auto* cells_opt = app.add_option("--cells", cells, "Number of cascaded cells")->check(CLI::PositiveNumber);
    std::string readings;
    auto* readings_opt = app.add_option("--readings", readings, "CSV of detector readings (invert)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : dps::cli::exit_io_failure;
    }
    if (*fexc_opt) {
        opts.f_exc = fexc;
    }
    if (*cells_opt) {
        opts.cells = cells;
    }
    if (*readings_opt) {
        opts.readings = readings;
    }
    return dps::cli::run(opts, std::cerr);
}
