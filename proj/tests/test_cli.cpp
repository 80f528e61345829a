#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <sys/wait.h>

#include "dps/cli/commands.hpp"
#include "dps/io/format.hpp"

namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dps_cli_" + name);
    fs::remove_all(p);
    return p;
}

int run_command(const std::string& command, const fs::path& config, const fs::path& out, std::string* err = nullptr) {
    dps::cli::Options opts;
    opts.command = command;
    opts.config = config;
    opts.out = out;
    std::ostringstream stream;
    const int code = dps::cli::run(opts, stream);
    if (err) {
        *err = stream.str();
    }
    return code;
}

int run_binary(const std::string& args) {
    const int status = std::system((std::string(DPS_SENSE_EXE) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> data_files(const fs::path& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() != ".log") {
            names.push_back(e.path().filename().string());
        }
    }
    std::sort(names.begin(), names.end());
    return names;
}

fs::path write_config(const fs::path& dir, const std::string& extra) {
    fs::create_directories(dir);
    const fs::path p = dir / "run.cfg";
    dps::io::write_file_atomic(p, dps::io::read_file(DPS_DATA_DIR "/sensor.cfg") + extra);
    return p;
}

const fs::path table = DPS_DATA_DIR "/sensor.cfg";

}  // namespace

TEST_CASE("missing config exits with the io code", "[cli]") {
    std::string err;
    CHECK(run_command("extract", "/nonexistent/none.cfg", fresh_dir("missing"), &err) == dps::cli::exit_io_failure);
    CHECK_THAT(err, ContainsSubstring("none.cfg"));
    CHECK(run_binary("extract --config /nonexistent/none.cfg --out " + fresh_dir("missing_bin").string()) == 2);
}

TEST_CASE("argument errors exit with the io code", "[cli]") {
    CHECK(run_binary("frobnicate --config " + table.string()) == 2);
    CHECK(run_binary("extract") == 2);
    CHECK(run_binary("sense --config " + table.string() + " --fexc -5") == 2);
}

TEST_CASE("malformed suffix names the field", "[cli]") {
    // Later duplicate keys are rejected, so build the file from scratch.
    const fs::path dir = fresh_dir("suffix");
    fs::create_directories(dir);
    std::string text = dps::io::read_file(table);
    const auto pos = text.find("h_u = 0.6mm");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 11, "h_u = 0.6 parsecs");
    dps::io::write_file_atomic(dir / "bad.cfg", text);
    std::string err;
    CHECK(run_command("extract", dir / "bad.cfg", dir / "out", &err) == dps::cli::exit_io_failure);
    CHECK_THAT(err, ContainsSubstring("h_u"));
    CHECK_THAT(err, ContainsSubstring("parsecs"));
}

TEST_CASE("model failures exit with code 1", "[cli]") {
    const fs::path dir = fresh_dir("model");
    const fs::path cfg = write_config(dir, "\n");
    std::string text = dps::io::read_file(cfg);
    text.replace(text.find("h_m = 100mm"), 11, "h_m = 1mm");
    dps::io::write_file_atomic(cfg, text);
    std::string err;
    CHECK(run_command("extract", cfg, dir / "out", &err) == dps::cli::exit_model_failure);
    CHECK_THAT(err, ContainsSubstring("h_m"));
}

TEST_CASE("each command writes its data files", "[cli]") {
    const fs::path out = fresh_dir("files");
    CHECK(run_command("extract", table, out) == 0);
    CHECK(run_command("sweep", table, out) == 0);
    CHECK(run_command("band", table, out) == 0);
    const auto names = data_files(out);
    const std::vector<std::string> expected{"band.json",        "extract.json",      "sweep_vwc0.csv",
                                            "sweep_vwc0.s2p",   "sweep_vwc10.csv",   "sweep_vwc10.s2p",
                                            "sweep_vwc20.csv",  "sweep_vwc20.s2p",   "sweep_vwc30.csv",
                                            "sweep_vwc30.s2p"};
    CHECK(names == expected);
    CHECK(fs::exists(out / "extract.log"));

    const std::string band = dps::io::read_file(out / "band.json");
    CHECK_THAT(band, ContainsSubstring("transmission_zero"));
    CHECK_THAT(band, ContainsSubstring("103000000"));
}

TEST_CASE("invert builds a synthetic batch and summary", "[cli]") {
    const fs::path out = fresh_dir("invert");
    dps::cli::Options opts;
    opts.command = "invert";
    opts.config = table;
    opts.out = out;
    opts.quantize = true;
    std::ostringstream err;
    REQUIRE(dps::cli::run(opts, err) == 0);
    const std::string results = dps::io::read_file(out / "invert_results.jsonl");
    CHECK(dps::io::lines_of(results).size() >= 7);
    const std::string summary = dps::io::read_file(out / "invert_summary.json");
    CHECK_THAT(summary, ContainsSubstring("max_abs_vwc_error"));
    CHECK(fs::exists(out / "synthetic_readings.csv"));
}

TEST_CASE("reruns are byte-identical", "[cli]") {
    const fs::path a = fresh_dir("det_a");
    const fs::path b = fresh_dir("det_b");
    for (const std::string cmd : {"extract", "band", "sweep"}) {
        REQUIRE(run_command(cmd, table, a) == 0);
        REQUIRE(run_command(cmd, table, b) == 0);
    }
    const auto names = data_files(a);
    REQUIRE(names == data_files(b));
    for (const auto& n : names) {
        INFO(n);
        CHECK(dps::io::read_file(a / n) == dps::io::read_file(b / n));
    }
}
