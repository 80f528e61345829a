#include <catch_amalgamated.hpp>

#include <filesystem>

#include "dps/circuit.hpp"
#include "dps/io/csv.hpp"
#include "dps/io/format.hpp"
#include "dps/io/touchstone.hpp"

using namespace dps;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dps_io_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("numbers round-trip through text", "[io]") {
    for (const double v : {0.0, 1.0, -2.5, 1.2e-12, 114e6, 0.1 + 0.2, 6.02214076e23}) {
        CHECK(io::parse_number(io::format_number(v)) == v);
    }
    CHECK(io::format_number(0.5) == "0.5");
    CHECK_THROWS_WITH(io::parse_number("1.2x", "eps_real"), ContainsSubstring("eps_real"));
    CHECK_THROWS_AS(io::parse_number(""), Error);
}

TEST_CASE("atomic writes create parents and leave no temp file", "[io]") {
    const fs::path dir = scratch_dir("atomic");
    const fs::path file = dir / "nested" / "out.txt";
    io::write_file_atomic(file, "first\n");
    io::write_file_atomic(file, "second\n");
    CHECK(io::read_file(file) == "second\n");
    CHECK_FALSE(fs::exists(file.string() + ".tmp"));
    fs::remove_all(dir);
    try {
        (void)io::read_file(dir / "missing.txt");
        FAIL("expected an io error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
    }
}

TEST_CASE("Touchstone write and read back", "[io]") {
    const Sweep sw = s_parameters(reference_circuit(), FrequencyGrid::linear(10e6, 1e9, 200));
    const io::TouchstoneData back = io::parse_touchstone(io::touchstone_text(sw));
    CHECK(back.reference_impedance == 50.0);
    REQUIRE(back.points.size() == sw.points.size());
    for (std::size_t k = 0; k < back.points.size(); ++k) {
        CHECK(back.points[k].frequency == sw.points[k].frequency);
        CHECK(back.points[k].s.s21 == sw.points[k].s.s21);
        CHECK(back.points[k].s.s11 == sw.points[k].s.s11);
        CHECK(back.points[k].s.s22 == sw.points[k].s.s22);
    }
}

TEST_CASE("masked points become comments", "[io]") {
    const double fp = shunt_pole_frequency(reference_circuit());
    const Sweep sw = s_parameters(reference_circuit(), FrequencyGrid(std::vector<double>{fp / 2, fp, 2 * fp}));
    const std::string text = io::touchstone_text(sw);
    CHECK_THAT(text, ContainsSubstring("! masked"));
    CHECK(io::parse_touchstone(text).points.size() == 2);
    const std::string csv = io::sweep_csv(sw);
    CHECK(io::lines_of(csv).size() >= 4);
    CHECK_THAT(std::string(io::lines_of(csv)[2]), ContainsSubstring(",1"));
}

TEST_CASE("Touchstone variants from other tools", "[io]") {
    const std::string ma = "! header\n# MHz S MA R 75\n100 0.5 90 1 -45 1 -45 0.5 90\n";
    const io::TouchstoneData d = io::parse_touchstone(ma);
    REQUIRE(d.points.size() == 1);
    CHECK(d.points[0].frequency == 100e6);
    CHECK(d.reference_impedance == 75.0);
    CHECK_THAT(d.points[0].s.s11.imag(), WithinAbs(0.5, 1e-15));
    CHECK_THAT(std::arg(d.points[0].s.s21), WithinAbs(-pi / 4, 1e-15));

    const std::string db = "# GHz S DB\n1 -6.0206 0 0 0 0 0 -6.0206 0\n";
    CHECK_THAT(std::abs(io::parse_touchstone(db).points[0].s.s11), WithinAbs(0.5, 1e-5));

    // Default units are GHz and magnitude/angle.
    const std::string wrapped = "2 1 0 1 0\n  1 0 1 0\n";
    const auto w = io::parse_touchstone(wrapped);
    REQUIRE(w.points.size() == 1);
    CHECK(w.points[0].frequency == 2e9);

    CHECK_THROWS_AS(io::parse_touchstone("# Hz S XY\n"), Error);
    CHECK_THROWS_AS(io::parse_touchstone("# Hz S RI\n1 2 3\n"), Error);
}

TEST_CASE("calibration files", "[io]") {
    const SoilCalibrationCurve c = sand_calibration();
    const SoilCalibrationCurve back = io::parse_calibration(io::calibration_csv(c), Interpolation::monotone_cubic);
    REQUIRE(back.points().size() == c.points().size());
    CHECK(back.points()[3].eps_real == 14.5);
    CHECK(back.interpolation() == Interpolation::monotone_cubic);
    CHECK_THROWS_AS(io::parse_calibration("vwc,eps_real,eps_imag\n0,2,0\n10,1,0\n"), Error);
    CHECK_THROWS_AS(io::parse_calibration("vwc,eps_real,eps_imag\n0,2\n"), Error);
}

TEST_CASE("matrix and waveform exports", "[io]") {
    const std::string m = io::matrix_csv("f\\e", {1, 2}, {5, 10}, {0.5, std::nan(""), 1.0, 2.0});
    CHECK(m == "f\\e,5,10\n1,0.5,nan\n2,1,2\n");
    CHECK_THROWS_AS(io::matrix_csv("x", {1}, {1, 2}, {1.0}), Error);

    Waveform w{10.0, {0.0, 1.0, 2.0, 3.0, 4.0}, 0.0};
    CHECK(io::waveform_csv(w, 2) == "time_s,amplitude\n0,0\n0.2,2\n0.4,4\n");
    CHECK_THROWS_AS(io::waveform_csv(w, 0), Error);
}

TEST_CASE("detector reading files", "[io]") {
    const auto rows = io::parse_readings("# bench log\nnominal_vwc,v_m,v_p\n10,0.5,1.2\n,0.6,1.1\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].reading.v_p == 1.2);
    CHECK(rows[0].reading.v_m == 0.5);
    CHECK(rows[0].nominal_vwc == 10.0);
    CHECK_FALSE(rows[1].nominal_vwc);
    CHECK_THROWS_AS(io::parse_readings("v_p\n1\n"), Error);
    CHECK_THROWS_AS(io::parse_readings("v_p,v_m\n1\n"), Error);
    CHECK_THROWS_AS(io::parse_readings(""), Error);
}
