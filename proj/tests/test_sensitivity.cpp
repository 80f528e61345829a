#include <catch_amalgamated.hpp>

#include "common.hpp"
#include "dps/sensitivity.hpp"
#include "oracles/oracles.hpp"

using namespace dps;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

oracle::AnchoredCell reference_cell() {
    return {1.5e-9L, 1.2e-12L, 14.1e-12L, 15.9e-12L, 7.8e-12L, 17.2e-9L, 4.3L, 0.6e-3L, 3.7e-3L, 44.5e-3L, true};
}

}  // namespace

TEST_CASE("microstrip baseline", "[sensitivity]") {
    const MicrostripBaseline b = microstrip_baseline(5.5e-12, 120e6, 100.0);
    CHECK_THAT(b.s_m_deg_per_mm, WithinAbs(0.2376, 1e-12));
    CHECK_THAT(b.phase_deg, WithinAbs(23.76, 1e-10));
    CHECK_THAT(b.phase_deg, WithinRel(static_cast<double>(oracle::microstrip_phase(5.5e-12L, 120e6L, 100.0L)), 1e-14));
    CHECK_THROWS_AS(microstrip_baseline(0.0, 120e6, 1.0), Error);
}

TEST_CASE("phase lag is positive for a delay-like response", "[sensitivity]") {
    // A passband cell lags its input; loss is never positive for a passive cell.
    const SensorModel m = testing_support::table_model();
    const PhaseResponse r = phase_response(m, {10.0, 0.0}, 380e6);
    CHECK(r.loss_db <= 1e-12);
    const PhaseResponse lossy = phase_response(m, {10.0, 2.0}, 380e6);
    CHECK(lossy.loss_db < r.loss_db);
}

TEST_CASE("finite-difference sensitivity agrees with the analytic derivative", "[sensitivity]") {
    const SensorModel m = testing_support::table_model();
    const auto cell = reference_cell();
    for (const double f : {114e6, 300e6, 380e6, 430e6}) {
        for (const double eps : {2.0, 5.0, 10.0, 15.0, 20.0}) {
            const double numeric = dps_sensitivity(m, eps, f).direct;
            const double analytic = static_cast<double>(oracle::analytic_sensitivity(cell, eps, f, 50));
            INFO("f = " << f << ", eps = " << eps);
            CHECK_THAT(numeric, WithinRel(analytic, 1e-5));
        }
    }
}

TEST_CASE("chain-rule split adds up to the direct derivative", "[sensitivity]") {
    const SensorModel m = testing_support::table_model();
    for (const double f : {250e6, 330e6, 420e6}) {
        for (const double eps : {3.0, 12.0, 22.0}) {
            const SensitivityResult r = dps_sensitivity(m, eps, f);
            CHECK(r.chain_mismatch() < 1e-2);
            CHECK(std::isfinite(r.via_c_u));
            CHECK(std::isfinite(r.via_c_i));
        }
    }
}

TEST_CASE("sensitivity input validation", "[sensitivity]") {
    const SensorModel m = testing_support::table_model();
    CHECK_THROWS_AS(dps_sensitivity(m, 1.0, 300e6), Error);
    CHECK_THROWS_AS(dps_sensitivity(m, 5.0, 300e6, 0.0), Error);
}

TEST_CASE("sensitivity map selects a low-passband optimum", "[sensitivity]") {
    const SensorModel m = testing_support::table_model();
    const std::vector<double> eps{5.0, 10.0, 15.0, 20.0};
    const SensitivityMap map = sensitivity_map(m, FrequencyGrid::linear(200e6, 500e6, 301), eps);
    REQUIRE(map.values.size() == 301 * 4);
    CHECK(map.passband.lower > 200e6);
    CHECK(map.passband.upper < 500e6);
    CHECK(map.f_optimal >= map.passband.lower);
    const double quartile = map.passband.lower + 0.25 * (map.passband.upper - map.passband.lower);
    CHECK(map.f_optimal <= quartile);

    std::size_t row = 0;
    while (map.frequencies[row] != map.f_optimal) {
        ++row;
    }
    for (std::size_t k = 0; k < eps.size(); ++k) {
        CHECK(map.at(row, k) > 0.0);
        if (k > 0) {
            CHECK(map.at(row, k) < map.at(row, k - 1));
        }
    }
}

TEST_CASE("VWC-referred sensitivity", "[sensitivity]") {
    CHECK_THAT(vwc_referred_sensitivity(2.0, 0.5), WithinRel(static_cast<double>(oracle::vwc_referred(2.0L, 0.5L)), 1e-15));
    CHECK_THROWS_AS(vwc_referred_sensitivity(2.0, 0.0), Error);
    CHECK_THROWS_AS(vwc_referred_sensitivity(-1.0, 0.5), Error);
}
