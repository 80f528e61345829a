#include <catch_amalgamated.hpp>

#include "dps/circuit.hpp"
#include "oracles/oracles.hpp"

using namespace dps;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("branch immittances at 114 MHz", "[circuit]") {
    const DpsCircuitValues c = reference_circuit();
    const Complex z = series_impedance(c, 114e6);
    CHECK(std::abs(z.real()) < 1e-12);
    CHECK_THAT(z.imag(), WithinRel(static_cast<double>(oracle::series_z(1.5e-9L, 1.2e-12L, 114e6L).imag()), 1e-13));
    // Series resonance zeroes Z.
    const double fr = series_resonance_frequency(c);
    CHECK(std::abs(series_impedance(c, fr)) < 1e-9);
}

TEST_CASE("shunt admittance zero and pole", "[circuit]") {
    const DpsCircuitValues c = reference_circuit();
    CHECK_THAT(shunt_zero_frequency(c), WithinRel(434.5e6, 1e-3));
    CHECK_THAT(shunt_pole_frequency(c), WithinRel(197.4e6, 1e-3));
    // Far below the pole the branch is just C_t.
    CHECK_THAT(shunt_admittance(c, 1e3).imag(), WithinRel(two_pi * 1e3 * 30e-12, 1e-6));
    CHECK_THROWS_AS(shunt_admittance(c, shunt_pole_frequency(c)), Error);
    CHECK(std::abs(shunt_admittance(c, shunt_zero_frequency(c))) < 1e-12);
}

TEST_CASE("doubling C_t moves the pole by the expected factor", "[circuit]") {
    DpsCircuitValues c = reference_circuit();
    const double before = shunt_pole_frequency(c);
    const double ct = c.C_t().real();
    c.C_u += ct;
    const double after = shunt_pole_frequency(c);
    CHECK_THAT(after / before, WithinRel(std::sqrt((c.C_c + ct) / (c.C_c + 2 * ct)), 1e-12));
}

TEST_CASE("dispersion relation and image impedance", "[circuit]") {
    const DpsCircuitValues c = reference_circuit();
    const DispersionPoint at_zero_z = dispersion(c, series_resonance_frequency(c));
    CHECK(std::abs(at_zero_z.cos_beta_l - 1.0) < 1e-9);
    CHECK(std::abs(at_zero_z.beta_l) < 1e-4);

    const DispersionPoint mid = dispersion(c, 380e6);
    REQUIRE(mid.propagating);
    CHECK(std::abs(mid.beta_l.imag()) < 1e-12);
    CHECK(mid.z_c.real() > 0.0);
    CHECK(std::abs(mid.z_c.imag()) < 1e-9 * mid.z_c.real());

    const DispersionPoint stop = dispersion(c, 114e6);
    CHECK_FALSE(stop.propagating);
    CHECK(stop.beta_l.imag() < 0.0);
}

TEST_CASE("numeric band edges of the reference circuit", "[circuit]") {
    const DpsCircuitValues c = reference_circuit();
    const BandStructure bs = band_edges_numeric(c, FrequencyGrid::logarithmic(1e6, 10e9, 20000));
    REQUIRE(bs.f_cl);
    REQUIRE(bs.f_cu);
    // Independent check: brute-force sign analysis of 1 + ZY/2 on a fine grid.
    const auto inside = [&](double f) {
        const auto v = oracle::cos_beta_l(oracle::series_z(1.5e-9L, 1.2e-12L, f),
                                          oracle::shunt_y({30e-12L, 0}, 7.8e-12L, 17.2e-9L, f));
        return std::fabs(v.real()) <= 1;
    };
    CHECK(inside(*bs.f_cl + 2e3));
    CHECK_FALSE(inside(*bs.f_cl - 2e3));
    CHECK(inside(*bs.f_cu - 2e3));
    CHECK_FALSE(inside(*bs.f_cu + 2e3));
    CHECK(*bs.f_cl > shunt_pole_frequency(c));
    CHECK_THAT(*bs.f_cu, WithinRel(shunt_zero_frequency(c), 1e-5));
    CHECK_THAT(bs.f_z2, WithinRel(197.4e6, 1e-3));
    CHECK(bs.f_z1 == 0.0);

    CHECK_THROWS_AS(band_edges_numeric(c, FrequencyGrid::logarithmic(1e6, 1e9, 20000)), Error);
}

TEST_CASE("frequency scaling law", "[circuit]") {
    DpsCircuitValues c = reference_circuit();
    const auto grid = FrequencyGrid::logarithmic(1e6, 10e9, 20000);
    const BandStructure base = band_edges_numeric(c, grid);
    const double k = 1.5;
    c.L *= k;
    c.L_c *= k;
    c.C_i *= k;
    c.C_u *= k;
    c.C_d *= k;
    c.C_c *= k;
    const BandStructure scaled = band_edges_numeric(c, grid);
    CHECK_THAT(*scaled.f_cl, WithinRel(*base.f_cl / k, 2e-5));
    CHECK_THAT(*scaled.f_cu, WithinRel(*base.f_cu / k, 2e-5));
    CHECK_THAT(scaled.f_z2, WithinRel(base.f_z2 / k, 1e-12));
}

TEST_CASE("closed-form band edges", "[circuit]") {
    const DpsCircuitValues c = reference_circuit();
    const BandStructure bs = band_edges_closed_form(c);
    CHECK(bs.method == BandMethod::closed_form);
    CHECK_THAT(*bs.f_cu, WithinRel(3.751e9, 1e-3));
    const double ref = static_cast<double>(oracle::f_cl(30e-12L, 1.5e-9L, 1.2e-12L, 7.8e-12L, 17.2e-9L));
    CHECK_THAT(*bs.f_cl, WithinRel(ref, 1e-12));

    DpsCircuitValues quad = c;
    quad.L *= 4.0;
    CHECK_THAT(*band_edges_closed_form(quad).f_cu, WithinRel(*bs.f_cu / 2.0, 1e-14));

    DpsCircuitValues lossy = c;
    lossy.C_u = Complex{14.1e-12, -1e-13};
    CHECK_THROWS_AS(band_edges_closed_form(lossy), Error);
}

TEST_CASE("lossless sweep conserves power", "[circuit]") {
    const DpsCircuitValues c = reference_circuit();
    const Sweep sw = s_parameters(c, FrequencyGrid::linear(1e6, 1e9, 4000), 50.0, 1);
    for (const SweepPoint& p : sw.points) {
        if (!p.masked) {
            CHECK(std::abs(std::norm(p.s.s11) + std::norm(p.s.s21) - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("single cell matches the oracle T network", "[circuit]") {
    const DpsCircuitValues c = reference_circuit();
    for (const double f : {50e6, 114e6, 300e6, 700e6}) {
        const SParams s = s_parameters_at(c, f);
        const auto z = oracle::series_z(1.5e-9L, 1.2e-12L, f);
        const auto y = oracle::shunt_y({30e-12L, 0}, 7.8e-12L, 17.2e-9L, f);
        const auto s21 = oracle::t_cell_s21(z, y, 50);
        const auto s11 = oracle::t_cell_s11(z, y, 50);
        CHECK(std::abs(s.s21 - Complex(static_cast<double>(s21.real()), static_cast<double>(s21.imag()))) < 1e-12);
        CHECK(std::abs(s.s11 - Complex(static_cast<double>(s11.real()), static_cast<double>(s11.imag()))) < 1e-12);
    }
}

TEST_CASE("deep transmission zero around the shunt pole", "[circuit]") {
    const DpsCircuitValues c = reference_circuit();
    const double fp = shunt_pole_frequency(c);
    for (const double f : {fp - 1e3, fp + 1e3}) {
        CHECK(to_db(s_parameters_at(c, f).s21) < -40.0);
    }
    // Exactly on the pole the sweep masks the point instead of dropping it.
    const Sweep sw = s_parameters(c, FrequencyGrid(std::vector<double>{fp * 0.9, fp, fp * 1.1}));
    REQUIRE(sw.points.size() == 3);
    CHECK(sw.points[1].masked);
    CHECK_FALSE(sw.points[0].masked);
}

TEST_CASE("passband transmission and stopband rejection", "[circuit]") {
    const DpsCircuitValues c = reference_circuit();
    const BandStructure bs = band_edges_numeric(c, FrequencyGrid::logarithmic(1e6, 10e9, 20000));
    const double lo = *bs.f_cl;
    const double hi = *bs.f_cu;
    // The cell is not matched to 50 ohm, so passband loss is mismatch loss.
    // With three cells it still beats the stopband outside a 10% guard band.
    double worst_pass = 1.0;
    for (int i = 1; i < 20; ++i) {
        worst_pass = std::min(worst_pass, std::abs(s_parameters_at(c, lo + (hi - lo) * i / 20.0, 50.0, 3).s21));
    }
    for (const double f : {50e6, 150e6, 0.9 * lo, 1.1 * hi, 1e9}) {
        CHECK(std::abs(s_parameters_at(c, f, 50.0, 3).s21) <= worst_pass);
    }
}

TEST_CASE("more loss in C_u lowers transmission", "[circuit]") {
    DpsCircuitValues c = reference_circuit();
    double previous = 2.0;
    for (const double loss : {0.0, 0.1e-12, 0.5e-12, 1e-12, 2e-12}) {
        c.C_u = Complex{14.1e-12, -loss};
        const double mag = std::abs(s_parameters_at(c, 380e6).s21);
        CHECK(mag < previous);
        previous = mag;
    }
}
