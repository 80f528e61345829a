// Builds the sensor model from the bundled config and prints the phase
// response across the sand calibration curve.

#include <cstdio>

#include "dps/dps.hpp"

int main(int argc, char** argv) {
    const char* config = argc > 1 ? argv[1] : "data/sensor.cfg";
    const dps::Config cfg = dps::Config::load(config);

    dps::SensorModel model;
    model.geometry = dps::load_geometry(cfg);
    model.inductors = dps::load_inductors(cfg);
    model.extraction = dps::load_extraction_options(cfg);

    const dps::DpsCircuitValues unloaded = model.circuit({1.0, 0.0});
    std::printf("C_i = %.3f pF, C_u = %.3f pF, C_d = %.3f pF, C_c = %.3f pF\n", unloaded.C_i.real() * 1e12,
                unloaded.C_u.real() * 1e12, unloaded.C_d * 1e12, unloaded.C_c * 1e12);

    const auto grid = dps::FrequencyGrid::logarithmic(1e6, 10e9, 20000);
    const dps::BandStructure bands = dps::band_edges_numeric(unloaded, grid);
    if (bands.f_cl && bands.f_cu) {
        std::printf("lowest passband: %.1f - %.1f MHz, shunt pole %.1f MHz\n", *bands.f_cl / 1e6, *bands.f_cu / 1e6,
                    bands.f_z2 / 1e6);
    }

    const double f_exc = 300e6;
    const dps::SoilCalibrationCurve sand = dps::sand_calibration();
    for (const auto& knot : sand.points()) {
        const dps::PhaseResponse r = dps::phase_response(model, {knot.eps_real, knot.eps_imag}, f_exc);
        std::printf("VWC %4.1f%%  eps %5.2f - j%4.2f  phase lag %8.3f deg  |s21| %7.3f dB\n", knot.vwc_percent,
                    knot.eps_real, knot.eps_imag, r.delta_theta_deg, r.loss_db);
    }
    return 0;
}
