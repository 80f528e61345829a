#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dps/circuit.hpp"
#include "dps/geometry.hpp"
#include "dps/rfcore.hpp"

namespace dps {

/// Phase accumulated along a plain microstrip with a known delay per millimetre.
struct MicrostripBaseline {
    double s_m_deg_per_mm = 0.0;  ///< phase per unit length at f
    double phase_deg = 0.0;       ///< over the requested length
};

[[nodiscard]] inline MicrostripBaseline microstrip_baseline(double delay_per_mm_s, double f_hz,
                                                            double length_mm) {
    if (!(delay_per_mm_s > 0.0) || !(f_hz > 0.0) || !(length_mm >= 0.0)) {
        fail(ErrorKind::invalid_input, "microstrip baseline needs positive delay and frequency");
    }
    MicrostripBaseline out;
    out.s_m_deg_per_mm = 360.0 * f_hz * delay_per_mm_s;
    out.phase_deg = out.s_m_deg_per_mm * length_mm;
    return out;
}

/// Geometry plus everything needed to evaluate the sensor's transmission.
struct SensorModel {
    GeometrySpec geometry;
    Inductors inductors;
    ExtractionOptions extraction;
    int n_cells = 1;
    double z0 = default_z0;

    [[nodiscard]] DpsCircuitValues circuit(const MutPermittivity& mut) const {
        return extract_circuit(geometry, mut, inductors, extraction);
    }
};

/// Output-vs-reference phase lag (degrees, wrapped to (-180, 180]) and
/// transmission level 20 log10 |s21| (dB, <= 0 for a passive cell).
struct PhaseResponse {
    double delta_theta_deg = 0.0;
    double loss_db = 0.0;
};

[[nodiscard]] inline PhaseResponse circuit_response(const DpsCircuitValues& c, double f, double z0,
                                                    int n_cells) {
    SParams s;
    try {
        s = s_parameters_at(c, f, z0, n_cells);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::pole_proximity || e.kind() == ErrorKind::singular_network) {
            fail(e.kind(), std::string(e.what()) + "; choose a different excitation frequency");
        }
        throw;
    }
    return {wrap_degrees(-std::arg(s.s21) * rad_to_deg), to_db(s.s21)};
}

[[nodiscard]] inline PhaseResponse phase_response(const SensorModel& model, const MutPermittivity& mut,
                                                  double f_exc) {
    if (!(f_exc > 0.0)) {
        fail(ErrorKind::invalid_input, "excitation frequency must be positive");
    }
    return circuit_response(model.circuit(mut), f_exc, model.z0, model.n_cells);
}

namespace detail {

inline double phase_difference(double hi, double lo) { return wrap_degrees(hi - lo); }

inline double direct_derivative(const SensorModel& model, double eps_real, double eps_imag, double f,
                                double h) {
    const double up = phase_response(model, {eps_real + h, eps_imag}, f).delta_theta_deg;
    const double down = phase_response(model, {eps_real - h, eps_imag}, f).delta_theta_deg;
    return phase_difference(up, down) / (2.0 * h);
}

}  // namespace detail

/// Phase sensitivity d(delta_theta)/d(eps'_m), plus its split into the C_u and
/// C_i channels (the only elements that depend on the surrounding material).
struct SensitivityResult {
    double direct = 0.0;  ///< degrees per unit eps'
    double via_c_u = 0.0;
    double via_c_i = 0.0;

    [[nodiscard]] double chain_sum() const noexcept { return via_c_u + via_c_i; }

    [[nodiscard]] double chain_mismatch() const noexcept {
        return std::abs(chain_sum() - direct) / std::max(std::abs(direct), 1e-300);
    }
};

inline constexpr double default_sensitivity_step = 1e-3;

[[nodiscard]] inline SensitivityResult dps_sensitivity(const SensorModel& model, double eps_real,
                                                       double f_exc, double h = default_sensitivity_step,
                                                       double eps_imag = 0.0) {
    if (!(h > 0.0) || !(eps_real >= 1.0 + h)) {
        fail(ErrorKind::invalid_input, "sensitivity needs h > 0 and eps_real >= 1 + h");
    }
    SensitivityResult r;
    r.direct = detail::direct_derivative(model, eps_real, eps_imag, f_exc, h);
    const double quarter = detail::direct_derivative(model, eps_real, eps_imag, f_exc, h / 4.0);
    if (std::abs(quarter - r.direct) > 0.1 * std::max(std::abs(r.direct), 1e-12)) {
        fail(ErrorKind::step_size, "finite difference does not converge when the step is halved twice");
    }

    const DpsCircuitValues base = model.circuit({eps_real, eps_imag});
    const DpsCircuitValues up = model.circuit({eps_real + h, eps_imag});
    const DpsCircuitValues down = model.circuit({eps_real - h, eps_imag});

    const auto phase = [&](const DpsCircuitValues& c) {
        return circuit_response(c, f_exc, model.z0, model.n_cells).delta_theta_deg;
    };
    constexpr double rel = 1e-6;

    // d(theta)/dC_u * dC_u/d(eps)
    {
        DpsCircuitValues hi = base;
        DpsCircuitValues lo = base;
        hi.C_u *= 1.0 + rel;
        lo.C_u *= 1.0 - rel;
        const double dtheta_dc = detail::phase_difference(phase(hi), phase(lo)) / (2.0 * rel * base.C_u.real());
        const double dc_deps = (up.C_u.real() - down.C_u.real()) / (2.0 * h);
        r.via_c_u = dtheta_dc * dc_deps;
    }
    // d(theta)/dC_i * dC_i/d(eps)
    {
        DpsCircuitValues hi = base;
        DpsCircuitValues lo = base;
        hi.C_i *= 1.0 + rel;
        lo.C_i *= 1.0 - rel;
        const double dtheta_dc = detail::phase_difference(phase(hi), phase(lo)) / (2.0 * rel * base.C_i.real());
        const double dc_deps = (up.C_i.real() - down.C_i.real()) / (2.0 * h);
        r.via_c_i = dtheta_dc * dc_deps;
    }
    return r;
}

struct SensitivityMap {
    std::vector<double> frequencies;
    std::vector<double> eps_grid;
    /// values[i * eps_grid.size() + k]: degrees per unit eps' at (frequencies[i], eps_grid[k]);
    /// NaN where the derivative cannot be evaluated (pole hit).
    std::vector<double> values;
    Band passband;  ///< frequencies propagating at every eps in eps_grid
    double f_optimal = 0.0;
    double step = default_sensitivity_step;

    [[nodiscard]] double at(std::size_t fi, std::size_t ek) const { return values[fi * eps_grid.size() + ek]; }
};

/// Lowest passband common to every lossless circuit along `eps_grid`.
[[nodiscard]] inline Band common_passband(const SensorModel& model, std::span<const double> freqs,
                                          std::span<const double> eps_grid) {
    Band common{0.0, std::numeric_limits<double>::infinity()};
    for (const double eps : eps_grid) {
        const std::vector<Band> bands = find_bands(model.circuit({eps, 0.0}), freqs);
        if (bands.empty()) {
            fail(ErrorKind::degenerate, "no propagating band in the frequency grid at eps' = " +
                                            std::to_string(eps));
        }
        common.lower = std::max(common.lower, bands.front().lower);
        common.upper = std::min(common.upper, bands.front().upper);
    }
    if (!(common.upper > common.lower)) {
        fail(ErrorKind::degenerate, "lowest passbands along the permittivity grid do not overlap");
    }
    return common;
}

/// Sensitivity over a (frequency x permittivity) grid. The optimal excitation
/// frequency maximizes mean |S| across eps_grid inside the common passband;
/// ties go to the lowest frequency.
[[nodiscard]] inline SensitivityMap sensitivity_map(const SensorModel& model, const FrequencyGrid& f_grid,
                                                    std::span<const double> eps_grid,
                                                    double h = default_sensitivity_step) {
    if (eps_grid.empty()) {
        fail(ErrorKind::invalid_input, "permittivity grid is empty");
    }
    for (const double e : eps_grid) {
        if (!(e >= 1.0 + h)) {
            fail(ErrorKind::invalid_input, "permittivity grid values must be >= 1 + h");
        }
    }
    SensitivityMap map;
    map.frequencies.assign(f_grid.points().begin(), f_grid.points().end());
    map.eps_grid.assign(eps_grid.begin(), eps_grid.end());
    map.step = h;
    map.values.resize(map.frequencies.size() * map.eps_grid.size());
    for (std::size_t i = 0; i < map.frequencies.size(); ++i) {
        for (std::size_t k = 0; k < map.eps_grid.size(); ++k) {
            double v = std::numeric_limits<double>::quiet_NaN();
            try {
                v = detail::direct_derivative(model, map.eps_grid[k], 0.0, map.frequencies[i], h);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::pole_proximity && e.kind() != ErrorKind::singular_network) {
                    throw;
                }
            }
            map.values[i * map.eps_grid.size() + k] = v;
        }
    }
    map.passband = common_passband(model, f_grid.points(), eps_grid);

    double best = -1.0;
    for (std::size_t i = 0; i < map.frequencies.size(); ++i) {
        const double f = map.frequencies[i];
        if (f < map.passband.lower || f > map.passband.upper) {
            continue;
        }
        double sum = 0.0;
        bool ok = true;
        for (std::size_t k = 0; k < map.eps_grid.size(); ++k) {
            const double v = map.at(i, k);
            ok = ok && std::isfinite(v);
            sum += std::abs(v);
        }
        const double mean = sum / static_cast<double>(map.eps_grid.size());
        if (ok && mean > best) {
            best = mean;
            map.f_optimal = f;
        }
    }
    if (best < 0.0) {
        fail(ErrorKind::degenerate, "no grid frequency inside the common passband");
    }
    return map;
}

/// Phase change per percent of volumetric water content.
[[nodiscard]] inline double vwc_referred_sensitivity(double s_dps_deg_per_eps, double d_eps_d_vwc) {
    if (!(d_eps_d_vwc > 0.0) || !std::isfinite(d_eps_d_vwc)) {
        fail(ErrorKind::degenerate, "calibration slope d(eps)/d(VWC) must be positive");
    }
    if (!(s_dps_deg_per_eps >= 0.0)) {
        fail(ErrorKind::invalid_input, "sensitivity must be non-negative");
    }
    return s_dps_deg_per_eps * d_eps_d_vwc;
}

}  // namespace dps
