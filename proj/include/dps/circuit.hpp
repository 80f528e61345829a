#pragma once

// Lumped equivalent circuit of the dispersive phase shifter (DPS).
//
// One unit cell is a symmetric T: series Z/2, shunt Y, series Z/2, where
//   Z(f) = jwL/2 + 1/(2jwC_i)                              (top layer + interdigital gap)
//   Y(f) = jwC_t (1 - w^2 L_c C_c) / (1 - w^2 L_c (C_c + C_t)),  C_t = C_u + C_d
// (stacked spiral resonator to ground). The T realization is the one whose
// image impedance is sqrt((Z/2)(Z/2 + 2/Y)).

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dps/constants.hpp"
#include "dps/error.hpp"
#include "dps/rfcore.hpp"

namespace dps {

/// The six lumped elements of the unit cell. C_u and C_i may carry a negative
/// imaginary part to represent loss in the surrounding material.
struct DpsCircuitValues {
    double L = 0.0;        ///< H, top-layer per-section inductance
    Complex C_i{};         ///< F, interdigital series capacitance
    Complex C_u{};         ///< F, upper plate capacitance
    double C_d = 0.0;      ///< F, lower plate capacitance
    double C_c = 0.0;      ///< F, spiral resonator capacitance
    double L_c = 0.0;      ///< H, spiral resonator inductance

    [[nodiscard]] Complex C_t() const noexcept { return C_u + C_d; }

    /// Same circuit with the loss (imaginary) parts removed.
    [[nodiscard]] DpsCircuitValues lossless() const noexcept {
        DpsCircuitValues c = *this;
        c.C_i = Complex{C_i.real(), 0.0};
        c.C_u = Complex{C_u.real(), 0.0};
        return c;
    }

    [[nodiscard]] bool is_lossless() const noexcept {
        return C_i.imag() == 0.0 && C_u.imag() == 0.0;
    }

    void validate() const {
        const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
        if (!positive(L) || !positive(C_i.real()) || !positive(C_u.real()) || !positive(C_d) ||
            !positive(C_c) || !positive(L_c)) {
            fail(ErrorKind::invalid_input, "circuit element real parts must be positive and finite");
        }
        if (!std::isfinite(C_i.imag()) || !std::isfinite(C_u.imag()) || C_i.imag() > 0.0 ||
            C_u.imag() > 0.0) {
            fail(ErrorKind::invalid_input,
                 "imaginary parts of C_u, C_i must be <= 0 (passive loss under e^{+jwt})");
        }
    }

    friend bool operator==(const DpsCircuitValues&, const DpsCircuitValues&) = default;
};

/// Unloaded reference circuit of the prototype sensor.
[[nodiscard]] inline DpsCircuitValues reference_circuit() noexcept {
    DpsCircuitValues c;
    c.L = 1.5e-9;
    c.C_i = Complex{1.2e-12, 0.0};
    c.C_u = Complex{14.1e-12, 0.0};
    c.C_d = 15.9e-12;
    c.C_c = 7.8e-12;
    c.L_c = 17.2e-9;
    return c;
}

namespace detail {
inline double omega_of(double f) {
    if (!(f > 0.0) || !std::isfinite(f)) {
        fail(ErrorKind::invalid_input, "frequency must be positive and finite");
    }
    return two_pi * f;
}
}  // namespace detail

/// Series branch impedance Z(f) in ohms.
[[nodiscard]] inline Complex series_impedance(const DpsCircuitValues& c, double f) {
    const double w = detail::omega_of(f);
    return j * w * c.L / 2.0 + 1.0 / (2.0 * j * w * c.C_i);
}

/// Shunt branch admittance Y(f) in siemens. Throws pole_proximity when f is
/// within the configured relative distance of the pole.
[[nodiscard]] inline Complex shunt_admittance(const DpsCircuitValues& c, double f,
                                              const Tolerances& tol = default_tolerances) {
    const double w = detail::omega_of(f);
    const Complex ct = c.C_t();
    const Complex num = j * w * ct * (1.0 - w * w * c.L_c * c.C_c);
    const Complex den = 1.0 - w * w * c.L_c * (c.C_c + ct);
    // Near the pole den ~ 2 (f - f_pole) / f_pole.
    if (std::abs(den) < 2.0 * tol.pole_relative) {
        fail(ErrorKind::pole_proximity, "frequency " + std::to_string(f) +
                                            " Hz sits on the shunt-admittance pole");
    }
    return num / den;
}

/// Frequency of the shunt-admittance pole (second transmission zero), Hz.
[[nodiscard]] inline double shunt_pole_frequency(const DpsCircuitValues& c) {
    return 1.0 / (two_pi * std::sqrt(c.L_c * (c.C_c + c.C_t().real())));
}

/// Frequency where the shunt admittance vanishes (spiral resonator self-resonance), Hz.
[[nodiscard]] inline double shunt_zero_frequency(const DpsCircuitValues& c) {
    return 1.0 / (two_pi * std::sqrt(c.L_c * c.C_c));
}

/// Frequency where the series impedance vanishes, Hz.
[[nodiscard]] inline double series_resonance_frequency(const DpsCircuitValues& c) {
    return 1.0 / (two_pi * std::sqrt(c.L * c.C_i.real()));
}

struct DispersionPoint {
    double frequency = 0.0;
    Complex cos_beta_l{};  ///< 1 + ZY/2
    Complex beta_l{};      ///< radians per cell, Im <= 0
    Complex z_c{};         ///< ohms, Re >= 0
    bool propagating = false;
};

/// Bloch phase per cell and image impedance of the T cell.
[[nodiscard]] inline DispersionPoint dispersion(const DpsCircuitValues& c, double f,
                                                const Tolerances& tol = default_tolerances) {
    const Complex z = series_impedance(c, f);
    const Complex y = shunt_admittance(c, f, tol);

    DispersionPoint p;
    p.frequency = f;
    p.cos_beta_l = 1.0 + z * y / 2.0;
    p.beta_l = std::acos(p.cos_beta_l);
    if (p.beta_l.imag() > 0.0) {
        p.beta_l = -p.beta_l;  // cos is even; pick the decaying branch
    }
    if (y == Complex{0.0, 0.0}) {
        p.z_c = Complex{std::numeric_limits<double>::infinity(), 0.0};
    } else {
        p.z_c = std::sqrt((z / 2.0) * (z / 2.0 + 2.0 / y));
    }
    p.propagating = std::abs(p.cos_beta_l.real()) <= 1.0 && std::abs(p.cos_beta_l.imag()) < 1e-9 &&
                    std::isfinite(p.z_c.real()) && p.z_c.real() > 0.0;
    return p;
}

enum class BandMethod { closed_form, numeric };

struct Band {
    double lower = 0.0;
    double upper = 0.0;
};

struct BandStructure {
    std::optional<double> f_cl;  ///< lower cutoff of the lowest passband
    std::optional<double> f_cu;  ///< upper cutoff of the lowest passband
    double f_z1 = 0.0;
    double f_z2 = 0.0;
    BandMethod method = BandMethod::numeric;
    std::vector<Band> bands;  ///< every propagating interval found (numeric only)
};

namespace detail {

/// True when the lossless cell propagates at f; pole hits count as stopband.
inline bool propagates(const DpsCircuitValues& lossless, double f) {
    try {
        return dispersion(lossless, f).propagating;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::pole_proximity) {
            return false;
        }
        throw;
    }
}

/// Bisects between a propagating and a non-propagating frequency.
inline double refine_edge(const DpsCircuitValues& lossless, double inside, double outside,
                          double resolution_hz) {
    while (std::abs(outside - inside) > resolution_hz) {
        const double mid = 0.5 * (inside + outside);
        if (propagates(lossless, mid)) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    return 0.5 * (inside + outside);
}

}  // namespace detail

/// Propagating intervals of the lossless cell over an arbitrary grid, edges
/// refined by bisection. Intervals touching the grid ends are clipped there.
[[nodiscard]] inline std::vector<Band> find_bands(const DpsCircuitValues& c,
                                                  std::span<const double> grid,
                                                  double resolution_hz = 1e3) {
    const DpsCircuitValues lossless = c.lossless();
    std::vector<Band> bands;
    bool in_band = false;
    double lower = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const bool p = detail::propagates(lossless, grid[i]);
        if (p && !in_band) {
            lower = (i == 0) ? grid[0]
                             : detail::refine_edge(lossless, grid[i], grid[i - 1], resolution_hz);
            in_band = true;
        } else if (!p && in_band) {
            bands.push_back({lower, detail::refine_edge(lossless, grid[i - 1], grid[i], resolution_hz)});
            in_band = false;
        }
    }
    if (in_band) {
        bands.push_back({lower, grid.back()});
    }
    return bands;
}

/// Band edges from a dense scan of the dispersion relation. The search grid
/// must span [1 MHz, 10 GHz] with at least 10^4 points.
[[nodiscard]] inline BandStructure band_edges_numeric(const DpsCircuitValues& c,
                                                      const FrequencyGrid& search) {
    c.validate();
    if (search.size() < 10000 || search.front() > 1e6 || search.back() < 10e9) {
        fail(ErrorKind::invalid_input,
             "numeric band search needs >= 1e4 points spanning [1 MHz, 10 GHz]");
    }
    BandStructure bs;
    bs.method = BandMethod::numeric;
    bs.bands = find_bands(c, search.points());
    if (!bs.bands.empty()) {
        bs.f_cl = bs.bands.front().lower;
        bs.f_cu = bs.bands.front().upper;
    }
    bs.f_z1 = 0.0;
    bs.f_z2 = shunt_pole_frequency(c);
    return bs;
}

/// Closed-form band-edge coefficients; C is the total interlayer capacitance C_t.
struct ClosedFormCoefficients {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

[[nodiscard]] inline ClosedFormCoefficients closed_form_coefficients(const DpsCircuitValues& v) {
    const double ct = v.C_t().real();
    const double ci = v.C_i.real();
    return {ct * v.L * v.L_c * v.C_c * ci, ct * v.L * ci + 8.0 * ci * v.L_c * (v.C_c + ct) + v.L_c * v.C_c,
            8.0 * ci + ct};
}

/// Band edges from the published closed forms, evaluated as printed (SI units).
/// The f_cl radical b - sqrt(b^2 - 4ac) is evaluated as 4ac / (b + sqrt(b^2 - 4ac)),
/// which is algebraically identical and free of cancellation.
[[nodiscard]] inline BandStructure band_edges_closed_form(const DpsCircuitValues& v) {
    v.validate();
    if (!v.is_lossless()) {
        fail(ErrorKind::invalid_input, "closed-form band edges need real elements");
    }
    const auto [a, b, c] = closed_form_coefficients(v);
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
        fail(ErrorKind::closed_form_inapplicable, "negative discriminant b^2 - 4ac");
    }
    const double root = std::sqrt(disc);
    const double radicand = 4.0 * a * c / (b + root);
    BandStructure bs;
    bs.method = BandMethod::closed_form;
    bs.f_cu = series_resonance_frequency(v);
    bs.f_cl = std::sqrt(radicand) / (two_pi * std::sqrt(2.0 * a));
    bs.f_z1 = 0.0;
    bs.f_z2 = shunt_pole_frequency(v);
    return bs;
}

struct SweepPoint {
    double frequency = 0.0;
    SParams s{};
    bool masked = false;  ///< pole proximity or singular network; s is zero
    double s11_db = 0.0;
    double s21_db = 0.0;
    double s21_phase_deg = 0.0;  ///< unwrapped across unmasked points
};

struct Sweep {
    std::vector<SweepPoint> points;
    double z0 = default_z0;
    int n_cells = 1;
};

/// Chain matrix of `n_cells` cascaded T cells at frequency f.
[[nodiscard]] inline Abcd cell_chain(const DpsCircuitValues& c, double f, int n_cells,
                                     const Tolerances& tol = default_tolerances) {
    const Complex z = series_impedance(c, f);
    const Complex y = shunt_admittance(c, f, tol);
    const Abcd half = abcd_series(z / 2.0);
    const Abcd cell = cascade(cascade(half, abcd_shunt(y)), half);
    return cascade_power(cell, n_cells);
}

/// S-parameters of the cascade at a single frequency.
[[nodiscard]] inline SParams s_parameters_at(const DpsCircuitValues& c, double f, double z0 = default_z0,
                                             int n_cells = 1,
                                             const Tolerances& tol = default_tolerances) {
    return abcd_to_s(cell_chain(c, f, n_cells, tol), z0, tol);
}

/// S-parameter sweep. Points on a pole or singular network are flagged, not dropped.
[[nodiscard]] inline Sweep s_parameters(const DpsCircuitValues& c, const FrequencyGrid& grid,
                                        double z0 = default_z0, int n_cells = 1,
                                        const Tolerances& tol = default_tolerances) {
    c.validate();
    if (n_cells < 1) {
        fail(ErrorKind::invalid_input, "n_cells must be >= 1");
    }
    Sweep sweep;
    sweep.z0 = z0;
    sweep.n_cells = n_cells;
    sweep.points.reserve(grid.size());
    std::vector<double> raw_phase;
    std::vector<std::size_t> unmasked;
    for (const double f : grid.points()) {
        SweepPoint p;
        p.frequency = f;
        try {
            p.s = s_parameters_at(c, f, z0, n_cells, tol);
            p.s11_db = to_db(p.s.s11);
            p.s21_db = to_db(p.s.s21);
            raw_phase.push_back(std::arg(p.s.s21));
            unmasked.push_back(sweep.points.size());
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::pole_proximity && e.kind() != ErrorKind::singular_network) {
                throw;
            }
            p.masked = true;
            p.s = SParams{{}, {}, {}, {}, z0};
        }
        sweep.points.push_back(p);
    }
    const std::vector<double> unwrapped = unwrap_phase(raw_phase);
    for (std::size_t k = 0; k < unmasked.size(); ++k) {
        sweep.points[unmasked[k]].s21_phase_deg = unwrapped[k] * rad_to_deg;
    }
    return sweep;
}

}  // namespace dps
