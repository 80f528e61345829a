#pragma once

// Circuit-value extraction from physical dimensions. Permittivities here are
// relative unless stated otherwise.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dps/circuit.hpp"
#include "dps/constants.hpp"
#include "dps/error.hpp"
#include "dps/rfcore.hpp"

namespace dps {

struct GeometrySpec {
    double substrate_eps_r = 4.3;
    double substrate_tan_delta = 0.0;
    double h_u = 0.0;  ///< m, upper substrate thickness
    double h_d = 0.0;  ///< m, lower substrate thickness
    double t_m = 0.0;  ///< m, metal thickness
    double a = 0.0;    ///< m, top-layer physical width
    double b_len = 0.0;  ///< m, top-layer physical length
    double A_d = 0.0;    ///< m^2, bottom ground area
    std::vector<double> csr_turn_lengths;  ///< m, one per spiral turn
    double S_c = 0.0;    ///< m, spiral slot gap width
    double l_i = 0.0;    ///< m, interdigital finger length
    double W_i = 0.0;    ///< m, interdigital finger width
    int N_fingers = 0;
    double h_m = 0.0;    ///< m, thickness of the material above the top layer

    /// The buried-line permittivity model needs h_m >> h_u; taken as h_m >= 10 h_u.
    [[nodiscard]] bool buried_line_valid() const noexcept { return h_m >= 10.0 * h_u; }

    void validate() const {
        const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
        if (!positive(substrate_eps_r) || !positive(h_u) || !positive(h_d) || !positive(t_m) ||
            !positive(a) || !positive(b_len) || !positive(A_d) || !positive(S_c) || !positive(l_i) ||
            !positive(W_i) || !positive(h_m)) {
            fail(ErrorKind::invalid_input, "geometry lengths must be positive and finite");
        }
        if (substrate_tan_delta < 0.0 || !std::isfinite(substrate_tan_delta)) {
            fail(ErrorKind::invalid_input, "substrate loss tangent must be >= 0");
        }
        if (csr_turn_lengths.empty()) {
            fail(ErrorKind::invalid_input, "spiral needs at least one turn");
        }
        for (const double p : csr_turn_lengths) {
            if (!positive(p)) {
                fail(ErrorKind::invalid_input, "spiral turn lengths must be positive");
            }
        }
        if (N_fingers < 4) {
            fail(ErrorKind::invalid_input, "interdigital capacitor needs N_fingers >= 4");
        }
    }
};

/// Centerline turn lengths of a rectangular spiral slot with constant pitch
/// (slot width + spacing), starting from the outer footprint.
[[nodiscard]] inline std::vector<double> rectangular_spiral_turn_lengths(double outer_length,
                                                                         double outer_width,
                                                                         double slot_width,
                                                                         double spacing, int turns) {
    if (turns < 1 || !(slot_width > 0.0) || !(spacing >= 0.0)) {
        fail(ErrorKind::invalid_input, "spiral reconstruction needs turns >= 1 and slot width > 0");
    }
    const double pitch = slot_width + spacing;
    std::vector<double> lengths;
    for (int n = 0; n < turns; ++n) {
        const double inset = slot_width + 2.0 * pitch * n;
        const double len = outer_length - inset;
        const double wid = outer_width - inset;
        if (!(len > 0.0) || !(wid > 0.0)) {
            fail(ErrorKind::geometry_infeasible, "spiral turns do not fit the outer footprint");
        }
        lengths.push_back(2.0 * (len + wid));
    }
    return lengths;
}

/// Permittivity of the material under test, eps = eps_real - j eps_imag.
struct MutPermittivity {
    double eps_real = 1.0;
    double eps_imag = 0.0;  ///< loss, stored positive

    [[nodiscard]] Complex complex() const noexcept { return {eps_real, -eps_imag}; }

    void validate() const {
        if (!(eps_real >= 1.0) || !(eps_imag >= 0.0) || !std::isfinite(eps_real) ||
            !std::isfinite(eps_imag)) {
            fail(ErrorKind::invalid_input, "MUT permittivity needs eps_real >= 1 and eps_imag >= 0");
        }
    }

    friend bool operator==(const MutPermittivity&, const MutPermittivity&) = default;
};

/// Selects how the buried-line filling factor enters the effective permittivity.
/// `standard` divides by sqrt(1 + 12 h/a); `as_printed` multiplies by it.
enum class EpsEffForm { standard, as_printed };

/// Fringing length increment: Hammerstad form, or the variant with (h_u + 0.3)
/// in place of (a/h_u + 0.264), h_u in millimetres.
enum class FringeForm { standard, as_printed };

struct Inductors {
    double L = 1.5e-9;
    double L_c = 17.2e-9;
};

struct ExtractionOptions {
    EpsEffForm eps_form = EpsEffForm::standard;
    FringeForm fringe_form = FringeForm::standard;
    /// Apply |ln(8 t_m / P_n)| when the log argument is below one.
    bool rectify_log = false;
    /// Carry the substrate loss tangent into the effective permittivity.
    bool substrate_loss = false;
    /// When set, C_u and C_i are scaled so the unloaded (eps_m = 1) values equal
    /// the anchor's, and C_d, C_c are taken from the anchor. The geometry then
    /// supplies only the dependence on the surrounding material.
    std::optional<DpsCircuitValues> anchor;
};

/// Complex substrate permittivity (loss folded in only when requested).
[[nodiscard]] inline Complex substrate_permittivity(const GeometrySpec& g, bool with_loss) {
    return with_loss ? Complex{g.substrate_eps_r, -g.substrate_eps_r * g.substrate_tan_delta}
                     : Complex{g.substrate_eps_r, 0.0};
}

/// Spiral-resonator capacitance: series combination of one slot capacitance per turn.
[[nodiscard]] inline double csr_capacitance(const GeometrySpec& g, bool rectify_log = false) {
    g.validate();
    const double eps_avg = eps0 * (g.substrate_eps_r + 1.0) / 2.0;
    double inverse = 0.0;
    for (const double p : g.csr_turn_lengths) {
        const double log_arg = 8.0 * g.t_m / p;
        if (!(log_arg > 0.0) || log_arg == 1.0) {
            fail(ErrorKind::geometry_infeasible, "log argument 8 t_m / P_n must be positive and != 1");
        }
        double ln = std::log(log_arg);
        if (rectify_log) {
            ln = std::abs(ln);
        }
        const double bracket = p * g.t_m / g.S_c + two_pi * g.t_m / ln;
        if (!(bracket > 0.0)) {
            fail(ErrorKind::geometry_infeasible, "non-positive slot capacitance bracket");
        }
        inverse += 1.0 / (eps_avg * bracket);
    }
    return 1.0 / inverse;
}

/// Number of turns whose log term ln(8 t_m / P_n) is negative.
[[nodiscard]] inline int csr_negative_log_turns(const GeometrySpec& g) {
    int count = 0;
    for (const double p : g.csr_turn_lengths) {
        if (8.0 * g.t_m / p < 1.0) {
            ++count;
        }
    }
    return count;
}

/// Relative effective permittivity of the top line buried under the MUT.
[[nodiscard]] inline Complex effective_permittivity(const GeometrySpec& g, const MutPermittivity& mut,
                                                    EpsEffForm form = EpsEffForm::standard,
                                                    bool substrate_loss = false) {
    g.validate();
    mut.validate();
    if (!g.buried_line_valid()) {
        fail(ErrorKind::precondition, "buried-line model needs h_m >= 10 h_u");
    }
    const Complex er = substrate_permittivity(g, substrate_loss);
    const Complex em = mut.complex();
    const double radical = std::sqrt(1.0 + 12.0 * g.h_u / g.a);
    const double filling = form == EpsEffForm::standard ? 1.0 / radical : radical;
    return (er + em) / 2.0 + (er - em) / 2.0 * filling;
}

/// Effective length increment from fringing, metres.
[[nodiscard]] inline double effective_length_increment(const GeometrySpec& g, double eps_eff_real,
                                                       FringeForm form = FringeForm::standard) {
    const double den_eps = eps_eff_real - 0.258;
    if (!(den_eps > 0.0) || !std::isfinite(eps_eff_real)) {
        fail(ErrorKind::formula_domain, "fringing formula needs eps_eff > 0.258");
    }
    const double aspect = g.a / g.h_u;
    const double width_term = form == FringeForm::standard ? aspect + 0.264 : g.h_u * 1e3 + 0.3;
    return 0.412 * g.h_u * ((eps_eff_real + 0.3) * width_term) / (den_eps * (aspect + 0.8));
}

struct PlateCapacitances {
    double C_d = 0.0;   ///< F, real
    Complex C_u{};      ///< F, carries the MUT loss
    double delta_L = 0.0;
    Complex eps_eff{};
};

[[nodiscard]] inline PlateCapacitances plate_capacitances(const GeometrySpec& g, const MutPermittivity& mut,
                                                          const ExtractionOptions& opts = {}) {
    PlateCapacitances out;
    out.eps_eff = effective_permittivity(g, mut, opts.eps_form, opts.substrate_loss);
    out.delta_L = effective_length_increment(g, out.eps_eff.real(), opts.fringe_form);
    out.C_d = eps0 * g.substrate_eps_r * g.A_d / g.h_d;
    const double effective_area = g.a * (g.b_len + 2.0 * out.delta_L);
    const double lossless_cu = eps0 * g.substrate_eps_r * effective_area / g.h_u;
    const double tan_delta_eff = -out.eps_eff.imag() / out.eps_eff.real();
    out.C_u = lossless_cu * Complex{1.0, -tan_delta_eff};
    return out;
}

/// Interdigital finger coefficients (pF per metre of finger length).
struct InterdigitalCoefficients {
    double A1 = 0.0;
    double A2 = 0.0;
};

[[nodiscard]] inline InterdigitalCoefficients interdigital_coefficients(double h_over_w) {
    return {4.409 * std::tanh(0.55 * std::pow(h_over_w, 0.45)),
            9.92 * std::tanh(0.52 * std::pow(h_over_w, 0.5))};
}

/// Interdigital capacitance in farads. The empirical formula yields pF with the
/// finger length in metres (pF/um coefficients scaled by 1e-6).
[[nodiscard]] inline Complex interdigital_capacitance(const GeometrySpec& g, Complex eps_eff) {
    g.validate();
    const auto [A1, A2] = interdigital_coefficients(g.h_u / g.W_i);
    const double bracket = static_cast<double>(g.N_fingers - 3) * A1 + A2;
    return (eps_eff + 1.0) * g.l_i * bracket * 1e-12;
}

/// Raw values from the closed forms, before any anchoring.
[[nodiscard]] inline DpsCircuitValues extract_raw(const GeometrySpec& g, const MutPermittivity& mut,
                                                  const Inductors& inductors,
                                                  const ExtractionOptions& opts) {
    const PlateCapacitances plates = plate_capacitances(g, mut, opts);
    DpsCircuitValues c;
    c.L = inductors.L;
    c.L_c = inductors.L_c;
    c.C_u = plates.C_u;
    c.C_d = plates.C_d;
    c.C_i = interdigital_capacitance(g, plates.eps_eff);
    c.C_c = csr_capacitance(g, opts.rectify_log);
    return c;
}

/// Circuit values of the cell surrounded by `mut`.
[[nodiscard]] inline DpsCircuitValues extract_circuit(const GeometrySpec& g, const MutPermittivity& mut,
                                                      const Inductors& inductors = {},
                                                      const ExtractionOptions& opts = {}) {
    DpsCircuitValues c = extract_raw(g, mut, inductors, opts);
    if (opts.anchor) {
        const DpsCircuitValues unloaded = extract_raw(g, MutPermittivity{1.0, 0.0}, inductors, opts);
        const DpsCircuitValues& ref = *opts.anchor;
        c.C_u = ref.C_u.real() * c.C_u / unloaded.C_u.real();
        c.C_i = ref.C_i.real() * c.C_i / unloaded.C_i.real();
        c.C_d = ref.C_d;
        c.C_c = ref.C_c;
    }
    c.validate();
    return c;
}

}  // namespace dps
