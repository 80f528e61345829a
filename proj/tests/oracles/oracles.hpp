#pragma once

// Second implementations of every closed form used by the library, written
// from the formulas rather than from the library code. They run in long double
// (or 50-digit binary floating point where cancellation matters) and use
// rearranged algebra, so agreement is evidence of a correct transcription.

#include <cmath>
#include <complex>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

using ld = long double;
using cld = std::complex<long double>;

inline constexpr ld pi = 3.141592653589793238462643383279502884L;
inline constexpr ld eps0 = 8.8541878128e-12L;
inline constexpr ld c0 = 299792458.0L;

/// Series branch: j(wL/2 - 1/(2 w C_i)).
inline cld series_z(ld L, ld Ci, ld f) {
    const ld w = 2 * pi * f;
    return cld(0, (w * w * L * Ci - 1) / (2 * w * Ci));
}

inline cld series_z(ld L, cld Ci, ld f) {
    const ld w = 2 * pi * f;
    return cld(0, w * L / 2) + cld(1, 0) / (cld(0, 2 * w) * Ci);
}

/// Shunt branch: j w C_t (1 - w^2 L_c C_c) / (1 - w^2 L_c (C_c + C_t)).
inline cld shunt_y(cld Ct, ld Cc, ld Lc, ld f) {
    const ld w2 = 4 * pi * pi * f * f;
    const cld num = cld(0, std::sqrt(w2)) * Ct * (1 - w2 * Lc * Cc);
    const cld den = cld(1, 0) - w2 * Lc * (Cc + Ct);
    return num / den;
}

/// Scale used to judge relative agreement of quantities formed by
/// cancellation: the size of the largest term that enters.
inline ld series_z_scale(ld L, ld Ci, ld f) {
    const ld w = 2 * pi * f;
    return std::max(w * L / 2, 1 / (2 * w * Ci));
}

inline cld cos_beta_l(cld Z, cld Y) { return cld(1, 0) + Z * Y / cld(2, 0); }

inline cld image_impedance(cld Z, cld Y) {
    const cld half = Z / cld(2, 0);
    return std::sqrt(half * half + Z / Y);
}

inline ld f_cu(ld L, ld Ci) { return 1 / (2 * pi * std::sqrt(L * Ci)); }

inline ld f_z2(ld Lc, ld Cc, ld Ct) { return 1 / (2 * pi * std::sqrt(Lc * (Cc + Ct))); }

inline ld shunt_zero(ld Lc, ld Cc) { return 1 / (2 * pi * std::sqrt(Lc * Cc)); }

struct Coefficients {
    ld a, b, c;
};

inline Coefficients coefficients(ld C, ld L, ld Ci, ld Cc, ld Lc) {
    return {C * L * Lc * Cc * Ci, C * L * Ci + 8 * Ci * Lc * Cc + 8 * Ci * Lc * C + Lc * Cc, 8 * Ci + C};
}

/// Lower edge from the printed radical, evaluated literally in 50 digits.
inline ld f_cl(ld C, ld L, ld Ci, ld Cc, ld Lc) {
    using mp = boost::multiprecision::cpp_bin_float_50;
    const mp Cm(C), Lm(L), Cim(Ci), Ccm(Cc), Lcm(Lc);
    const mp a = Cm * Lm * Lcm * Ccm * Cim;
    const mp b = Cm * Lm * Cim + 8 * Cim * Lcm * (Ccm + Cm) + Lcm * Ccm;
    const mp c = 8 * Cim + Cm;
    const mp inner = b - sqrt(b * b - 4 * a * c);
    const mp result = sqrt(inner) / (2 * boost::math::constants::pi<mp>() * sqrt(2 * a));
    return static_cast<ld>(result);
}

/// Spiral slot capacitance: 1/C_c = sum over turns of 1/(eps0 (er+1)/2 [P t/S + 2 pi t / ln(8t/P)]).
inline ld csr_capacitance(ld er, ld tm, ld Sc, const std::vector<ld>& turns, bool rectify) {
    ld inverse = 0;
    for (const ld P : turns) {
        ld lg = std::log(8 * tm) - std::log(P);
        if (rectify) {
            lg = std::fabs(lg);
        }
        const ld per_turn = eps0 * (er + 1) / 2 * (P * tm / Sc + 2 * pi * tm / lg);
        inverse += 1 / per_turn;
    }
    return 1 / inverse;
}

inline ld plate_c_d(ld er, ld Ad, ld hd) { return eps0 * er * Ad / hd; }

inline ld plate_c_u(ld er, ld a, ld b, ld dL, ld hu) { return eps0 * er * (a * b + 2 * a * dL) / hu; }

/// Fringing increment. `standard`: Hammerstad (a/h + 0.264); otherwise the
/// variant with (h_u[mm] + 0.3).
inline ld delta_l(ld hu, ld a, ld e, bool standard) {
    const ld w = standard ? a / hu + 0.264L : hu * 1000 + 0.3L;
    return 0.412L * hu * (e + 0.3L) * w / ((e - 0.258L) * (a / hu + 0.8L));
}

/// Buried-line permittivity (relative). standard divides the difference term by
/// sqrt(1 + 12 h/a); otherwise multiplies.
inline cld eps_eff(cld er, cld em, ld hu, ld a, bool standard) {
    const ld root = std::sqrt(1 + 12 * hu / a);
    const cld diff = (er - em) / cld(2, 0);
    return (er + em) / cld(2, 0) + (standard ? diff / root : diff * root);
}

/// Interdigital capacitance in farads; the empirical form gives pF when the
/// finger length is in micrometres and the coefficients are per micrometre
/// scaled by 1e-6.
inline cld interdigital(cld e, ld li_m, ld hu, ld Wi, int N) {
    const ld A1 = 4.409L * std::tanh(0.55L * std::pow(hu / Wi, 0.45L));
    const ld A2 = 9.92L * std::tanh(0.52L * std::pow(hu / Wi, 0.5L));
    const ld li_um = li_m * 1e6L;
    const cld pF = (e + cld(1, 0)) * li_um * ((N - 3) * A1 + A2) * 1e-6L;
    return pF * 1e-12L;
}

inline ld microstrip_phase(ld delay_per_mm, ld f, ld length_mm) { return 360 * f * delay_per_mm * length_mm; }

inline ld vwc_weights(ld dry, ld water) { return water / (dry + water) * 100; }

inline ld vwc_referred(ld s, ld slope) { return s * slope; }

inline ld resolution(ld s, ld acc) { return acc / s; }

inline ld estimation_error(ld m, ld n) { return std::fabs((m - n) / n) * 100; }

/// Two-port T cell (Z/2, Y, Z/2) into z0: s21 = 2 / (2A + B/z0 + C z0).
inline cld t_cell_s21(cld Z, cld Y, ld z0) {
    const cld A = cld(1, 0) + Z * Y / cld(2, 0);
    const cld B = Z + Z * Z * Y / cld(4, 0);
    return cld(2, 0) / (cld(2, 0) * A + B / z0 + Y * z0);
}

inline cld t_cell_s11(cld Z, cld Y, ld z0) {
    const cld A = cld(1, 0) + Z * Y / cld(2, 0);
    const cld B = Z + Z * Z * Y / cld(4, 0);
    return (B / z0 - Y * z0) / (cld(2, 0) * A + B / z0 + Y * z0);
}

/// Analytic d(phase lag)/d(eps') for one lossless cell whose C_u and C_i scale
/// with eps' through anchored fringing and the interdigital factor. Degrees
/// per unit eps'.
struct AnchoredCell {
    ld L, Ci_ref, Cu_ref, Cd, Cc, Lc;
    ld er, hu, a, b;
    bool standard_fringe = true;
};

inline ld analytic_sensitivity(const AnchoredCell& k, ld eps, ld f, ld z0) {
    const ld F = 1 / std::sqrt(1 + 12 * k.hu / k.a);
    const auto eff = [&](ld e) { return (k.er + e) / 2 + (k.er - e) / 2 * F; };
    const ld deff = (1 - F) / 2;
    const auto span = [&](ld e) { return k.b + 2 * delta_l(k.hu, k.a, eff(e), k.standard_fringe); };
    const ld e = eff(eps);
    const ld w_term = k.standard_fringe ? k.a / k.hu + 0.264L : k.hu * 1000 + 0.3L;
    const ld ddl = 0.412L * k.hu * w_term / (k.a / k.hu + 0.8L) * (-0.558L) / ((e - 0.258L) * (e - 0.258L));
    const ld Cu = k.Cu_ref * span(eps) / span(1);
    const ld dCu = k.Cu_ref * 2 * ddl * deff / span(1);
    const ld Ci = k.Ci_ref * (e + 1) / (eff(1) + 1);
    const ld dCi = k.Ci_ref * deff / (eff(1) + 1);

    const ld w = 2 * pi * f;
    const cld Z = series_z(k.L, Ci, f);
    const cld Y = shunt_y(cld(Cu + k.Cd, 0), k.Cc, k.Lc, f);
    const cld Delta = cld(2, 0) + Z * Y + Z / z0 + Z * Z * Y / (4 * z0) + Y * z0;
    const cld dDelta_dY = Z + Z * Z / (4 * z0) + cld(z0, 0);
    const cld dDelta_dZ = Y + cld(1 / z0, 0) + Z * Y / (2 * z0);
    const ld N = 1 - w * w * k.Lc * k.Cc;
    const ld D = 1 - w * w * k.Lc * (k.Cc + Cu + k.Cd);
    const cld dY_dCt = cld(0, w * N * N / (D * D));
    const cld dZ_dCi = cld(0, 1 / (2 * w * Ci * Ci));
    const ld via_u = std::imag(dDelta_dY * dY_dCt / Delta) * dCu;
    const ld via_i = std::imag(dDelta_dZ * dZ_dCi / Delta) * dCi;
    return (via_u + via_i) * 180 / pi;
}

}  // namespace oracle
