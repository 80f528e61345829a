#pragma once

// Two-port network algebra: chain (ABCD) matrices, cascading, conversion to
// scattering parameters and phase unwrapping.
//
// Time dependence is e^{+jwt} throughout the library, so an ideal delay line
// has a negative phase slope.

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "dps/constants.hpp"
#include "dps/error.hpp"

namespace dps {

using Complex = std::complex<double>;

inline constexpr Complex j{0.0, 1.0};

[[nodiscard]] inline bool is_finite(Complex z) noexcept {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

inline void require_finite(Complex z, const char* what) {
    if (!is_finite(z)) {
        fail(ErrorKind::invalid_input, std::string(what) + " is not finite");
    }
}

/// Chain matrix [[a, b], [c, d]]; b in ohms, c in siemens.
struct Abcd {
    Complex a{1.0, 0.0};
    Complex b{0.0, 0.0};
    Complex c{0.0, 0.0};
    Complex d{1.0, 0.0};

    [[nodiscard]] static constexpr Abcd identity() noexcept { return {}; }

    [[nodiscard]] Complex determinant() const noexcept { return a * d - b * c; }

    [[nodiscard]] bool finite() const noexcept {
        return is_finite(a) && is_finite(b) && is_finite(c) && is_finite(d);
    }
};

[[nodiscard]] inline Abcd abcd_series(Complex z) {
    require_finite(z, "series impedance");
    return {Complex{1.0, 0.0}, z, Complex{0.0, 0.0}, Complex{1.0, 0.0}};
}

[[nodiscard]] inline Abcd abcd_shunt(Complex y) {
    require_finite(y, "shunt admittance");
    return {Complex{1.0, 0.0}, Complex{0.0, 0.0}, y, Complex{1.0, 0.0}};
}

/// Matrix product first x second (signal passes `first`, then `second`).
[[nodiscard]] inline Abcd cascade(const Abcd& first, const Abcd& second) {
    if (!first.finite() || !second.finite()) {
        fail(ErrorKind::invalid_input, "cascade of non-finite network");
    }
    return {first.a * second.a + first.b * second.c, first.a * second.b + first.b * second.d,
            first.c * second.a + first.d * second.c, first.c * second.b + first.d * second.d};
}

/// `count` identical sections in cascade (binary exponentiation).
[[nodiscard]] inline Abcd cascade_power(const Abcd& cell, int count) {
    if (count < 1) {
        fail(ErrorKind::invalid_input, "cell count must be >= 1");
    }
    Abcd result = Abcd::identity();
    Abcd base = cell;
    for (unsigned n = static_cast<unsigned>(count); n != 0; n >>= 1U) {
        if ((n & 1U) != 0) {
            result = cascade(result, base);
        }
        if (n > 1) {
            base = cascade(base, base);
        }
    }
    return result;
}

struct SParams {
    Complex s11;
    Complex s21;
    Complex s12;
    Complex s22;
    double reference_impedance = default_z0;
};

/// Standard ABCD -> S conversion for a real reference impedance.
[[nodiscard]] inline SParams abcd_to_s(const Abcd& net, double z0 = default_z0,
                                       const Tolerances& tol = default_tolerances) {
    if (!(z0 > 0.0) || !std::isfinite(z0)) {
        fail(ErrorKind::invalid_input, "reference impedance must be positive");
    }
    if (!net.finite()) {
        fail(ErrorKind::invalid_input, "network is not finite");
    }
    const Complex bz = net.b / z0;
    const Complex cz = net.c * z0;
    const Complex den = net.a + bz + cz + net.d;
    if (std::abs(den) < tol.singular_floor) {
        fail(ErrorKind::singular_network, "ABCD->S denominator vanishes");
    }
    SParams s;
    s.s11 = (net.a + bz - cz - net.d) / den;
    s.s21 = 2.0 / den;
    s.s12 = 2.0 * net.determinant() / den;
    s.s22 = (-net.a + bz - cz + net.d) / den;
    s.reference_impedance = z0;
    return s;
}

/// Inverse of abcd_to_s; requires s21 != 0.
[[nodiscard]] inline Abcd s_to_abcd(const SParams& s, const Tolerances& tol = default_tolerances) {
    const double z0 = s.reference_impedance;
    if (!(z0 > 0.0)) {
        fail(ErrorKind::invalid_input, "reference impedance must be positive");
    }
    if (std::abs(s.s21) < tol.singular_floor) {
        fail(ErrorKind::singular_network, "s21 vanishes; no chain matrix exists");
    }
    const Complex two_s21 = 2.0 * s.s21;
    const Complex cross = s.s12 * s.s21;
    Abcd m;
    m.a = ((1.0 + s.s11) * (1.0 - s.s22) + cross) / two_s21;
    m.b = z0 * ((1.0 + s.s11) * (1.0 + s.s22) - cross) / two_s21;
    m.c = ((1.0 - s.s11) * (1.0 - s.s22) - cross) / (two_s21 * z0);
    m.d = ((1.0 - s.s11) * (1.0 + s.s22) + cross) / two_s21;
    return m;
}

/// Ordered list of strictly increasing, positive frequencies in Hz.
class FrequencyGrid {
public:
    FrequencyGrid() = default;

    explicit FrequencyGrid(std::vector<double> points) : points_(std::move(points)) {
        if (points_.empty()) {
            fail(ErrorKind::invalid_input, "frequency grid is empty");
        }
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (!(points_[i] > 0.0) || !std::isfinite(points_[i])) {
                fail(ErrorKind::invalid_input, "frequency grid points must be positive and finite");
            }
            if (i > 0 && !(points_[i] > points_[i - 1])) {
                fail(ErrorKind::invalid_input, "frequency grid must be strictly increasing");
            }
        }
    }

    /// `count` points evenly spaced over [start, stop] inclusive.
    [[nodiscard]] static FrequencyGrid linear(double start, double stop, std::size_t count) {
        if (count < 2 || !(stop > start)) {
            if (count == 1 && start > 0.0) {
                return FrequencyGrid({start});
            }
            fail(ErrorKind::invalid_input, "linear grid needs count >= 2 and stop > start");
        }
        std::vector<double> pts(count);
        const double step = (stop - start) / static_cast<double>(count - 1);
        for (std::size_t i = 0; i < count; ++i) {
            pts[i] = start + step * static_cast<double>(i);
        }
        pts.back() = stop;
        return FrequencyGrid(std::move(pts));
    }

    [[nodiscard]] static FrequencyGrid logarithmic(double start, double stop, std::size_t count) {
        if (count < 2 || !(stop > start) || !(start > 0.0)) {
            fail(ErrorKind::invalid_input, "log grid needs count >= 2 and 0 < start < stop");
        }
        std::vector<double> pts(count);
        const double ratio = std::log(stop / start) / static_cast<double>(count - 1);
        for (std::size_t i = 0; i < count; ++i) {
            pts[i] = start * std::exp(ratio * static_cast<double>(i));
        }
        pts.front() = start;
        pts.back() = stop;
        return FrequencyGrid(std::move(pts));
    }

    [[nodiscard]] std::span<const double> points() const noexcept { return points_; }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return points_[i]; }
    [[nodiscard]] double front() const { return points_.front(); }
    [[nodiscard]] double back() const { return points_.back(); }

private:
    std::vector<double> points_;
};

/// Removes 2*pi jumps so adjacent samples differ by less than pi. The first
/// sample is kept as is.
[[nodiscard]] inline std::vector<double> unwrap_phase(std::span<const double> phases) {
    std::vector<double> out(phases.begin(), phases.end());
    double offset = 0.0;
    for (std::size_t i = 1; i < out.size(); ++i) {
        const double step = phases[i] - phases[i - 1];
        offset -= two_pi * std::round(step / two_pi);
        out[i] = phases[i] + offset;
    }
    return out;
}

/// Wraps an angle in degrees into (-180, 180].
[[nodiscard]] inline double wrap_degrees(double deg) noexcept {
    double w = std::fmod(deg + 180.0, 360.0);
    if (w < 0.0) {
        w += 360.0;
    }
    w -= 180.0;
    return w == -180.0 ? 180.0 : w;
}

[[nodiscard]] inline double to_db(Complex s) noexcept { return 20.0 * std::log10(std::abs(s)); }

}  // namespace dps
