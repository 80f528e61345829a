#pragma once

// Pulse and sine propagation along a line buried in Debye-dispersive soil.
// Propagation is done in the frequency domain (exact for linear media): the
// record is transformed, multiplied bin-wise by the line transfer function and
// transformed back. Interface reflections between line segments are ignored.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "dps/constants.hpp"
#include "dps/error.hpp"
#include "dps/fft.hpp"
#include "dps/geometry.hpp"
#include "dps/rfcore.hpp"

namespace dps {

/// eps(f) = eps_inf + sum_k delta_eps_k / (1 + j w tau_k) - j sigma_dc / (w eps0)
struct DebyeModel {
    double eps_inf = 1.0;
    std::vector<double> delta_eps;
    std::vector<double> tau;
    double sigma_dc = 0.0;

    [[nodiscard]] int order() const noexcept { return static_cast<int>(delta_eps.size()); }

    [[nodiscard]] double static_eps() const noexcept {
        return eps_inf + std::accumulate(delta_eps.begin(), delta_eps.end(), 0.0);
    }

    void validate() const {
        if (!(eps_inf >= 1.0)) {
            fail(ErrorKind::invalid_input, "Debye eps_inf must be >= 1");
        }
        if (delta_eps.size() != tau.size() || delta_eps.empty() || delta_eps.size() > 2) {
            fail(ErrorKind::invalid_input, "Debye model needs one or two poles");
        }
        for (std::size_t k = 0; k < tau.size(); ++k) {
            if (!(delta_eps[k] > 0.0) || !(tau[k] > 0.0)) {
                fail(ErrorKind::invalid_input, "Debye pole strengths and times must be positive");
            }
        }
        if (!(sigma_dc >= 0.0)) {
            fail(ErrorKind::invalid_input, "conductivity must be >= 0");
        }
    }
};

[[nodiscard]] inline Complex debye_permittivity(const DebyeModel& m, double f) {
    if (!(f > 0.0)) {
        fail(ErrorKind::invalid_input, "Debye evaluation needs f > 0");
    }
    const double w = two_pi * f;
    Complex eps{m.eps_inf, 0.0};
    for (std::size_t k = 0; k < m.tau.size(); ++k) {
        eps += m.delta_eps[k] / Complex{1.0, w * m.tau[k]};
    }
    eps -= j * m.sigma_dc / (w * eps0);
    return eps;
}

struct DebyeFit {
    DebyeModel model;
    double anchor_frequency = 0.0;
    Complex anchor{};
    double imag_mismatch = 0.0;  ///< Im eps(model) - Im eps(anchor) at the anchor
};

/// Static permittivity for which a single pole with the given eps_inf matches
/// both parts of the anchor, eps_inf + (e' - eps_inf)(1 + (e'' / (e' - eps_inf))^2).
[[nodiscard]] inline double matched_static_eps(Complex anchor, double eps_inf) {
    const double span = anchor.real() - eps_inf;
    if (!(span > 0.0)) {
        fail(ErrorKind::fit_infeasible, "anchor eps' must exceed eps_inf");
    }
    const double x = -anchor.imag() / span;
    return eps_inf + span * (1.0 + x * x);
}

/// First-order fit: eps_inf and the static value are fixed, tau is found by
/// bisection on log(tau) so that Re eps matches the anchor. The imaginary-part
/// mismatch is reported, never forced. `anchor` uses the eps' - j eps'' sign.
[[nodiscard]] inline DebyeFit fit_debye(double f_anchor, Complex anchor, double static_eps, double eps_inf = 2.5) {
    if (!(f_anchor > 0.0)) {
        fail(ErrorKind::invalid_input, "anchor frequency must be positive");
    }
    const double target = anchor.real();
    if (target == static_eps) {
        fail(ErrorKind::degenerate, "anchor eps' equals the static value: tau collapses to zero");
    }
    if (!(target > eps_inf) || !(target < static_eps)) {
        fail(ErrorKind::fit_infeasible, "anchor eps' must lie strictly between eps_inf and the static value");
    }
    DebyeFit fit;
    fit.anchor_frequency = f_anchor;
    fit.anchor = anchor;
    fit.model.eps_inf = eps_inf;
    fit.model.delta_eps = {static_eps - eps_inf};
    fit.model.tau = {1.0};

    const auto re_at = [&](double log_tau) {
        fit.model.tau[0] = std::exp(log_tau);
        return debye_permittivity(fit.model, f_anchor).real();
    };
    // Re eps falls monotonically from the static value to eps_inf as tau grows.
    double lo = std::log(1e-6 / (two_pi * f_anchor));
    double hi = std::log(1e6 / (two_pi * f_anchor));
    if (!(re_at(lo) > target) || !(re_at(hi) < target)) {
        fail(ErrorKind::fit_infeasible, "anchor not bracketed by the relaxation-time search range");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (re_at(mid) > target ? lo : hi) = mid;
    }
    fit.model.tau[0] = std::exp(0.5 * (lo + hi));
    const Complex at = debye_permittivity(fit.model, f_anchor);
    if (std::abs(at.real() - target) > 1e-6) {
        fail(ErrorKind::fit_infeasible, "relaxation-time search did not converge");
    }
    fit.imag_mismatch = at.imag() - anchor.imag();
    return fit;
}

/// Relative permittivity seen by a wave at frequency f.
using PermittivityFn = std::function<Complex(double)>;

/// exp(-j w sqrt(eps(f)) length / c0) with the decaying branch of the root.
/// H(0) = 1 by continuity.
[[nodiscard]] inline std::vector<Complex> line_transfer_function(const PermittivityFn& eps_of_f, double length,
                                                                 std::span<const double> freqs) {
    if (!(length > 0.0)) {
        fail(ErrorKind::invalid_input, "line length must be positive");
    }
    std::vector<Complex> h(freqs.size());
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const double f = freqs[i];
        if (f == 0.0) {
            h[i] = 1.0;
            continue;
        }
        Complex root = std::sqrt(eps_of_f(f));
        if (root.imag() > 0.0) {
            root = -root;
        }
        h[i] = std::exp(-j * two_pi * f * root * length / c0);
    }
    return h;
}

/// Effective permittivity of the buried line when the surrounding soil follows `soil`.
[[nodiscard]] inline PermittivityFn embedded_line_permittivity(const GeometrySpec& g, const DebyeModel& soil,
                                                               EpsEffForm form = EpsEffForm::standard) {
    soil.validate();
    return [g, soil, form](double f) {
        const Complex em = debye_permittivity(soil, f);
        return effective_permittivity(g, MutPermittivity{em.real(), -em.imag()}, form);
    };
}

struct LineSegment {
    PermittivityFn eps;
    double length = 0.0;
};

/// Cascade of homogeneous segments, transmission only.
[[nodiscard]] inline std::vector<Complex> segmented_transfer_function(std::span<const LineSegment> segments,
                                                                      std::span<const double> freqs) {
    std::vector<Complex> h(freqs.size(), Complex{1.0, 0.0});
    for (const LineSegment& s : segments) {
        const std::vector<Complex> part = line_transfer_function(s.eps, s.length, freqs);
        for (std::size_t i = 0; i < h.size(); ++i) {
            h[i] *= part[i];
        }
    }
    return h;
}

struct Waveform {
    double sample_rate = 0.0;
    std::vector<double> samples;
    double t0 = 0.0;

    [[nodiscard]] double dt() const noexcept { return 1.0 / sample_rate; }
    [[nodiscard]] double time(std::size_t k) const noexcept { return t0 + static_cast<double>(k) / sample_rate; }
    [[nodiscard]] double duration() const noexcept { return static_cast<double>(samples.size()) / sample_rate; }

    [[nodiscard]] double energy() const noexcept {
        return std::inner_product(samples.begin(), samples.end(), samples.begin(), 0.0);
    }

    /// Frequencies of the non-negative transform bins.
    [[nodiscard]] std::vector<double> bin_frequencies() const {
        std::vector<double> f(samples.size() / 2 + 1);
        for (std::size_t k = 0; k < f.size(); ++k) {
            f[k] = static_cast<double>(k) * sample_rate / static_cast<double>(samples.size());
        }
        return f;
    }
};

[[nodiscard]] inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) {
        p <<= 1U;
    }
    return p;
}

/// Trapezoidal pulse of unit height whose 50% width is `pulse_width`. The 50%
/// crossings fall half a sample after `lead` and half a sample before the
/// trailing zero run, so exactly pulse_width * sample_rate samples (rounded)
/// sit at or above half height.
[[nodiscard]] inline Waveform make_pulse(double pulse_width, double rise_time, double sample_rate,
                                         double lead = 0.0) {
    if (!(rise_time > 0.0)) {
        fail(ErrorKind::invalid_input, "rise time must be positive");
    }
    if (!(pulse_width > rise_time)) {
        fail(ErrorKind::invalid_input, "pulse width must exceed the rise time");
    }
    if (sample_rate < 20.0 / rise_time * (1.0 - 1e-12)) {
        fail(ErrorKind::sampling, "sample rate must be at least 20 / rise_time");
    }
    if (!(lead >= 0.0)) {
        fail(ErrorKind::invalid_input, "lead time must be >= 0");
    }
    const double dt = 1.0 / sample_rate;
    const auto lead_samples = static_cast<std::size_t>(std::ceil(lead * sample_rate));
    const auto rise_samples = static_cast<std::size_t>(std::ceil(rise_time * sample_rate));
    const double start = (static_cast<double>(lead_samples + rise_samples / 2 + 1) - 0.5) * dt;  // first 50% crossing
    const double stop = start + pulse_width;
    const std::size_t n = static_cast<std::size_t>(std::ceil((stop + rise_time) * sample_rate)) + 2;

    Waveform w;
    w.sample_rate = sample_rate;
    w.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double up = (t - start) / rise_time + 0.5;
        const double down = (stop - t) / rise_time + 0.5;
        w.samples[k] = std::clamp(std::min(up, down), 0.0, 1.0);
    }
    return w;
}

/// Integer number of cycles of a unit sine; the record is periodic, so
/// propagation in periodic mode gives the exact steady state.
[[nodiscard]] inline Waveform make_sine(double frequency, double sample_rate, std::size_t cycles) {
    if (!(frequency > 0.0) || !(sample_rate > 2.0 * frequency) || cycles == 0) {
        fail(ErrorKind::sampling, "sine needs 0 < f < sample_rate / 2 and at least one cycle");
    }
    const double per_cycle = sample_rate / frequency;
    const auto n = static_cast<std::size_t>(std::llround(per_cycle * static_cast<double>(cycles)));
    if (std::abs(per_cycle * static_cast<double>(cycles) - static_cast<double>(n)) > 1e-9) {
        fail(ErrorKind::sampling, "record does not hold an integer number of cycles");
    }
    Waveform w;
    w.sample_rate = sample_rate;
    w.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double phase = two_pi * static_cast<double>(cycles) * static_cast<double>(k) / static_cast<double>(n);
        w.samples[k] = std::sin(phase);
    }
    return w;
}

/// Zero-pads to a power of two that holds at least `min_duration` seconds and
/// `guard` times the current record.
[[nodiscard]] inline Waveform pad_for_propagation(const Waveform& w, double min_duration, double guard = 4.0) {
    const auto by_guard = static_cast<std::size_t>(std::ceil(guard * static_cast<double>(w.samples.size())));
    const auto by_duration = static_cast<std::size_t>(std::ceil(min_duration * w.sample_rate));
    Waveform out = w;
    out.samples.resize(next_power_of_two(std::max({by_guard, by_duration, w.samples.size(), std::size_t{2}})), 0.0);
    return out;
}

enum class PropagationMode {
    transient,  ///< finite record, wrap-around checked at the record end
    periodic,   ///< record is one period of a steady-state signal
};

/// Fraction of the record, at its end, that must stay quiet in transient mode.
inline constexpr double tail_fraction = 0.05;
inline constexpr double tail_energy_limit = 1e-3;

[[nodiscard]] inline Waveform propagate(const Waveform& w, std::span<const Complex> h,
                                        PropagationMode mode = PropagationMode::transient) {
    if (w.samples.size() < 2) {
        fail(ErrorKind::invalid_input, "waveform needs at least two samples");
    }
    RealFft fft(w.samples.size());
    if (h.size() != fft.bins()) {
        fail(ErrorKind::invalid_input, "transfer function must cover every transform bin");
    }
    std::vector<Complex> spectrum = fft.forward(w.samples);
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        spectrum[k] *= h[k];
    }
    // A real output needs real DC and Nyquist bins.
    spectrum.front().imag(0.0);
    if (w.samples.size() % 2 == 0) {
        spectrum.back().imag(0.0);
    }
    Waveform out{w.sample_rate, fft.inverse(spectrum), w.t0};

    if (mode == PropagationMode::transient) {
        const double total = out.energy();
        const auto tail = std::max<std::size_t>(1, static_cast<std::size_t>(tail_fraction * out.samples.size()));
        double tail_energy = 0.0;
        for (std::size_t k = out.samples.size() - tail; k < out.samples.size(); ++k) {
            tail_energy += out.samples[k] * out.samples[k];
        }
        if (total > 0.0 && tail_energy > tail_energy_limit * total) {
            fail(ErrorKind::aliasing, "output energy reaches the end of the record; pad the waveform further");
        }
    }
    return out;
}

[[nodiscard]] inline Waveform propagate(const Waveform& w, const std::function<Complex(double)>& transfer,
                                        PropagationMode mode = PropagationMode::transient) {
    const std::vector<double> f = w.bin_frequencies();
    std::vector<Complex> h(f.size());
    std::transform(f.begin(), f.end(), h.begin(), transfer);
    return propagate(w, h, mode);
}

/// Delay maximizing the circular cross-correlation of `output` with `input`,
/// refined by a parabola through the peak and its neighbours.
[[nodiscard]] inline double estimate_delay(const Waveform& input, const Waveform& output) {
    if (input.samples.size() != output.samples.size() || input.sample_rate != output.sample_rate) {
        fail(ErrorKind::invalid_input, "delay estimate needs equal lengths and sample rates");
    }
    const std::size_t n = input.samples.size();
    RealFft fft(n);
    const std::vector<Complex> x = fft.forward(input.samples);
    std::vector<Complex> y = fft.forward(output.samples);
    for (std::size_t k = 0; k < y.size(); ++k) {
        y[k] *= std::conj(x[k]);
    }
    const std::vector<double> cc = fft.inverse(y);
    const auto peak = static_cast<std::size_t>(std::max_element(cc.begin(), cc.end()) - cc.begin());
    const double left = cc[(peak + n - 1) % n];
    const double mid = cc[peak];
    const double right = cc[(peak + 1) % n];
    const double curvature = left - 2.0 * mid + right;
    const double offset = curvature < 0.0 ? 0.5 * (left - right) / curvature : 0.0;
    double lag = static_cast<double>(peak) + offset;
    if (lag > static_cast<double>(n) / 2.0) {
        lag -= static_cast<double>(n);
    }
    return lag / input.sample_rate;
}

/// Band-limited (circular) delay by an arbitrary time.
[[nodiscard]] inline Waveform delayed(const Waveform& w, double delay) {
    const std::vector<double> f = w.bin_frequencies();
    std::vector<Complex> h(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        h[k] = std::exp(-j * two_pi * f[k] * delay);
    }
    return propagate(w, h, PropagationMode::periodic);
}

struct DistortionReport {
    double nrmse_vs_delayed_input = 0.0;
    double edge_jitter = 0.0;       ///< seconds
    double spectral_purity_db = 0.0;
};

inline constexpr double purity_ceiling_db = 300.0;

/// Ratio of the dominant bin's power to everything else, in dB, capped at
/// purity_ceiling_db so an ideal tone still reports a finite number.
[[nodiscard]] inline double spectral_purity_db(const Waveform& w) {
    RealFft fft(w.samples.size());
    const std::vector<Complex> s = fft.forward(w.samples);
    std::size_t peak = 1;
    for (std::size_t k = 1; k < s.size(); ++k) {
        if (std::norm(s[k]) > std::norm(s[peak])) {
            peak = k;
        }
    }
    double other = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (k != peak) {
            other += std::norm(s[k]);
        }
    }
    const double main = std::norm(s[peak]);
    if (!(main > 0.0)) {
        return 0.0;
    }
    if (!(other > 0.0)) {
        return purity_ceiling_db;
    }
    return std::min(purity_ceiling_db, 10.0 * std::log10(main / other));
}

namespace detail {

/// Rising-edge crossing time of `level * peak`, linearly interpolated, searching
/// forward from the first sample.
inline std::optional<double> rising_crossing(const Waveform& w, double level) {
    const double peak = *std::max_element(w.samples.begin(), w.samples.end());
    if (!(peak > 0.0)) {
        return std::nullopt;
    }
    const double threshold = level * peak;
    for (std::size_t k = 1; k < w.samples.size(); ++k) {
        const double a = w.samples[k - 1];
        const double b = w.samples[k];
        if (a < threshold && b >= threshold) {
            return w.time(k - 1) + (threshold - a) / (b - a) * w.dt();
        }
    }
    return std::nullopt;
}

inline double threshold_spread(const Waveform& w) {
    static constexpr std::array<double, 5> levels{0.1, 0.3, 0.5, 0.7, 0.9};
    double first = std::numeric_limits<double>::infinity();
    double last = -std::numeric_limits<double>::infinity();
    for (const double level : levels) {
        const auto t = rising_crossing(w, level);
        if (!t) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        first = std::min(first, *t);
        last = std::max(last, *t);
    }
    return last - first;
}

}  // namespace detail

/// Compares `output` with `input` delayed by `nominal_delay`. Edge jitter is the
/// growth of the 10-90% crossing spread over the input's own spread.
[[nodiscard]] inline DistortionReport distortion_metrics(const Waveform& input, const Waveform& output,
                                                         double nominal_delay) {
    if (input.sample_rate != output.sample_rate || input.samples.size() != output.samples.size()) {
        fail(ErrorKind::invalid_input, "distortion metrics need aligned waveforms");
    }
    const Waveform reference = delayed(input, nominal_delay);
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t k = 0; k < reference.samples.size(); ++k) {
        const double d = output.samples[k] - reference.samples[k];
        err += d * d;
        ref += reference.samples[k] * reference.samples[k];
    }
    DistortionReport r;
    r.nrmse_vs_delayed_input = ref > 0.0 ? std::sqrt(err / ref) : 0.0;
    const double spread_out = detail::threshold_spread(output);
    const double spread_in = detail::threshold_spread(reference);
    r.edge_jitter = std::isfinite(spread_out) && std::isfinite(spread_in) ? std::abs(spread_out - spread_in) : 0.0;
    r.spectral_purity_db = spectral_purity_db(output);
    return r;
}

}  // namespace dps
