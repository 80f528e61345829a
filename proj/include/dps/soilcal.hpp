#pragma once

// Soil calibration and inversion. A tabulated curve maps VWC to complex
// permittivity; detector readings are turned back into (eps', eps'') by fitting
// the circuit model to them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/special_functions/fpclassify.hpp>
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/tools/roots.hpp>

#include "dps/error.hpp"
#include "dps/geometry.hpp"
#include "dps/sensitivity.hpp"

namespace dps {

/// Gravimetric water fraction of a prepared sample, percent.
[[nodiscard]] inline double vwc_from_weights(double w_dry_g, double w_water_g) {
    if (!(w_dry_g > 0.0) || !(w_water_g >= 0.0)) {
        fail(ErrorKind::invalid_input, "weights need w_dry > 0 and w_water >= 0");
    }
    return 100.0 * w_water_g / (w_dry_g + w_water_g);
}

[[nodiscard]] inline double estimation_error_percent(double measured, double nominal) {
    if (nominal == 0.0 || !std::isfinite(nominal)) {
        fail(ErrorKind::invalid_input, "nominal value must be non-zero");
    }
    return std::abs(measured - nominal) / nominal * 100.0;
}

/// VWC resolution (percent) implied by a phase accuracy at a given sensitivity.
[[nodiscard]] inline double resolution(double sensitivity_deg_per_vwc, double phase_accuracy_deg) {
    if (!(sensitivity_deg_per_vwc > 0.0)) {
        fail(ErrorKind::degenerate, "sensitivity must be positive");
    }
    return phase_accuracy_deg / sensitivity_deg_per_vwc;
}

enum class Interpolation { linear, monotone_cubic };

struct CalibrationPoint {
    double vwc_percent = 0.0;
    double eps_real = 0.0;
    double eps_imag = 0.0;
};

/// Tabulated VWC -> (eps', eps'') relation. eps' must rise strictly with VWC so
/// the curve can be inverted.
class SoilCalibrationCurve {
public:
    SoilCalibrationCurve(std::vector<CalibrationPoint> points, Interpolation mode = Interpolation::linear)
        : points_(std::move(points)), mode_(mode) {
        if (points_.size() < 2) {
            fail(ErrorKind::invalid_input, "calibration curve needs at least two points");
        }
        for (std::size_t i = 1; i < points_.size(); ++i) {
            if (!(points_[i].vwc_percent > points_[i - 1].vwc_percent)) {
                fail(ErrorKind::invalid_input, "calibration VWC must be strictly increasing");
            }
            if (!(points_[i].eps_real > points_[i - 1].eps_real)) {
                fail(ErrorKind::invalid_input, "calibration eps' must be strictly increasing with VWC");
            }
            if (points_[i].eps_imag < points_[i - 1].eps_imag) {
                fail(ErrorKind::invalid_input, "calibration eps'' must be non-decreasing with VWC");
            }
        }
        if (mode_ == Interpolation::monotone_cubic && points_.size() < 4) {
            fail(ErrorKind::invalid_input, "monotone cubic interpolation needs at least four points");
        }
    }

    [[nodiscard]] const std::vector<CalibrationPoint>& points() const noexcept { return points_; }
    [[nodiscard]] Interpolation interpolation() const noexcept { return mode_; }
    [[nodiscard]] double min_vwc() const noexcept { return points_.front().vwc_percent; }
    [[nodiscard]] double max_vwc() const noexcept { return points_.back().vwc_percent; }
    [[nodiscard]] double min_eps() const noexcept { return points_.front().eps_real; }
    [[nodiscard]] double max_eps() const noexcept { return points_.back().eps_real; }

    [[nodiscard]] SoilCalibrationCurve with_interpolation(Interpolation mode) const {
        return SoilCalibrationCurve(points_, mode);
    }

    [[nodiscard]] MutPermittivity permittivity_from_vwc(double vwc) const {
        if (!(vwc >= min_vwc()) || !(vwc <= max_vwc())) {
            throw ExtrapolationError("VWC " + std::to_string(vwc) + "% outside calibration range",
                                     vwc < min_vwc() ? min_vwc() : max_vwc());
        }
        if (const auto knot = knot_at(&CalibrationPoint::vwc_percent, vwc)) {
            return {points_[*knot].eps_real, points_[*knot].eps_imag};
        }
        return {interpolate(&CalibrationPoint::vwc_percent, &CalibrationPoint::eps_real, vwc),
                interpolate(&CalibrationPoint::vwc_percent, &CalibrationPoint::eps_imag, vwc)};
    }

    [[nodiscard]] double vwc_from_permittivity(double eps_real) const {
        if (!(eps_real >= min_eps()) || !(eps_real <= max_eps())) {
            throw ExtrapolationError("eps' " + std::to_string(eps_real) + " outside calibration range",
                                     eps_real < min_eps() ? min_eps() : max_eps());
        }
        if (const auto knot = knot_at(&CalibrationPoint::eps_real, eps_real)) {
            return points_[*knot].vwc_percent;
        }
        const std::size_t seg = segment(&CalibrationPoint::eps_real, eps_real);
        const CalibrationPoint& lo = points_[seg];
        const CalibrationPoint& hi = points_[seg + 1];
        if (mode_ == Interpolation::linear) {
            const double t = (eps_real - lo.eps_real) / (hi.eps_real - lo.eps_real);
            return lo.vwc_percent + t * (hi.vwc_percent - lo.vwc_percent);
        }
        const auto residual = [&](double v) {
            return interpolate(&CalibrationPoint::vwc_percent, &CalibrationPoint::eps_real, v) - eps_real;
        };
        std::uintmax_t max_iter = 200;
        const auto [a, b] = boost::math::tools::toms748_solve(
            residual, lo.vwc_percent, hi.vwc_percent, lo.eps_real - eps_real, hi.eps_real - eps_real,
            boost::math::tools::eps_tolerance<double>(52), max_iter);
        return 0.5 * (a + b);
    }

    /// Secant slope d(eps')/d(VWC) over the segment containing `vwc` (the
    /// segment below it at the top knot).
    [[nodiscard]] double eps_slope(double vwc) const {
        if (!(vwc >= min_vwc()) || !(vwc <= max_vwc())) {
            throw ExtrapolationError("VWC outside calibration range", vwc < min_vwc() ? min_vwc() : max_vwc());
        }
        std::size_t seg = segment(&CalibrationPoint::vwc_percent, vwc);
        if (vwc == points_[seg].vwc_percent && seg > 0) {
            --seg;
        }
        const CalibrationPoint& lo = points_[seg];
        const CalibrationPoint& hi = points_[seg + 1];
        return (hi.eps_real - lo.eps_real) / (hi.vwc_percent - lo.vwc_percent);
    }

private:
    using Field = double CalibrationPoint::*;

    std::optional<std::size_t> knot_at(Field x, double v) const {
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (points_[i].*x == v) {
                return i;
            }
        }
        return std::nullopt;
    }

    /// Index of the segment [i, i+1] that contains v.
    std::size_t segment(Field x, double v) const {
        std::size_t i = 0;
        while (i + 2 < points_.size() && v >= points_[i + 1].*x) {
            ++i;
        }
        return i;
    }

    double interpolate(Field x, Field y, double v) const {
        if (mode_ == Interpolation::linear) {
            const std::size_t i = segment(x, v);
            const double t = (v - points_[i].*x) / (points_[i + 1].*x - points_[i].*x);
            return points_[i].*y + t * (points_[i + 1].*y - points_[i].*y);
        }
        std::vector<double> xs;
        std::vector<double> ys;
        for (const auto& p : points_) {
            xs.push_back(p.*x);
            ys.push_back(p.*y);
        }
        const boost::math::interpolators::pchip<std::vector<double>> spline(std::move(xs), std::move(ys));
        return spline(v);
    }

    std::vector<CalibrationPoint> points_;
    Interpolation mode_;
};

/// Sand at ~130 MHz: VWC % -> (eps', eps'').
[[nodiscard]] inline SoilCalibrationCurve sand_calibration(Interpolation mode = Interpolation::linear) {
    return SoilCalibrationCurve({{0.0, 2.5, 0.05},
                                 {5.0, 6.0, 0.5},
                                 {10.0, 8.0, 0.9},
                                 {15.0, 14.5, 1.8},
                                 {20.0, 18.0, 2.5},
                                 {25.0, 21.0, 3.1},
                                 {30.0, 23.5, 3.5}},
                                mode);
}

/// Phase/gain detector transfer characteristic. Slopes are the part's nominal
/// 10 mV/degree and 30 mV/dB; the anchors are configuration.
struct DetectorConfig {
    double phase_anchor_v = 1.8;      ///< output at 0 degrees
    double phase_slope_v_per_deg = -0.010;
    double mag_anchor_v = 0.9;        ///< output at 0 dB
    double mag_slope_v_per_db = 0.030;
    double max_loss_db = 30.0;
    double v_min = 0.0;
    double v_max = 1.8;
    /// Quantization lattice: 1/phase_lattice degrees and 1/loss_lattice dB.
    double phase_lattice = 10.0;
    double loss_lattice = 10.0;
};

struct DetectorReading {
    double v_p = 0.0;
    double v_m = 0.0;
};

struct DetectorValues {
    double folded_phase_deg = 0.0;
    double loss_db = 0.0;
};

/// Folds any phase into [0, 180] degrees; the detector cannot tell +phi from -phi.
[[nodiscard]] inline double fold_phase(double deg) noexcept {
    double w = std::fmod(deg + 180.0, 360.0);
    if (w < 0.0) {
        w += 360.0;
    }
    return std::abs(w - 180.0);
}

[[nodiscard]] inline double snap(double value, double lattice) { return std::round(value * lattice) / lattice; }

[[nodiscard]] inline DetectorReading detector_encode(double delta_phi_deg, double loss_db, bool quantize = false,
                                                     const DetectorConfig& cfg = {}) {
    if (!std::isfinite(delta_phi_deg) || !std::isfinite(loss_db)) {
        fail(ErrorKind::range, "detector inputs must be finite");
    }
    double phase = fold_phase(delta_phi_deg);
    double loss = loss_db;
    if (quantize) {
        phase = snap(phase, cfg.phase_lattice);
        loss = snap(loss, cfg.loss_lattice);
    }
    if (std::abs(loss) > cfg.max_loss_db) {
        fail(ErrorKind::range, "loss " + std::to_string(loss_db) + " dB outside detector range");
    }
    return {cfg.phase_anchor_v + cfg.phase_slope_v_per_deg * phase, cfg.mag_anchor_v + cfg.mag_slope_v_per_db * loss};
}

[[nodiscard]] inline DetectorValues detector_decode(const DetectorReading& r, bool quantized = false,
                                                    const DetectorConfig& cfg = {}) {
    const auto in_range = [&](double v) { return v >= cfg.v_min && v <= cfg.v_max && std::isfinite(v); };
    if (!in_range(r.v_p) || !in_range(r.v_m)) {
        fail(ErrorKind::range, "detector voltage outside [" + std::to_string(cfg.v_min) + ", " +
                                   std::to_string(cfg.v_max) + "] V");
    }
    DetectorValues out{(r.v_p - cfg.phase_anchor_v) / cfg.phase_slope_v_per_deg,
                       (r.v_m - cfg.mag_anchor_v) / cfg.mag_slope_v_per_db};
    if (quantized) {
        out.folded_phase_deg = snap(out.folded_phase_deg, cfg.phase_lattice);
        out.loss_db = snap(out.loss_db, cfg.loss_lattice);
    }
    return out;
}

struct InversionOptions {
    double eps_real_min = 1.0;
    double eps_real_max = 30.0;
    double eps_real_step = 0.5;
    double eps_imag_min = 0.0;
    double eps_imag_max = 5.0;
    double eps_imag_step = 0.25;
    double phase_accuracy_deg = 0.1;  ///< residual weight of the phase channel
    double loss_accuracy_db = 0.1;    ///< residual weight of the loss channel
    double tolerance = 1e-6;
    int max_iterations = 200;
    double max_residual = 3.0;  ///< above this after refinement: no fit
    bool quantized = false;     ///< snap decoded readings onto the detector lattice
    /// Snap eps' onto the nearest curve end when it overshoots by less than the
    /// phase uncertainty of the reading (half a lattice step when quantized,
    /// plus the residual left by the refinement).
    bool snap_to_curve_end = true;
    DetectorConfig detector;
};

struct InversionResult {
    MutPermittivity eps;
    std::optional<double> vwc_percent;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<std::string> warnings;
};

namespace detail {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Nelder-Mead on a box, deterministic schedule.
template <class F>
Vec2 nelder_mead(F&& objective, Vec2 start, Vec2 scale, Vec2 lower, Vec2 upper, double tolerance,
                 int max_iter, int& iterations, double& best_value) {
    const auto clamp = [&](Vec2 p) {
        return Vec2{std::clamp(p.x, lower.x, upper.x), std::clamp(p.y, lower.y, upper.y)};
    };
    std::array<Vec2, 3> s{clamp(start), clamp({start.x + scale.x, start.y}), clamp({start.x, start.y + scale.y})};
    if (s[1].x == s[0].x) {
        s[1] = clamp({start.x - scale.x, start.y});
    }
    if (s[2].y == s[0].y) {
        s[2] = clamp({start.x, start.y - scale.y});
    }
    std::array<double, 3> v{objective(s[0]), objective(s[1]), objective(s[2])};
    iterations = 0;
    while (iterations < max_iter) {
        std::array<int, 3> idx{0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
        const int b = idx[0];
        const int m = idx[1];
        const int w = idx[2];
        if (v[b] < tolerance) {
            break;
        }
        const double span = std::max({std::abs(s[w].x - s[b].x), std::abs(s[m].x - s[b].x),
                                      std::abs(s[w].y - s[b].y), std::abs(s[m].y - s[b].y)});
        if (span < 1e-13) {
            break;
        }
        ++iterations;
        const Vec2 centroid{0.5 * (s[b].x + s[m].x), 0.5 * (s[b].y + s[m].y)};
        const auto along = [&](double t) {
            return clamp({centroid.x + t * (s[w].x - centroid.x), centroid.y + t * (s[w].y - centroid.y)});
        };
        const Vec2 r = along(-1.0);
        const double fr = objective(r);
        if (fr < v[b]) {
            const Vec2 e = along(-2.0);
            const double fe = objective(e);
            if (fe < fr) {
                s[w] = e;
                v[w] = fe;
            } else {
                s[w] = r;
                v[w] = fr;
            }
        } else if (fr < v[m]) {
            s[w] = r;
            v[w] = fr;
        } else {
            const Vec2 c = fr < v[w] ? along(-0.5) : along(0.5);
            const double fc = objective(c);
            if (fc < std::min(fr, v[w])) {
                s[w] = c;
                v[w] = fc;
            } else {
                for (const int k : {m, w}) {
                    s[k] = clamp({s[b].x + 0.5 * (s[k].x - s[b].x), s[b].y + 0.5 * (s[k].y - s[b].y)});
                    v[k] = objective(s[k]);
                }
            }
        }
    }
    const auto best = std::min_element(v.begin(), v.end()) - v.begin();
    best_value = v[static_cast<std::size_t>(best)];
    return s[static_cast<std::size_t>(best)];
}

}  // namespace detail

/// Finds (eps', eps'') whose modelled folded phase and loss match a detector
/// reading: coarse grid search followed by Nelder-Mead refinement. Throws
/// no_fit if the weighted residual stays above `max_residual`.
[[nodiscard]] inline InversionResult invert_permittivity(const DetectorReading& reading, const SensorModel& model,
                                                         double f_exc, const SoilCalibrationCurve& curve,
                                                         const InversionOptions& opts = {}) {
    const DetectorValues measured = detector_decode(reading, opts.quantized, opts.detector);

    const auto residual = [&](double er, double ei) {
        const PhaseResponse r = phase_response(model, {er, ei}, f_exc);
        const double dp = (fold_phase(r.delta_theta_deg) - measured.folded_phase_deg) / opts.phase_accuracy_deg;
        const double dl = (r.loss_db - measured.loss_db) / opts.loss_accuracy_db;
        return std::hypot(dp, dl);
    };

    InversionResult result;

    // Folded phase must be monotone along the calibration envelope for the
    // phase channel to identify eps' uniquely.
    {
        double prev = std::numeric_limits<double>::quiet_NaN();
        int direction = 0;
        bool monotone = true;
        std::vector<double> turning_points;
        const int samples = 60;
        for (int k = 0; k <= samples; ++k) {
            const double v = curve.min_vwc() + (curve.max_vwc() - curve.min_vwc()) * k / samples;
            const MutPermittivity m = curve.permittivity_from_vwc(v);
            const double fp = fold_phase(phase_response(model, m, f_exc).delta_theta_deg);
            if (k > 0) {
                const int d = fp > prev ? 1 : (fp < prev ? -1 : 0);
                if (direction != 0 && d != 0 && d != direction) {
                    monotone = false;
                    turning_points.push_back(v);
                }
                if (d != 0) {
                    direction = d;
                }
            }
            prev = fp;
        }
        if (!monotone) {
            std::string msg = "folded phase is not monotone over the calibration envelope at this excitation "
                              "frequency; candidate branches split at VWC";
            for (const double v : turning_points) {
                msg += " " + std::to_string(v) + "%";
            }
            result.warnings.push_back(msg);
        }
    }

    double best = std::numeric_limits<double>::infinity();
    detail::Vec2 start{};
    const int n_re = static_cast<int>(std::lround((opts.eps_real_max - opts.eps_real_min) / opts.eps_real_step));
    const int n_im = static_cast<int>(std::lround((opts.eps_imag_max - opts.eps_imag_min) / opts.eps_imag_step));
    for (int a = 0; a <= n_re; ++a) {
        const double er = opts.eps_real_min + opts.eps_real_step * a;
        for (int b = 0; b <= n_im; ++b) {
            const double ei = opts.eps_imag_min + opts.eps_imag_step * b;
            const double r = residual(er, ei);
            if (r < best) {
                best = r;
                start = {er, ei};
            }
        }
    }

    // A simplex can collapse against the box edge (eps'' = 0 is common for
    // dry soil), so restart from the best point with a fresh, smaller simplex.
    int iterations = 0;
    double refined = best;
    detail::Vec2 sol = start;
    detail::Vec2 scale{0.5 * opts.eps_real_step, 0.5 * opts.eps_imag_step};
    for (int restart = 0; restart < 4 && refined >= opts.tolerance; ++restart) {
        int used = 0;
        double value = refined;
        const detail::Vec2 next = detail::nelder_mead(
            [&](detail::Vec2 p) { return residual(p.x, p.y); }, sol, scale, {opts.eps_real_min, opts.eps_imag_min},
            {opts.eps_real_max, opts.eps_imag_max}, opts.tolerance, opts.max_iterations, used, value);
        iterations += used;
        if (value < refined) {
            sol = next;
            refined = value;
        }
        scale = {0.1 * scale.x, 0.1 * scale.y};
    }

    result.eps = {sol.x, sol.y};
    result.residual = refined;
    result.iterations = iterations;
    result.converged = refined < opts.tolerance;
    if (refined > opts.max_residual) {
        fail(ErrorKind::no_fit, "reading inconsistent with the model: residual " + std::to_string(refined));
    }
    if (!result.converged) {
        result.warnings.push_back("refinement stopped above tolerance; residual " + std::to_string(refined));
    }
    double eps_for_vwc = sol.x;
    if (opts.snap_to_curve_end && (sol.x < curve.min_eps() || sol.x > curve.max_eps())) {
        const double edge = sol.x < curve.min_eps() ? curve.min_eps() : curve.max_eps();
        const double h = 1e-3;
        const double slope =
            std::abs(fold_phase(phase_response(model, {edge + h, sol.y}, f_exc).delta_theta_deg) -
                     fold_phase(phase_response(model, {std::max(1.0, edge - h), sol.y}, f_exc).delta_theta_deg)) /
            (edge + h - std::max(1.0, edge - h));
        const double phase_band =
            (opts.quantized ? 0.5 / opts.detector.phase_lattice : 0.0) + refined * opts.phase_accuracy_deg;
        if (slope > 0.0 && std::abs(sol.x - edge) <= phase_band / slope) {
            result.warnings.push_back("eps' " + std::to_string(sol.x) +
                                      " lies past the calibration end within the reading uncertainty; "
                                      "VWC taken at the curve end");
            eps_for_vwc = edge;
        }
    }
    if (eps_for_vwc >= curve.min_eps() && eps_for_vwc <= curve.max_eps()) {
        result.vwc_percent = curve.vwc_from_permittivity(eps_for_vwc);
    } else {
        result.warnings.push_back("eps' outside the calibration curve; VWC unavailable");
    }
    return result;
}

}  // namespace dps
