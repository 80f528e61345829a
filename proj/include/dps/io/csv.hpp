#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "dps/circuit.hpp"
#include "dps/dispersion_sim.hpp"
#include "dps/io/format.hpp"
#include "dps/soilcal.hpp"

namespace dps::io {

/// Masked rows keep their frequency and carry zeros plus masked_flag = 1.
[[nodiscard]] inline std::string sweep_csv(const Sweep& sweep) {
    std::string out = "freq_hz,s11_re,s11_im,s21_re,s21_im,s21_db,s21_phase_deg_unwrapped,masked_flag\n";
    for (const SweepPoint& p : sweep.points) {
        const double s21_db = p.masked ? 0.0 : p.s21_db;
        const double phase = p.masked ? 0.0 : p.s21_phase_deg;
        for (const double v : {p.frequency, p.s.s11.real(), p.s.s11.imag(), p.s.s21.real(), p.s.s21.imag(), s21_db,
                               phase}) {
            out += format_number(v);
            out += ',';
        }
        out += p.masked ? "1\n" : "0\n";
    }
    return out;
}

inline void write_sweep_csv(const std::filesystem::path& path, const Sweep& sweep) {
    write_file_atomic(path, sweep_csv(sweep));
}

[[nodiscard]] inline std::string calibration_csv(const SoilCalibrationCurve& curve) {
    std::string out = "vwc_percent,eps_real,eps_imag\n";
    for (const CalibrationPoint& p : curve.points()) {
        out += format_number(p.vwc_percent) + ',' + format_number(p.eps_real) + ',' + format_number(p.eps_imag) + '\n';
    }
    return out;
}

inline void save_calibration(const std::filesystem::path& path, const SoilCalibrationCurve& curve) {
    write_file_atomic(path, calibration_csv(curve));
}

/// Header line required; blank lines and lines starting with '#' are skipped.
[[nodiscard]] inline SoilCalibrationCurve parse_calibration(std::string_view text,
                                                             Interpolation mode = Interpolation::linear) {
    const std::vector<std::string_view> lines = lines_of(text);
    std::vector<CalibrationPoint> points;
    bool header = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string_view line = lines[i];
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (!header) {
            header = true;
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 3) {
            fail(ErrorKind::io, "calibration line " + std::to_string(i + 1) + ": expected 3 columns");
        }
        points.push_back({parse_number(fields[0], "vwc_percent"), parse_number(fields[1], "eps_real"),
                          parse_number(fields[2], "eps_imag")});
    }
    return SoilCalibrationCurve(std::move(points), mode);
}

[[nodiscard]] inline SoilCalibrationCurve load_calibration(const std::filesystem::path& path,
                                                            Interpolation mode = Interpolation::linear) {
    return parse_calibration(read_file(path), mode);
}

/// Two columns, time_s and amplitude. `stride` keeps every n-th sample.
[[nodiscard]] inline std::string waveform_csv(const Waveform& w, std::size_t stride = 1) {
    if (stride == 0) {
        fail(ErrorKind::invalid_input, "waveform export stride must be >= 1");
    }
    std::string out = "time_s,amplitude\n";
    for (std::size_t k = 0; k < w.samples.size(); k += stride) {
        out += format_number(w.time(k)) + ',' + format_number(w.samples[k]) + '\n';
    }
    return out;
}

inline void write_waveform_csv(const std::filesystem::path& path, const Waveform& w, std::size_t stride = 1) {
    write_file_atomic(path, waveform_csv(w, stride));
}

/// Matrix with a header row of column labels and one label per row. NaN cells
/// are written as "nan".
[[nodiscard]] inline std::string matrix_csv(const std::string& corner, const std::vector<double>& row_labels,
                                            const std::vector<double>& column_labels,
                                            const std::vector<double>& row_major) {
    if (row_major.size() != row_labels.size() * column_labels.size()) {
        fail(ErrorKind::invalid_input, "matrix size does not match its labels");
    }
    std::string out = corner;
    for (const double c : column_labels) {
        out += ',' + format_number(c);
    }
    out += '\n';
    for (std::size_t r = 0; r < row_labels.size(); ++r) {
        out += format_number(row_labels[r]);
        for (std::size_t c = 0; c < column_labels.size(); ++c) {
            const double v = row_major[r * column_labels.size() + c];
            out += ',';
            out += std::isnan(v) ? std::string("nan") : format_number(v);
        }
        out += '\n';
    }
    return out;
}

struct DetectorRow {
    DetectorReading reading;
    std::optional<double> nominal_vwc;
    std::optional<double> nominal_eps_real;
    std::optional<double> nominal_eps_imag;
};

/// Readings file: header with v_p and v_m, optional nominal_vwc,
/// nominal_eps_real and nominal_eps_imag columns in any order.
[[nodiscard]] inline std::vector<DetectorRow> parse_readings(std::string_view text) {
    const std::vector<std::string_view> lines = lines_of(text);
    std::vector<DetectorRow> rows;
    std::vector<std::string> header;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string_view line = lines[i];
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto fields = split_fields(line);
        if (header.empty()) {
            for (const auto f : fields) {
                header.emplace_back(f);
            }
            const auto has = [&](const char* name) { return std::find(header.begin(), header.end(), name) != header.end(); };
            if (!has("v_p") || !has("v_m")) {
                fail(ErrorKind::io, "readings header needs v_p and v_m columns");
            }
            continue;
        }
        if (fields.size() != header.size()) {
            fail(ErrorKind::io, "readings line " + std::to_string(i + 1) + ": column count differs from header");
        }
        DetectorRow row;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string& name = header[c];
            if (name == "v_p") row.reading.v_p = parse_number(fields[c], name);
            else if (name == "v_m") row.reading.v_m = parse_number(fields[c], name);
            else if (name == "nominal_vwc" && !fields[c].empty()) row.nominal_vwc = parse_number(fields[c], name);
            else if (name == "nominal_eps_real" && !fields[c].empty()) row.nominal_eps_real = parse_number(fields[c], name);
            else if (name == "nominal_eps_imag" && !fields[c].empty()) row.nominal_eps_imag = parse_number(fields[c], name);
        }
        rows.push_back(row);
    }
    if (header.empty()) {
        fail(ErrorKind::io, "readings file is empty");
    }
    return rows;
}

}  // namespace dps::io
