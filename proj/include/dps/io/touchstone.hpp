#pragma once

// Two-port Touchstone v1.1 files. Writing always uses Hz and real/imaginary
// pairs. Reading also accepts kHz/MHz/GHz and the MA and DB formats.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "dps/circuit.hpp"
#include "dps/io/format.hpp"

namespace dps::io {

struct TouchstonePoint {
    double frequency = 0.0;
    SParams s{};
};

struct TouchstoneData {
    double reference_impedance = default_z0;
    std::vector<TouchstonePoint> points;
};

/// Masked sweep points have no data line; a comment records their frequency.
[[nodiscard]] inline std::string touchstone_text(const Sweep& sweep) {
    std::string out = "! two-port sweep, " + std::to_string(sweep.n_cells) + " cell(s)\n";
    out += "# HZ S RI R " + format_number(sweep.z0) + "\n";
    for (const SweepPoint& p : sweep.points) {
        if (p.masked) {
            out += "! masked " + format_number(p.frequency) + "\n";
            continue;
        }
        out += format_number(p.frequency);
        for (const Complex v : {p.s.s11, p.s.s21, p.s.s12, p.s.s22}) {
            out += ' ';
            out += format_number(v.real());
            out += ' ';
            out += format_number(v.imag());
        }
        out += '\n';
    }
    return out;
}

inline void write_touchstone(const std::filesystem::path& path, const Sweep& sweep) {
    write_file_atomic(path, touchstone_text(sweep));
}

[[nodiscard]] inline TouchstoneData parse_touchstone(std::string_view text) {
    enum class Format { ri, ma, db };
    double freq_scale = 1e9;  // format default is GHz
    Format format = Format::ma;
    TouchstoneData data;
    bool seen_options = false;
    std::vector<double> values;
    int line_no = 0;
    for (std::string_view line : lines_of(text)) {
        ++line_no;
        if (const auto bang = line.find('!'); bang != std::string_view::npos) {
            line = line.substr(0, bang);
        }
        std::string lowered(line);
        std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        std::vector<std::string> tokens;
        {
            std::string token;
            for (const char ch : lowered) {
                if (ch == ' ' || ch == '\t') {
                    if (!token.empty()) {
                        tokens.push_back(token);
                        token.clear();
                    }
                } else {
                    token += ch;
                }
            }
            if (!token.empty()) {
                tokens.push_back(token);
            }
        }
        if (tokens.empty()) {
            continue;
        }
        if (tokens.front() == "#") {
            if (seen_options) {
                fail(ErrorKind::io, "line " + std::to_string(line_no) + ": repeated option line");
            }
            seen_options = true;
            for (std::size_t i = 1; i < tokens.size(); ++i) {
                const std::string& t = tokens[i];
                if (t == "hz") freq_scale = 1.0;
                else if (t == "khz") freq_scale = 1e3;
                else if (t == "mhz") freq_scale = 1e6;
                else if (t == "ghz") freq_scale = 1e9;
                else if (t == "ri") format = Format::ri;
                else if (t == "ma") format = Format::ma;
                else if (t == "db") format = Format::db;
                else if (t == "s") continue;
                else if (t == "r" && i + 1 < tokens.size()) data.reference_impedance = parse_number(tokens[++i]);
                else fail(ErrorKind::io, "line " + std::to_string(line_no) + ": unsupported option '" + t + "'");
            }
            continue;
        }
        for (const std::string& t : tokens) {
            values.push_back(parse_number(t, "Touchstone value"));
        }
        // A record may continue on following lines; wait for all nine values.
        if (values.size() < 9) {
            continue;
        }
        if (values.size() > 9) {
            fail(ErrorKind::io, "line " + std::to_string(line_no) + ": two-port records need 9 values");
        }
        const auto pair = [&](std::size_t k) {
            const double x = values[k];
            const double y = values[k + 1];
            switch (format) {
            case Format::ri: return Complex{x, y};
            case Format::ma: return std::polar(x, y * deg_to_rad);
            case Format::db: return std::polar(std::pow(10.0, x / 20.0), y * deg_to_rad);
            }
            return Complex{};
        };
        TouchstonePoint p;
        p.frequency = values[0] * freq_scale;
        p.s = {pair(1), pair(3), pair(5), pair(7), data.reference_impedance};
        data.points.push_back(p);
        values.clear();
    }
    if (!values.empty()) {
        fail(ErrorKind::io, "incomplete two-port record at end of file");
    }
    return data;
}

[[nodiscard]] inline TouchstoneData read_touchstone(const std::filesystem::path& path) {
    return parse_touchstone(read_file(path));
}

}  // namespace dps::io
