#pragma once

// Flat key-value configuration with unit suffixes:
//
//     # comment
//     h_u = 0.6mm
//     sweep_vwc = 0, 10, 20, 30
//
// Values are parsed lazily by typed getters, so a malformed suffix is reported
// against the field that carries it.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dps/error.hpp"
#include "dps/geometry.hpp"

namespace dps {

enum class Dimension { none, length, area, frequency, capacitance, inductance, time, impedance, conductance };

namespace detail {

struct UnitEntry {
    std::string_view suffix;
    Dimension dimension;
    double factor;
};

inline constexpr UnitEntry unit_table[] = {
    {"m", Dimension::length, 1.0},          {"cm", Dimension::length, 1e-2},
    {"mm", Dimension::length, 1e-3},        {"um", Dimension::length, 1e-6},
    {"\xC2\xB5m", Dimension::length, 1e-6}, {"\xCE\xBCm", Dimension::length, 1e-6},
    {"m2", Dimension::area, 1.0},           {"cm2", Dimension::area, 1e-4},
    {"mm2", Dimension::area, 1e-6},         {"Hz", Dimension::frequency, 1.0},
    {"kHz", Dimension::frequency, 1e3},     {"MHz", Dimension::frequency, 1e6},
    {"GHz", Dimension::frequency, 1e9},     {"F", Dimension::capacitance, 1.0},
    {"nF", Dimension::capacitance, 1e-9},   {"pF", Dimension::capacitance, 1e-12},
    {"fF", Dimension::capacitance, 1e-15},  {"H", Dimension::inductance, 1.0},
    {"uH", Dimension::inductance, 1e-6},    {"nH", Dimension::inductance, 1e-9},
    {"pH", Dimension::inductance, 1e-12},   {"s", Dimension::time, 1.0},
    {"ms", Dimension::time, 1e-3},          {"us", Dimension::time, 1e-6},
    {"ns", Dimension::time, 1e-9},          {"ps", Dimension::time, 1e-12},
    {"fs", Dimension::time, 1e-15},         {"ohm", Dimension::impedance, 1.0},
    {"S/m", Dimension::conductance, 1.0},
};

inline std::string_view dimension_name(Dimension d) {
    switch (d) {
    case Dimension::none: return "dimensionless";
    case Dimension::length: return "length";
    case Dimension::area: return "area";
    case Dimension::frequency: return "frequency";
    case Dimension::capacitance: return "capacitance";
    case Dimension::inductance: return "inductance";
    case Dimension::time: return "time";
    case Dimension::impedance: return "impedance";
    case Dimension::conductance: return "conductance";
    }
    return "?";
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                           : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return parts;
}

}  // namespace detail

class Config {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    Config() = default;

    [[nodiscard]] static Config parse(std::string_view text, std::filesystem::path base_dir = {}) {
        Config cfg;
        cfg.base_dir_ = std::move(base_dir);
        int line_no = 0;
        std::size_t start = 0;
        while (start <= text.size()) {
            const std::size_t end = text.find('\n', start);
            std::string_view line =
                text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
            ++line_no;
            if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
                line = line.substr(0, hash);
            }
            line = detail::trim(line);
            if (!line.empty()) {
                const std::size_t eq = line.find('=');
                if (eq == std::string_view::npos) {
                    throw ConfigError("expected 'key = value'", std::string(line), line_no);
                }
                const std::string key(detail::trim(line.substr(0, eq)));
                const std::string value(detail::trim(line.substr(eq + 1)));
                if (key.empty()) {
                    throw ConfigError("empty key", "", line_no);
                }
                if (value.empty()) {
                    throw ConfigError("empty value", key, line_no);
                }
                if (cfg.entries_.contains(key)) {
                    throw ConfigError("duplicate key", key, line_no);
                }
                cfg.entries_[key] = Entry{value, line_no};
            }
            if (end == std::string_view::npos) {
                break;
            }
            start = end + 1;
        }
        return cfg;
    }

    [[nodiscard]] static Config load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            fail(ErrorKind::io, "cannot open config file " + path.string());
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path.parent_path());
    }

    [[nodiscard]] bool has(const std::string& key) const { return entries_.contains(key); }

    void set(const std::string& key, std::string value) { entries_[key] = Entry{std::move(value), 0}; }

    [[nodiscard]] const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

    /// Scalar with the expected dimension, converted to SI.
    [[nodiscard]] double quantity(const std::string& key, Dimension dim) const {
        const Entry& e = entry(key);
        return parse_quantity(e.value, dim, key, e.line);
    }

    [[nodiscard]] double quantity_or(const std::string& key, Dimension dim, double fallback) const {
        return has(key) ? quantity(key, dim) : fallback;
    }

    [[nodiscard]] std::vector<double> quantities(const std::string& key, Dimension dim) const {
        const Entry& e = entry(key);
        std::vector<double> out;
        for (const std::string_view part : detail::split(e.value, ',')) {
            out.push_back(parse_quantity(part, dim, key, e.line));
        }
        return out;
    }

    [[nodiscard]] std::vector<double> quantities_or(const std::string& key, Dimension dim,
                                                    std::vector<double> fallback) const {
        return has(key) ? quantities(key, dim) : std::move(fallback);
    }

    [[nodiscard]] double number(const std::string& key) const { return quantity(key, Dimension::none); }

    [[nodiscard]] double number_or(const std::string& key, double fallback) const {
        return quantity_or(key, Dimension::none, fallback);
    }

    [[nodiscard]] int integer(const std::string& key) const {
        const Entry& e = entry(key);
        int v = 0;
        const std::string_view s = e.value;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            throw ConfigError("expected an integer, got '" + e.value + "'", key, e.line);
        }
        return v;
    }

    [[nodiscard]] int integer_or(const std::string& key, int fallback) const {
        return has(key) ? integer(key) : fallback;
    }

    [[nodiscard]] std::string text(const std::string& key) const { return entry(key).value; }

    [[nodiscard]] std::string text_or(const std::string& key, std::string fallback) const {
        return has(key) ? entry(key).value : std::move(fallback);
    }

    [[nodiscard]] bool flag_or(const std::string& key, bool fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const Entry& e = entry(key);
        if (e.value == "true" || e.value == "yes" || e.value == "1") {
            return true;
        }
        if (e.value == "false" || e.value == "no" || e.value == "0") {
            return false;
        }
        throw ConfigError("expected true/false, got '" + e.value + "'", key, e.line);
    }

    /// One of `choices`, else a config error listing them.
    [[nodiscard]] std::string choice_or(const std::string& key, const std::vector<std::string>& choices,
                                        std::string fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const Entry& e = entry(key);
        if (std::find(choices.begin(), choices.end(), e.value) == choices.end()) {
            std::string list;
            for (const auto& c : choices) {
                list += (list.empty() ? "" : ", ") + c;
            }
            throw ConfigError("expected one of {" + list + "}, got '" + e.value + "'", key, e.line);
        }
        return e.value;
    }

    /// Path value resolved against the config file's directory.
    [[nodiscard]] std::filesystem::path path(const std::string& key) const {
        std::filesystem::path p = text(key);
        return p.is_absolute() ? p : base_dir_ / p;
    }

    /// Keys never read by a getter; reported as warnings by the CLI.
    [[nodiscard]] std::vector<std::string> unused_keys() const {
        std::vector<std::string> out;
        for (const auto& [k, _] : entries_) {
            if (!used_.contains(k)) {
                out.push_back(k);
            }
        }
        return out;
    }

    /// Canonical text of all entries (sorted by key); stable across runs.
    [[nodiscard]] std::string canonical() const {
        std::string out;
        for (const auto& [k, e] : entries_) {
            out += k + "=" + e.value + "\n";
        }
        return out;
    }

private:
    const Entry& entry(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) {
            throw ConfigError("missing required field", key);
        }
        used_.insert(key);
        return it->second;
    }

    static double parse_quantity(std::string_view text, Dimension dim, const std::string& key, int line) {
        text = detail::trim(text);
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc() || !std::isfinite(value)) {
            throw ConfigError("expected a number, got '" + std::string(text) + "'", key, line);
        }
        const std::string_view suffix = detail::trim(text.substr(static_cast<std::size_t>(ptr - text.data())));
        if (suffix.empty()) {
            if (dim == Dimension::none || dim == Dimension::impedance) {
                return value;
            }
            throw ConfigError("missing unit suffix (expected " +
                                  std::string(detail::dimension_name(dim)) + ")",
                              key, line);
        }
        for (const auto& u : detail::unit_table) {
            if (u.suffix == suffix) {
                if (u.dimension != dim) {
                    throw ConfigError("unit '" + std::string(suffix) + "' is not a " +
                                          std::string(detail::dimension_name(dim)) + " unit",
                                      key, line);
                }
                return value * u.factor;
            }
        }
        throw ConfigError("unknown unit suffix '" + std::string(suffix) + "'", key, line);
    }

    std::map<std::string, Entry> entries_;
    mutable std::set<std::string> used_;
    std::filesystem::path base_dir_;
};

/// Geometry block of a config. Spiral turn lengths come either from an explicit
/// `csr_turn_lengths` list or from a rectangular-spiral reconstruction.
[[nodiscard]] inline GeometrySpec load_geometry(const Config& cfg) {
    GeometrySpec g;
    g.substrate_eps_r = cfg.number("substrate_eps_r");
    g.substrate_tan_delta = cfg.number_or("substrate_tan_delta", 0.0);
    g.h_u = cfg.quantity("h_u", Dimension::length);
    g.h_d = cfg.quantity("h_d", Dimension::length);
    g.t_m = cfg.quantity("t_m", Dimension::length);
    g.a = cfg.quantity("a", Dimension::length);
    g.b_len = cfg.quantity("b_len", Dimension::length);
    g.A_d = cfg.quantity("A_d", Dimension::area);
    g.S_c = cfg.quantity("S_c", Dimension::length);
    g.l_i = cfg.quantity("l_i", Dimension::length);
    g.W_i = cfg.quantity("W_i", Dimension::length);
    g.N_fingers = cfg.integer("N_fingers");
    g.h_m = cfg.quantity("h_m", Dimension::length);
    if (cfg.has("csr_turn_lengths")) {
        g.csr_turn_lengths = cfg.quantities("csr_turn_lengths", Dimension::length);
    } else {
        g.csr_turn_lengths = rectangular_spiral_turn_lengths(
            cfg.quantity("csr_outer_length", Dimension::length),
            cfg.quantity("csr_outer_width", Dimension::length),
            cfg.quantity("csr_slot_width", Dimension::length),
            cfg.quantity("csr_slot_spacing", Dimension::length), cfg.integer("csr_turns"));
    }
    try {
        g.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what(), "geometry");
    }
    return g;
}

/// Extraction options from config keys; anchor = reference | none.
[[nodiscard]] inline ExtractionOptions load_extraction_options(const Config& cfg) {
    ExtractionOptions opts;
    opts.eps_form = cfg.choice_or("eps_eff_form", {"standard", "as_printed"}, "standard") == "standard"
                        ? EpsEffForm::standard
                        : EpsEffForm::as_printed;
    opts.fringe_form = cfg.choice_or("fringe_form", {"standard", "as_printed"}, "standard") == "standard"
                           ? FringeForm::standard
                           : FringeForm::as_printed;
    opts.rectify_log = cfg.flag_or("rectify_log", false);
    opts.substrate_loss = cfg.flag_or("substrate_loss", false);
    if (cfg.choice_or("anchor", {"reference", "none"}, "reference") == "reference") {
        opts.anchor = reference_circuit();
    }
    return opts;
}

[[nodiscard]] inline Inductors load_inductors(const Config& cfg) {
    Inductors ind;
    ind.L = cfg.quantity_or("L", Dimension::inductance, ind.L);
    ind.L_c = cfg.quantity_or("L_c", Dimension::inductance, ind.L_c);
    return ind;
}

}  // namespace dps
