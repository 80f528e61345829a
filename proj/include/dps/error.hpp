#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dps {

/// Failure categories shared by every module. The CLI maps them onto exit
/// codes: model-domain kinds exit 1, io/config kinds exit 2.
enum class ErrorKind {
    invalid_input,
    singular_network,
    pole_proximity,
    closed_form_inapplicable,
    geometry_infeasible,
    precondition,
    formula_domain,
    step_size,
    degenerate,
    extrapolation_refused,
    range,
    no_fit,
    fit_infeasible,
    sampling,
    aliasing,
    config,
    io,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::singular_network: return "singular-network";
    case ErrorKind::pole_proximity: return "pole-proximity";
    case ErrorKind::closed_form_inapplicable: return "closed-form-inapplicable";
    case ErrorKind::geometry_infeasible: return "geometry-infeasible";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::formula_domain: return "formula-domain";
    case ErrorKind::step_size: return "step-size";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::extrapolation_refused: return "extrapolation-refused";
    case ErrorKind::range: return "range";
    case ErrorKind::no_fit: return "no-fit";
    case ErrorKind::fit_infeasible: return "fit-infeasible";
    case ErrorKind::sampling: return "sampling";
    case ErrorKind::aliasing: return "aliasing";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

    [[nodiscard]] bool is_io_or_config() const noexcept {
        return kind_ == ErrorKind::io || kind_ == ErrorKind::config;
    }

private:
    ErrorKind kind_;
};

/// Refused interpolation outside a calibration table; carries the violated bound.
class ExtrapolationError : public Error {
public:
    ExtrapolationError(const std::string& message, double nearest_bound)
        : Error(ErrorKind::extrapolation_refused, message), nearest_bound_(nearest_bound) {}

    [[nodiscard]] double nearest_bound() const noexcept { return nearest_bound_; }

private:
    double nearest_bound_;
};

/// Config parse failure with the offending line (0 when not line-specific) and field.
class ConfigError : public Error {
public:
    ConfigError(const std::string& message, std::string field, int line = 0)
        : Error(ErrorKind::config,
                (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + "field '" +
                    field + "': " + message),
          field_(std::move(field)), line_(line) {}

    [[nodiscard]] const std::string& field() const noexcept { return field_; }
    [[nodiscard]] int line() const noexcept { return line_; }

private:
    std::string field_;
    int line_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace dps
