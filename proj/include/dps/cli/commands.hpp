#pragma once

// Implementation of the dps-sense subcommands. Data files written here are
// deterministic; timestamps go only to a sidecar <command>.log file.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>
#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/spdlog.h>

#include "dps/circuit.hpp"
#include "dps/config.hpp"
#include "dps/dispersion_sim.hpp"
#include "dps/geometry.hpp"
#include "dps/io/csv.hpp"
#include "dps/io/format.hpp"
#include "dps/io/touchstone.hpp"
#include "dps/sensitivity.hpp"
#include "dps/soilcal.hpp"

namespace dps::cli {

using json = nlohmann::ordered_json;

inline constexpr int exit_ok = 0;
inline constexpr int exit_model_failure = 1;
inline constexpr int exit_io_failure = 2;

struct Options {
    std::string command;
    std::filesystem::path config;
    std::filesystem::path out = "dps-out";
    bool quantize = false;
    std::optional<double> f_exc;
    std::optional<int> cells;
    std::optional<std::filesystem::path> readings;
};

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"extract", "sweep", "band", "sense", "invert", "pulse"};
    return names;
}

/// Shared state of one command run.
class Context {
public:
    Context(Options opts, Config cfg) : opts_(std::move(opts)), cfg_(std::move(cfg)) {
        std::error_code ec;
        std::filesystem::create_directories(opts_.out, ec);
        if (ec) {
            fail(ErrorKind::io, "cannot create output directory " + opts_.out.string() + ": " + ec.message());
        }
        const std::filesystem::path log_path = opts_.out / (opts_.command + ".log");
        try {
            auto sink = std::make_shared<spdlog::sinks::basic_file_sink_mt>(log_path.string(), true);
            log_ = std::make_shared<spdlog::logger>("dps-sense", sink);
            log_->set_level(spdlog::level::info);
            log_->flush_on(spdlog::level::info);
        } catch (const spdlog::spdlog_ex& e) {
            fail(ErrorKind::io, std::string("cannot open log file: ") + e.what());
        }
    }

    [[nodiscard]] const Options& options() const noexcept { return opts_; }
    [[nodiscard]] const Config& config() const noexcept { return cfg_; }
    [[nodiscard]] spdlog::logger& log() { return *log_; }

    void write(const std::string& name, std::string_view content) {
        io::write_file_atomic(opts_.out / name, content);
        log_->info("wrote {} ({} bytes)", name, content.size());
    }

    void write_json(const std::string& name, const json& value) { write(name, value.dump(2) + "\n"); }

    [[nodiscard]] double f_exc() const {
        return opts_.f_exc ? *opts_.f_exc : cfg_.quantity_or("f_exc", Dimension::frequency, 114e6);
    }

private:
    Options opts_;
    Config cfg_;
    std::shared_ptr<spdlog::logger> log_;
};

[[nodiscard]] inline SensorModel load_model(const Context& ctx) {
    const Config& cfg = ctx.config();
    SensorModel m;
    m.geometry = load_geometry(cfg);
    m.inductors = load_inductors(cfg);
    m.extraction = load_extraction_options(cfg);
    m.n_cells = ctx.options().cells ? *ctx.options().cells : cfg.integer_or("n_cells", 1);
    m.z0 = cfg.quantity_or("z0", Dimension::impedance, default_z0);
    if (m.n_cells < 1) {
        throw ConfigError("must be >= 1", "n_cells");
    }
    return m;
}

[[nodiscard]] inline SoilCalibrationCurve load_curve(const Config& cfg) {
    const Interpolation mode =
        cfg.choice_or("interpolation", {"linear", "monotone_cubic"}, "linear") == "linear"
            ? Interpolation::linear
            : Interpolation::monotone_cubic;
    if (cfg.has("calibration")) {
        return io::load_calibration(cfg.path("calibration"), mode);
    }
    return sand_calibration(mode);
}

/// 64-bit FNV-1a over the canonical text of the geometry fields.
[[nodiscard]] inline std::string geometry_hash(const GeometrySpec& g) {
    std::string text;
    const auto add = [&](const char* name, double v) { text += std::string(name) + "=" + io::format_number(v) + ";"; };
    add("substrate_eps_r", g.substrate_eps_r);
    add("substrate_tan_delta", g.substrate_tan_delta);
    add("h_u", g.h_u);
    add("h_d", g.h_d);
    add("t_m", g.t_m);
    add("a", g.a);
    add("b_len", g.b_len);
    add("A_d", g.A_d);
    for (const double p : g.csr_turn_lengths) {
        add("csr_turn", p);
    }
    add("S_c", g.S_c);
    add("l_i", g.l_i);
    add("W_i", g.W_i);
    add("N_fingers", g.N_fingers);
    add("h_m", g.h_m);
    std::uint64_t hash = 14695981039346656037ULL;
    for (const unsigned char ch : text) {
        hash ^= ch;
        hash *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

[[nodiscard]] inline json complex_json(Complex z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

[[nodiscard]] inline json circuit_json(const DpsCircuitValues& c) {
    return json{{"L_H", c.L},        {"C_i_F", complex_json(c.C_i)}, {"C_u_F", complex_json(c.C_u)},
                {"C_d_F", c.C_d},    {"C_c_F", c.C_c},               {"L_c_H", c.L_c}};
}

[[nodiscard]] inline json optional_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

inline void cmd_extract(Context& ctx) {
    const Config& cfg = ctx.config();
    const SensorModel model = load_model(ctx);
    const MutPermittivity mut{cfg.number_or("extract_eps_real", 1.0), cfg.number_or("extract_eps_imag", 0.0)};
    const DpsCircuitValues circuit = model.circuit(mut);
    ExtractionOptions raw_opts = model.extraction;
    raw_opts.anchor.reset();
    const DpsCircuitValues raw = extract_raw(model.geometry, mut, model.inductors, raw_opts);
    const PlateCapacitances plates = plate_capacitances(model.geometry, mut, model.extraction);
    const DpsCircuitValues ref = reference_circuit();

    json comparison = json::array();
    const auto compare = [&](const char* name, double reference, double geometric) {
        comparison.push_back(
            {{"element", name}, {"reference", reference}, {"geometry", geometric}, {"ratio", geometric / reference}});
    };
    const DpsCircuitValues raw_unloaded = extract_raw(model.geometry, {1.0, 0.0}, model.inductors, raw_opts);
    compare("C_i", ref.C_i.real(), raw_unloaded.C_i.real());
    compare("C_u", ref.C_u.real(), raw_unloaded.C_u.real());
    compare("C_d", ref.C_d, raw_unloaded.C_d);
    compare("C_c", ref.C_c, raw_unloaded.C_c);

    // Spread of C_u across the soil range: geometry routes eps_m into C_u only
    // through the fringing length, so the swing stays small.
    const double eps_hi = 24.0;
    const double cu_lo = extract_raw(model.geometry, {1.0, 0.0}, model.inductors, raw_opts).C_u.real();
    const double cu_hi = extract_raw(model.geometry, {eps_hi, 0.0}, model.inductors, raw_opts).C_u.real();
    const double dl_lo = plate_capacitances(model.geometry, {1.0, 0.0}, raw_opts).delta_L;
    const double dl_hi = plate_capacitances(model.geometry, {eps_hi, 0.0}, raw_opts).delta_L;

    json report{
        {"mut", {{"eps_real", mut.eps_real}, {"eps_imag", mut.eps_imag}}},
        {"geometry_hash", geometry_hash(model.geometry)},
        {"anchored", model.extraction.anchor.has_value()},
        {"circuit", circuit_json(circuit)},
        {"geometry_only", circuit_json(raw)},
        {"intermediates",
         {{"eps_eff", complex_json(plates.eps_eff)},
          {"delta_L_m", plates.delta_L},
          {"csr_turn_lengths_m", model.geometry.csr_turn_lengths},
          {"csr_negative_log_turns", csr_negative_log_turns(model.geometry)},
          {"rectify_log", model.extraction.rectify_log}}},
        {"reference_comparison", comparison},
        {"c_u_span",
         {{"eps_from", 1.0},
          {"eps_to", eps_hi},
          {"delta_C_u_F", cu_hi - cu_lo},
          {"delta_L_from_m", dl_lo},
          {"delta_L_to_m", dl_hi},
          {"reported_delta_C_u_F", 15e-12},
          {"note", "fringing length alone cannot move C_u by the reported amount"}}},
    };
    ctx.write_json("extract.json", report);
}

inline std::string vwc_tag(double vwc) { return "vwc" + io::format_number(vwc); }

inline void cmd_sweep(Context& ctx) {
    const Config& cfg = ctx.config();
    const SensorModel model = load_model(ctx);
    const SoilCalibrationCurve curve = load_curve(cfg);
    const FrequencyGrid grid = FrequencyGrid::linear(cfg.quantity_or("sweep_start", Dimension::frequency, 1e6),
                                                     cfg.quantity_or("sweep_stop", Dimension::frequency, 1e9),
                                                     static_cast<std::size_t>(cfg.integer_or("sweep_points", 1000)));
    const std::vector<double> vwcs = cfg.quantities_or("sweep_vwc", Dimension::none, {0.0, 10.0, 20.0, 30.0});
    for (const double vwc : vwcs) {
        const MutPermittivity mut = curve.permittivity_from_vwc(vwc);
        const Sweep sweep = s_parameters(model.circuit(mut), grid, model.z0, model.n_cells);
        std::size_t masked = 0;
        for (const SweepPoint& p : sweep.points) {
            masked += p.masked ? 1 : 0;
        }
        ctx.log().info("VWC {}%: eps = {} - j{}, {} masked points", vwc, mut.eps_real, mut.eps_imag, masked);
        ctx.write("sweep_" + vwc_tag(vwc) + ".s2p", io::touchstone_text(sweep));
        ctx.write("sweep_" + vwc_tag(vwc) + ".csv", io::sweep_csv(sweep));
    }
}

/// Frequency of the smallest |s21| on the grid; masked points sit on the pole
/// and count as zero transmission.
[[nodiscard]] inline double transmission_minimum(const DpsCircuitValues& c, const FrequencyGrid& grid, double z0) {
    const Sweep sweep = s_parameters(c.lossless(), grid, z0, 1);
    double best = std::numeric_limits<double>::infinity();
    double at = 0.0;
    for (const SweepPoint& p : sweep.points) {
        const double mag = p.masked ? 0.0 : std::abs(p.s.s21);
        if (mag < best) {
            best = mag;
            at = p.frequency;
        }
    }
    return at;
}

inline void cmd_band(Context& ctx) {
    const Config& cfg = ctx.config();
    DpsCircuitValues circuit = reference_circuit();
    const std::string source = cfg.choice_or("band_circuit", {"reference", "extracted"}, "reference");
    if (source == "extracted") {
        const SensorModel model = load_model(ctx);
        circuit = model.circuit({cfg.number_or("extract_eps_real", 1.0), 0.0}).lossless();
    }
    const FrequencyGrid grid =
        FrequencyGrid::logarithmic(cfg.quantity_or("band_start", Dimension::frequency, 1e6),
                                   cfg.quantity_or("band_stop", Dimension::frequency, 10e9),
                                   static_cast<std::size_t>(cfg.integer_or("band_points", 20000)));

    json closed;
    std::optional<BandStructure> cf;
    try {
        cf = band_edges_closed_form(circuit);
        const ClosedFormCoefficients k = closed_form_coefficients(circuit);
        closed = {{"f_cl_hz", optional_json(cf->f_cl)},
                  {"f_cu_hz", optional_json(cf->f_cu)},
                  {"f_z1_hz", cf->f_z1},
                  {"f_z2_hz", cf->f_z2},
                  {"coefficients", {{"a", k.a}, {"b", k.b}, {"c", k.c}}},
                  {"note", "the printed coefficient b mixes F^2 H and F H terms, so f_cl is not dimensionally "
                           "meaningful"}};
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::closed_form_inapplicable) {
            throw;
        }
        closed = {{"error", e.what()}};
    }

    const BandStructure num = band_edges_numeric(circuit, grid);
    json bands = json::array();
    for (const Band& b : num.bands) {
        bands.push_back({{"lower_hz", b.lower}, {"upper_hz", b.upper}});
    }
    json numeric{{"grid", {{"start_hz", grid.front()}, {"stop_hz", grid.back()}, {"points", grid.size()}}},
                 {"bands", bands},
                 {"f_cl_hz", optional_json(num.f_cl)},
                 {"f_cu_hz", optional_json(num.f_cu)},
                 {"f_z1_hz", num.f_z1},
                 {"f_z2_hz", num.f_z2},
                 {"shunt_zero_hz", shunt_zero_frequency(circuit)},
                 {"s21_minimum_hz", transmission_minimum(circuit, grid, default_z0)}};
    if (num.bands.empty()) {
        numeric["empty"] = true;
        numeric["diagnostics"] = "1 + ZY/2 never enters [-1, 1] on the search grid";
        ctx.log().warn("no propagating band found");
    }

    json discrepancies = json::array();
    const auto entry = [&](const char* quantity, const std::optional<double>& closed_value,
                           const std::optional<double>& numeric_value, double reported, const char* note) {
        discrepancies.push_back({{"quantity", quantity},
                                 {"closed_form_hz", optional_json(closed_value)},
                                 {"numeric_hz", optional_json(numeric_value)},
                                 {"reported_measurement_hz", reported},
                                 {"note", note}});
    };
    entry("lower_cutoff", cf ? cf->f_cl : std::nullopt, num.f_cl, 114e6,
          "reported 3 dB passband starts at 114 MHz");
    entry("upper_cutoff", cf ? cf->f_cu : std::nullopt, num.f_cu, 135e6,
          "reported 3 dB passband ends at 135 MHz; series resonance sits in the GHz range");
    entry("transmission_zero", cf ? std::optional<double>(cf->f_z2) : std::nullopt, num.f_z2, 103e6,
          "reported measured zero at 103 MHz; the shunt pole of the circuit sits elsewhere");

    json report{{"circuit_source", source},
                {"circuit", circuit_json(circuit)},
                {"closed_form", closed},
                {"numeric", numeric},
                {"discrepancies", discrepancies}};
    ctx.write_json("band.json", report);
}

inline void cmd_sense(Context& ctx) {
    const Config& cfg = ctx.config();
    const SensorModel model = load_model(ctx);
    const SoilCalibrationCurve curve = load_curve(cfg);
    const FrequencyGrid grid = FrequencyGrid::linear(cfg.quantity_or("sense_start", Dimension::frequency, 200e6),
                                                     cfg.quantity_or("sense_stop", Dimension::frequency, 500e6),
                                                     static_cast<std::size_t>(cfg.integer_or("sense_points", 301)));
    const std::vector<double> eps = cfg.quantities_or("sense_eps", Dimension::none, {5.0, 10.0, 15.0, 20.0});
    const double h = cfg.number_or("sense_step", default_sensitivity_step);
    const double f_exc = ctx.f_exc();

    const SensitivityMap map = sensitivity_map(model, grid, eps, h);
    ctx.write("sensitivity_map.csv", io::matrix_csv("freq_hz\\eps_real", map.frequencies, map.eps_grid, map.values));

    const auto evaluate = [&](double e, double f) -> json {
        try {
            const SensitivityResult r = dps_sensitivity(model, e, f, h);
            return {{"eps_real", e}, {"s_dps_deg_per_eps", r.direct}, {"chain_sum", r.chain_sum()}};
        } catch (const Error& err) {
            return {{"eps_real", e}, {"error", err.what()}};
        }
    };
    json at_optimal = json::array();
    json at_exc = json::array();
    for (const double e : eps) {
        at_optimal.push_back(evaluate(e, map.f_optimal));
        at_exc.push_back(evaluate(e, f_exc));
    }

    json top;
    const double top_eps = curve.max_eps();
    const double slope = curve.eps_slope(curve.max_vwc());
    top = {{"vwc_percent", curve.max_vwc()}, {"eps_real", top_eps}, {"d_eps_d_vwc", slope}};
    try {
        const SensitivityResult r = dps_sensitivity(model, top_eps, f_exc, h);
        top["s_dps_deg_per_eps"] = r.direct;
        top["s_vwc_deg_per_percent"] = vwc_referred_sensitivity(r.direct, slope);
        top["resolution_percent_at_0p1_deg"] = resolution(top["s_vwc_deg_per_percent"].get<double>(), 0.1);
    } catch (const Error& err) {
        top["error"] = err.what();
    }

    const double quartile = map.passband.lower + 0.25 * (map.passband.upper - map.passband.lower);
    json report{{"geometry_hash", geometry_hash(model.geometry)},
                {"step", h},
                {"n_cells", model.n_cells},
                {"frequency_grid", {{"start_hz", grid.front()}, {"stop_hz", grid.back()}, {"points", grid.size()}}},
                {"eps_grid", eps},
                {"passband", {{"lower_hz", map.passband.lower}, {"upper_hz", map.passband.upper}}},
                {"f_optimal_hz", map.f_optimal},
                {"f_optimal_in_lowest_quartile", map.f_optimal <= quartile},
                {"at_f_optimal", at_optimal},
                {"f_exc_hz", f_exc},
                {"at_f_exc", at_exc},
                {"top_knot", top}};
    ctx.write_json("sense.json", report);
}

[[nodiscard]] inline std::vector<io::DetectorRow> synthetic_readings(const SensorModel& model,
                                                                     const SoilCalibrationCurve& curve,
                                                                     const std::vector<double>& vwcs, double f_exc,
                                                                     bool quantize, const DetectorConfig& det) {
    std::vector<io::DetectorRow> rows;
    for (const double v : vwcs) {
        const MutPermittivity m = curve.permittivity_from_vwc(v);
        const PhaseResponse r = phase_response(model, m, f_exc);
        io::DetectorRow row;
        row.reading = detector_encode(r.delta_theta_deg, r.loss_db, quantize, det);
        row.nominal_vwc = v;
        row.nominal_eps_real = m.eps_real;
        row.nominal_eps_imag = m.eps_imag;
        rows.push_back(row);
    }
    return rows;
}

inline void cmd_invert(Context& ctx) {
    const Config& cfg = ctx.config();
    const SensorModel model = load_model(ctx);
    const SoilCalibrationCurve curve = load_curve(cfg);
    const double f_exc = ctx.f_exc();
    InversionOptions opts;
    opts.quantized = ctx.options().quantize || cfg.flag_or("quantize", false);

    std::vector<io::DetectorRow> rows;
    std::optional<std::filesystem::path> readings = ctx.options().readings;
    if (!readings && cfg.has("readings")) {
        readings = cfg.path("readings");
    }
    if (readings) {
        rows = io::parse_readings(io::read_file(*readings));
        ctx.log().info("loaded {} readings from {}", rows.size(), readings->string());
    } else {
        const std::vector<double> vwcs =
            cfg.quantities_or("invert_vwc", Dimension::none, {0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0});
        rows = synthetic_readings(model, curve, vwcs, f_exc, opts.quantized, opts.detector);
        std::string csv = "v_p,v_m,nominal_vwc,nominal_eps_real,nominal_eps_imag\n";
        for (const io::DetectorRow& r : rows) {
            csv += io::format_number(r.reading.v_p) + ',' + io::format_number(r.reading.v_m) + ',' +
                   io::format_number(*r.nominal_vwc) + ',' + io::format_number(*r.nominal_eps_real) + ',' +
                   io::format_number(*r.nominal_eps_imag) + '\n';
        }
        ctx.write("synthetic_readings.csv", csv);
    }

    std::string lines;
    std::size_t ok = 0;
    std::vector<double> vwc_err;
    std::vector<double> re_err;
    std::vector<double> im_err;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const io::DetectorRow& row = rows[i];
        json out{{"row", i}, {"v_p", row.reading.v_p}, {"v_m", row.reading.v_m}};
        try {
            const InversionResult r = invert_permittivity(row.reading, model, f_exc, curve, opts);
            out["eps_real"] = r.eps.eps_real;
            out["eps_imag"] = r.eps.eps_imag;
            out["vwc_percent"] = optional_json(r.vwc_percent);
            out["residual"] = r.residual;
            out["iterations"] = r.iterations;
            out["converged"] = r.converged;
            out["warnings"] = r.warnings;
            ++ok;
            if (row.nominal_vwc && r.vwc_percent) {
                vwc_err.push_back(std::abs(*r.vwc_percent - *row.nominal_vwc));
                out["vwc_error_percent"] = vwc_err.back();
            }
            if (row.nominal_eps_real && *row.nominal_eps_real > 0.0) {
                re_err.push_back(estimation_error_percent(r.eps.eps_real, *row.nominal_eps_real));
            }
            if (row.nominal_eps_imag && *row.nominal_eps_imag > 0.0) {
                im_err.push_back(estimation_error_percent(r.eps.eps_imag, *row.nominal_eps_imag));
            }
        } catch (const Error& e) {
            if (e.is_io_or_config()) {
                throw;
            }
            out["error"] = e.what();
            ctx.log().warn("row {}: {}", i, e.what());
        }
        lines += out.dump() + "\n";
    }
    ctx.write("invert_results.jsonl", lines);

    const auto mean = [](const std::vector<double>& v) -> json {
        if (v.empty()) {
            return nullptr;
        }
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    const auto percent_text = [](const json& v) -> json {
        if (v.is_null()) {
            return nullptr;
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f%%", v.get<double>());
        return std::string(buf);
    };
    const json mean_re = mean(re_err);
    const json mean_im = mean(im_err);
    json summary{{"f_exc_hz", f_exc},
                 {"quantized", opts.quantized},
                 {"rows", rows.size()},
                 {"succeeded", ok},
                 {"failed", rows.size() - ok},
                 {"mean_abs_vwc_error_percent", mean(vwc_err)},
                 {"max_abs_vwc_error_percent",
                  vwc_err.empty() ? json(nullptr) : json(*std::max_element(vwc_err.begin(), vwc_err.end()))},
                 {"mean_eps_real_error_percent", mean_re},
                 {"mean_eps_real_error", percent_text(mean_re)},
                 {"mean_eps_imag_error_percent", mean_im},
                 {"mean_eps_imag_error", percent_text(mean_im)}};
    ctx.write_json("invert_summary.json", summary);
}

struct PulseRun {
    double pulse_width = 0.0;
    double vwc = 0.0;
    double delay = 0.0;
    DistortionReport metrics;
};

inline void cmd_pulse(Context& ctx) {
    const Config& cfg = ctx.config();
    const GeometrySpec g = load_geometry(cfg);
    const SoilCalibrationCurve curve = load_curve(cfg);
    const EpsEffForm form = load_extraction_options(cfg).eps_form;
    const double length = cfg.quantity_or("line_length", Dimension::length, 0.6);
    const std::vector<double> widths =
        cfg.quantities_or("pulse_widths", Dimension::time, {50e-12, 450e-12, 1e-9});
    const std::vector<double> vwcs = cfg.quantities_or("pulse_vwc", Dimension::none, {10.0, 20.0, 30.0});
    const double window = cfg.quantity_or("pulse_window", Dimension::time, 64e-9);
    const double lead = cfg.quantity_or("pulse_lead", Dimension::time, 2e-9);
    const double f_anchor = cfg.quantity_or("debye_anchor", Dimension::frequency, 130e6);
    const double eps_inf = cfg.number_or("debye_eps_inf", 2.5);
    const double f_sine = cfg.quantity_or("sine_frequency", Dimension::frequency, 120e6);
    const int per_cycle = cfg.integer_or("sine_samples_per_cycle", 64);
    const int cycles = cfg.integer_or("sine_cycles", 64);
    const int max_rows = cfg.integer_or("waveform_max_rows", 4096);
    if (per_cycle < 4 || cycles < 1 || max_rows < 2) {
        throw ConfigError("sine sampling and export sizes must be positive", "sine_samples_per_cycle");
    }

    json fits = json::array();
    std::vector<DebyeModel> models;
    for (const double v : vwcs) {
        const MutPermittivity m = curve.permittivity_from_vwc(v);
        const Complex anchor{m.eps_real, -m.eps_imag};
        const DebyeFit fit = fit_debye(f_anchor, anchor, matched_static_eps(anchor, eps_inf), eps_inf);
        models.push_back(fit.model);
        fits.push_back({{"vwc_percent", v},
                        {"eps_inf", fit.model.eps_inf},
                        {"static_eps", fit.model.static_eps()},
                        {"tau_s", fit.model.tau[0]},
                        {"anchor_hz", f_anchor},
                        {"imag_mismatch", fit.imag_mismatch}});
    }

    const auto stride_for = [&](std::size_t n) {
        return std::max<std::size_t>(1, (n + static_cast<std::size_t>(max_rows) - 1) / static_cast<std::size_t>(max_rows));
    };

    std::vector<double> matrix;
    json runs = json::array();
    for (const double pw : widths) {
        const double rise = pw / 10.0;
        const double fs = 20.0 / rise;
        const Waveform input = pad_for_propagation(make_pulse(pw, rise, fs, lead), window);
        const std::vector<double> freqs = input.bin_frequencies();
        for (std::size_t k = 0; k < vwcs.size(); ++k) {
            const std::vector<Complex> h =
                line_transfer_function(embedded_line_permittivity(g, models[k], form), length, freqs);
            const Waveform output = propagate(input, h, PropagationMode::transient);
            const double delay = estimate_delay(input, output);
            const DistortionReport d = distortion_metrics(input, output, delay);
            matrix.push_back(d.nrmse_vs_delayed_input);
            runs.push_back({{"pulse_width_s", pw},
                            {"vwc_percent", vwcs[k]},
                            {"sample_rate_hz", fs},
                            {"samples", input.samples.size()},
                            {"delay_s", delay},
                            {"nrmse", d.nrmse_vs_delayed_input},
                            {"edge_jitter_s", d.edge_jitter},
                            {"spectral_purity_db", d.spectral_purity_db}});
            const std::string name = "pulse_pw" + std::to_string(std::llround(pw * 1e12)) + "ps_" +
                                     vwc_tag(vwcs[k]) + ".csv";
            ctx.write(name, io::waveform_csv(output, stride_for(output.samples.size())));
        }
    }

    json sines = json::array();
    bool sines_clean = true;
    for (std::size_t k = 0; k < vwcs.size(); ++k) {
        const Waveform input = make_sine(f_sine, f_sine * per_cycle, static_cast<std::size_t>(cycles));
        const Waveform output = propagate(
            input, line_transfer_function(embedded_line_permittivity(g, models[k], form), length, input.bin_frequencies()),
            PropagationMode::periodic);
        const double purity = spectral_purity_db(output);
        sines_clean = sines_clean && purity > 60.0;
        sines.push_back({{"vwc_percent", vwcs[k]}, {"frequency_hz", f_sine}, {"spectral_purity_db", purity}});
        ctx.write("sine_" + vwc_tag(vwcs[k]) + ".csv", io::waveform_csv(output, stride_for(output.samples.size())));
    }

    // Smaller pulses (earlier rows) and wetter soil (later columns) should distort more.
    bool monotone = true;
    const std::size_t cols = vwcs.size();
    for (std::size_t r = 0; r < widths.size(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double v = matrix[r * cols + c];
            if (c + 1 < cols && !(matrix[r * cols + c + 1] > v)) monotone = false;
            if (r + 1 < widths.size() && !(matrix[(r + 1) * cols + c] < v)) monotone = false;
        }
    }
    ctx.write("distortion_matrix.csv", io::matrix_csv("pulse_width_s\\vwc_percent", widths, vwcs, matrix));
    ctx.write_json("pulse.json", json{{"line_length_m", length},
                                      {"debye_fits", fits},
                                      {"pulse_runs", runs},
                                      {"sine_runs", sines},
                                      {"matrix_monotone", monotone},
                                      {"sine_purity_above_60db", sines_clean}});
}

/// Runs one command; returns the process exit code. Diagnostics go to `err`.
[[nodiscard]] inline int run(const Options& opts, std::ostream& err) {
    static const std::map<std::string, std::function<void(Context&)>> table{
        {"extract", cmd_extract}, {"sweep", cmd_sweep},   {"band", cmd_band},
        {"sense", cmd_sense},     {"invert", cmd_invert}, {"pulse", cmd_pulse},
    };
    const auto it = table.find(opts.command);
    if (it == table.end()) {
        err << "unknown command '" << opts.command << "'\n";
        return exit_io_failure;
    }
    try {
        Config cfg = Config::load(opts.config);
        Context ctx(opts, std::move(cfg));
        ctx.log().info("command {} with config {}", opts.command, opts.config.string());
        try {
            it->second(ctx);
        } catch (const std::exception& e) {
            ctx.log().error("{}", e.what());
            throw;
        }
        for (const std::string& key : ctx.config().unused_keys()) {
            ctx.log().info("config key '{}' not used by {}", key, opts.command);
        }
        ctx.log().info("done");
        return exit_ok;
    } catch (const Error& e) {
        err << "dps-sense " << opts.command << ": " << e.what() << "\n";
        return e.is_io_or_config() ? exit_io_failure : exit_model_failure;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "dps-sense " << opts.command << ": " << e.what() << "\n";
        return exit_io_failure;
    } catch (const std::exception& e) {
        err << "dps-sense " << opts.command << ": " << e.what() << "\n";
        return exit_model_failure;
    }
}

}  // namespace dps::cli
