#ifndef ARMSIM_CONFIG_HPP
#define ARMSIM_CONFIG_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "calibrate.hpp"
#include "core.hpp"
#include "csv.hpp"
#include "empirical.hpp"
#include "errors.hpp"
#include "integrate.hpp"
#include "physics_heat.hpp"
#include "physics_hm.hpp"
#include "signal.hpp"

namespace armsim {

/// Flat key = value configuration, keys namespaced with dots. Later
/// assignments win, which is how presets are overlaid by user files.
using KvMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace detail

inline KvMap parse_config_text(const std::string& text, const std::string& origin = "<config>") {
    KvMap map;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = detail::trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected 'key = value', got '" + stripped + "'");
        }
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string value = detail::trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        }
        map[key] = value;
    }
    return map;
}

inline KvMap load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

inline KvMap overlay(KvMap base, const KvMap& over) {
    for (const auto& [k, v] : over) base[k] = v;
    return base;
}

/// Typed accessors over a KvMap; every parse failure names the key.
class ConfigView {
public:
    explicit ConfigView(const KvMap& map) : map_(&map) {}

    bool has(const std::string& key) const { return map_->count(key) != 0; }

    std::string str(const std::string& key, const std::string& fallback) const {
        const auto it = map_->find(key);
        return it == map_->end() ? fallback : it->second;
    }

    std::string require_str(const std::string& key) const {
        const auto it = map_->find(key);
        if (it == map_->end()) throw ConfigError("missing required config key '" + key + "'");
        return it->second;
    }

    double num(const std::string& key, double fallback) const {
        const auto it = map_->find(key);
        return it == map_->end() ? fallback : parse_num(key, it->second);
    }

    double require_num(const std::string& key) const { return parse_num(key, require_str(key)); }

    std::uint64_t u64(const std::string& key, std::uint64_t fallback) const {
        const auto it = map_->find(key);
        if (it == map_->end()) return fallback;
        const double v = parse_num(key, it->second);
        if (v < 0 || v != static_cast<double>(static_cast<std::uint64_t>(v))) {
            throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" +
                              it->second + "'");
        }
        return static_cast<std::uint64_t>(v);
    }

    std::vector<double> num_list(const std::string& key,
                                 const std::vector<double>& fallback = {}) const {
        const auto it = map_->find(key);
        if (it == map_->end()) return fallback;
        std::vector<double> out;
        std::istringstream in(it->second);
        std::string tok;
        while (std::getline(in, tok, ',')) {
            tok = detail::trim(tok);
            if (tok.empty()) continue;
            out.push_back(parse_num(key, tok));
        }
        if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
        return out;
    }

    std::vector<std::string> str_list(const std::string& key,
                                      const std::vector<std::string>& fallback = {}) const {
        const auto it = map_->find(key);
        if (it == map_->end()) return fallback;
        std::vector<std::string> out;
        std::istringstream in(it->second);
        std::string tok;
        while (std::getline(in, tok, ',')) {
            tok = detail::trim(tok);
            if (!tok.empty()) out.push_back(tok);
        }
        if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
        return out;
    }

private:
    static double parse_num(const std::string& key, const std::string& text) {
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (end == text.c_str() || *end != '\0') {
            throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
        }
        return v;
    }

    const KvMap* map_;
};

/// Constants of the first case study: slab with convective exchange on both
/// faces, periodic interior signal, weather-driven exterior.
inline KvMap preset_heat() {
    KvMap m;
    m["problem"] = "heat";
    m["model"] = "cm";
    m["seed"] = "4871";
    m["scales.length_m"] = g17(0.2);
    m["scales.time_s"] = g17(3600.0);
    m["scales.temp_k"] = g17(293.15);
    m["scales.c_ref"] = g17(2.0e6);
    m["scales.k_ref"] = g17(1.13);
    m["grid.n_nodes"] = "101";
    m["time.dt_hours"] = "1";
    m["time.horizon_hours"] = "120";
    m["time.output_stride"] = "1";
    m["time.max_stages"] = "1000";
    m["time.stepper"] = "rkl1";
    m["heat.bi_left"] = g17(2.65);
    m["heat.bi_right"] = g17(1.42);
    m["heat.alpha"] = "0";
    m["heat.c0"] = g17(0.2);
    m["heat.c1"] = g17(0.1);
    m["heat.k0"] = g17(0.051);
    m["heat.k1"] = g17(0.01);
    m["heat.admissible_lo"] = g17(0.8);
    m["heat.admissible_hi"] = g17(1.2);
    m["heat.initial_offset"] = g17(0.95);
    m["heat.initial_slope"] = g17(4.5e-2);
    m["bc.left.source"] = "synth";
    m["bc.left.kind"] = "celsius";
    m["bc.left.mean"] = "10";
    m["bc.left.annual_amp"] = "8";
    m["bc.left.diurnal_amp"] = "4";
    m["bc.left.noise_amp"] = g17(0.5);
    m["bc.left.annual_phase_h"] = "0";
    m["bc.left.diurnal_phase_h"] = "0";
    m["bc.left.seed_offset"] = "1";
    m["bc.right.source"] = "sinusoid";
    m["bc.right.offset"] = "1";
    m["bc.right.amplitude"] = g17(1.4e-2);
    m["bc.right.period_tstar"] = g17(1.92e4);
    m["bc.right.phase_tstar"] = "0";
    m["arm.tau_hours"] = "12";
    m["arm.kind"] = "heat_ii";
    m["arm.params"] = "0.0,1.0";
    m["calibrate.tau_list_hours"] = "6,12,24,48";
    m["calibrate.t1_hours"] = "120";
    m["calibrate.kinds"] = "heat_i,heat_ii";
    m["calibrate.n_starts"] = "5";
    m["compare.dt_list_hours"] = "1,5,25";
    m["compare.tau_list_hours"] = "12";
    return m;
}

/// Constants of the second case study: drying rammed-earth wall between two
/// measurement planes, Dirichlet data on both faces for both fields. The
/// measured climate records are not shipped, so the boundary data defaults to
/// the seeded synthetic generator with gentle daily swings; all four signals
/// start exactly at the uniform initial state and drift as in a drying year.
inline KvMap preset_re_wall() {
    KvMap m;
    m["problem"] = "hm";
    m["model"] = "cm";
    m["seed"] = "93604";
    m["scales.length_m"] = g17(0.3);
    m["scales.time_s"] = g17(3600.0);
    m["scales.temp_k"] = g17(300.15);
    m["scales.moisture_ref"] = g17(0.53);
    m["grid.n_nodes"] = "101";
    m["time.dt_hours"] = "1";
    m["time.horizon_hours"] = g17(730.0 * 24.0);
    m["time.output_stride"] = "1";
    m["time.max_stages"] = "1000";
    m["time.stepper"] = "rkl1";
    m["hm.rho0"] = g17(1730.0);
    m["hm.c0_dry"] = g17(648.0);
    m["hm.rho2"] = g17(1.0e3);
    m["hm.c2"] = g17(4185.5);
    m["hm.latent_heat"] = g17(2.5e6);
    m["hm.r1"] = g17(2.0e-3);
    m["hm.d_t_phys"] = g17(1.0e-10);
    m["hm.k_tm_phys"] = g17(4.0e-18);
    m["hm.d_theta_a0"] = g17(1.0e-7);
    m["hm.d_theta_a1"] = g17(2.4e-9);
    m["hm.d_theta_shift"] = g17(0.1);
    m["hm.k_a0"] = g17(0.6);
    m["hm.k_a1"] = g17(5.0);
    m["hm.admissible_v_lo"] = "0";
    m["hm.admissible_v_hi"] = g17(1.5);
    m["hm.initial_u"] = "1";
    m["hm.initial_v"] = "1";
    m["bc.temp_left.source"] = "synth";
    m["bc.temp_left.kind"] = "celsius";
    m["bc.temp_left.mean"] = "27";
    m["bc.temp_left.annual_amp"] = "8";
    m["bc.temp_left.diurnal_amp"] = g17(0.1);
    m["bc.temp_left.noise_amp"] = g17(0.05);
    m["bc.temp_left.annual_phase_h"] = "4380";
    m["bc.temp_left.diurnal_phase_h"] = "0";
    m["bc.temp_left.seed_offset"] = "11";
    m["bc.temp_right.source"] = "synth";
    m["bc.temp_right.kind"] = "celsius";
    m["bc.temp_right.mean"] = "27";
    m["bc.temp_right.annual_amp"] = "4";
    m["bc.temp_right.diurnal_amp"] = g17(0.05);
    m["bc.temp_right.noise_amp"] = g17(0.02);
    m["bc.temp_right.annual_phase_h"] = "4380";
    m["bc.temp_right.diurnal_phase_h"] = "0";
    m["bc.temp_right.seed_offset"] = "13";
    m["bc.moist_left.source"] = "synth";
    m["bc.moist_left.kind"] = "moisture";
    m["bc.moist_left.mean"] = g17(0.53);
    m["bc.moist_left.annual_amp"] = g17(0.18);
    m["bc.moist_left.diurnal_amp"] = g17(2.0e-3);
    m["bc.moist_left.noise_amp"] = g17(4.0e-4);
    m["bc.moist_left.annual_phase_h"] = "4380";
    m["bc.moist_left.diurnal_phase_h"] = "0";
    m["bc.moist_left.seed_offset"] = "17";
    m["bc.moist_right.source"] = "synth";
    m["bc.moist_right.kind"] = "moisture";
    m["bc.moist_right.mean"] = g17(0.53);
    m["bc.moist_right.annual_amp"] = g17(0.12);
    m["bc.moist_right.diurnal_amp"] = g17(1.0e-3);
    m["bc.moist_right.noise_amp"] = g17(2.0e-4);
    m["bc.moist_right.annual_phase_h"] = "4380";
    m["bc.moist_right.diurnal_phase_h"] = "0";
    m["bc.moist_right.seed_offset"] = "19";
    m["arm.tau_hours"] = "6";
    m["arm.u_kind"] = "hm_u_ii";
    m["arm.u_params"] = "0.0,1.0";
    m["arm.v_kind"] = "hm_v";
    m["arm.v_params"] = "0.001,0.001,0.001,0.5";
    m["calibrate.tau_list_hours"] = "6,12,24,48";
    m["calibrate.t1_hours"] = "240";
    m["calibrate.pairs"] = "hm_u_i+hm_v,hm_u_ii+hm_v,hm_u_iii+hm_v";
    m["calibrate.n_starts"] = "5";
    m["compare.dt_list_hours"] = "1,2,3,4,5";
    m["compare.tau_list_hours"] = "6";
    return m;
}

inline std::vector<std::string> preset_names() { return {"heat-2.4", "re-wall-3.4"}; }

inline KvMap preset_map(const std::string& name) {
    if (name == "heat-2.4") return preset_heat();
    if (name == "re-wall-3.4") return preset_re_wall();
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

enum class ProblemKind { Heat, Hm };
enum class ModelKind { Cm, Arm };

/// A candidate fluctuation model with resolved parameters.
struct ArmChoice {
    FluctuationKind kind = FluctuationKind::HeatII;
    std::vector<double> params;
};

/// Everything a command needs, materialized and validated.
struct BuiltRun {
    ProblemKind problem = ProblemKind::Heat;
    ModelKind model = ModelKind::Cm;
    ReferenceScales scales;

    HeatConfig heat;
    Field heat_initial;
    HmConfig hm;
    HmState hm_initial;

    double dt_star = 1.0;
    double horizon_star = 120.0;
    std::size_t output_stride = 1;
    int max_stages = 1000;
    StepperKind stepper = StepperKind::Rkl1;

    double tau_star = 12.0;
    ArmChoice arm_u; ///< temperature model (the only one for the heat problem)
    ArmChoice arm_v; ///< moisture model (coupled problem only)

    std::vector<double> calib_tau_star;
    double t1_star = 120.0;
    std::vector<FluctuationKind> calib_kinds;
    std::vector<HmKindPair> calib_pairs;
    std::size_t n_starts = 5;
    std::vector<std::size_t> calib_sensor_nodes; ///< empty = full field

    std::size_t sensor_node = 50; ///< node reported in bands and distributions
    UncertaintySpec uncertainty;

    std::vector<double> sweep_dt_star;
    std::vector<double> sweep_tau_star;
    std::string params_file;

    std::string out_dir = "out";
    std::uint64_t seed = 1;
    unsigned jobs = 1;
};

/// Best calibrated parameters for one candidate label at one tau, read back
/// from a calibration table written by this tool.
inline std::vector<double> lookup_calibrated_params(const std::string& path,
                                                    const std::string& label, double tau_hours) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open calibration table '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty calibration table '" + path + "'");
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string tok;
        while (std::getline(hs, tok, ',')) header.push_back(detail::trim(tok));
    }
    std::size_t col_tau = header.size(), col_label = header.size(), first_param = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "tau_hours") col_tau = c;
        if (header[c] == "candidate") col_label = c;
        if (header[c] == "param_0") first_param = c;
    }
    if (col_tau == header.size() || col_label == header.size() || first_param == header.size()) {
        throw IoError("calibration table '" + path + "' lacks tau_hours/candidate/param_0 columns");
    }
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::istringstream rs(line);
        std::string tok;
        while (std::getline(rs, tok, ',')) cells.push_back(detail::trim(tok));
        cells.resize(header.size());
        if (cells[col_label] != label) continue;
        const double row_tau = std::strtod(cells[col_tau].c_str(), nullptr);
        if (std::abs(row_tau - tau_hours) > 1e-9 * std::max(1.0, std::abs(tau_hours))) continue;
        std::vector<double> params;
        for (std::size_t c = first_param; c < header.size(); ++c) {
            if (cells[c].empty()) break;
            char* end = nullptr;
            const double v = std::strtod(cells[c].c_str(), &end);
            if (end == cells[c].c_str()) {
                throw IoError("calibration table '" + path + "': bad parameter cell '" + cells[c] +
                              "'");
            }
            params.push_back(v);
        }
        if (params.empty()) {
            throw IoError("calibration table '" + path + "': row for '" + label +
                          "' has no parameters");
        }
        return params;
    }
    throw ConfigError("calibration table '" + path + "' has no row for candidate '" + label +
                      "' at tau = " + g17(tau_hours) + " h");
}

namespace detail {

inline BoundarySignal build_signal(const ConfigView& cfg, const std::string& prefix,
                                   const ReferenceScales& scales, double duration_hours,
                                   std::uint64_t seed) {
    const std::string source = cfg.str(prefix + ".source", "synth");
    const double duration_star = hours_to_t_star(duration_hours, scales);
    if (source == "synth") {
        SynthWeatherSpec spec;
        spec.kind = value_kind_from_string(cfg.str(prefix + ".kind", "celsius"));
        spec.mean = cfg.require_num(prefix + ".mean");
        spec.annual_amp = cfg.num(prefix + ".annual_amp", 0.0);
        spec.diurnal_amp = cfg.num(prefix + ".diurnal_amp", 0.0);
        spec.noise_amp = cfg.num(prefix + ".noise_amp", 0.0);
        spec.annual_phase_hours = cfg.num(prefix + ".annual_phase_h", 0.0);
        spec.diurnal_phase_hours = cfg.num(prefix + ".diurnal_phase_h", 0.0);
        spec.seed_offset = cfg.u64(prefix + ".seed_offset", 0);
        return synth_weather(seed, duration_hours, spec, scales);
    }
    if (source == "sinusoid") {
        return sinusoid_signal(cfg.num(prefix + ".offset", 1.0), cfg.num(prefix + ".amplitude", 0.0),
                               cfg.require_num(prefix + ".period_tstar"),
                               cfg.num(prefix + ".phase_tstar", 0.0), duration_star);
    }
    if (source == "constant") {
        return constant_signal(cfg.require_num(prefix + ".value"), duration_star);
    }
    if (source == "file") {
        const ValueKind kind = value_kind_from_string(cfg.str(prefix + ".kind", "celsius"));
        const std::string interp_name = cfg.str(prefix + ".interp", "linear");
        const Interp interp = interp_name == "constant" ? Interp::PiecewiseConstant : Interp::Linear;
        BoundarySignal sig = load_series(cfg.require_str(prefix + ".file"), kind, scales, interp);
        if (sig.t_last() + 1e-9 < duration_star) {
            throw ConfigError("signal '" + prefix + "' ends at t* = " + g17(sig.t_last()) +
                              " but the run needs coverage to t* = " + g17(duration_star));
        }
        return sig;
    }
    throw ConfigError("signal '" + prefix + "': unknown source '" + source + "'");
}

inline FluctuationKind parse_kind(const std::string& name, const std::string& key) {
    try {
        return fluctuation_kind_from_string(name);
    } catch (const ConfigError&) {
        throw ConfigError("config key '" + key + "': unknown candidate kind '" + name + "'");
    }
}

inline HmKindPair parse_pair(const std::string& text, const std::string& key) {
    const auto plus = text.find('+');
    if (plus == std::string::npos) {
        throw ConfigError("config key '" + key + "': expected '<u_kind>+<v_kind>', got '" + text +
                          "'");
    }
    HmKindPair pair;
    pair.u_kind = parse_kind(trim(text.substr(0, plus)), key);
    pair.v_kind = parse_kind(trim(text.substr(plus + 1)), key);
    return pair;
}

} // namespace detail

/// Candidate label used in calibration tables: kind name, or u+v pair.
inline std::string candidate_label(const ArmChoice& u) { return to_string(u.kind); }
inline std::string candidate_label(const HmKindPair& pair) {
    return std::string(to_string(pair.u_kind)) + "+" + to_string(pair.v_kind);
}

inline BuiltRun build_run(const KvMap& map) {
    const ConfigView cfg(map);
    BuiltRun run;

    const std::string problem = cfg.str("problem", "heat");
    if (problem == "heat") {
        run.problem = ProblemKind::Heat;
    } else if (problem == "hm") {
        run.problem = ProblemKind::Hm;
    } else {
        throw ConfigError("config key 'problem': expected heat|hm, got '" + problem + "'");
    }
    const std::string model = cfg.str("model", "cm");
    if (model == "cm") {
        run.model = ModelKind::Cm;
    } else if (model == "arm") {
        run.model = ModelKind::Arm;
    } else {
        throw ConfigError("config key 'model': expected cm|arm, got '" + model + "'");
    }

    run.seed = cfg.u64("seed", 1);
    run.jobs = static_cast<unsigned>(cfg.u64("jobs", 1));
    if (run.jobs == 0) run.jobs = 1;
    run.out_dir = cfg.str("out", "out");

    run.scales.length_ref_m = cfg.require_num("scales.length_m");
    run.scales.t_ref_s = cfg.num("scales.time_s", 3600.0);
    run.scales.temp_ref_k = cfg.require_num("scales.temp_k");
    run.scales.moisture_ref = cfg.num("scales.moisture_ref", 1.0);

    const double horizon_hours = cfg.require_num("time.horizon_hours");
    const double dt_hours = cfg.num("time.dt_hours", 1.0);
    if (!(horizon_hours > 0.0)) throw ConfigError("empty time span: time.horizon_hours must be > 0");
    if (!(dt_hours > 0.0)) throw ConfigError("time.dt_hours must be > 0");

    run.output_stride = static_cast<std::size_t>(cfg.u64("time.output_stride", 1));
    run.max_stages = static_cast<int>(cfg.u64("time.max_stages", 1000));
    const std::string stepper = cfg.str("time.stepper", "rkl1");
    if (stepper == "rkl1") {
        run.stepper = StepperKind::Rkl1;
    } else if (stepper == "euler") {
        run.stepper = StepperKind::Euler;
    } else {
        throw ConfigError("config key 'time.stepper': expected rkl1|euler, got '" + stepper + "'");
    }

    run.tau_star = hours_to_t_star(cfg.num("arm.tau_hours", 12.0), run.scales);
    run.t1_star = hours_to_t_star(
        cfg.num("calibrate.t1_hours", run.problem == ProblemKind::Heat ? 120.0 : 240.0), run.scales);
    for (double tau : cfg.num_list("calibrate.tau_list_hours", {6, 12, 24, 48})) {
        run.calib_tau_star.push_back(hours_to_t_star(tau, run.scales));
    }
    run.n_starts = static_cast<std::size_t>(cfg.u64("calibrate.n_starts", 5));
    for (double j : cfg.num_list("calibrate.sensor_nodes", {})) {
        if (j < 0 || j != std::floor(j)) {
            throw ConfigError("config key 'calibrate.sensor_nodes': expected node indices");
        }
        run.calib_sensor_nodes.push_back(static_cast<std::size_t>(j));
    }
    for (double dt : cfg.num_list("compare.dt_list_hours", {dt_hours})) {
        run.sweep_dt_star.push_back(hours_to_t_star(dt, run.scales));
    }
    for (double tau : cfg.num_list("compare.tau_list_hours", {cfg.num("arm.tau_hours", 12.0)})) {
        run.sweep_tau_star.push_back(hours_to_t_star(tau, run.scales));
    }
    run.params_file = cfg.str("arm.params_file", "");

    // Signals must cover the longest span any command can ask for.
    const double t1_hours = t_star_to_hours(run.t1_star, run.scales);
    const double signal_hours = std::max(horizon_hours, t1_hours) + 1.0;

    const std::size_t n_nodes = static_cast<std::size_t>(cfg.u64("grid.n_nodes", 101));
    run.sensor_node = static_cast<std::size_t>(cfg.u64("analysis.sensor_node", n_nodes / 2));
    if (run.sensor_node >= n_nodes) {
        throw ConfigError("config key 'analysis.sensor_node': index out of range");
    }
    run.uncertainty.sensor_rel_temp = cfg.num("analysis.sensor_rel_temp", 1.5e-2);
    run.uncertainty.sensor_rel_moist = cfg.num("analysis.sensor_rel_moist", 2.5e-2);
    run.uncertainty.placement_dx_m = cfg.num("analysis.placement_dx_m", 5.0e-3);

    if (run.problem == ProblemKind::Heat) {
        run.scales.c_ref = cfg.require_num("scales.c_ref");
        run.scales.k_ref = cfg.require_num("scales.k_ref");
        run.scales.d_theta_ref = cfg.num("scales.d_theta_ref", 1.0);
        run.scales.validate();

        run.heat.grid = SpaceGrid(n_nodes);
        run.heat.fo_t = fourier_number(run.scales);
        run.heat.bi_left = cfg.require_num("heat.bi_left");
        run.heat.bi_right = cfg.require_num("heat.bi_right");
        run.heat.alpha = cfg.num("heat.alpha", 0.0);
        run.heat.c_poly = {cfg.require_num("heat.c0"), cfg.num("heat.c1", 0.0), 0.0};
        run.heat.k_poly = {cfg.require_num("heat.k0"), cfg.num("heat.k1", 0.0), 0.0};
        run.heat.admissible_lo = cfg.num("heat.admissible_lo", 0.8);
        run.heat.admissible_hi = cfg.num("heat.admissible_hi", 1.2);
        run.heat.bc.left_temp =
            detail::build_signal(cfg, "bc.left", run.scales, signal_hours, run.seed);
        run.heat.bc.right_temp =
            detail::build_signal(cfg, "bc.right", run.scales, signal_hours, run.seed);
        if (run.heat.alpha != 0.0) {
            run.heat.bc.radiation =
                detail::build_signal(cfg, "bc.radiation", run.scales, signal_hours, run.seed);
        }
        run.heat.validate();

        const double a = cfg.num("heat.initial_offset", 1.0);
        const double b = cfg.num("heat.initial_slope", 0.0);
        run.heat_initial.resize(n_nodes);
        for (std::size_t j = 0; j < n_nodes; ++j) {
            run.heat_initial[j] = a + b * run.heat.grid.x(j);
        }

        run.arm_u.kind = detail::parse_kind(cfg.str("arm.kind", "heat_ii"), "arm.kind");
        run.arm_u.params = cfg.num_list("arm.params", {0.0, 1.0});
        for (const auto& name : cfg.str_list("calibrate.kinds", {"heat_i", "heat_ii"})) {
            run.calib_kinds.push_back(detail::parse_kind(name, "calibrate.kinds"));
        }
    } else {
        const double rho0 = cfg.require_num("hm.rho0");
        const double c0_dry = cfg.require_num("hm.c0_dry");
        const double d_theta_a0 = cfg.require_num("hm.d_theta_a0");
        const double k_a0 = cfg.require_num("hm.k_a0");
        // Reference scales of the coupled problem follow from the material:
        // c at dry state, k and D_theta at their polynomial base points.
        run.scales.c_ref = rho0 * c0_dry;
        run.scales.k_ref = k_a0;
        run.scales.d_theta_ref = d_theta_a0;
        run.scales.validate();

        PhysicalConstants pc;
        pc.rho0 = rho0;
        pc.c0_dry = c0_dry;
        pc.rho2 = cfg.num("hm.rho2", pc.rho2);
        pc.c2 = cfg.num("hm.c2", pc.c2);
        pc.latent_heat = cfg.num("hm.latent_heat", pc.latent_heat);
        pc.r1 = cfg.num("hm.r1", pc.r1);

        const double d_t_phys = cfg.require_num("hm.d_t_phys");
        const double k_tm_phys = cfg.require_num("hm.k_tm_phys");
        const HmGroups groups = derive_hm_groups(run.scales, pc, d_t_phys, k_tm_phys);

        run.hm.grid = SpaceGrid(n_nodes);
        run.hm.fo_m = groups.fo_m;
        run.hm.fo_t = groups.fo_t;
        run.hm.gamma = groups.gamma;
        run.hm.delta = groups.delta;
        const double theta_ref = run.scales.moisture_ref;
        const double d_a1 = cfg.num("hm.d_theta_a1", 0.0);
        const double d_shift = cfg.num("hm.d_theta_shift", 0.0);
        run.hm.d_poly = {1.0, d_a1 * theta_ref / d_theta_a0, d_shift / theta_ref};
        run.hm.k_poly = {1.0, cfg.num("hm.k_a1", 0.0) * theta_ref / k_a0, 0.0};
        run.hm.c_poly = {1.0, pc.rho2 * pc.c2 * theta_ref / (rho0 * c0_dry), 0.0};
        run.hm.d_t_star = 1.0;
        run.hm.k_tm_star = 1.0;
        run.hm.k_tm_phys = k_tm_phys;
        run.hm.admissible_v_lo = cfg.num("hm.admissible_v_lo", 0.0);
        run.hm.admissible_v_hi = cfg.num("hm.admissible_v_hi", 1.5);
        run.hm.constants = pc;
        run.hm.bc.left_temp =
            detail::build_signal(cfg, "bc.temp_left", run.scales, signal_hours, run.seed);
        run.hm.bc.right_temp =
            detail::build_signal(cfg, "bc.temp_right", run.scales, signal_hours, run.seed);
        run.hm.bc.left_moist =
            detail::build_signal(cfg, "bc.moist_left", run.scales, signal_hours, run.seed);
        run.hm.bc.right_moist =
            detail::build_signal(cfg, "bc.moist_right", run.scales, signal_hours, run.seed);
        run.hm.validate();

        run.hm_initial.u.assign(n_nodes, cfg.num("hm.initial_u", 1.0));
        run.hm_initial.v.assign(n_nodes, cfg.num("hm.initial_v", 1.0));

        run.arm_u.kind = detail::parse_kind(cfg.str("arm.u_kind", "hm_u_ii"), "arm.u_kind");
        run.arm_u.params = cfg.num_list("arm.u_params", {0.0, 1.0});
        run.arm_v.kind = detail::parse_kind(cfg.str("arm.v_kind", "hm_v"), "arm.v_kind");
        run.arm_v.params = cfg.num_list("arm.v_params", {0.001, 0.001, 0.001, 0.5});
        const auto pair_names =
            cfg.str_list("calibrate.pairs", {"hm_u_i+hm_v", "hm_u_ii+hm_v", "hm_u_iii+hm_v"});
        for (const auto& name : pair_names) {
            run.calib_pairs.push_back(detail::parse_pair(name, "calibrate.pairs"));
        }
    }

    run.dt_star = hours_to_t_star(dt_hours, run.scales);
    run.horizon_star = hours_to_t_star(horizon_hours, run.scales);

    // Resolve ARM parameters from a calibration table when one is named.
    if (!run.params_file.empty() && run.model == ModelKind::Arm) {
        const double tau_hours = t_star_to_hours(run.tau_star, run.scales);
        if (run.problem == ProblemKind::Heat) {
            run.arm_u.params =
                lookup_calibrated_params(run.params_file, candidate_label(run.arm_u), tau_hours);
        } else {
            HmKindPair pair{run.arm_u.kind, run.arm_v.kind};
            const auto joint =
                lookup_calibrated_params(run.params_file, candidate_label(pair), tau_hours);
            const std::size_t nu = param_count(pair.u_kind);
            if (joint.size() != nu + param_count(pair.v_kind)) {
                throw ConfigError("calibration table row for '" + candidate_label(pair) +
                                  "' has wrong parameter count");
            }
            run.arm_u.params.assign(joint.begin(), joint.begin() + nu);
            run.arm_v.params.assign(joint.begin() + nu, joint.end());
        }
    }

    return run;
}

/// Stability and averaging checks for the main simulate path, done before
/// any stepping. Returns the chosen stage count for the echo in metadata.
inline int validate_run_stability(const BuiltRun& run) {
    const double dt_exp =
        run.problem == ProblemKind::Heat ? run.heat.dt_exp() : run.hm.dt_exp();
    if (run.stepper == StepperKind::Euler) {
        if (run.dt_star > dt_exp * (1.0 + 1e-12)) {
            throw ConfigError("explicit step " + g17(run.dt_star) + " exceeds the stable limit " +
                              g17(dt_exp) + "; use the super-time-stepping integrator");
        }
        return 1;
    }
    return rkl1_required_stages(run.dt_star, dt_exp, run.max_stages);
}

/// tau must tile the native sampling of every signal the model averages.
inline void validate_run_averaging(const BuiltRun& run, double tau_star) {
    AveragingSpec spec{tau_star};
    if (run.problem == ProblemKind::Heat) {
        spec.validate_against(run.heat.bc.left_temp);
        spec.validate_against(run.heat.bc.right_temp);
        if (run.heat.alpha != 0.0) spec.validate_against(run.heat.bc.radiation);
    } else {
        spec.validate_against(run.hm.bc.left_temp);
        spec.validate_against(run.hm.bc.right_temp);
        spec.validate_against(run.hm.bc.left_moist);
        spec.validate_against(run.hm.bc.right_moist);
    }
}

} // namespace armsim

#endif
