#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bohm/analysis.hpp"
#include "bohm/core_model.hpp"
#include "bohm/detection.hpp"
#include "bohm/errors.hpp"
#include "bohm/field_engine.hpp"
#include "bohm/superposition.hpp"
#include "bohm/trajectory_engine.hpp"
#include "bohm/verification.hpp"

namespace bohm::cli {

using json = nlohmann::json;

enum class Scenario { single_packet, two_slit };

struct PhysicsConfig {
    double mass = 1.0;
    double hbar = 1.0;
    double sigma0 = 0.5;
    double center = 0.0;
    double drift_momentum = 0.0;
    double half_separation = 5.0;  // x0, two_slit only
};

struct GridConfig {
    double x_min = -35.0;
    double x_max = 35.0;
    std::size_t n_points = 1401;
};

struct SwarmConfig {
    std::size_t n_trajectories = 200;
    double t0 = 0.0;
    double t1 = 10.0;
    std::string sampling = "equidistant_quantiles";
    /// Explicit report times; empty means n_output_times evenly spaced in [t0, t1].
    std::vector<double> output_times;
    std::size_t n_output_times = 101;
    std::vector<double> explicit_positions;
    double x_min = -20.0;
    double x_max = 20.0;
    double min_completed_fraction = 0.95;
};

struct DetectionConfig {
    double time = 10.0;
    double x_min = -35.0;
    double x_max = 35.0;
    std::size_t n_pixels = 400;
    std::vector<std::size_t> counts{100, 10'000, 1'000'000};
    double noise_rate = 1.0;
};

struct Tolerances {
    double rtol = 1e-8;
    /// Absolute trajectory tolerance; 0 selects 1e-10 sigma0.
    double atol = 0.0;
    /// Relative density floor below which the two-slit velocity is undefined.
    double rho_floor = 1e-12;
};

/// Everything a run needs. Defaults: m = hbar = 1, sigma0 = 0.5, x0 = 5.
struct RunConfig {
    Scenario scenario = Scenario::two_slit;
    PhysicsConfig physics{};
    GridConfig grid{};
    std::vector<double> times{10.0};
    SwarmConfig swarm{};
    DetectionConfig detection{};
    std::uint64_t seed = 20240601;
    std::string output_dir = "out";
    Tolerances tolerances{};

    PacketParams packet() const {
        return {physics.mass, physics.hbar, physics.sigma0, physics.center, physics.drift_momentum};
    }
    SuperpositionConfig superposition() const {
        SuperpositionConfig s;
        s.packet = packet();
        s.half_separation = physics.half_separation;
        s.rho_floor = tolerances.rho_floor;
        return s;
    }
};

inline const char* to_string(Scenario s) { return s == Scenario::single_packet ? "single_packet" : "two_slit"; }

namespace detail {

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(path.empty() ? key : path + "." + key, "unknown key");
    }
}

inline std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

inline double read_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
    return v;
}

inline std::uint64_t read_unsigned(const json& j, const std::string& path) {
    if (!j.is_number_unsigned()) {
        if (j.is_number_integer()) throw ConfigError(path, "must be non-negative");
        throw ConfigError(path, "expected a non-negative integer");
    }
    return j.get<std::uint64_t>();
}

template <class T>
void read(const json& j, const std::string& path, const char* key, T& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    const std::string p = join(path, key);
    if constexpr (std::is_same_v<T, double>) {
        out = read_number(v, p);
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(p, "expected a string");
        out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        if (!v.is_array()) throw ConfigError(p, "expected an array of numbers");
        out.clear();
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(read_number(v[i], p + "[" + std::to_string(i) + "]"));
    } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
        if (!v.is_array()) throw ConfigError(p, "expected an array of integers");
        out.clear();
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(static_cast<std::size_t>(read_unsigned(v[i], p + "[" + std::to_string(i) + "]")));
    } else {
        out = static_cast<T>(read_unsigned(v, p));
    }
}

inline void positive(double v, const std::string& path) {
    if (!(v > 0.0)) throw ConfigError(path, "must be positive");
}

}  // namespace detail

/// Checks every field; the first violation is reported with its path.
inline void validate(const RunConfig& c) {
    using detail::positive;
    positive(c.physics.mass, "physics.mass");
    positive(c.physics.hbar, "physics.hbar");
    positive(c.physics.sigma0, "physics.sigma0");
    if (c.scenario == Scenario::two_slit) {
        positive(c.physics.half_separation, "physics.half_separation");
        if (c.physics.center != 0.0) throw ConfigError("physics.center", "two_slit packets are centred at +/-x0");
        if (c.physics.drift_momentum != 0.0) throw ConfigError("physics.drift_momentum", "must be 0 for two_slit");
    }
    if (c.grid.n_points < 2) throw ConfigError("grid.n_points", "must be at least 2");
    if (!(c.grid.x_max > c.grid.x_min)) throw ConfigError("grid.x_max", "must exceed grid.x_min");
    if (c.times.empty()) throw ConfigError("times", "must not be empty");
    for (std::size_t i = 0; i < c.times.size(); ++i)
        if (!(c.times[i] >= 0.0)) throw ConfigError("times[" + std::to_string(i) + "]", "must be >= 0");

    const auto& s = c.swarm;
    if (s.sampling != "equidistant_quantiles" && s.sampling != "iid_from_rho" && s.sampling != "explicit_list")
        throw ConfigError("swarm.sampling", "expected equidistant_quantiles, iid_from_rho or explicit_list");
    if (s.sampling == "explicit_list" && s.explicit_positions.empty())
        throw ConfigError("swarm.explicit_positions", "required for explicit_list sampling");
    if (s.n_trajectories < 1) throw ConfigError("swarm.n_trajectories", "must be at least 1");
    if (!(s.t0 >= 0.0)) throw ConfigError("swarm.t0", "must be >= 0");
    if (!(s.t1 > s.t0)) throw ConfigError("swarm.t1", "must exceed swarm.t0");
    if (s.output_times.empty() && s.n_output_times < 2) throw ConfigError("swarm.n_output_times", "must be at least 2");
    for (std::size_t i = 0; i < s.output_times.size(); ++i) {
        const std::string p = "swarm.output_times[" + std::to_string(i) + "]";
        if (s.output_times[i] < s.t0 || s.output_times[i] > s.t1) throw ConfigError(p, "outside [t0, t1]");
        if (i > 0 && !(s.output_times[i] > s.output_times[i - 1])) throw ConfigError(p, "must be increasing");
    }
    if (!(s.x_max > s.x_min)) throw ConfigError("swarm.x_max", "must exceed swarm.x_min");
    if (!(s.min_completed_fraction >= 0.0 && s.min_completed_fraction <= 1.0))
        throw ConfigError("swarm.min_completed_fraction", "must lie in [0, 1]");

    const auto& d = c.detection;
    if (!(d.time >= 0.0)) throw ConfigError("detection.time", "must be >= 0");
    if (d.n_pixels < 1) throw ConfigError("detection.n_pixels", "must be at least 1");
    if (!(d.x_max > d.x_min)) throw ConfigError("detection.x_max", "must exceed detection.x_min");
    for (std::size_t i = 1; i < d.counts.size(); ++i)
        if (d.counts[i] < d.counts[i - 1])
            throw ConfigError("detection.counts[" + std::to_string(i) + "]", "counts must be ascending");
    if (!(d.noise_rate >= 0.0)) throw ConfigError("detection.noise_rate", "must be >= 0");

    positive(c.tolerances.rtol, "tolerances.rtol");
    if (!(c.tolerances.atol >= 0.0)) throw ConfigError("tolerances.atol", "must be >= 0");
    if (!(c.tolerances.rho_floor >= 0.0)) throw ConfigError("tolerances.rho_floor", "must be >= 0");
    if (c.output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

/// Overlays a JSON document on `base`. Unknown keys and ill-typed values are
/// rejected with the offending path. Does not validate.
inline RunConfig config_from_json(const json& j, RunConfig c = {}) {
    using detail::read;
    detail::check_keys(j, "",
                       {"scenario", "physics", "grid", "times", "swarm", "detection", "seed", "output_dir", "tolerances"});
    if (j.contains("scenario")) {
        std::string s;
        read(j, "", "scenario", s);
        if (s == "single_packet") c.scenario = Scenario::single_packet;
        else if (s == "two_slit") c.scenario = Scenario::two_slit;
        else throw ConfigError("scenario", "expected single_packet or two_slit");
    }
    if (j.contains("physics")) {
        const auto& p = j.at("physics");
        detail::check_keys(p, "physics", {"mass", "hbar", "sigma0", "center", "drift_momentum", "half_separation"});
        read(p, "physics", "mass", c.physics.mass);
        read(p, "physics", "hbar", c.physics.hbar);
        read(p, "physics", "sigma0", c.physics.sigma0);
        read(p, "physics", "center", c.physics.center);
        read(p, "physics", "drift_momentum", c.physics.drift_momentum);
        read(p, "physics", "half_separation", c.physics.half_separation);
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        detail::check_keys(g, "grid", {"x_min", "x_max", "n_points"});
        read(g, "grid", "x_min", c.grid.x_min);
        read(g, "grid", "x_max", c.grid.x_max);
        read(g, "grid", "n_points", c.grid.n_points);
    }
    read(j, "", "times", c.times);
    if (j.contains("swarm")) {
        const auto& s = j.at("swarm");
        detail::check_keys(s, "swarm",
                           {"n_trajectories", "t0", "t1", "sampling", "output_times", "n_output_times",
                            "explicit_positions", "x_min", "x_max", "min_completed_fraction"});
        read(s, "swarm", "n_trajectories", c.swarm.n_trajectories);
        read(s, "swarm", "t0", c.swarm.t0);
        read(s, "swarm", "t1", c.swarm.t1);
        read(s, "swarm", "sampling", c.swarm.sampling);
        read(s, "swarm", "output_times", c.swarm.output_times);
        read(s, "swarm", "n_output_times", c.swarm.n_output_times);
        read(s, "swarm", "explicit_positions", c.swarm.explicit_positions);
        read(s, "swarm", "x_min", c.swarm.x_min);
        read(s, "swarm", "x_max", c.swarm.x_max);
        read(s, "swarm", "min_completed_fraction", c.swarm.min_completed_fraction);
    }
    if (j.contains("detection")) {
        const auto& d = j.at("detection");
        detail::check_keys(d, "detection", {"time", "x_min", "x_max", "n_pixels", "counts", "noise_rate"});
        read(d, "detection", "time", c.detection.time);
        read(d, "detection", "x_min", c.detection.x_min);
        read(d, "detection", "x_max", c.detection.x_max);
        read(d, "detection", "n_pixels", c.detection.n_pixels);
        read(d, "detection", "counts", c.detection.counts);
        read(d, "detection", "noise_rate", c.detection.noise_rate);
    }
    read(j, "", "seed", c.seed);
    read(j, "", "output_dir", c.output_dir);
    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        detail::check_keys(t, "tolerances", {"rtol", "atol", "rho_floor"});
        read(t, "tolerances", "rtol", c.tolerances.rtol);
        read(t, "tolerances", "atol", c.tolerances.atol);
        read(t, "tolerances", "rho_floor", c.tolerances.rho_floor);
    }
    return c;
}

inline RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
    }
    auto c = config_from_json(j);
    validate(c);
    return c;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

inline json to_json(const RunConfig& c) {
    return json{
        {"scenario", to_string(c.scenario)},
        {"physics",
         {{"mass", c.physics.mass},
          {"hbar", c.physics.hbar},
          {"sigma0", c.physics.sigma0},
          {"center", c.physics.center},
          {"drift_momentum", c.physics.drift_momentum},
          {"half_separation", c.physics.half_separation}}},
        {"grid", {{"x_min", c.grid.x_min}, {"x_max", c.grid.x_max}, {"n_points", c.grid.n_points}}},
        {"times", c.times},
        {"swarm",
         {{"n_trajectories", c.swarm.n_trajectories},
          {"t0", c.swarm.t0},
          {"t1", c.swarm.t1},
          {"sampling", c.swarm.sampling},
          {"output_times", c.swarm.output_times},
          {"n_output_times", c.swarm.n_output_times},
          {"explicit_positions", c.swarm.explicit_positions},
          {"x_min", c.swarm.x_min},
          {"x_max", c.swarm.x_max},
          {"min_completed_fraction", c.swarm.min_completed_fraction}}},
        {"detection",
         {{"time", c.detection.time},
          {"x_min", c.detection.x_min},
          {"x_max", c.detection.x_max},
          {"n_pixels", c.detection.n_pixels},
          {"counts", c.detection.counts},
          {"noise_rate", c.detection.noise_rate}}},
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"tolerances", {{"rtol", c.tolerances.rtol}, {"atol", c.tolerances.atol}, {"rho_floor", c.tolerances.rho_floor}}},
    };
}

// ---------------------------------------------------------------- output

/// 17 significant digits, round-trip exact.
inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Writes artifacts into one directory and records them for the manifest.
class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw ConfigError("output_dir", "cannot create " + dir_.string() + ": " + ec.message());
    }

    void write(const std::string& name, const std::string& contents) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw ConfigError("output_dir", "cannot write " + (dir_ / name).string());
        out << contents;
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(contents)));
        artifacts_.push_back({{"file", name}, {"bytes", contents.size()}, {"fnv1a64", hex}});
    }

    void write_manifest(const std::string& subcommand, const RunConfig& cfg) {
        json m{{"format_version", 1},
               {"subcommand", subcommand},
               {"seed", cfg.seed},
               {"config", to_json(cfg)},
               {"artifacts", artifacts_}};
        std::ofstream out(dir_ / ("manifest_" + subcommand + ".json"), std::ios::binary);
        out << m.dump(2) << "\n";
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    json artifacts_ = json::array();
};

// ---------------------------------------------------------------- subcommands

namespace detail {

inline VelocityField velocity_field(const RunConfig& c) {
    if (c.scenario == Scenario::single_packet) {
        const auto p = c.packet();
        return [p](double x, double t) { return velocity(p, x, t); };
    }
    const auto s = c.superposition();
    return [s](double x, double t) { return velocity(s, x, t); };
}

/// Normalized density at time t.
inline Density1D density_at(const RunConfig& c, double t) {
    if (c.scenario == Scenario::single_packet) {
        const auto p = c.packet();
        return [p, t](double x) { return density(p, x, t); };
    }
    const auto s = c.superposition();
    const double n = normalization_prefactor(s, t);
    return [s, t, n](double x) { return n * rho(s, x, t); };
}

inline IntegratorOptions integrator(const RunConfig& c) {
    auto o = integrator_options_for(c.packet());
    o.rtol = c.tolerances.rtol;
    if (c.tolerances.atol > 0.0) o.atol = c.tolerances.atol;
    return o;
}

inline UniformGrid grid(const RunConfig& c) { return {c.grid.x_min, c.grid.x_max, c.grid.n_points}; }

}  // namespace detail

struct FieldsOptions {
    /// Extract fields by finite differences of psi instead of the closed forms.
    bool numerical = false;
};

/// fields.csv: x,t,rho,flux,velocity,Q,K on the configured grid at every time.
/// Values that are undefined at a node are written as nan.
inline void run_fields(const RunConfig& c, ArtifactWriter& w, const FieldsOptions& opt = {}) {
    std::string csv = "x,t,rho,flux,velocity,Q,K\n";
    const auto g = detail::grid(c);
    const auto p = c.packet();
    const auto s = c.superposition();
    const auto evaluator =
        c.scenario == Scenario::single_packet ? single_packet_wavefunction(p) : superposition_wavefunction(s);
    for (double t : c.times) {
        const double norm = c.scenario == Scenario::two_slit ? normalization_prefactor(s, t) : 1.0;
        for (std::size_t i = 0; i < g.n_points; ++i) {
            const double x = g.point(i);
            double r = NAN, j = NAN, v = NAN, q = NAN, k = NAN;
            if (opt.numerical) {
                r = std::norm(evaluator(x, t));
                try {
                    const auto f = fields_at(evaluator, x, t);
                    j = f.flux;
                    v = f.velocity;
                    q = f.quantum_potential;
                    k = f.kinetic;
                } catch (const NodeProximity&) {
                }
            } else if (c.scenario == Scenario::single_packet) {
                r = density(p, x, t);
                v = velocity(p, x, t);
                j = r * v;
                q = quantum_potential(p, x, t);
                k = kinetic_term(p, x, t);
            } else {
                r = norm * rho(s, x, t);
                j = norm * flux(s, x, t);
                try {
                    v = velocity(s, x, t);
                    k = 0.5 * p.mass * v * v;
                    q = quantum_potential(s, x, t);
                } catch (const NodeProximity&) {
                }
            }
            csv += num(x) + "," + num(t) + "," + num(r) + "," + num(j) + "," + num(v) + "," + num(q) + "," + num(k) +
                   "\n";
        }
    }
    w.write("fields.csv", csv);
}

/// trajectories.csv (traj_id,t,x), trajectory_status.csv and non_crossing.csv.
inline NonCrossingReport run_trajectories(const RunConfig& c, ArtifactWriter& w) {
    SwarmPlan plan;
    plan.n_trajectories = c.swarm.n_trajectories;
    plan.t0 = c.swarm.t0;
    plan.t1 = c.swarm.t1;
    plan.sampling = c.swarm.sampling == "iid_from_rho"    ? SamplingMode::iid_from_rho
                    : c.swarm.sampling == "explicit_list" ? SamplingMode::explicit_list
                                                          : SamplingMode::equidistant_quantiles;
    plan.seed = c.seed;
    plan.explicit_positions = c.swarm.explicit_positions;
    plan.x_min = c.swarm.x_min;
    plan.x_max = c.swarm.x_max;
    plan.min_completed_fraction = c.swarm.min_completed_fraction;
    plan.output_times = c.swarm.output_times;
    if (plan.output_times.empty()) {
        const std::size_t n = c.swarm.n_output_times;
        for (std::size_t k = 0; k < n; ++k)
            plan.output_times.push_back(k + 1 == n ? plan.t1
                                                   : plan.t0 + (plan.t1 - plan.t0) * static_cast<double>(k) /
                                                                   static_cast<double>(n - 1));
    }
    const auto result = integrate_swarm(detail::velocity_field(c), detail::density_at(c, plan.t0), plan,
                                        detail::integrator(c));
    std::string csv = "traj_id,t,x\n";
    std::string status = "traj_id,x0,status,final_t,final_x\n";
    for (std::size_t i = 0; i < result.trajectories.size(); ++i) {
        const auto& tr = result.trajectories[i];
        const std::string id = std::to_string(i);
        for (std::size_t k = 0; k < tr.times.size(); ++k) csv += id + "," + num(tr.times[k]) + "," + num(tr.positions[k]) + "\n";
        status += id + "," + num(tr.initial_condition) + "," + to_string(tr.status) + "," + num(tr.times.back()) + "," +
                  num(tr.final_position()) + "\n";
    }
    const auto report = check_non_crossing(result.trajectories);
    std::string nc = "ordered,checked_times,first_violation_t,lower_id,upper_id,side_confined,completed,total\n";
    nc += std::string(report.ordered ? "true" : "false") + "," + std::to_string(report.checked_times) + ",";
    if (report.first_violation)
        nc += num(report.first_violation->time) + "," + std::to_string(report.first_violation->lower) + "," +
              std::to_string(report.first_violation->upper);
    else
        nc += ",,";
    nc += std::string(",") + (check_side_confinement(result.trajectories) ? "true" : "false") + "," +
          std::to_string(result.n_completed) + "," + std::to_string(result.trajectories.size()) + "\n";
    w.write("trajectories.csv", csv);
    w.write("trajectory_status.csv", status);
    w.write("non_crossing.csv", nc);
    return report;
}

/// frames.csv (one row per exposure) and frame_<k>.csv (one row per pixel).
inline void run_detect(const RunConfig& c, ArtifactWriter& w) {
    const auto& d = c.detection;
    const PixelGrid grid{d.x_min, d.x_max, d.n_pixels};
    const auto rho_t = detail::density_at(c, d.time);
    const auto frames = exposure_series(rho_t, grid, d.counts, d.noise_rate, c.seed);
    // visibility of the central fringe against the innermost minima (two_slit only)
    std::optional<std::vector<double>> minima;
    double window = 0.0;
    if (c.scenario == Scenario::two_slit && d.time > 0.0) {
        const auto s = c.superposition();
        const double spacing = fringe_spacing(s, d.time);
        const std::size_t n = std::max<std::size_t>(2001, static_cast<std::size_t>(20.0 * (d.x_max - d.x_min) / spacing));
        const auto ext = find_extrema(s, UniformGrid{d.x_min, d.x_max, n}, d.time);
        double lo = -INFINITY, hi = INFINITY;
        for (double m : ext.minima) {
            if (m < 0.0) lo = std::max(lo, m);
            else if (m > 0.0) hi = std::min(hi, m);
        }
        if (std::isfinite(lo) && std::isfinite(hi)) minima = std::vector<double>{lo, hi};
        window = 0.05 * spacing;
    }
    std::string summary = "frame,target_events,n_events,n_discarded,n_noise,visibility,visibility_std_error\n";
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const auto& f = frames[k];
        double v = NAN, e = NAN;
        if (minima) {
            try {
                const auto vis = fringe_visibility(f.counts, grid, 0.0, *minima, window);
                v = vis.value;
                e = vis.std_error;
            } catch (const ResolutionError&) {
            }
        }
        summary += std::to_string(k) + "," + std::to_string(d.counts[k]) + "," + std::to_string(f.n_events) + "," +
                   std::to_string(f.n_discarded) + "," + std::to_string(f.n_noise) + "," + num(v) + "," + num(e) + "\n";
        std::string px = "pixel,x_center,count,signal_count\n";
        for (std::size_t i = 0; i < grid.n_pixels; ++i)
            px += std::to_string(i) + "," + num(grid.center(i)) + "," + std::to_string(f.counts[i]) + "," +
                  std::to_string(f.signal_counts[i]) + "\n";
        char name[32];
        std::snprintf(name, sizeof name, "frame_%03zu.csv", k);
        w.write(name, px);
    }
    w.write("frames.csv", summary);
}

/// extrema.csv, ladder.csv (two_slit) and energy.csv at every configured time.
inline void run_analyze(const RunConfig& c, ArtifactWriter& w) {
    const auto g = detail::grid(c);
    const auto p = c.packet();
    const auto s = c.superposition();
    std::string ext = "t,kind,x,plateau\n";
    std::string lad = "t,nu,x_lo,x_hi,mean_velocity,quantized_velocity,warning\n";
    std::string en = "t,sigma_t,mean_kinetic,mean_quantum,total,regime,support_warning\n";
    for (double t : c.times) {
        const auto report = c.scenario == Scenario::two_slit && t > 0.0 ? find_extrema(s, g, t)
                                                                        : find_extrema(detail::density_at(c, t), g, t);
        for (double m : report.minima) ext += num(t) + ",min," + num(m) + ",false\n";
        for (std::size_t i = 0; i < report.maxima.size(); ++i)
            ext += num(t) + ",max," + num(report.maxima[i]) + "," + (report.maxima_plateau[i] ? "true" : "false") + "\n";

        if (c.scenario == Scenario::two_slit && t > 0.0) {
            const auto ladder = channel_ladder_extract(s, t, g);
            for (const auto& ch : ladder.channels)
                lad += num(t) + "," + std::to_string(ch.nu) + "," + num(ch.x_lo) + "," + num(ch.x_hi) + "," +
                       num(ch.mean_velocity) + "," + num(channel_velocity(s, ch.nu)) + "," +
                       (ladder.warning ? "pre-asymptotic" : "") + "\n";
        }

        const auto e = c.scenario == Scenario::single_packet
                           ? energy_decomposition(p, t, g)
                           : energy_decomposition(superposition_wavefunction(s), t, g);
        en += num(t) + "," + num(sigma_t(p, t)) + "," + num(e.mean_kinetic) + "," + num(e.mean_quantum) + "," +
              num(e.total) + "," + to_string(dispersion_regime(p, t)) + "," + (e.support_warning ? "true" : "false") +
              "\n";
    }
    w.write("extrema.csv", ext);
    if (c.scenario == Scenario::two_slit) w.write("ladder.csv", lad);
    w.write("energy.csv", en);
}

/// verify.csv: the acceptance checks on the reference configuration with the
/// configured seed. Returns true if every check passed.
inline bool run_verify(const RunConfig& c, ArtifactWriter& w, std::ostream& out) {
    verify::Reference ref;
    ref.seed = c.seed;
    std::string csv = "id,name,passed,measured,threshold,detail\n";
    bool all = true;
    auto quote = [](const std::string& s) {
        std::string q = "\"";
        for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        return q + "\"";
    };
    for (const auto& check : verify::all_checks()) {
        const auto r = verify::run_check(check, ref);
        all = all && r.passed;
        out << verify::summary_line(r) << "\n" << std::flush;
        csv += r.id + "," + quote(r.name) + "," + (r.passed ? "true" : "false") + "," + num(r.measured) + "," +
               num(r.threshold) + "," + quote(r.detail) + "\n";
    }
    w.write("verify.csv", csv);
    return all;
}

// ---------------------------------------------------------------- entry point

enum ExitCode : int { ok = 0, compute_failure = 1, config_failure = 2, verify_failure = 3 };

inline std::string error_line(const char* kind, const std::string& message, const std::string& path = "") {
    json j{{"error", kind}, {"message", message}};
    if (!path.empty()) j["path"] = path;
    return j.dump();
}

/// Runs the command line `args` (without the program name). Precedence of
/// settings: flag > BOHM_OUTPUT_DIR (output directory only) > config file >
/// built-in defaults.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Bohmian trajectories of spreading and interfering Gaussian packets"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand
    std::string config_path, output_dir, scenario;
    std::optional<std::uint64_t> seed;
    std::optional<double> sigma0, mass, hbar, x0, noise_rate, t1;
    std::optional<std::size_t> n_points, n_trajectories;
    std::vector<double> times;
    std::vector<std::size_t> counts;
    bool numerical = false;

    app.add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("-o,--output-dir", output_dir, "Output directory (overrides BOHM_OUTPUT_DIR and the file)");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--scenario", scenario, "single_packet or two_slit");
    app.add_option("--sigma0", sigma0, "Initial packet width");
    app.add_option("--mass", mass, "Particle mass");
    app.add_option("--hbar", hbar, "Reduced Planck constant");
    app.add_option("--x0", x0, "Half slit separation (two_slit)");
    app.add_option("--times", times, "Evaluation times (fields, analyze)");
    app.add_option("--n-points", n_points, "Spatial grid points");
    app.add_option("--n-trajectories", n_trajectories, "Swarm size");
    app.add_option("--t1", t1, "Swarm end time");
    app.add_option("--counts", counts, "Cumulative event totals of the exposure series");
    app.add_option("--noise-rate", noise_rate, "Mean background counts per pixel");

    auto* fields = app.add_subcommand("fields", "Write rho, J, v, Q, K on the grid");
    fields->add_flag("--numerical", numerical, "Extract fields by finite differences of psi");
    app.add_subcommand("trajectories", "Integrate a trajectory swarm");
    app.add_subcommand("detect", "Simulate an exposure series of detector frames");
    app.add_subcommand("analyze", "Extrema, channel ladder and energy split");
    app.add_subcommand("verify", "Run the acceptance checks");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ExitCode::ok;
    } catch (const CLI::ParseError& e) {
        err << error_line("UsageError", e.what()) << "\n";
        return ExitCode::config_failure;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    RunConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            std::stringstream buf;
            buf << in.rdbuf();
            json j;
            try {
                j = json::parse(buf.str());
            } catch (const json::parse_error& e) {
                throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
            }
            cfg = config_from_json(j);
        }
        if (const char* env = std::getenv("BOHM_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        if (seed) cfg.seed = *seed;
        if (!scenario.empty()) {
            if (scenario == "single_packet") cfg.scenario = Scenario::single_packet;
            else if (scenario == "two_slit") cfg.scenario = Scenario::two_slit;
            else throw ConfigError("scenario", "expected single_packet or two_slit");
        }
        if (sigma0) cfg.physics.sigma0 = *sigma0;
        if (mass) cfg.physics.mass = *mass;
        if (hbar) cfg.physics.hbar = *hbar;
        if (x0) cfg.physics.half_separation = *x0;
        if (!times.empty()) cfg.times = times;
        if (n_points) cfg.grid.n_points = *n_points;
        if (n_trajectories) cfg.swarm.n_trajectories = *n_trajectories;
        if (t1) cfg.swarm.t1 = *t1;
        if (!counts.empty()) cfg.detection.counts = counts;
        if (noise_rate) cfg.detection.noise_rate = *noise_rate;
        validate(cfg);
    } catch (const ConfigError& e) {
        err << error_line(e.kind(), e.what(), e.path()) << "\n";
        return ExitCode::config_failure;
    }

    try {
        ArtifactWriter writer(cfg.output_dir);
        int code = ExitCode::ok;
        if (cmd == "fields") {
            run_fields(cfg, writer, {numerical});
        } else if (cmd == "trajectories") {
            const auto report = run_trajectories(cfg, writer);
            out << "non-crossing: " << (report.ordered ? "ordered" : "VIOLATED") << " over " << report.checked_times
                << " times\n";
        } else if (cmd == "detect") {
            run_detect(cfg, writer);
        } else if (cmd == "analyze") {
            run_analyze(cfg, writer);
        } else if (cmd == "verify") {
            if (!run_verify(cfg, writer, out)) code = ExitCode::verify_failure;
        }
        writer.write_manifest(cmd, cfg);
        out << "wrote " << writer.dir().string() << "\n";
        if (code == ExitCode::verify_failure) err << error_line("VerifyFailure", "one or more checks failed") << "\n";
        return code;
    } catch (const ConfigError& e) {
        err << error_line(e.kind(), e.what(), e.path()) << "\n";
        return ExitCode::config_failure;
    } catch (const Error& e) {
        err << error_line(e.kind(), e.what()) << "\n";
        return ExitCode::compute_failure;
    } catch (const std::exception& e) {
        err << error_line("InternalError", e.what()) << "\n";
        return ExitCode::compute_failure;
    }
}

}  // namespace bohm::cli
