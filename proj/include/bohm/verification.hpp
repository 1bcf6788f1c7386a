#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "bohm/analysis.hpp"
#include "bohm/core_model.hpp"
#include "bohm/detection.hpp"
#include "bohm/field_engine.hpp"
#include "bohm/superposition.hpp"
#include "bohm/trajectory_engine.hpp"

namespace bohm::verify {

/// Outcome of one acceptance check. `measured` is the worst ratio of an error
/// to its tolerance over the check's components, so `threshold` is 1 and the
/// check passes when every component is within its tolerance. `detail` lists
/// the components.
struct CheckResult {
    std::string id;
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double threshold = 1.0;
    std::string detail;
    double seconds = 0.0;
};

namespace detail {

inline std::string format(const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

// Collects components of a check.
class Gauge {
public:
    /// value must stay below limit (or at most limit when inclusive).
    void below(const std::string& label, double value, double limit, bool inclusive = false) {
        const bool ok = inclusive ? value <= limit : value < limit;
        passed_ = passed_ && ok;
        worst_ = std::max(worst_, std::isfinite(value) ? value / limit : std::numeric_limits<double>::infinity());
        note(format("%s=%.6g (limit %.3g)%s", label.c_str(), value, limit, ok ? "" : " FAIL"));
    }
    void require(const std::string& label, bool ok) {
        passed_ = passed_ && ok;
        if (!ok) worst_ = std::max(worst_, std::numeric_limits<double>::infinity());
        note(label + (ok ? "=yes" : "=no FAIL"));
    }
    void note(const std::string& s) {
        if (!text_.empty()) text_ += "; ";
        text_ += s;
    }
    CheckResult result(std::string id, std::string name) const {
        CheckResult r;
        r.id = std::move(id);
        r.name = std::move(name);
        r.passed = passed_;
        r.measured = worst_;
        r.detail = text_;
        return r;
    }

private:
    bool passed_ = true;
    double worst_ = 0.0;
    std::string text_;
};

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = (i + 1 == n) ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

inline VelocityField packet_field(const PacketParams& p) {
    return [p](double x, double t) { return velocity(p, x, t); };
}
inline VelocityField young_field(const SuperpositionConfig& s) {
    return [s](double x, double t) { return velocity(s, x, t); };
}

}  // namespace detail

/// Reference configuration: m = hbar = 1, sigma0 = 0.5, x0 = 5.
struct Reference {
    PacketParams packet{};
    SuperpositionConfig young{};
    std::uint64_t seed = 20240601;
};

inline CheckResult energy_conservation(const Reference& ref = {}) {
    detail::Gauge g;
    const auto& p = ref.packet;
    const double tau = p.tau();
    const double expected = energy_expectation(p);
    for (double k : {0.0, 1.0, 5.0, 20.0, 100.0}) {
        const double t = k * tau;
        const double s = sigma_t(p, t);
        const auto e = energy_decomposition(p, t, UniformGrid::symmetric(8.0 * s, 4001));
        g.below(detail::format("|<K>+<Q>-E|@%gtau", k), std::abs(e.total - expected), 1e-6);
    }
    return g.result("C01", "energy conservation <K>+<Q> = hbar^2/8 m sigma0^2");
}

inline CheckResult closed_form_trajectories(const Reference& ref = {}) {
    detail::Gauge g;
    const auto& p = ref.packet;
    const double t1 = 10.0 * p.tau();
    SwarmPlan plan;
    plan.n_trajectories = 50;
    plan.t1 = t1;
    plan.x_min = -10.0 * p.sigma0;
    plan.x_max = 10.0 * p.sigma0;
    plan.output_times = detail::linspace(0.0, t1, 101);
    const auto xs = sample_initial_positions([&](double x) { return density(p, x, 0.0); }, plan);
    const auto swarm = integrate_swarm(detail::packet_field(p), xs, plan, integrator_options_for(p));
    double worst = 0.0;
    for (const auto& tr : swarm.trajectories)
        for (std::size_t k = 0; k < tr.times.size(); ++k) {
            const double exact = trajectory_closed_form(p, tr.initial_condition, tr.times[k]);
            worst = std::max(worst, std::abs(tr.positions[k] - exact) / std::abs(exact));
        }
    g.below("max relative deviation", worst, 1e-6);
    g.require("all completed", swarm.n_completed == 50);
    return g.result("C02", "adaptive trajectories follow (sigma_t/sigma0) x(0)");
}

inline CheckResult zero_flux_axis(const Reference& ref = {}) {
    detail::Gauge g;
    const auto& s = ref.young;
    const auto w = superposition_wavefunction(s);
    double worst_closed = 0.0, worst_numeric = 0.0;
    for (int k = 1; k <= 20; ++k) {
        const double t = 0.5 * k;
        const double sig = sigma_t(s.packet, t);
        double peak = 0.0;
        for (double x = -3.0 * sig - s.half_separation; x <= 3.0 * sig + s.half_separation; x += 0.01 * sig)
            peak = std::max(peak, std::abs(flux(s, x, t)));
        worst_closed = std::max(worst_closed, std::abs(flux(s, 0.0, t)) / peak);
        const double norm = normalization_prefactor(s, t);
        worst_numeric = std::max(worst_numeric, std::abs(fields_at(w, 0.0, t).flux) / (norm * peak));
    }
    g.below("closed-form |J(0,t)|/peak", worst_closed, 1e-14, true);
    g.below("numerical |J(0,t)|/peak", worst_numeric, 1e-14, true);
    return g.result("C03", "zero flux through the symmetry axis");
}

inline CheckResult non_crossing(const Reference& ref = {}) {
    detail::Gauge g;
    const auto& s = ref.young;
    SwarmPlan plan;
    plan.n_trajectories = 200;
    plan.t1 = 10.0;
    plan.output_times = detail::linspace(0.0, 10.0, 500);
    const auto result = integrate_swarm(detail::young_field(s), [&](double x) { return rho(s, x, 0.0); }, plan,
                                        integrator_options_for(s.packet));
    const auto report = check_non_crossing(result.trajectories);
    g.require("all 200 completed", result.n_completed == 200);
    g.require(detail::format("ordered at %zu check times", report.checked_times),
              report.ordered && report.checked_times == 500);
    if (report.first_violation)
        g.note(detail::format("first violation t=%.6g between %zu and %zu", report.first_violation->time,
                              report.first_violation->lower, report.first_violation->upper));
    g.require("side confinement", check_side_confinement(result.trajectories));
    return g.result("C04", "non-crossing and side confinement of the two-slit swarm");
}

inline CheckResult fringe_rate_law(const Reference& ref = {}) {
    detail::Gauge g;
    const auto& s = ref.young;
    const double pi = std::numbers::pi;
    std::vector<double> rates;
    for (double t : {8.0, 9.0, 10.0}) {
        const auto r = find_extrema(s, UniformGrid::symmetric(35.0, 7001), t);
        double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
        for (double m : r.minima) {
            if (m < 0.0) lo = std::max(lo, m);
            else if (m > 0.0) hi = std::min(hi, m);
        }
        rates.push_back(hi / t);
        if (t == 10.0) {
            g.below("|x_min+ - pi|", std::abs(hi - pi), 1e-3);
            g.below("|x_min- + pi|", std::abs(lo + pi), 1e-3);
        }
    }
    const auto [mn, mx] = std::minmax_element(rates.begin(), rates.end());
    g.below("spread of x_min/t over t=8,9,10", (*mx - *mn) / *mn, 0.005);
    return g.result("C05", "innermost minima at +/-0.1 pi t");
}

inline CheckResult channel_quantization(const Reference& ref = {}) {
    detail::Gauge g;
    const auto& s = ref.young;
    const double t = 10.0;
    const auto ladder = channel_ladder_extract(s, t, UniformGrid::symmetric(35.0, 7001));
    const double unit = channel_velocity(s, 1);
    bool complete = true;
    for (int nu = -3; nu <= 3; ++nu) {
        const auto* c = ladder.find(nu);
        if (!c) {
            complete = false;
            continue;
        }
        if (nu == 0) {
            g.note(detail::format("v_0=%.3g", c->mean_velocity));
            continue;
        }
        const double target = channel_velocity(s, nu);
        g.below(detail::format("|v_%d/(%d pi/5)-1|", nu, nu), std::abs(c->mean_velocity / target - 1.0), 0.05);
    }
    g.require("channels -3..3 present", complete);
    if (complete)
        for (int nu = -3; nu < 3; ++nu) {
            const double step = ladder.find(nu + 1)->mean_velocity - ladder.find(nu)->mean_velocity;
            g.below(detail::format("|step_%d/(pi/5)-1|", nu), std::abs(step / unit - 1.0), 0.10);
        }
    return g.result("C06", "channel mean velocities nu pi/5 at t=10");
}

inline CheckResult field_oracles(const Reference& ref = {}) {
    detail::Gauge g;
    const auto& p = ref.packet;
    const auto& s = ref.young;
    // single packet: rho, J, Q against the closed forms at t = tau
    const auto w1 = single_packet_wavefunction(p);
    const double t = p.tau();
    const double sig = sigma_t(p, t);
    // velocities and currents are compared relative to their size, floored at
    // 1% of the spreading speed so the zero at x = 0 stays meaningful
    const double v_floor = 1e-2 * p.spreading_velocity();
    double q_err = 0.0, v_err = 0.0, rho_err = 0.0, j_err = 0.0;
    for (double x : {0.0, sig, 2.0 * sig}) {
        const auto f = fields_at(w1, x, t);
        q_err = std::max(q_err, std::abs(f.quantum_potential - quantum_potential(p, x, t)));
        const double v = velocity(p, x, t);
        v_err = std::max(v_err, std::abs(f.velocity - v) / std::max(std::abs(v), v_floor));
        rho_err = std::max(rho_err, std::abs(f.rho - density(p, x, t)) / density(p, x, t));
        const double j = density(p, x, t) * v;
        j_err = std::max(j_err, std::abs(f.flux - j) / std::max(std::abs(j), v_floor * density(p, x, t)));
    }
    g.below("single Q abs err", q_err, 1e-5);
    g.below("single v rel err", v_err, 1e-6);
    g.below("single rho rel err", rho_err, 1e-6);
    g.below("single J rel err", j_err, 1e-6);
    // superposition: v and Q against the closed forms away from the minima; Q
    // grows like 1/rho towards a node, so it is compared relative to max(|Q|, E)
    const auto w2 = superposition_wavefunction(s);
    const double energy = energy_expectation(s.packet);
    double sv = 0.0, sq = 0.0;
    for (double tt : {1.0, 10.0}) {
        const double st = sigma_t(s.packet, tt);
        for (double x = -2.0 * st - s.half_separation; x <= 2.0 * st + s.half_separation; x += 0.137 * st) {
            if (rho(s, x, tt) < 1e-2 * (rho_plus(s, x, tt) + rho_minus(s, x, tt))) continue;
            const auto f = fields_at(w2, x, tt);
            const double v = velocity(s, x, tt);
            sv = std::max(sv, std::abs(f.velocity - v) / std::max(std::abs(v), v_floor));
            const double q = quantum_potential(s, x, tt);
            sq = std::max(sq, std::abs(f.quantum_potential - q) / std::max(std::abs(q), energy));
        }
    }
    g.below("two-slit v rel err", sv, 1e-6);
    g.below("two-slit Q rel err", sq, 1e-5);
    // Richardson: fourth-order convergence of Q
    double worst_ratio = 0.0;
    for (double x : {0.3 * sig, sig, 1.7 * sig}) {
        const double q = quantum_potential(p, x, t);
        const double e1 = std::abs(fields_at(w1, x, t, 0.2 * sig).quantum_potential - q);
        const double e2 = std::abs(fields_at(w1, x, t, 0.1 * sig).quantum_potential - q);
        worst_ratio = std::max(worst_ratio, e2 / e1);
    }
    g.below("Richardson err(h/2)/err(h)", worst_ratio, 1.0 / 8.0);
    return g.result("C07", "numerical fields match closed forms");
}

inline CheckResult balance_residuals(const Reference& ref = {}) {
    detail::Gauge g;
    const auto& p = ref.packet;
    const double tau = p.tau();
    {
        const auto w = single_packet_wavefunction(p);
        const double s = sigma_t(p, tau);
        const auto r = continuity_residual(w, UniformGrid::symmetric(4.0 * s, 801), tau);
        g.below("single continuity / max|drho/dt|", r.max_abs_residual() / r.max_abs_drho_dt(), 1e-4);
        const auto hj = hamilton_jacobi_residual(w, zero_potential(), UniformGrid::symmetric(2.0 * s, 401), tau);
        double m = 0.0;
        for (double v : hj) m = std::max(m, std::abs(v));
        g.below("single Hamilton-Jacobi / E", m / energy_expectation(p), 1e-3);
    }
    {
        const auto w = superposition_wavefunction(ref.young);
        const double t = 10.0 * tau;
        const double s = sigma_t(p, t);
        const auto r = continuity_residual(w, UniformGrid::symmetric(3.0 * s + ref.young.half_separation, 1201), t);
        g.below("two-slit continuity / max|drho/dt|", r.max_abs_residual() / r.max_abs_drho_dt(), 1e-4);
    }
    return g.result("C08", "continuity and Hamilton-Jacobi residuals");
}

inline CheckResult equivariance(const Reference& ref = {}) {
    detail::Gauge g;
    const auto& p = ref.packet;
    const auto& s = ref.young;
    {
        TransportOptions opt;
        opt.seed = ref.seed;
        opt.x_min_start = -10.0 * p.sigma0;
        opt.x_max_start = 10.0 * p.sigma0;
        const double t1 = 10.0 * p.tau();
        opt.x_min_end = -10.0 * sigma_t(p, t1);
        opt.x_max_end = 10.0 * sigma_t(p, t1);
        opt.integrator = integrator_options_for(p);
        const auto r = transport_density_check(
            detail::packet_field(p), [&](double x, double t) { return density(p, x, t); }, 0.0, t1, 100'000, opt);
        g.below("single L1", r.l1_distance, 0.02);
        g.require("single all transported", r.n_transported == r.n_samples);
    }
    {
        TransportOptions opt;
        opt.seed = ref.seed;
        opt.x_min_start = -2.0 * s.half_separation;
        opt.x_max_start = 2.0 * s.half_separation;
        opt.x_min_end = -40.0;
        opt.x_max_end = 40.0;
        opt.integrator = integrator_options_for(s.packet);
        const auto r = transport_density_check(
            detail::young_field(s), [&](double x, double t) { return rho(s, x, t); }, 0.0, 10.0, 100'000, opt);
        g.below("two-slit L1", r.l1_distance, 0.03);
        g.note(detail::format("two-slit transported %zu/%zu", r.n_transported, r.n_samples));
    }
    return g.result("C09", "transported samples stay distributed as rho");
}

inline CheckResult detection_emergence(const Reference& ref = {}) {
    detail::Gauge g;
    const auto& s = ref.young;
    const double t = 10.0;
    const Density1D rho_t = [&](double x) { return rho(s, x, t); };
    const PixelGrid grid{};
    const double minima[] = {-std::numbers::pi, std::numbers::pi};
    const double window = 0.3;
    const std::size_t counts[] = {100, 10'000, 1'000'000};
    const auto frames = exposure_series(rho_t, grid, counts, 1.0, ref.seed);
    std::vector<Visibility> vis;
    for (const auto& f : frames) vis.push_back(fringe_visibility(f.counts, grid, 0.0, minima, window));
    g.note(detail::format("V=%.4f,%.4f,%.4f", vis[0].value, vis[1].value, vis[2].value));
    g.require("visibility non-decreasing", vis[0].value <= vis[1].value && vis[1].value <= vis[2].value);
    g.below("L1(1e6 frame, rho)", histogram_l1_distance(frames[2].counts, pixel_probabilities(rho_t, grid)), 0.02);
    const std::size_t few[] = {100};
    const auto noisy = exposure_series(rho_t, grid, few, 10.0, ref.seed + 1);
    const auto v0 = fringe_visibility(noisy[0].counts, grid, 0.0, minima, window);
    g.below("|V|/sigma_V of noise-dominated frame", std::abs(v0.value) / v0.std_error, 3.0);
    return g.result("C10", "fringes emerge with exposure");
}

inline CheckResult asymptotic_laws(const Reference& ref = {}) {
    detail::Gauge g;
    const auto& p = ref.packet;
    const auto& s = ref.young;
    const double t100 = 100.0 * p.tau();
    g.below("|sigma_t/(v_s t)-1|", std::abs(sigma_t(p, t100) / (p.spreading_velocity() * t100) - 1.0), 0.005);
    {
        const double sig = sigma_t(p, t100);
        double worst = 0.0, peak = 0.0;
        for (double x = -2.0 * sig; x <= 2.0 * sig; x += 0.01 * sig) {
            const double classical = 0.5 * p.mass * (x / t100) * (x / t100);
            peak = std::max(peak, classical);
            worst = std::max(worst, std::abs(kinetic_term(p, x, t100) + quantum_potential(p, x, t100) - classical));
        }
        g.below("max|K+Q-m(x/t)^2/2| / max m(x/t)^2/2", worst / peak, 0.02);
    }
    {
        const double t = 20.0 * p.tau();
        const double sig = sigma_t(p, t);
        const double exact0 = rho(s, 0.0, t), approx0 = rho_longtime(s, 0.0, t);
        double worst = 0.0;
        for (double x = -3.0 * sig; x <= 3.0 * sig; x += 0.005 * sig)
            worst = std::max(worst, std::abs(rho_longtime(s, x, t) / approx0 - rho(s, x, t) / exact0));
        g.below("cos^2 long-time density vs exact, peak-normalized Linf", worst, 0.05);
    }
    return g.result("C11", "asymptotic spreading, energy and density laws");
}

struct NamedCheck {
    const char* id;
    std::function<CheckResult(const Reference&)> run;
};

inline const std::vector<NamedCheck>& all_checks() {
    static const std::vector<NamedCheck> checks = {
        {"C01", energy_conservation},   {"C02", closed_form_trajectories}, {"C03", zero_flux_axis},
        {"C04", non_crossing},          {"C05", fringe_rate_law},          {"C06", channel_quantization},
        {"C07", field_oracles},         {"C08", balance_residuals},        {"C09", equivariance},
        {"C10", detection_emergence},   {"C11", asymptotic_laws},
    };
    return checks;
}

/// Runs one check, timing it. Exceptions become failed results.
inline CheckResult run_check(const NamedCheck& c, const Reference& ref = {}) {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    try {
        r = c.run(ref);
    } catch (const std::exception& e) {
        r.id = c.id;
        r.name = "exception";
        r.passed = false;
        r.measured = std::numeric_limits<double>::infinity();
        r.detail = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

inline std::string summary_line(const CheckResult& r) {
    return detail::format("%s %s  %s  (measured %.4g, threshold %.4g, %.2f s)", r.passed ? "PASS" : "FAIL",
                          r.id.c_str(), r.name.c_str(), r.measured, r.threshold, r.seconds);
}

}  // namespace bohm::verify
