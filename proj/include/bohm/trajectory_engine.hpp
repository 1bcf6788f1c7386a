#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bohm/core_model.hpp"
#include "bohm/errors.hpp"
#include "bohm/numerics.hpp"
#include "bohm/rng.hpp"
#include "bohm/sampling.hpp"

namespace bohm {

/// v(x, t). Must be safe for concurrent calls; may throw NodeProximity.
using VelocityField = std::function<double(double, double)>;
/// rho(x) at a fixed time (need not be normalized).
using Density1D = std::function<double(double)>;
/// rho(x, t) (need not be normalized).
using Density = std::function<double(double, double)>;

enum class TrajectoryStatus { completed, aborted_near_node, failed };

inline const char* to_string(TrajectoryStatus s) {
    switch (s) {
        case TrajectoryStatus::completed: return "completed";
        case TrajectoryStatus::aborted_near_node: return "aborted_near_node";
        case TrajectoryStatus::failed: return "failed";
    }
    return "unknown";
}

/// Positions of one tracer at monotone times (increasing for forward runs,
/// decreasing for backward runs).
struct Trajectory {
    std::vector<double> times;
    std::vector<double> positions;
    double initial_condition = 0.0;
    TrajectoryStatus status = TrajectoryStatus::completed;

    double final_position() const { return positions.back(); }
};

struct IntegratorOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double h_min = 1e-14;
    /// Largest step; 0 means |t1 - t0|.
    double h_max = 0.0;
    std::size_t max_steps = 1'000'000;
};

/// Defaults scaled to a packet: atol = 1e-10 sigma0, h_min = 1e-12 tau.
inline IntegratorOptions integrator_options_for(const PacketParams& p) {
    IntegratorOptions o;
    o.atol = 1e-10 * p.sigma0;
    o.h_min = 1e-12 * p.tau();
    return o;
}

namespace detail {

// Dormand-Prince 5(4) tableau and Hairer's continuous extension.
namespace dopri {
inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                        a65 = -5103.0 / 18656.0;
inline constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                        a76 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                        e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
// PI controller (Hairer & Wanner, DOPRI5 defaults).
inline constexpr double beta = 0.04, safety = 0.9, expo = 0.2 - beta * 0.75;
inline constexpr double shrink_limit = 5.0, grow_limit = 0.1;  // hnew = h / clamp(fac, 1/10, 5)
}  // namespace dopri

// Fourth-order dense output over one accepted step.
struct DenseStep {
    double t = 0.0, h = 0.0;
    double r1 = 0.0, r2 = 0.0, r3 = 0.0, r4 = 0.0, r5 = 0.0;
    double at(double time) const {
        const double s = (time - t) / h;
        const double s1 = 1.0 - s;
        return r1 + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5)));
    }
};

inline std::optional<double> try_velocity(const VelocityField& v, double x, double t) {
    try {
        return v(x, t);
    } catch (const NodeProximity&) {
        return std::nullopt;
    }
}

inline double initial_step(const VelocityField& v, double t, double y, double f0, double dir, double h_max,
                           const IntegratorOptions& o) {
    const double sk = o.atol + o.rtol * std::abs(y);
    const double dnf = (f0 / sk) * (f0 / sk);
    const double dny = (y / sk) * (y / sk);
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
    h = std::min(h, h_max);
    const auto f1 = try_velocity(v, y + dir * h * f0, t + dir * h);
    if (!f1) return dir * h;
    const double der2 = std::abs(*f1 - f0) / sk / h;
    const double der12 = std::max(der2, std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
    return dir * std::min({100.0 * h, h1, h_max});
}

}  // namespace detail

/// Solves dx/dt = v(x, t) from (t0, x_init) to t1 with an embedded
/// Dormand-Prince 5(4) pair. The local error of every accepted step is below
/// atol + rtol |x|. With `output_times` empty every accepted step is
/// recorded; otherwise positions are reported exactly at those times
/// (monotone in the integration direction, inside [t0, t1]) via 4th-order
/// dense output. t1 < t0 integrates backwards.
///
/// A step that hits a node (v throws NodeProximity) is retried with a quarter
/// of the step; once the step drops below h_min the trajectory is returned
/// with status aborted_near_node. Step-size collapse for any other reason
/// throws StepUnderflow.
inline Trajectory integrate_trajectory(const VelocityField& v, double x_init, double t0, double t1,
                                       const IntegratorOptions& opt = {}, std::span<const double> output_times = {}) {
    using namespace detail::dopri;
    if (!(t1 != t0) || !std::isfinite(t0) || !std::isfinite(t1))
        throw InvalidParameter("integrate_trajectory: t1 must differ from t0");
    if (!(opt.rtol > 0.0) || !(opt.atol >= 0.0)) throw InvalidParameter("integrate_trajectory: bad tolerances");
    const double dir = t1 > t0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < output_times.size(); ++i) {
        const double to = output_times[i];
        if (dir * (to - t0) < 0.0 || dir * (to - t1) > 0.0)
            throw InvalidParameter("integrate_trajectory: output time outside [t0, t1]");
        if (i > 0 && !(dir * (to - output_times[i - 1]) > 0.0))
            throw InvalidParameter("integrate_trajectory: output times must be strictly monotone");
    }

    Trajectory traj;
    traj.initial_condition = x_init;
    const bool record_steps = output_times.empty();
    std::size_t next_out = 0;
    auto record = [&traj](double t, double x) {
        traj.times.push_back(t);
        traj.positions.push_back(x);
    };

    double t = t0, y = x_init;
    if (record_steps) record(t, y);
    while (next_out < output_times.size() && output_times[next_out] == t0) record(output_times[next_out++], y);

    const auto f0 = detail::try_velocity(v, y, t);
    if (!f0) {
        traj.status = TrajectoryStatus::aborted_near_node;
        if (traj.times.empty()) record(t, y);
        return traj;
    }
    double k1 = *f0;
    const double span = std::abs(t1 - t0);
    const double h_max = opt.h_max > 0.0 ? std::min(opt.h_max, span) : span;
    double h = detail::initial_step(v, t, y, k1, dir, h_max, opt);
    double facold = 1e-4;
    bool last_rejected = false;

    for (std::size_t step = 0;; ++step) {
        if (step >= opt.max_steps) throw StepUnderflow("integrate_trajectory: max_steps exceeded");
        bool last = false;
        if (dir * (t + h - t1) >= 0.0 || std::abs(t1 - t - h) <= 1e-14 * span) {
            h = t1 - t;
            last = true;
        }

        auto node_retry = [&]() -> bool {
            h *= 0.25;
            last_rejected = true;
            return std::abs(h) >= opt.h_min;
        };

        const auto k2 = detail::try_velocity(v, y + h * a21 * k1, t + c2 * h);
        std::optional<double> k3, k4, k5, k6, k7;
        if (k2) k3 = detail::try_velocity(v, y + h * (a31 * k1 + a32 * *k2), t + c3 * h);
        if (k3) k4 = detail::try_velocity(v, y + h * (a41 * k1 + a42 * *k2 + a43 * *k3), t + c4 * h);
        if (k4) k5 = detail::try_velocity(v, y + h * (a51 * k1 + a52 * *k2 + a53 * *k3 + a54 * *k4), t + c5 * h);
        if (k5)
            k6 = detail::try_velocity(v, y + h * (a61 * k1 + a62 * *k2 + a63 * *k3 + a64 * *k4 + a65 * *k5), t + h);
        double y1 = 0.0;
        if (k6) {
            y1 = y + h * (a71 * k1 + a73 * *k3 + a74 * *k4 + a75 * *k5 + a76 * *k6);
            k7 = detail::try_velocity(v, y1, t + h);
        }
        if (!k7) {
            if (!node_retry()) {
                traj.status = TrajectoryStatus::aborted_near_node;
                return traj;
            }
            continue;
        }

        const double err_est = h * (e1 * k1 + e3 * *k3 + e4 * *k4 + e5 * *k5 + e6 * *k6 + e7 * *k7);
        const double sc = opt.atol + opt.rtol * std::max(std::abs(y), std::abs(y1));
        const double err = std::abs(err_est) / sc;
        if (!std::isfinite(err)) {
            if (!node_retry()) throw StepUnderflow("integrate_trajectory: non-finite error estimate");
            continue;
        }
        const double fac11 = std::pow(err, expo);

        if (err <= 1.0) {
            double fac = fac11 / std::pow(facold, beta);
            fac = std::clamp(fac / safety, grow_limit, shrink_limit);
            double hnew = h / fac;
            facold = std::max(err, 1e-4);

            detail::DenseStep dense;
            dense.t = t;
            dense.h = h;
            dense.r1 = y;
            dense.r2 = y1 - y;
            dense.r3 = h * k1 - dense.r2;
            dense.r4 = dense.r2 - h * *k7 - dense.r3;
            dense.r5 = h * (d1 * k1 + d3 * *k3 + d4 * *k4 + d5 * *k5 + d6 * *k6 + d7 * *k7);

            const double t_new = last ? t1 : t + h;
            while (next_out < output_times.size() && dir * (output_times[next_out] - t_new) <= 0.0) {
                const double to = output_times[next_out++];
                record(to, to == t_new ? y1 : dense.at(to));
            }
            t = t_new;
            y = y1;
            k1 = *k7;
            if (record_steps) record(t, y);
            if (last) break;

            if (std::abs(hnew) > h_max) hnew = dir * h_max;
            if (last_rejected) hnew = dir * std::min(std::abs(hnew), std::abs(h));
            last_rejected = false;
            h = hnew;
        } else {
            h = h / std::min(shrink_limit, fac11 / safety);
            last_rejected = true;
            if (std::abs(h) < opt.h_min)
                throw StepUnderflow("integrate_trajectory: step below h_min at t = " + std::to_string(t));
        }
    }
    traj.status = TrajectoryStatus::completed;
    return traj;
}

enum class SamplingMode { equidistant_quantiles, iid_from_rho, explicit_list };

/// How a swarm is launched: how many tracers, from where, and which times to report.
struct SwarmPlan {
    std::size_t n_trajectories = 200;
    double t0 = 0.0;
    double t1 = 10.0;
    SamplingMode sampling = SamplingMode::equidistant_quantiles;
    std::uint64_t seed = 0;
    std::vector<double> output_times;
    std::vector<double> explicit_positions;
    /// Domain on which rho(., t0) is tabulated for sampling.
    double x_min = -20.0;
    double x_max = 20.0;
    std::size_t cdf_points = TabulatedCdf::default_points;
    /// The swarm fails if fewer than this fraction of tracers complete.
    double min_completed_fraction = 0.95;

    void validate() const {
        if (!(t1 > t0) || !(t0 >= 0.0)) throw InvalidParameter("swarm: need t1 > t0 >= 0");
        if (sampling == SamplingMode::explicit_list) {
            if (explicit_positions.empty()) throw InvalidParameter("swarm: explicit_positions is empty");
        } else if (n_trajectories < 1) {
            throw InvalidParameter("swarm: n_trajectories must be >= 1");
        }
        if (!(x_max > x_min)) throw InvalidParameter("swarm: x_max must exceed x_min");
    }
};

/// Initial positions distributed according to rho0. Quantile mode places
/// tracer i at CDF level (i + 1/2) / n; iid mode draws tracer i from
/// substream i of the seed. Positions where rho0 vanishes are rejected.
inline std::vector<double> sample_initial_positions(const Density1D& rho0, const SwarmPlan& plan) {
    plan.validate();
    if (plan.sampling == SamplingMode::explicit_list) return plan.explicit_positions;
    const TabulatedCdf cdf(rho0, plan.x_min, plan.x_max, plan.cdf_points);
    const std::size_t n = plan.n_trajectories;
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (plan.sampling == SamplingMode::equidistant_quantiles) {
            xs[i] = cdf.quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
        } else {
            auto gen = substream(plan.seed, i);
            xs[i] = cdf.quantile(uniform01(gen));
        }
        if (!(rho0(xs[i]) > 0.0))
            throw NodeProximity("initial condition at a node of rho(., t0): x = " + std::to_string(xs[i]));
    }
    return xs;
}

struct SwarmResult {
    std::vector<Trajectory> trajectories;
    std::size_t n_completed = 0;

    double completed_fraction() const {
        return trajectories.empty() ? 0.0
                                    : static_cast<double>(n_completed) / static_cast<double>(trajectories.size());
    }
};

/// Integrates one tracer per initial position, in parallel, results ordered by
/// index. Per-tracer StepUnderflow is recorded as status `failed`; the swarm
/// throws SwarmFailure if the completed fraction drops below the plan's limit.
inline SwarmResult integrate_swarm(const VelocityField& v, std::span<const double> initial_positions,
                                   const SwarmPlan& plan, const IntegratorOptions& opt = {}) {
    if (!(plan.t1 > plan.t0)) throw InvalidParameter("swarm: need t1 > t0");
    SwarmResult result;
    result.trajectories.resize(initial_positions.size());
    parallel_for(initial_positions.size(), [&](std::size_t i) {
        try {
            result.trajectories[i] =
                integrate_trajectory(v, initial_positions[i], plan.t0, plan.t1, opt, plan.output_times);
        } catch (const StepUnderflow&) {
            Trajectory failed;
            failed.initial_condition = initial_positions[i];
            failed.times = {plan.t0};
            failed.positions = {initial_positions[i]};
            failed.status = TrajectoryStatus::failed;
            result.trajectories[i] = std::move(failed);
        }
    });
    for (const auto& tr : result.trajectories)
        if (tr.status == TrajectoryStatus::completed) ++result.n_completed;
    if (result.completed_fraction() < plan.min_completed_fraction)
        throw SwarmFailure("swarm: only " + std::to_string(result.n_completed) + " of " +
                           std::to_string(result.trajectories.size()) + " trajectories completed");
    return result;
}

inline SwarmResult integrate_swarm(const VelocityField& v, const Density1D& rho0, const SwarmPlan& plan,
                                   const IntegratorOptions& opt = {}) {
    const auto xs = sample_initial_positions(rho0, plan);
    return integrate_swarm(v, xs, plan, opt);
}

struct CrossingViolation {
    double time = 0.0;
    /// Indices (into the swarm) of the adjacent pair whose order flipped.
    std::size_t lower = 0;
    std::size_t upper = 0;
};

struct NonCrossingReport {
    bool ordered = true;
    std::optional<CrossingViolation> first_violation;
    std::size_t checked_times = 0;
};

/// Checks that the strict ordering of initial positions survives at every
/// recorded time shared by the swarm (the common prefix of all time arrays).
inline NonCrossingReport check_non_crossing(std::span<const Trajectory> swarm) {
    NonCrossingReport report;
    if (swarm.size() < 2) return report;
    std::size_t n_times = std::numeric_limits<std::size_t>::max();
    for (const auto& tr : swarm) n_times = std::min(n_times, tr.positions.size());
    std::vector<std::size_t> order(swarm.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return swarm[a].initial_condition < swarm[b].initial_condition;
    });
    report.checked_times = n_times;
    for (std::size_t k = 0; k < n_times; ++k) {
        for (std::size_t j = 0; j + 1 < order.size(); ++j) {
            const auto& lo = swarm[order[j]];
            const auto& hi = swarm[order[j + 1]];
            if (!(hi.positions[k] > lo.positions[k])) {
                report.ordered = false;
                report.first_violation = CrossingViolation{lo.times[k], order[j], order[j + 1]};
                return report;
            }
        }
    }
    return report;
}

/// True if every tracer that starts off the axis stays on its side of x = 0.
inline bool check_side_confinement(std::span<const Trajectory> swarm) {
    for (const auto& tr : swarm) {
        const double x0 = tr.initial_condition;
        if (x0 == 0.0) continue;
        for (double x : tr.positions)
            if (std::signbit(x) != std::signbit(x0) || x == 0.0) return false;
    }
    return true;
}

struct TransportOptions {
    std::uint64_t seed = 1;
    /// Number of equal-probability bins under rho(., t1).
    std::size_t bins = 32;
    double x_min_start = -20.0, x_max_start = 20.0;
    double x_min_end = -20.0, x_max_end = 20.0;
    IntegratorOptions integrator{};
};

struct TransportReport {
    double l1_distance = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_transported = 0;
};

/// Equivariance check: n i.i.d. samples of rho(., t0) are carried to t1 along
/// v; returns sum_k |count_k / n - P_k| over bins of equal probability
/// P_k = 1/bins under the normalized rho(., t1).
inline TransportReport transport_density_check(const VelocityField& v, const Density& rho, double t0, double t1,
                                               std::size_t n, const TransportOptions& opt = {}) {
    if (n == 0) throw InvalidParameter("transport_density_check: n must be positive");
    if (opt.bins < 1) throw InvalidParameter("transport_density_check: bins must be positive");
    const TabulatedCdf start([&](double x) { return rho(x, t0); }, opt.x_min_start, opt.x_max_start);
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto gen = substream(opt.seed, i);
        xs[i] = start.quantile(uniform01(gen));
    }
    std::vector<double> ends(n, std::numeric_limits<double>::quiet_NaN());
    if (t1 != t0) {
        const double out[] = {t1};
        parallel_for(n, [&](std::size_t i) {
            try {
                const auto tr = integrate_trajectory(v, xs[i], t0, t1, opt.integrator, out);
                if (tr.status == TrajectoryStatus::completed) ends[i] = tr.final_position();
            } catch (const StepUnderflow&) {
            }
        });
    } else {
        ends = xs;
    }

    const TabulatedCdf target([&](double x) { return rho(x, t1); }, opt.x_min_end, opt.x_max_end);
    std::vector<double> edges(opt.bins - 1);
    for (std::size_t k = 1; k < opt.bins; ++k)
        edges[k - 1] = target.quantile(static_cast<double>(k) / static_cast<double>(opt.bins));
    std::vector<std::size_t> counts(opt.bins, 0);
    TransportReport report;
    report.n_samples = n;
    for (double x : ends) {
        if (std::isnan(x)) continue;
        ++report.n_transported;
        counts[static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin())]++;
    }
    if (report.n_transported == 0) throw SwarmFailure("transport_density_check: no sample was transported");
    const double p = 1.0 / static_cast<double>(opt.bins);
    for (auto c : counts) report.l1_distance += std::abs(static_cast<double>(c) / report.n_transported - p);
    return report;
}

}  // namespace bohm
