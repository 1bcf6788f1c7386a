#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bohm/core_model.hpp"
#include "bohm/errors.hpp"
#include "bohm/field_engine.hpp"
#include "bohm/numerics.hpp"
#include "bohm/superposition.hpp"
#include "bohm/trajectory_engine.hpp"

namespace bohm {

struct ExtremaOptions {
    /// Smallest feature the grid must resolve; spacing must be below half of
    /// it. 0 disables the check.
    double min_feature = 0.0;
    /// Golden-section stopping width.
    double x_tolerance = 1e-8;
    /// Differences below flat_tolerance * max(rho) count as flat.
    double flat_tolerance = 1e-12;
};

struct ExtremaReport {
    std::vector<double> minima;
    std::vector<double> maxima;
    /// Parallel to `maxima`: true where the maximum is a flat plateau.
    std::vector<bool> maxima_plateau;
    double t = 0.0;
    UniformGrid grid{};
};

namespace detail {

template <class F>
double golden_section_min(F&& f, double a, double b, double tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Golden section stalls near sqrt(eps) where f is flat; finish by bisecting
// on the sign of a centred difference quotient inside [a, b].
template <class F>
double polish_min(F&& f, double a, double b, double guess) {
    const double h = 1e-6 * (b - a);
    auto slope = [&](double x) { return f(x + h) - f(x - h); };
    double lo = std::max(a + h, guess - 0.05 * (b - a)), hi = std::min(b - h, guess + 0.05 * (b - a));
    if (!(slope(lo) < 0.0)) lo = a + h;
    if (!(slope(hi) > 0.0)) hi = b - h;
    if (!(slope(lo) < 0.0 && slope(hi) > 0.0)) return guess;
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double s = slope(mid);
        if (s < 0.0) lo = mid;
        else if (s > 0.0) hi = mid;
        else return mid;
    }
    return 0.5 * (lo + hi);
}

template <class F>
double refine_min(F&& f, double a, double b, double tol) {
    return polish_min(f, a, b, golden_section_min(f, a, b, tol));
}

}  // namespace detail

/// Locates the extrema of rho on the grid from sign changes of its forward
/// differences, refines each by golden section, and classifies it by the sign
/// of the second difference. Flat runs between a rise and a fall are reported
/// as maxima with the plateau flag set.
inline ExtremaReport find_extrema(const Density1D& rho, const UniformGrid& grid, double t,
                                  const ExtremaOptions& opt = {}) {
    grid.validate();
    if (opt.min_feature > 0.0 && !(grid.spacing() < 0.5 * opt.min_feature))
        throw ResolutionError("find_extrema: grid spacing " + std::to_string(grid.spacing()) +
                              " does not resolve features of size " + std::to_string(opt.min_feature));
    ExtremaReport report;
    report.t = t;
    report.grid = grid;
    const std::size_t n = grid.n_points;
    std::vector<double> f(n);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = rho(grid.point(i));
        scale = std::max(scale, std::abs(f[i]));
    }
    const double flat = opt.flat_tolerance * scale;
    auto sign_at = [&](std::size_t i) {
        const double d = f[i + 1] - f[i];
        return std::abs(d) <= flat ? 0 : (d > 0.0 ? 1 : -1);
    };

    int prev = 0;
    std::size_t prev_idx = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const int s = sign_at(i);
        if (s == 0) continue;
        if (prev != 0 && s != prev) {
            if (i - prev_idx > 1) {
                report.maxima.push_back(0.5 * (grid.point(prev_idx + 1) + grid.point(i)));
                report.maxima_plateau.push_back(true);
            } else {
                const double curvature = f[i + 1] - 2.0 * f[i] + f[i - 1];
                const double a = grid.point(i - 1), b = grid.point(i + 1);
                if (curvature > 0.0) {
                    report.minima.push_back(detail::refine_min(rho, a, b, opt.x_tolerance));
                } else {
                    report.maxima.push_back(
                        detail::refine_min([&](double x) { return -rho(x); }, a, b, opt.x_tolerance));
                    report.maxima_plateau.push_back(false);
                }
            }
        }
        prev = s;
        prev_idx = i;
    }
    return report;
}

/// Fringe spacing pi hbar t / (m x0) of the two-slit pattern.
inline double fringe_spacing(const SuperpositionConfig& s, double t) {
    return std::numbers::pi * s.packet.hbar * t / (s.packet.mass * s.half_separation);
}

inline ExtremaReport find_extrema(const SuperpositionConfig& s, const UniformGrid& grid, double t) {
    ExtremaOptions opt;
    opt.min_feature = fringe_spacing(s, t);
    opt.x_tolerance = 1e-8 * sigma_t(s.packet, t);
    return find_extrema([&](double x) { return rho(s, x, t); }, grid, t, opt);
}

struct Channel {
    int nu = 0;
    double x_lo = 0.0;
    double x_hi = 0.0;
    double mean_velocity = 0.0;
};

struct ChannelLadder {
    std::vector<Channel> channels;
    std::optional<std::string> warning;

    const Channel* find(int nu) const {
        for (const auto& c : channels)
            if (c.nu == nu) return &c;
        return nullptr;
    }
};

struct LadderOptions {
    ExtremaOptions extrema{};
    std::size_t nodes_per_channel = 2001;
    /// A warning is attached when t is below this time (0 disables).
    double asymptotic_time = 0.0;
};

/// Splits the grid at the density minima and computes the rho-weighted mean
/// velocity of each interval between adjacent minima. The interval holding
/// x = 0 is channel 0; the others are numbered outward.
inline ChannelLadder channel_ladder_extract(const VelocityField& v, const Density1D& density, double t,
                                            const UniformGrid& grid, const LadderOptions& opt = {}) {
    ChannelLadder ladder;
    if (opt.asymptotic_time > 0.0 && t < opt.asymptotic_time)
        ladder.warning = "channel ladder requested before the asymptotic regime (t = " + std::to_string(t) + ")";
    auto minima = find_extrema(density, grid, t, opt.extrema).minima;
    std::sort(minima.begin(), minima.end());
    if (minima.size() < 2) return ladder;

    // A minimum on the axis splits the centre: channels are then numbered
    // +/-1, +/-2, ... outward and there is no channel 0.
    const double on_axis = 10.0 * std::max(opt.extrema.x_tolerance, 1e-12 * (grid.x_max - grid.x_min));
    std::optional<std::size_t> axis_minimum;
    for (std::size_t k = 0; k < minima.size(); ++k)
        if (std::abs(minima[k]) <= on_axis) axis_minimum = k;
    const auto below = static_cast<int>(std::count_if(minima.begin(), minima.end(), [](double m) { return m < 0.0; }));

    for (std::size_t k = 0; k + 1 < minima.size(); ++k) {
        Channel c;
        c.x_lo = minima[k];
        c.x_hi = minima[k + 1];
        const double mass = simpson(density, c.x_lo, c.x_hi, opt.nodes_per_channel);
        const double current =
            simpson([&](double x) { return v(x, t) * density(x); }, c.x_lo, c.x_hi, opt.nodes_per_channel);
        c.mean_velocity = current / mass;
        const auto ki = static_cast<int>(k);
        if (axis_minimum) {
            const auto z = static_cast<int>(*axis_minimum);
            c.nu = ki < z ? ki - z : ki - z + 1;
        } else {
            c.nu = ki - below + 1;  // the interval straddling x = 0 is channel 0
        }
        ladder.channels.push_back(c);
    }
    return ladder;
}

inline ChannelLadder channel_ladder_extract(const SuperpositionConfig& s, double t, const UniformGrid& grid) {
    LadderOptions opt;
    opt.extrema.min_feature = fringe_spacing(s, t);
    opt.extrema.x_tolerance = 1e-8 * sigma_t(s.packet, t);
    opt.asymptotic_time = 10.0 * s.packet.tau();
    return channel_ladder_extract([&](double x, double time) { return velocity(s, x, time); },
                                  [&](double x) { return rho(s, x, t); }, t, grid, opt);
}

struct EnergyDecomposition {
    double mean_kinetic = 0.0;
    double mean_quantum = 0.0;
    double total = 0.0;
    /// Set when the grid spans less than 10 standard deviations of rho.
    bool support_warning = false;
};

namespace detail {
inline EnergyDecomposition finish_energy(const UniformGrid& grid, const std::vector<double>& rho_v,
                                         const std::vector<double>& k_rho, const std::vector<double>& q_rho) {
    const double dx = grid.spacing();
    const double norm = simpson(rho_v, dx);
    if (!(norm > 0.0)) throw DegenerateDensity("energy_decomposition: no density on the grid");
    EnergyDecomposition e;
    e.mean_kinetic = simpson(k_rho, dx) / norm;
    e.mean_quantum = simpson(q_rho, dx) / norm;
    e.total = e.mean_kinetic + e.mean_quantum;
    std::vector<double> x1(grid.n_points), x2(grid.n_points);
    for (std::size_t i = 0; i < grid.n_points; ++i) {
        const double x = grid.point(i);
        x1[i] = x * rho_v[i];
        x2[i] = x * x * rho_v[i];
    }
    const double mean = simpson(x1, dx) / norm;
    const double sd = std::sqrt(std::max(simpson(x2, dx) / norm - mean * mean, 0.0));
    e.support_warning = (grid.x_max - grid.x_min) < 10.0 * sd;
    return e;
}
}  // namespace detail

/// <K> and <Q> of the free packet from the closed-form fields, averaged over
/// rho on the grid (Simpson) and normalized by the grid integral of rho.
inline EnergyDecomposition energy_decomposition(const PacketParams& p, double t, const UniformGrid& grid) {
    p.validate();
    grid.validate();
    std::vector<double> r(grid.n_points), k(grid.n_points), q(grid.n_points);
    for (std::size_t i = 0; i < grid.n_points; ++i) {
        const double x = grid.point(i);
        r[i] = density(p, x, t);
        k[i] = kinetic_term(p, x, t) * r[i];
        q[i] = quantum_potential(p, x, t) * r[i];
    }
    return detail::finish_energy(grid, r, k, q);
}

/// Same averages with K and Q extracted numerically by fields_at. Points whose
/// density is below the evaluator's floor contribute nothing.
inline EnergyDecomposition energy_decomposition(const WaveFunctionEvaluator& w, double t, const UniformGrid& grid,
                                                double h = 0.0) {
    grid.validate();
    std::vector<double> r(grid.n_points, 0.0), k(grid.n_points, 0.0), q(grid.n_points, 0.0);
    for (std::size_t i = 0; i < grid.n_points; ++i) {
        try {
            const auto f = fields_at(w, grid.point(i), t, h);
            r[i] = f.rho;
            k[i] = f.kinetic * f.rho;
            q[i] = f.quantum_potential * f.rho;
        } catch (const NodeProximity&) {
        }
    }
    return detail::finish_energy(grid, r, k, q);
}

enum class DispersionRegime { early, transition, asymptotic };

inline const char* to_string(DispersionRegime r) {
    switch (r) {
        case DispersionRegime::early: return "early";
        case DispersionRegime::transition: return "transition";
        case DispersionRegime::asymptotic: return "asymptotic";
    }
    return "unknown";
}

/// Regime boundaries in units of tau.
struct RegimeThresholds {
    double early = 0.1;
    double asymptotic = 10.0;
};

inline DispersionRegime dispersion_regime(const PacketParams& p, double t, const RegimeThresholds& th = {}) {
    const double tau = p.tau();
    if (t < th.early * tau) return DispersionRegime::early;
    if (t > th.asymptotic * tau) return DispersionRegime::asymptotic;
    return DispersionRegime::transition;
}

}  // namespace bohm
