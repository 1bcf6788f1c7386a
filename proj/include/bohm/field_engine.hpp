#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "bohm/core_model.hpp"
#include "bohm/errors.hpp"
#include "bohm/numerics.hpp"
#include "bohm/superposition.hpp"

namespace bohm {

/// A complex wave function psi(x, t) plus the metadata the field extraction
/// needs. `psi` must be safe to call concurrently and twice differentiable in
/// x on [x_min, x_max].
struct WaveFunctionEvaluator {
    std::function<ComplexAmplitude(double, double)> psi;
    double mass = 1.0;
    double hbar = 1.0;
    /// Characteristic length at time t; the default stencil step is 1e-3 of it.
    std::function<double(double)> width = [](double) { return 1.0; };
    /// Characteristic time; the default temporal step is 1e-5 of it.
    double time_scale = 1.0;
    double x_min = -std::numeric_limits<double>::infinity();
    double x_max = std::numeric_limits<double>::infinity();
    /// Densities below this are treated as nodes.
    double rho_floor = 1e-250;

    ComplexAmplitude operator()(double x, double t) const { return psi(x, t); }
    double default_step(double t) const { return 1e-3 * width(t); }
    double default_dt() const { return 1e-5 * time_scale; }
};

using PotentialFunction = std::function<double(double, double)>;

inline PotentialFunction zero_potential() {
    return [](double, double) { return 0.0; };
}

/// Co-located Bohmian fields at one space-time point.
struct FieldSample {
    double x = 0.0;
    double t = 0.0;
    double rho = 0.0;
    double flux = 0.0;
    double velocity = 0.0;
    double quantum_potential = 0.0;
    double kinetic = 0.0;
    double phase = 0.0;  // arg(psi), radians
};

inline WaveFunctionEvaluator single_packet_wavefunction(const PacketParams& p) {
    p.validate();
    WaveFunctionEvaluator w;
    w.psi = [p](double x, double t) { return bohm::psi(p, x, t); };
    w.mass = p.mass;
    w.hbar = p.hbar;
    w.width = [p](double t) { return sigma_t(p, t); };
    w.time_scale = p.tau();
    return w;
}

/// psi_+ + psi_-, each packet normalized on its own.
inline WaveFunctionEvaluator superposition_wavefunction(const SuperpositionConfig& s) {
    s.validate();
    WaveFunctionEvaluator w;
    const PacketParams plus = s.plus_packet();
    const PacketParams minus = s.minus_packet();
    w.psi = [plus, minus](double x, double t) { return bohm::psi(plus, x, t) + bohm::psi(minus, x, t); };
    w.mass = s.packet.mass;
    w.hbar = s.packet.hbar;
    const PacketParams p = s.packet;
    w.width = [p](double t) { return sigma_t(p, t); };
    w.time_scale = p.tau();
    return w;
}

namespace detail {

inline void check_stencil(const WaveFunctionEvaluator& w, double x, double reach) {
    if (x - reach < w.x_min || x + reach > w.x_max)
        throw DomainError("stencil around x = " + std::to_string(x) + " leaves the evaluator domain");
}

inline double resolve_step(const WaveFunctionEvaluator& w, double t, double h) {
    if (h == 0.0) h = w.default_step(t);
    if (!(h > 0.0)) throw InvalidParameter("finite-difference step must be positive");
    return h;
}

// Fourth-order central first derivative of psi.
inline ComplexAmplitude dpsi_dx(const WaveFunctionEvaluator& w, double x, double t, double h) {
    return (8.0 * (w(x + h, t) - w(x - h, t)) - (w(x + 2.0 * h, t) - w(x - 2.0 * h, t))) / (12.0 * h);
}

// (hbar/m) Im(psi* dpsi/dx); no division by rho, so valid at nodes.
inline double flux_at(const WaveFunctionEvaluator& w, double x, double t, double h) {
    return (w.hbar / w.mass) * std::imag(std::conj(w(x, t)) * dpsi_dx(w, x, t, h));
}

inline double wrap_to_pi(double d) { return std::remainder(d, 2.0 * std::numbers::pi); }

// Unwrapped arg(psi) on the grid, starting from the true arg at the left end.
inline std::vector<double> absolute_phase(const WaveFunctionEvaluator& w, double t, const UniformGrid& grid) {
    grid.validate();
    std::vector<double> out(grid.n_points);
    double previous = 0.0;
    for (std::size_t i = 0; i < grid.n_points; ++i) {
        const double x = grid.point(i);
        const ComplexAmplitude v = w(x, t);
        if (std::norm(v) < w.rho_floor)
            throw NodeOnGrid("phase unwrapping across a node at x = " + std::to_string(x));
        const double a = std::arg(v);
        out[i] = (i == 0) ? a : out[i - 1] + wrap_to_pi(a - previous);
        previous = a;
    }
    return out;
}

}  // namespace detail

/// Extracts rho, J, v, Q, K at (x, t). Derivatives use fourth-order central
/// stencils with step h (0 selects 1e-3 of the evaluator width).
inline FieldSample fields_at(const WaveFunctionEvaluator& w, double x, double t, double h = 0.0) {
    h = detail::resolve_step(w, t, h);
    detail::check_stencil(w, x, 2.0 * h);
    const ComplexAmplitude m2 = w(x - 2.0 * h, t), m1 = w(x - h, t), c = w(x, t), p1 = w(x + h, t),
                           p2 = w(x + 2.0 * h, t);
    FieldSample s;
    s.x = x;
    s.t = t;
    s.rho = std::norm(c);
    if (!(s.rho >= w.rho_floor))
        throw NodeProximity("fields_at: density below node floor at x = " + std::to_string(x));
    // Antisymmetric grouping: exactly zero for an even psi.
    const ComplexAmplitude d1 = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
    s.flux = (w.hbar / w.mass) * std::imag(std::conj(c) * d1);
    s.velocity = s.flux / s.rho;
    const double a0 = std::abs(c);
    const double a2 =
        (-std::abs(m2) + 16.0 * std::abs(m1) - 30.0 * a0 + 16.0 * std::abs(p1) - std::abs(p2)) / (12.0 * h * h);
    s.quantum_potential = -(w.hbar * w.hbar / (2.0 * w.mass)) * a2 / a0;
    s.kinetic = 0.5 * w.mass * s.velocity * s.velocity;
    s.phase = std::arg(c);
    return s;
}

/// Unwrapped phase S/hbar on an ordered grid, anchored to 0 at the leftmost
/// point. Throws NodeOnGrid if the density drops below the floor anywhere.
inline std::vector<double> phase_profile(const WaveFunctionEvaluator& w, double t, const UniformGrid& grid) {
    auto phase = detail::absolute_phase(w, t, grid);
    const double anchor = phase.front();
    for (auto& v : phase) v -= anchor;
    return phase;
}

struct ContinuityResidual {
    std::vector<double> residual;  // drho/dt + dJ/dx
    std::vector<double> drho_dt;

    double max_abs_residual() const {
        double m = 0.0;
        for (double r : residual) m = std::max(m, std::abs(r));
        return m;
    }
    double max_abs_drho_dt() const {
        double m = 0.0;
        for (double r : drho_dt) m = std::max(m, std::abs(r));
        return m;
    }
};

/// Pointwise residual of the continuity equation: central difference in time
/// (step dt) plus fourth-order central difference of J in space (step h).
inline ContinuityResidual continuity_residual(const WaveFunctionEvaluator& w, const UniformGrid& grid, double t,
                                              double dt = 0.0, double h = 0.0) {
    grid.validate();
    if (dt == 0.0) dt = w.default_dt();
    if (!(dt > 0.0)) throw InvalidParameter("dt must be positive");
    h = detail::resolve_step(w, t, h);
    ContinuityResidual out;
    out.residual.resize(grid.n_points);
    out.drho_dt.resize(grid.n_points);
    for (std::size_t i = 0; i < grid.n_points; ++i) {
        const double x = grid.point(i);
        detail::check_stencil(w, x, 4.0 * h);
        const double drho = (std::norm(w(x, t + dt)) - std::norm(w(x, t - dt))) / (2.0 * dt);
        const double dflux = (8.0 * (detail::flux_at(w, x + h, t, h) - detail::flux_at(w, x - h, t, h)) -
                              (detail::flux_at(w, x + 2.0 * h, t, h) - detail::flux_at(w, x - 2.0 * h, t, h))) /
                             (12.0 * h);
        out.drho_dt[i] = drho;
        out.residual[i] = drho + dflux;
    }
    return out;
}

/// Pointwise residual of the quantum Hamilton-Jacobi equation
/// dS/dt + (dS/dx)^2 / 2m + V + Q. dS/dt comes from the unwrapped phase at
/// t +/- dt, aligned on a common branch; dS/dx = m v and Q come from
/// fields_at.
inline std::vector<double> hamilton_jacobi_residual(const WaveFunctionEvaluator& w, const PotentialFunction& potential,
                                                    const UniformGrid& grid, double t, double dt = 0.0,
                                                    double h = 0.0) {
    if (dt == 0.0) dt = w.default_dt();
    if (!(dt > 0.0)) throw InvalidParameter("dt must be positive");
    auto before = detail::absolute_phase(w, t - dt, grid);
    auto after = detail::absolute_phase(w, t + dt, grid);
    const double shift = 2.0 * std::numbers::pi * std::round((after.front() - before.front()) / (2.0 * std::numbers::pi));
    std::vector<double> residual(grid.n_points);
    for (std::size_t i = 0; i < grid.n_points; ++i) {
        const double step = after[i] - shift - before[i];
        if (!(std::abs(step) < std::numbers::pi))
            throw BranchMismatch("phase change over 2 dt exceeds pi at x = " + std::to_string(grid.point(i)));
        const double x = grid.point(i);
        const FieldSample f = fields_at(w, x, t, h);
        const double ds_dt = w.hbar * step / (2.0 * dt);
        const double ds_dx = w.mass * f.velocity;
        residual[i] = ds_dt + ds_dx * ds_dx / (2.0 * w.mass) + potential(x, t) + f.quantum_potential;
    }
    return residual;
}

}  // namespace bohm
