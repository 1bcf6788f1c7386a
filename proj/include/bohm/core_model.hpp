#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "bohm/errors.hpp"

namespace bohm {

using ComplexAmplitude = std::complex<double>;

/// Physical constants and parameters of one free Gaussian packet.
/// Defaults are the two-slit reference set (m = hbar = 1, sigma0 = 0.5).
struct PacketParams {
    double mass = 1.0;
    double hbar = 1.0;
    double sigma0 = 0.5;
    double center = 0.0;
    double drift_momentum = 0.0;

    void validate() const {
        if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidParameter("mass must be positive");
        if (!(hbar > 0.0) || !std::isfinite(hbar)) throw InvalidParameter("hbar must be positive");
        if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw InvalidParameter("sigma0 must be positive");
        if (!std::isfinite(center)) throw InvalidParameter("center must be finite");
        if (!std::isfinite(drift_momentum)) throw InvalidParameter("drift_momentum must be finite");
    }

    /// Dispersion timescale 2 m sigma0^2 / hbar.
    double tau() const { return 2.0 * mass * sigma0 * sigma0 / hbar; }
    /// Spreading momentum hbar / (2 sigma0).
    double spreading_momentum() const { return hbar / (2.0 * sigma0); }
    /// Asymptotic spreading velocity v_s = p_s / m.
    double spreading_velocity() const { return spreading_momentum() / mass; }
    double drift_velocity() const { return drift_momentum / mass; }
};

namespace detail {
// hbar t / (2 m sigma0^2), i.e. t / tau.
inline double reduced_time(const PacketParams& p, double t) { return p.hbar * t / (2.0 * p.mass * p.sigma0 * p.sigma0); }
// Coordinate relative to the (possibly drifting) packet center.
inline double packet_coordinate(const PacketParams& p, double x, double t) {
    return x - p.center - p.drift_velocity() * t;
}
}  // namespace detail

/// Complex spreading factor sigma0 (1 + i hbar t / (2 m sigma0^2)).
inline std::complex<double> sigma_tilde(const PacketParams& p, double t) {
    return {p.sigma0, p.sigma0 * detail::reduced_time(p, t)};
}

/// Packet width sigma0 sqrt(1 + (hbar t / 2 m sigma0^2)^2) = |sigma_tilde|.
inline double sigma_t(const PacketParams& p, double t) {
    return p.sigma0 * std::hypot(1.0, detail::reduced_time(p, t));
}

/// Wave function of the freely spreading packet. The normalization
/// (1 / 2 pi sigma_tilde^2)^(1/4) is taken on the principal branch: for
/// t >= 0, arg(sigma_tilde) lies in [0, pi/2) so 2 pi sigma_tilde^2 stays in
/// the upper half plane and never touches the branch cut.
inline ComplexAmplitude psi(const PacketParams& p, double x, double t) {
    const std::complex<double> st = sigma_tilde(p, t);
    const double arg = std::arg(st);
    if (!(arg >= 0.0 && arg < std::numbers::pi / 2.0))
        throw InvalidParameter("psi: sigma_tilde left the principal sheet (t must be >= 0)");
    const std::complex<double> norm = std::pow(2.0 * std::numbers::pi * st * st, -0.25);
    const double xi = detail::packet_coordinate(p, x, t);
    std::complex<double> exponent = -xi * xi / (4.0 * p.sigma0 * st);
    if (p.drift_momentum != 0.0) {
        const double u = x - p.center;
        exponent += std::complex<double>{0.0, (p.drift_momentum * u -
                                               p.drift_momentum * p.drift_momentum * t / (2.0 * p.mass)) /
                                                  p.hbar};
    }
    return norm * std::exp(exponent);
}

/// |psi|^2, evaluated without complex arithmetic.
inline double density(const PacketParams& p, double x, double t) {
    const double s = sigma_t(p, t);
    const double xi = detail::packet_coordinate(p, x, t);
    return std::exp(-xi * xi / (2.0 * s * s)) / (std::sqrt(2.0 * std::numbers::pi) * s);
}

/// Expectation value of the energy. Constant in time; the drift adds the
/// classical p0^2 / 2m on top of the spreading energy hbar^2 / (8 m sigma0^2).
inline double energy_expectation(const PacketParams& p) {
    return p.hbar * p.hbar / (8.0 * p.mass * p.sigma0 * p.sigma0) +
           p.drift_momentum * p.drift_momentum / (2.0 * p.mass);
}

/// Local (Bohmian) velocity of the single packet.
inline double velocity(const PacketParams& p, double x, double t) {
    const double s = sigma_t(p, t);
    const double rate = p.hbar * p.hbar * t / (4.0 * p.mass * p.mass * p.sigma0 * p.sigma0 * s * s);
    return p.drift_velocity() + rate * detail::packet_coordinate(p, x, t);
}

/// Kinetic term K = (1/2m)(dS/dx)^2.
inline double kinetic_term(const PacketParams& p, double x, double t) {
    const double s = sigma_t(p, t);
    const double s2 = s * s;
    const double s02 = p.sigma0 * p.sigma0;
    const double xi = detail::packet_coordinate(p, x, t);
    const double e0 = p.hbar * p.hbar / (8.0 * p.mass * s02);
    const double spreading = e0 * ((s2 - s02) / s2) * (xi * xi / s2);
    if (p.drift_momentum == 0.0) return spreading;
    const double v0 = p.drift_velocity();
    const double w = velocity(p, x, t) - v0;
    return 0.5 * p.mass * v0 * v0 + p.mass * v0 * w + spreading;
}

/// Bohm's quantum potential of the packet, an inverted parabola scaled by
/// (sigma0 / sigma_t)^2.
inline double quantum_potential(const PacketParams& p, double x, double t) {
    const double s = sigma_t(p, t);
    const double s2 = s * s;
    const double s02 = p.sigma0 * p.sigma0;
    const double xi = detail::packet_coordinate(p, x, t);
    const double e0 = p.hbar * p.hbar / (8.0 * p.mass * s02);
    return e0 * (s02 / s2) * (2.0 - xi * xi / s2);
}

/// Analytic streamline through x_init at t = 0: positions scale with the width.
inline double trajectory_closed_form(const PacketParams& p, double x_init, double t) {
    return p.center + p.drift_velocity() * t + (sigma_t(p, t) / p.sigma0) * (x_init - p.center);
}

}  // namespace bohm
