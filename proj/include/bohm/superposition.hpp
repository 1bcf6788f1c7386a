#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "bohm/core_model.hpp"
#include "bohm/errors.hpp"

namespace bohm {

/// Coherent superposition of two identical Gaussians centred at +x0 and -x0
/// (slit separation d = 2 x0). `packet` supplies m, hbar and sigma0; its
/// center and drift must be zero.
struct SuperpositionConfig {
    PacketParams packet{};
    double half_separation = 5.0;
    /// Node floor for the velocity, relative to exp(-(x^2 + x0^2) / 2 sigma_t^2).
    double rho_floor = 1e-12;

    void validate() const {
        packet.validate();
        if (!(half_separation > 0.0) || !std::isfinite(half_separation))
            throw InvalidParameter("half_separation must be positive");
        if (packet.center != 0.0) throw InvalidParameter("superposition packet center must be 0");
        if (packet.drift_momentum != 0.0) throw InvalidParameter("superposition drift_momentum must be 0");
        if (!(rho_floor >= 0.0)) throw InvalidParameter("rho_floor must be non-negative");
    }

    double slit_separation() const { return 2.0 * half_separation; }

    PacketParams plus_packet() const {
        PacketParams p = packet;
        p.center = half_separation;
        return p;
    }
    PacketParams minus_packet() const {
        PacketParams p = packet;
        p.center = -half_separation;
        return p;
    }

    /// The two-slit picture assumes initially separated packets.
    std::optional<std::string> overlap_warning() const {
        if (half_separation < 3.0 * packet.sigma0)
            return "half_separation < 3 sigma0: packets overlap initially";
        return std::nullopt;
    }
};

/// phi(x) = -kappa x, the phase difference (S+ - S-) / hbar.
struct PhaseDifference {
    double kappa = 0.0;
    double phi_at(double x) const { return -kappa * x; }
};

/// kappa = hbar t x0 / (2 m sigma0^2 sigma_t^2).
inline double kappa(const SuperpositionConfig& s, double t) {
    const auto& p = s.packet;
    const double st = sigma_t(p, t);
    return p.hbar * t * s.half_separation / (2.0 * p.mass * p.sigma0 * p.sigma0 * st * st);
}

inline PhaseDifference phase_difference(const SuperpositionConfig& s, double t) { return {kappa(s, t)}; }

/// Time-dependent prefactor 1 / (sqrt(2 pi) sigma_t) that the unnormalized
/// density and flux below omit. Multiplying by it gives |psi+ + psi-|^2 and
/// the matching current.
inline double normalization_prefactor(const SuperpositionConfig& s, double t) {
    return 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma_t(s.packet, t));
}

/// Unnormalized single-slit densities rho_+ and rho_- (same scale as rho()).
inline double rho_plus(const SuperpositionConfig& s, double x, double t) {
    const double st = sigma_t(s.packet, t);
    const double u = x - s.half_separation;
    return std::exp(-u * u / (2.0 * st * st));
}
inline double rho_minus(const SuperpositionConfig& s, double x, double t) {
    const double st = sigma_t(s.packet, t);
    const double u = x + s.half_separation;
    return std::exp(-u * u / (2.0 * st * st));
}

/// Interference envelope exp(-(x^2 + x0^2) / 2 sigma_t^2) = sqrt(rho_+ rho_-).
inline double interference_envelope(const SuperpositionConfig& s, double x, double t) {
    const double st = sigma_t(s.packet, t);
    const double x0 = s.half_separation;
    return std::exp(-(x * x + x0 * x0) / (2.0 * st * st));
}

/// Probability density without its normalizing prefactor.
inline double rho(const SuperpositionConfig& s, double x, double t) {
    return rho_plus(s, x, t) + rho_minus(s, x, t) +
           2.0 * interference_envelope(s, x, t) * std::cos(kappa(s, t) * x);
}

/// Quantum flux on the same (unnormalized) scale as rho(), so flux / rho is
/// the exact velocity.
inline double flux(const SuperpositionConfig& s, double x, double t) {
    const auto& p = s.packet;
    const double st = sigma_t(p, t);
    const double x0 = s.half_separation;
    const double k = kappa(s, t);
    const double env = interference_envelope(s, x, t);
    const double spread = p.hbar * p.hbar * t / (4.0 * p.mass * p.mass * p.sigma0 * p.sigma0 * st * st);
    const double drift_part = (x - x0) * rho_plus(s, x, t) + (x + x0) * rho_minus(s, x, t) +
                              2.0 * x * env * std::cos(k * x);
    return spread * drift_part - (p.hbar * x0 / (p.mass * st * st)) * env * std::sin(k * x);
}

namespace detail {

// Density, flux and curvature terms divided by 2 exp(|a|) env, with
// a = x x0 / sigma_t^2. Finite for every x, no overflow or 0/0.
struct ReducedSuperposition {
    double a = 0.0;       // x x0 / sigma_t^2
    double decay = 1.0;   // exp(-|a|)
    double even = 1.0;    // exp(-|a|) cosh a
    double odd = 0.0;     // exp(-|a|) sinh a
    double cosk = 1.0;    // cos(kappa x)
    double sink = 0.0;    // sin(kappa x)
    double denom = 2.0;   // exp(-|a|) (cosh a + cos kappa x)
};

inline ReducedSuperposition reduce(const SuperpositionConfig& s, double x, double t) {
    const double st = sigma_t(s.packet, t);
    ReducedSuperposition r;
    r.a = x * s.half_separation / (st * st);
    const double abs_a = std::abs(r.a);
    r.decay = std::exp(-abs_a);
    const double d2 = r.decay * r.decay;
    r.even = 0.5 * (1.0 + d2);
    r.odd = std::copysign(0.5 * (1.0 - d2), r.a);
    const double k = kappa(s, t);
    r.cosk = std::cos(k * x);
    r.sink = std::sin(k * x);
    r.denom = r.even + r.decay * r.cosk;
    return r;
}

}  // namespace detail

/// Exact local velocity J / rho, evaluated in a reduced form that shares the
/// common Gaussian factor between numerator and denominator.
/// Throws NodeProximity if rho < rho_floor * interference_envelope.
/// On the symmetry axis x = 0 the velocity is 0.
inline double velocity(const SuperpositionConfig& s, double x, double t) {
    if (x == 0.0) return 0.0;
    const auto& p = s.packet;
    const double st = sigma_t(p, t);
    const double x0 = s.half_separation;
    const auto r = detail::reduce(s, x, t);
    // rho / envelope = 2 (cosh a + cos kx) = 2 denom exp(|a|)
    if (2.0 * r.denom < s.rho_floor * r.decay)
        throw NodeProximity("superposition velocity: density below node floor at x = " + std::to_string(x));
    const double spread = p.hbar * p.hbar * t / (4.0 * p.mass * p.mass * p.sigma0 * p.sigma0 * st * st);
    const double twist = p.hbar * x0 / (2.0 * p.mass * st * st);
    return spread * x - (spread * x0 * r.odd + twist * r.decay * r.sink) / r.denom;
}

/// Bohm's quantum potential of the superposition, obtained from the density
/// by Q = -(hbar^2 / 4m) [(ln rho)'' + (ln rho)'^2 / 2].
inline double quantum_potential(const SuperpositionConfig& s, double x, double t) {
    const auto& p = s.packet;
    const double st = sigma_t(p, t);
    const double x0 = s.half_separation;
    const double k = kappa(s, t);
    const auto r = detail::reduce(s, x, t);
    const double da = x0 / (st * st);
    const double first = (da * r.odd - k * r.decay * r.sink) / r.denom;             // R'/R
    const double second = (da * da * r.even - k * k * r.decay * r.cosk) / r.denom;  // R''/R
    const double dlog = -x / (st * st) + first;
    const double d2log = -1.0 / (st * st) + second - first * first;
    return -(p.hbar * p.hbar / (4.0 * p.mass)) * (d2log + 0.5 * dlog * dlog);
}

/// Which long-time approximation to evaluate: the cosh/cos form or the
/// cos^2 form obtained by setting the hyperbolic cosine to one.
enum class LongTimeForm { full, simplified };

namespace detail {
struct LongTimeTerms {
    double gauss;   // exp(-2 m^2 sigma0^2 x^2 / hbar^2 t^2)
    double hyper;   // 4 m^2 sigma0^2 x0 x / hbar^2 t^2
    double fringe;  // m x0 x / hbar t
};
inline LongTimeTerms long_time_terms(const SuperpositionConfig& s, double x, double t) {
    const auto& p = s.packet;
    const double ms = p.mass * p.sigma0 / (p.hbar * t);
    return {std::exp(-2.0 * ms * ms * x * x), 4.0 * ms * ms * s.half_separation * x,
            p.mass * s.half_separation * x / (p.hbar * t)};
}
}  // namespace detail

/// Asymptotic (t >> tau) density, unnormalized like rho().
inline double rho_longtime(const SuperpositionConfig& s, double x, double t,
                           LongTimeForm form = LongTimeForm::simplified) {
    const auto lt = detail::long_time_terms(s, x, t);
    if (form == LongTimeForm::full)
        return 2.0 * lt.gauss * (std::cosh(lt.hyper) + std::cos(2.0 * lt.fringe));
    const double c = std::cos(lt.fringe);
    return 4.0 * lt.gauss * c * c;
}

/// Asymptotic flux. The sinh term is kept in both forms: it is what remains
/// at the zeros of the simplified density.
inline double flux_longtime(const SuperpositionConfig& s, double x, double t,
                            LongTimeForm form = LongTimeForm::simplified) {
    const auto lt = detail::long_time_terms(s, x, t);
    const double x0 = s.half_separation;
    const double kick = (2.0 * x0 / t) * lt.gauss * std::sinh(lt.hyper);
    return (x / t) * rho_longtime(s, x, t, form) - kick;
}

/// Asymptotic velocity x/t - (x0 / 2t) sinh(...) / cos^2(m x0 x / hbar t).
/// Throws NodeProximity where cos^2 falls below the configured floor.
inline double velocity_longtime(const SuperpositionConfig& s, double x, double t) {
    const auto lt = detail::long_time_terms(s, x, t);
    const double c = std::cos(lt.fringe);
    const double c2 = c * c;
    if (c2 < s.rho_floor)
        throw NodeProximity("asymptotic velocity: node at x = " + std::to_string(x));
    return x / t - (s.half_separation / (2.0 * t)) * std::sinh(lt.hyper) / c2;
}

/// Quantized mean channel velocity nu pi hbar / (m x0).
inline double channel_velocity(const SuperpositionConfig& s, int nu) {
    return nu * std::numbers::pi * s.packet.hbar / (s.packet.mass * s.half_separation);
}

/// Rates at which the fringe extrema of order nu drift apart: x = rate * t.
struct FringeRates {
    double min_rate = 0.0;
    double max_rate = 0.0;
};

inline FringeRates fringe_rates(const SuperpositionConfig& s, int nu) {
    const double unit = std::numbers::pi * s.packet.hbar / (s.packet.mass * s.slit_separation());
    return {(2.0 * nu + 1.0) * unit, 2.0 * nu * unit};
}

}  // namespace bohm
