#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "bohm/field_engine.hpp"
#include "oracles.hpp"

namespace {

using namespace bohm;

constexpr double kPi = std::numbers::pi;
const PacketParams kPacket{};  // m = hbar = 1, sigma0 = 0.5
const SuperpositionConfig kYoung{};

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

TEST(FieldsAt, SinglePacketQuantumPotential) {
    const auto w = single_packet_wavefunction(kPacket);
    const double t = kPacket.tau();
    const double s = sigma_t(kPacket, t);
    for (double x : {0.0, s, 2.0 * s}) {
        const auto f = fields_at(w, x, t);
        EXPECT_NEAR(f.quantum_potential, quantum_potential(kPacket, x, t), 1e-5) << x;
        EXPECT_NEAR(f.velocity, velocity(kPacket, x, t), 1e-9);
        EXPECT_NEAR(f.kinetic, kinetic_term(kPacket, x, t), 1e-9);
        EXPECT_NEAR(f.rho, density(kPacket, x, t), 1e-14);
    }
}

TEST(FieldsAt, SuperpositionVelocityAwayFromNodes) {
    const auto w = superposition_wavefunction(kYoung);
    for (double t : {0.3, 2.0, 10.0, 30.0}) {
        const double s = sigma_t(kPacket, t);
        for (double x = -2.0 * s - 5.0; x <= 2.0 * s + 5.0; x += 0.173 * s) {
            // skip the neighbourhood of the minima of rho
            if (rho(kYoung, x, t) < 1e-3 * (rho_plus(kYoung, x, t) + rho_minus(kYoung, x, t))) continue;
            const auto f = fields_at(w, x, t);
            const double v = velocity(kYoung, x, t);
            EXPECT_NEAR(f.velocity, v, 1e-6 * std::max(std::abs(v), 1e-2)) << x << " " << t;
            const auto o = oracle::two_slit({1.0, 1.0, 0.5, 0.0}, 5.0, x, t);
            EXPECT_NEAR(f.flux, o.flux, 1e-6 * std::max(std::abs(o.flux), 1e-4));
        }
    }
}

TEST(FieldsAt, RealInitialPacketCarriesNoFlux) {
    const auto w = single_packet_wavefunction(kPacket);
    for (double x = -2.0; x <= 2.0; x += 0.25) {
        EXPECT_EQ(fields_at(w, x, 0.0).flux, 0.0);
        EXPECT_EQ(fields_at(w, x, 0.0).phase, 0.0);
    }
}

TEST(FieldsAt, VelocityTimesDensityIsFlux) {
    const auto w = superposition_wavefunction(kYoung);
    for (double x : {-7.0, 0.4, 3.3, 12.0}) {
        const auto f = fields_at(w, x, 10.0);
        EXPECT_NEAR(f.velocity * f.rho, f.flux, 1e-12 * std::abs(f.flux));
        EXPECT_NEAR(f.rho, std::norm(w(x, 10.0)), 1e-15 * f.rho);
    }
}

TEST(FieldsAt, Errors) {
    auto w = single_packet_wavefunction(kPacket);
    EXPECT_THROW(fields_at(w, 0.0, 1.0, -1e-3), InvalidParameter);
    EXPECT_THROW(fields_at(w, 60.0, 0.0), NodeProximity);
    w.x_min = -1.0;
    w.x_max = 1.0;
    EXPECT_THROW(fields_at(w, 0.999, 0.5), DomainError);
    EXPECT_NO_THROW(fields_at(w, 0.99, 0.5));
}

TEST(FieldsAt, RichardsonFourthOrder) {
    const auto w = single_packet_wavefunction(kPacket);
    const double t = kPacket.tau();
    const double s = sigma_t(kPacket, t);
    for (double x : {0.3 * s, s, 1.7 * s}) {
        const double h = 0.2 * s;
        const double q = quantum_potential(kPacket, x, t);
        const double e1 = std::abs(fields_at(w, x, t, h).quantum_potential - q);
        const double e2 = std::abs(fields_at(w, x, t, h / 2).quantum_potential - q);
        EXPECT_LT(e2, e1 / 8.0) << x;
        EXPECT_GT(e2, e1 / 32.0) << x;
    }
    // velocity of the superposition, where the phase has curvature
    const auto ws = superposition_wavefunction(kYoung);
    for (double x : {1.1, 4.0}) {
        const double v = velocity(kYoung, x, 2.0);
        const double e1 = std::abs(fields_at(ws, x, 2.0, 0.1).velocity - v);
        const double e2 = std::abs(fields_at(ws, x, 2.0, 0.05).velocity - v);
        EXPECT_LT(e2, e1 / 8.0) << x;
    }
}

TEST(PhaseProfile, InitialPacketIsFlat) {
    const auto w = single_packet_wavefunction(kPacket);
    const auto phase = phase_profile(w, 0.0, UniformGrid::symmetric(2.0, 201));
    EXPECT_EQ(max_abs(phase), 0.0);
}

TEST(PhaseProfile, AnchoredAtLeftEnd) {
    const auto w = single_packet_wavefunction(kPacket);
    const auto phase = phase_profile(w, 3.0, UniformGrid::symmetric(5.0, 101));
    EXPECT_EQ(phase.front(), 0.0);
}

TEST(PhaseProfile, GuidanceRelation) {
    // m v = hbar dS/dx, derivative of the unwrapped phase by central differences
    for (double t : {0.5, 5.0}) {
        const auto w = single_packet_wavefunction(kPacket);
        const double s = sigma_t(kPacket, t);
        const UniformGrid g{-2.0 * s, 2.0 * s, 4001};
        const auto phase = phase_profile(w, t, g);
        const double dx = g.spacing();
        for (std::size_t i = 1; i + 1 < g.n_points; i += 50) {
            const double grad = (phase[i + 1] - phase[i - 1]) / (2.0 * dx);
            EXPECT_NEAR(grad, velocity(kPacket, g.point(i), t), 1e-5);
        }
    }
    const auto ws = superposition_wavefunction(kYoung);
    const double t = 10.0;
    const UniformGrid g{-0.08 * kPi * t, 0.08 * kPi * t, 20001};  // between the first minima
    const auto phase = phase_profile(ws, t, g);
    const double dx = g.spacing();
    for (std::size_t i = 1; i + 1 < g.n_points; i += 500) {
        const double grad = (phase[i + 1] - phase[i - 1]) / (2.0 * dx);
        const double x = g.point(i);
        EXPECT_NEAR(grad, velocity(kYoung, x, t), 1e-5) << x;
        // flux identity
        const auto f = fields_at(ws, x, t);
        EXPECT_NEAR(f.flux, f.rho * grad, 1e-6 * std::max(std::abs(f.flux), 1e-6 * f.rho));
    }
}

TEST(PhaseProfile, SmoothInsideAChannel) {
    const auto ws = superposition_wavefunction(kYoung);
    const double t = 10.0;
    // channel nu = 1 interior: x / t between 0.1 pi and 0.3 pi, trimmed
    const UniformGrid g{0.12 * kPi * t, 0.28 * kPi * t, 2001};
    const auto phase = phase_profile(ws, t, g);
    for (std::size_t i = 1; i < phase.size(); ++i) ASSERT_LT(std::abs(phase[i] - phase[i - 1]), kPi);
}

TEST(PhaseProfile, NodeOnGridIsReported) {
    auto w = single_packet_wavefunction(kPacket);
    EXPECT_THROW(phase_profile(w, 0.0, UniformGrid::symmetric(60.0, 11)), NodeOnGrid);
    WaveFunctionEvaluator odd = w;
    odd.psi = [](double x, double) { return ComplexAmplitude(x, 0.0); };
    EXPECT_THROW(phase_profile(odd, 0.0, UniformGrid::symmetric(1.0, 11)), NodeOnGrid);
}

TEST(Continuity, SinglePacket) {
    const auto w = single_packet_wavefunction(kPacket);
    const double t = kPacket.tau();
    const double s = sigma_t(kPacket, t);
    const auto r = continuity_residual(w, UniformGrid::symmetric(4.0 * s, 801), t);
    EXPECT_LT(r.max_abs_residual(), 1e-4 * r.max_abs_drho_dt());
}

TEST(Continuity, SuperpositionAtTenTau) {
    const auto w = superposition_wavefunction(kYoung);
    const double t = 10.0 * kPacket.tau();
    const double s = sigma_t(kPacket, t);
    const auto r = continuity_residual(w, UniformGrid::symmetric(3.0 * s + 5.0, 1201), t);
    EXPECT_LT(r.max_abs_residual(), 1e-4 * r.max_abs_drho_dt());
}

TEST(Continuity, CorruptedAmplitudeIsDetected) {
    const auto exact = single_packet_wavefunction(kPacket);
    WaveFunctionEvaluator bad = exact;
    bad.psi = [exact](double x, double t) { return exact(x, t) * (1.0 + 0.01 * std::cos(2.0 * x)); };
    const double t = kPacket.tau();
    const double s = sigma_t(kPacket, t);
    const auto r = continuity_residual(bad, UniformGrid::symmetric(4.0 * s, 801), t);
    EXPECT_GT(r.max_abs_residual(), 1e-4 * r.max_abs_drho_dt());
}

TEST(Continuity, RejectsBadSteps) {
    const auto w = single_packet_wavefunction(kPacket);
    EXPECT_THROW(continuity_residual(w, UniformGrid::symmetric(1.0, 11), 1.0, -1.0), InvalidParameter);
}

TEST(HamiltonJacobi, FreePacket) {
    const auto w = single_packet_wavefunction(kPacket);
    const double e = energy_expectation(kPacket);
    for (double t : {0.01 * kPacket.tau(), kPacket.tau(), 5.0 * kPacket.tau()}) {
        const double s = sigma_t(kPacket, t);
        const auto r = hamilton_jacobi_residual(w, zero_potential(), UniformGrid::symmetric(2.0 * s, 401), t);
        EXPECT_LT(max_abs(r), 1e-3 * e) << t;
    }
}

TEST(HamiltonJacobi, GlobalPhaseAndConstantPotential) {
    const auto w = single_packet_wavefunction(kPacket);
    WaveFunctionEvaluator shifted = w;
    shifted.psi = [w](double x, double t) { return w(x, t) * std::polar(1.0, 2.5); };
    const auto g = UniformGrid::symmetric(1.5, 151);
    const double t = 0.7;
    const auto base = hamilton_jacobi_residual(w, zero_potential(), g, t);
    const auto rot = hamilton_jacobi_residual(shifted, zero_potential(), g, t);
    const auto lifted = hamilton_jacobi_residual(w, [](double, double) { return 0.375; }, g, t);
    for (std::size_t i = 0; i < g.n_points; ++i) {
        EXPECT_NEAR(rot[i], base[i], 1e-9);
        EXPECT_NEAR(lifted[i] - base[i], 0.375, 1e-12);
    }
}

TEST(HamiltonJacobi, SuperpositionInsideCentralChannel) {
    const auto w = superposition_wavefunction(kYoung);
    const double t = 10.0;
    const auto r = hamilton_jacobi_residual(w, zero_potential(), UniformGrid::symmetric(0.08 * kPi * t, 301), t);
    EXPECT_LT(max_abs(r), 1e-3 * energy_expectation(kPacket));
}

TEST(HamiltonJacobi, BranchMismatchOnLargeStep) {
    const auto w = single_packet_wavefunction(kPacket);
    // a fast global rotation makes the phase change over 2 dt exceed pi away from the anchor
    WaveFunctionEvaluator spinning = w;
    spinning.psi = [w](double x, double t) { return w(x, t) * std::polar(1.0, 4.0 * x * x * t); };
    EXPECT_THROW(hamilton_jacobi_residual(spinning, zero_potential(), UniformGrid::symmetric(3.0, 61), 1.0, 0.1),
                 BranchMismatch);
}

}  // namespace
