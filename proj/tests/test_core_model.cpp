#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "bohm/core_model.hpp"
#include "oracles.hpp"

namespace {

using bohm::PacketParams;

const PacketParams kRef{};  // m = hbar = 1, sigma0 = 0.5 -> tau = 0.5

TEST(PacketParams, ValidatesPositivity) {
    PacketParams p;
    p.sigma0 = -1.0;
    EXPECT_THROW(p.validate(), bohm::InvalidParameter);
    p = {};
    p.mass = 0.0;
    EXPECT_THROW(p.validate(), bohm::InvalidParameter);
    p = {};
    p.hbar = -2.0;
    EXPECT_THROW(p.validate(), bohm::InvalidParameter);
    EXPECT_NO_THROW(kRef.validate());
    EXPECT_DOUBLE_EQ(kRef.tau(), 0.5);
}

TEST(SigmaTilde, Values) {
    const auto s0 = bohm::sigma_tilde(kRef, 0.0);
    EXPECT_EQ(s0.real(), 0.5);
    EXPECT_EQ(s0.imag(), 0.0);
    const auto s1 = bohm::sigma_tilde(kRef, 0.5);
    EXPECT_DOUBLE_EQ(s1.real(), 0.5);
    EXPECT_DOUBLE_EQ(s1.imag(), 0.5);
    EXPECT_DOUBLE_EQ(bohm::sigma_tilde(kRef, 1.4).imag(), 2.0 * bohm::sigma_tilde(kRef, 0.7).imag());
}

TEST(SigmaT, ValuesAndWidthIdentity) {
    EXPECT_EQ(bohm::sigma_t(kRef, 0.0), 0.5);
    EXPECT_NEAR(bohm::sigma_t(kRef, 0.5), 0.70710678118654752, 1e-15);
    for (double t : {0.0, 0.01, 0.3, 1.0, 7.5, 50.0, 1e3}) {
        const double s = bohm::sigma_t(kRef, t);
        EXPECT_NEAR(s, std::abs(bohm::sigma_tilde(kRef, t)), 1e-12 * s) << t;
    }
}

TEST(SigmaT, LinearSpreadingAtLongTimes) {
    const double t = 100.0 * kRef.tau();
    EXPECT_NEAR(bohm::sigma_t(kRef, t) / (kRef.spreading_velocity() * t), 1.0, 1e-3);
}

TEST(Psi, OriginValueAndParity) {
    const auto v = bohm::psi(kRef, 0.0, 0.0);
    EXPECT_NEAR(v.real(), 0.89324384173800233, 1e-14);
    EXPECT_NEAR(v.imag(), 0.0, 1e-16);
    for (double t : {0.0, 0.5, 5.0})
        for (double x : {0.1, 0.7, 2.3}) {
            EXPECT_NEAR(std::norm(bohm::psi(kRef, x, t)), std::norm(bohm::psi(kRef, -x, t)), 1e-15);
        }
}

TEST(Psi, MatchesIndependentGaussianForm) {
    const oracle::Packet o{1.0, 1.0, 0.5, 0.0};
    for (double t : {0.0, 0.2, 1.0, 10.0})
        for (double x : {-3.0, -0.4, 0.0, 1.1, 4.0}) {
            const auto a = bohm::psi(kRef, x, t);
            const auto b = oracle::psi(o, x, t);
            EXPECT_NEAR(a.real(), b.real(), 1e-13) << x << " " << t;
            EXPECT_NEAR(a.imag(), b.imag(), 1e-13) << x << " " << t;
        }
}

TEST(Psi, NormalizedAtSeveralTimes) {
    const double tau = kRef.tau();
    for (double t : {0.0, tau, 10.0 * tau, 100.0 * tau}) {
        const double s = bohm::sigma_t(kRef, t);
        const double norm = oracle::integrate([&](double x) { return std::norm(bohm::psi(kRef, x, t)); }, -20.0 * s,
                                              20.0 * s);
        EXPECT_NEAR(norm, 1.0, 1e-8) << t;
    }
}

TEST(Psi, DensityAgreesWithModulusSquared) {
    for (double t : {0.0, 0.3, 4.0})
        for (double x : {-2.0, 0.0, 0.8}) {
            EXPECT_NEAR(bohm::density(kRef, x, t), std::norm(bohm::psi(kRef, x, t)), 1e-14);
        }
}

TEST(Energy, ExpectationValue) {
    EXPECT_DOUBLE_EQ(bohm::energy_expectation(kRef), 0.5);
    PacketParams wide = kRef;
    wide.sigma0 = 1.0;
    EXPECT_DOUBLE_EQ(bohm::energy_expectation(wide), 0.25 * bohm::energy_expectation(kRef));
    const double ps = kRef.spreading_momentum();
    EXPECT_DOUBLE_EQ(bohm::energy_expectation(kRef), ps * ps / (2.0 * kRef.mass));
}

TEST(Energy, ConservedUnderQuadrature) {
    const double tau = kRef.tau();
    for (double t : {0.0, 0.7 * tau, 5.0 * tau, 30.0 * tau, 100.0 * tau}) {
        const double s = bohm::sigma_t(kRef, t);
        const double mean = oracle::integrate(
            [&](double x) {
                return (bohm::kinetic_term(kRef, x, t) + bohm::quantum_potential(kRef, x, t)) *
                       bohm::density(kRef, x, t);
            },
            -20.0 * s, 20.0 * s);
        EXPECT_NEAR(mean, bohm::energy_expectation(kRef), 1e-6) << t;
    }
}

TEST(KineticTerm, ZerosAndLongTimeLimit) {
    for (double x : {-1.0, 0.3, 2.0}) EXPECT_EQ(bohm::kinetic_term(kRef, x, 0.0), 0.0);
    for (double t : {0.1, 1.0, 9.0}) EXPECT_EQ(bohm::kinetic_term(kRef, 0.0, t), 0.0);
    const double t = 100.0 * kRef.tau();
    const double x = bohm::sigma_t(kRef, t);
    const double sum = bohm::kinetic_term(kRef, x, t) + bohm::quantum_potential(kRef, x, t);
    const double classical = 0.5 * kRef.mass * (x / t) * (x / t);
    EXPECT_NEAR(sum / classical, 1.0, 1e-2);
}

TEST(KineticTerm, EqualsHalfMassVelocitySquared) {
    for (double t : {0.2, 3.0})
        for (double x : {-1.5, 0.4}) {
            const double v = bohm::velocity(kRef, x, t);
            EXPECT_NEAR(bohm::kinetic_term(kRef, x, t), 0.5 * kRef.mass * v * v, 1e-14);
        }
}

TEST(QuantumPotential, ValuesAndSignChange) {
    EXPECT_DOUBLE_EQ(bohm::quantum_potential(kRef, 0.0, 0.0), 1.0);
    for (double t : {0.0, 0.5, 3.0}) {
        const double root = std::numbers::sqrt2 * bohm::sigma_t(kRef, t);
        EXPECT_NEAR(bohm::quantum_potential(kRef, root, t), 0.0, 1e-15);
        EXPECT_GT(bohm::quantum_potential(kRef, 0.99 * root, t), 0.0);
        EXPECT_LT(bohm::quantum_potential(kRef, 1.01 * root, t), 0.0);
    }
}

TEST(QuantumPotential, MatchesCurvatureOfAmplitude) {
    const oracle::Packet o{1.0, 1.0, 0.5, 0.0};
    for (double t : {0.0, 0.5, 5.0}) {
        const double s = bohm::sigma_t(kRef, t);
        for (double x : {0.0, 0.5 * s, s, 2.0 * s}) {
            const double fd = oracle::quantum_potential_fd([&](double y) { return std::abs(oracle::psi(o, y, t)); },
                                                           1.0, 1.0, x, 1e-4 * s);
            EXPECT_NEAR(bohm::quantum_potential(kRef, x, t), fd, 1e-5) << x << " " << t;
        }
    }
}

TEST(Trajectory, ClosedFormValues) {
    EXPECT_EQ(bohm::trajectory_closed_form(kRef, 1.0, 0.0), 1.0);
    for (double t : {0.0, 1.0, 50.0}) EXPECT_EQ(bohm::trajectory_closed_form(kRef, 0.0, t), 0.0);
    EXPECT_NEAR(bohm::trajectory_closed_form(kRef, 1.0, 0.5), std::numbers::sqrt2, 1e-15);
}

TEST(Trajectory, ClosedFormFollowsVelocityField) {
    // d/dt x(t) = v(x(t), t), checked by central differences.
    for (double x0 : {-1.0, 0.3, 2.0})
        for (double t : {0.1, 0.5, 4.0}) {
            const double dt = 1e-5;
            const double dxdt = (bohm::trajectory_closed_form(kRef, x0, t + dt) -
                                 bohm::trajectory_closed_form(kRef, x0, t - dt)) /
                                (2.0 * dt);
            const double x = bohm::trajectory_closed_form(kRef, x0, t);
            EXPECT_NEAR(dxdt, bohm::velocity(kRef, x, t), 1e-8);
        }
}

TEST(Parity, FieldsEvenInX) {
    for (double t : {0.0, 0.4, 6.0})
        for (double x : {0.2, 1.0, 3.3}) {
            EXPECT_EQ(bohm::kinetic_term(kRef, x, t), bohm::kinetic_term(kRef, -x, t));
            EXPECT_EQ(bohm::quantum_potential(kRef, x, t), bohm::quantum_potential(kRef, -x, t));
            const auto a = bohm::psi(kRef, x, t), b = bohm::psi(kRef, -x, t);
            EXPECT_EQ(a, b);
        }
}

TEST(Drift, BoostedPacketTranslates) {
    PacketParams p = kRef;
    p.drift_momentum = 2.0;
    p.center = 1.0;
    const double t = 3.0;
    // Density is the drift-free density translated by v0 t.
    for (double x : {-1.0, 0.5, 7.0, 9.0})
        EXPECT_NEAR(std::norm(bohm::psi(p, x + 1.0 + 2.0 * t, t)), std::norm(bohm::psi(kRef, x, t)), 1e-14);
    EXPECT_NEAR(bohm::energy_expectation(p), 0.5 + 2.0, 1e-15);
    EXPECT_NEAR(bohm::trajectory_closed_form(p, 1.0, t), 1.0 + 2.0 * t, 1e-14);
}

}  // namespace
