#include "clapp/stability.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace clapp;
using clapp::test::paper_bjt;
using clapp::test::paper_circuit;

namespace {

/// Voltage at which the junction exponent reaches the cap.
double cap_voltage(const BjtParams& b) { return b.exponent_cap * b.v_t / b.eta; }

/// Random state with voltages in [-2 V_CC, 2 V_CC]; v_C1 is redrawn while it
/// would push the junction exponent past the cap.
State random_state_in_range(std::mt19937_64& g, const CircuitParams& c, const BjtParams& b) {
    State p = clapp::test::random_state(g, c.v_cc);
    while (p.v_c1 >= 0.99 * cap_voltage(b)) p.v_c1 = clapp::test::uniform(g, -2.0 * c.v_cc, 2.0 * c.v_cc);
    return p;
}

}  // namespace

// =============================================================================
// Jacobian
// =============================================================================

TEST(Jacobian, ThirdRowIsConstant) {
    auto g = clapp::test::rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const auto c = paper_circuit();
        const State p = clapp::test::random_state_moderate(g);
        const Matrix4 j = jacobian(c, paper_bjt(), p);
        EXPECT_EQ(j(2, 0), 0.0);
        EXPECT_EQ(j(2, 1), 0.0);
        EXPECT_EQ(j(2, 2), 0.0);
        EXPECT_EQ(j(2, 3), 1.0 / c.c3);
        EXPECT_EQ(j(3, 0), 1.0 / c.l3);
        EXPECT_EQ(j(3, 1), 1.0 / c.l3);
        EXPECT_EQ(j(3, 2), -1.0 / c.l3);
        EXPECT_EQ(j(3, 3), 0.0);
    }
}

TEST(Jacobian, DeadTransistorIsLinearCircuit) {
    const auto c = paper_circuit();
    const Matrix4 j = jacobian(c, clapp::test::dead_bjt(), State{0.7, 2.0, 3.0, 1e-3});
    EXPECT_DOUBLE_EQ(j(0, 0), -(1.0 / c.r1 + 1.0 / c.r2) / c.c1);
    EXPECT_DOUBLE_EQ(j(1, 0), -(1.0 / c.r1 + 1.0 / c.r2) / c.c2);
    EXPECT_DOUBLE_EQ(j(1, 1), -(1.0 / c.r1 + 1.0 / c.r2 + 1.0 / c.r_e) / c.c2);
}

TEST(Jacobian, PaperOperatingPoint) {
    // Central finite differences of rhs at 50 digits, h = 1e-6 * max(|v_C1|, V_T).
    const double expected[4][4] = {
        {-1991225309.5853859, -171428571.42857143, 0.0, -5e11},
        {181808245244.25287, -1171428571.4285714, 0.0, -5e11},
        {0.0, 0.0, 0.0, 1e13},
        {1328021248.3399734, 1328021248.3399734, -1328021248.3399734, 0.0},
    };
    const auto c = paper_circuit();
    const auto b = paper_bjt();
    const auto eq = solve_equilibrium(c, b);
    const Matrix4 j = jacobian(c, b, eq.state);
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k)
            EXPECT_NEAR(j(i, k), expected[i][k], 1e-10 * std::abs(expected[i][k])) << i << "," << k;
}

TEST(JacobianProperty, MatchesFiniteDifferences) {
    const auto c = paper_circuit();
    auto g = clapp::test::rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        auto b = paper_bjt();
        b.beta = clapp::test::uniform(g, 50.0, 300.0);
        const State p = clapp::test::random_state_moderate(g);
        const Matrix4 an = jacobian(c, b, p);
        const Matrix4 fd = clapp::test::fd_jacobian(c, b, p);
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < 4; ++k) {
                if (an(i, k) == 0.0) {
                    EXPECT_EQ(fd(i, k), 0.0);
                    continue;
                }
                EXPECT_LE(std::abs(fd(i, k) - an(i, k)), 1e-6 * std::abs(an(i, k)))
                    << "trial " << trial << " entry " << i << "," << k;
            }
    }
}

TEST(Jacobian, PropagatesRangeError) {
    State p;
    p.v_c1 = 40.0;
    EXPECT_THROW((void)jacobian(paper_circuit(), paper_bjt(), p), RangeError);
}

// =============================================================================
// Nonlinearity and decomposition
// =============================================================================

TEST(Nonlinearity, LowerRowsVanish) {
    const auto c = paper_circuit();
    const auto b = paper_bjt();
    const auto eq = solve_equilibrium(c, b);
    auto g = clapp::test::rng(43);
    for (int trial = 0; trial < 200; ++trial) {
        const auto h = nonlinearity(c, b, random_state_in_range(g, c, b), eq);
        EXPECT_EQ(h.v_c3, 0.0);
        EXPECT_EQ(h.i_l3, 0.0);
    }
}

TEST(Nonlinearity, DeadTransistorIsDrive) {
    const auto c = paper_circuit();
    const auto b = clapp::test::dead_bjt();
    const auto eq = solve_equilibrium(c, b);
    const auto h = nonlinearity(c, b, State{1.0, -2.0, 3.0, 4e-3}, eq);
    EXPECT_DOUBLE_EQ(h.v_c1, c.v_cc / (c.r1 * c.c1));
    EXPECT_DOUBLE_EQ(h.v_c2, c.v_cc / (c.r1 * c.c2));
    EXPECT_EQ(h.v_c3, 0.0);
    EXPECT_EQ(h.i_l3, 0.0);
}

TEST(DecompositionProperty, RhsEqualsLinearPlusNonlinear) {
    const auto c = paper_circuit();
    const auto b = paper_bjt();
    const auto eq = solve_equilibrium(c, b);
    const Matrix4 j = jacobian(c, b, eq.state);
    auto g = clapp::test::rng(44);
    for (int trial = 0; trial < 1000; ++trial) {
        const State p = random_state_in_range(g, c, b);
        const auto f = rhs(c, b, p).to_array();
        const auto h = nonlinearity(c, b, p, eq).to_array();
        const auto x = p.to_array();
        for (std::size_t i = 0; i < 4; ++i) {
            double lin = 0.0, scale = std::max(std::abs(f[i]), std::abs(h[i]));
            for (std::size_t k = 0; k < 4; ++k) {
                lin += j(i, k) * x[k];
                scale = std::max(scale, std::abs(j(i, k) * x[k]));
            }
            EXPECT_LE(std::abs(f[i] - (lin + h[i])), 1e-12 * scale) << "trial " << trial << " row " << i;
        }
    }
}

TEST(DecompositionProperty, VanishesAtEquilibrium) {
    const auto c = paper_circuit();
    const auto b = paper_bjt();
    const auto eq = solve_equilibrium(c, b);
    const Matrix4 j = jacobian(c, b, eq.state);
    const auto lin = j * eq.state.to_array();
    const auto h = nonlinearity(c, b, eq.state, eq).to_array();
    const auto scales = residual_scales(c, b);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_LE(std::abs(lin[i] + h[i]), 1e-9 * scales[i]) << i;
}

// =============================================================================
// Stability report
// =============================================================================

TEST(StabilityReport, PaperOperatingPointEigenvalues) {
    // numpy eigvals of the 50-digit Jacobian.
    const Complex expected[4] = {{4028615635.2400926, 121184341387.27242},
                                 {4028615635.2400926, -121184341387.27242},
                                 {-4509420019.3276659, 0.0},
                                 {-6710465132.1664767, 0.0}};
    const auto c = paper_circuit();
    const auto b = paper_bjt();
    const auto rep = stability_report(c, b, solve_equilibrium(c, b));
    for (int k = 0; k < 4; ++k) EXPECT_LT(std::abs(rep.eigenvalues[k] - expected[k]), 1e-9 * 1.3e11) << k;
    EXPECT_EQ(rep.max_real_part, rep.eigenvalues[0].real());
    EXPECT_EQ(rep.classification, Stability::unstable);
}

TEST(StabilityReport, UnstableAcrossBeta) {
    const auto c = paper_circuit();
    for (double beta = 50.0; beta <= 300.0; beta += 10.0) {
        auto b = paper_bjt();
        b.beta = beta;
        const auto rep = stability_report(c, b, solve_equilibrium(c, b));
        EXPECT_EQ(rep.classification, Stability::unstable) << "beta = " << beta;
        EXPECT_GT(rep.max_real_part, 3e9) << "beta = " << beta;
    }
}

TEST(StabilityReport, TenOhmEmitterIsStillUnstable) {
    // Eigen oracle: the sign change of max Re sits near 1.1 Ohm, so 10 Ohm is
    // on the unstable side (max Re = 2.868e10 at beta = 124.7).
    auto c = paper_circuit();
    c.r_e = 10.0;
    auto b = paper_bjt();
    b.beta = clapp::test::kCalibratedBeta;
    const auto rep = stability_report(c, b, solve_equilibrium(c, b));
    EXPECT_EQ(rep.classification, Stability::unstable);
    EXPECT_NEAR(rep.max_real_part, 2.868196728e10, 1e-8 * 2.868196728e10);
}

TEST(StabilityReport, OneOhmEmitterIsStable) {
    // Eigen oracle: max Re = -5.91107534e8 at beta = 124.7.
    auto c = paper_circuit();
    c.r_e = 1.0;
    auto b = paper_bjt();
    b.beta = clapp::test::kCalibratedBeta;
    const auto rep = stability_report(c, b, solve_equilibrium(c, b));
    EXPECT_EQ(rep.classification, Stability::stable);
    EXPECT_NEAR(rep.max_real_part, -5.91107534e8, 1e-8 * 5.91107534e8);
}

TEST(StabilityReport, PassiveNetworkDecays) {
    // Every passive spectrum lies in the left half plane. The classification
    // follows the zero band: the slowest decay rate (~1e8 /s) is often below
    // 1e-3 of the spectral radius, which is set by the fast R_E C2 pole.
    auto g = clapp::test::rng(45);
    for (int trial = 0; trial < 50; ++trial) {
        auto c = paper_circuit();
        c.r_e = std::pow(10.0, clapp::test::uniform(g, 0.0, 3.0));
        const auto b = clapp::test::dead_bjt();
        const auto rep = stability_report(c, b, solve_equilibrium(c, b));
        double radius = 0.0;
        for (const auto& z : rep.eigenvalues) {
            EXPECT_LT(z.real(), 0.0) << "R_E = " << c.r_e;
            radius = std::max(radius, std::abs(z));
        }
        const auto expected =
            std::abs(rep.max_real_part) <= 1e-3 * radius ? Stability::marginal : Stability::stable;
        EXPECT_EQ(rep.classification, expected) << "R_E = " << c.r_e;
    }
}

TEST(StabilityReport, PassiveNetworkAtHundredOhmIsStable) {
    // Eigen oracle: max Re = -1.2901e8 /s, spectral radius 1.2086e11 /s.
    auto c = paper_circuit();
    c.r_e = 100.0;
    const auto b = clapp::test::dead_bjt();
    const auto rep = stability_report(c, b, solve_equilibrium(c, b));
    EXPECT_NEAR(rep.max_real_part, -129012868.21079063, 1e-6 * 129012868.21079063);
    EXPECT_EQ(rep.classification, Stability::stable);
}

TEST(StabilityReport, LightlyDampedPassiveNetworkIsMarginal) {
    // At R_E = 500 Ohm the passive tank decays at -3.83e7 /s against a spectral
    // radius of 1.21e11 /s, inside the default 1e-3 zero band.
    auto c = paper_circuit();
    const auto b = clapp::test::dead_bjt();
    const auto rep = stability_report(c, b, solve_equilibrium(c, b));
    EXPECT_NEAR(rep.max_real_part, -38308567.7349658, 1e-6 * 38308567.7349658);
    for (const auto& z : rep.eigenvalues) EXPECT_LT(z.real(), 0.0);
    EXPECT_EQ(rep.classification, Stability::marginal);
    StabilityOptions tight;
    tight.zero_band = 1e-4;
    EXPECT_EQ(classify(rep.eigenvalues, tight), Stability::stable);
}

TEST(StabilityReport, SpectrumConsistentWithTrace) {
    auto g = clapp::test::rng(46);
    for (int trial = 0; trial < 100; ++trial) {
        auto c = paper_circuit();
        c.r_e = std::pow(10.0, clapp::test::uniform(g, 0.0, 3.0));
        auto b = paper_bjt();
        b.beta = clapp::test::uniform(g, 10.0, 500.0);
        const auto rep = stability_report(c, b, solve_equilibrium(c, b));
        Complex sum{};
        double radius = 0.0;
        for (const auto& z : rep.eigenvalues) {
            sum += z;
            radius = std::max(radius, std::abs(z));
        }
        EXPECT_LE(std::abs(sum.real() - rep.jacobian.trace()), 1e-9 * std::max(radius, std::abs(rep.jacobian.trace())));
        for (int k = 0; k + 1 < 4; ++k) {
            const auto& a = rep.eigenvalues[k];
            const auto& n = rep.eigenvalues[k + 1];
            EXPECT_TRUE(a.real() > n.real() || (a.real() == n.real() && a.imag() >= n.imag()));
        }
    }
}

TEST(Classify, MarginalBandTakesPrecedence) {
    std::array<Complex, 4> w{Complex{1e-4, 1.0}, Complex{1e-4, -1.0}, Complex{-1.0, 0.0}, Complex{-2.0, 0.0}};
    EXPECT_EQ(classify(w), Stability::marginal);
    StabilityOptions tight;
    tight.zero_band = 1e-6;
    EXPECT_EQ(classify(w, tight), Stability::unstable);
    w[0] = {-1e-4, 1.0};
    w[1] = {-1e-4, -1.0};
    EXPECT_EQ(classify(w, tight), Stability::stable);
    EXPECT_EQ(stability_name(Stability::marginal), "marginal");
}
