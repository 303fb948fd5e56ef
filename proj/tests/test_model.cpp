#include "clapp/model.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

using namespace clapp;
using clapp::test::paper_bjt;
using clapp::test::paper_circuit;

// =============================================================================
// Transistor currents
// =============================================================================

TEST(CollectorCurrent, ZeroBiasGivesZero) {
    EXPECT_EQ(collector_current(paper_bjt(), 0.0), 0.0);
    BjtParams b;
    b.i_s = 3e-9;
    b.eta = 1.7;
    b.v_t = 30e-3;
    EXPECT_EQ(collector_current(b, 0.0), 0.0);
}

TEST(CollectorCurrent, Ln2BiasGivesSaturationCurrent) {
    BjtParams b;
    b.i_s = 2.5e-10;
    b.eta = 0.9;
    b.v_t = 26e-3;
    const double v = b.v_t / b.eta * std::log(2.0);
    EXPECT_NEAR(collector_current(b, v), b.i_s, 1e-15 * b.i_s);
}

TEST(CollectorCurrent, PaperDeviceAt700mV) {
    // 50-digit evaluation of I_S*(exp(eta*0.7/V_T) - 1).
    const double expected = 0.090505397031843688478;
    EXPECT_NEAR(collector_current(paper_bjt(), 0.7), expected, 1e-13 * expected);
}

TEST(CollectorCurrent, LowerBoundedByMinusIs) {
    const auto b = paper_bjt();
    EXPECT_GE(collector_current(b, -50.0), -b.i_s);
    EXPECT_NEAR(collector_current(b, -50.0), -b.i_s, 1e-15);
}

TEST(CollectorCurrent, StrictlyMonotoneOnSortedGrid) {
    auto g = clapp::test::rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        BjtParams b;
        b.i_s = std::pow(10.0, clapp::test::uniform(g, -15.0, -9.0));
        b.eta = clapp::test::uniform(g, 0.3, 2.0);
        b.v_t = clapp::test::uniform(g, 20e-3, 30e-3);
        double prev = -std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 400; ++k) {
            const double v = -0.2 + 1.0 * k / 400.0;
            const double i = collector_current(b, v);
            EXPECT_GT(i, prev) << "v = " << v;
            prev = i;
        }
    }
}

TEST(CollectorCurrent, ExponentCapRaisesRangeError) {
    const auto b = paper_bjt();
    const double v_at_cap = b.exponent_cap * b.v_t / b.eta;
    EXPECT_NO_THROW((void)collector_current(b, 0.999 * v_at_cap));
    EXPECT_THROW((void)collector_current(b, 1.001 * v_at_cap), RangeError);
    try {
        (void)collector_current(b, 2.0 * v_at_cap);
        FAIL();
    } catch (const RangeError& e) {
        EXPECT_NEAR(e.exponent(), 2.0 * b.exponent_cap, 1e-9);
    }
}

TEST(BaseCurrent, IsCollectorOverBetaExactly) {
    auto b = paper_bjt();
    for (double beta : {2.0, 50.0, 100.0, 300.0}) {
        b.beta = beta;
        for (double v : {-0.3, 0.0, 0.2, 0.55, 0.7, 0.9}) {
            EXPECT_EQ(base_current(b, v) * beta, collector_current(b, v) / beta * beta);
            EXPECT_EQ(base_current(b, v), collector_current(b, v) / beta);
        }
    }
}

TEST(BaseCurrent, HalfCollectorForBetaTwo) {
    auto b = paper_bjt();
    b.beta = 2.0;
    // v_be at which i_C = 1 mA
    const double v = b.v_t / b.eta * std::log1p(1e-3 / b.i_s);
    EXPECT_NEAR(collector_current(b, v), 1e-3, 1e-15);
    EXPECT_NEAR(base_current(b, v), 0.5e-3, 1e-15);
}

TEST(BaseCurrent, ZeroBias) { EXPECT_EQ(base_current(paper_bjt(), 0.0), 0.0); }

TEST(BjtParams, ValidateRejectsBadValues) {
    BjtParams b;
    b.beta = 0.0;
    EXPECT_THROW(b.validate(), InputError);
    b = {};
    b.i_s = -1e-12;
    EXPECT_THROW(b.validate(), InputError);
    b = {};
    b.eta = -1.0;
    EXPECT_THROW(b.validate(), InputError);
    b = {};
    b.v_t = 0.0;
    EXPECT_THROW(b.validate(), InputError);
    b = {};
    b.i_s = 0.0;
    EXPECT_NO_THROW(b.validate());
}

TEST(CircuitParams, ValidateRejectsNonPositive) {
    CircuitParams c;
    EXPECT_NO_THROW(c.validate());
    c.c1 = -1e-12;
    EXPECT_THROW(c.validate(), InputError);
    c = {};
    c.r_e = 0.0;
    EXPECT_THROW(c.validate(), InputError);
    c = {};
    c.l3 = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(c.validate(), InputError);
}

// =============================================================================
// Right-hand side
// =============================================================================

TEST(Rhs, InductorCurrentChargesC3) {
    const State p{0.3, 1.0, 2.0, 1e-3};
    const auto f = rhs(paper_circuit(), paper_bjt(), p);
    EXPECT_NEAR(f.v_c3, 1e10, 1e-6);
}

TEST(Rhs, InductorEquationVanishesOnLoopBalance) {
    const State p{0.4, 2.5, 2.9, 4e-3};
    EXPECT_EQ(rhs(paper_circuit(), paper_bjt(), p).i_l3, 0.0);
}

TEST(Rhs, MatchesWrittenEquations) {
    const auto c = paper_circuit();
    const auto b = paper_bjt();
    const State p{0.61, 5.9, 6.4, 2e-3};
    const double ib = base_current(b, p.v_c1);
    const double g = 1.0 / c.r1 + 1.0 / c.r2;
    const auto f = rhs(c, b, p);
    EXPECT_DOUBLE_EQ(f.v_c1, (-(p.v_c1 + p.v_c2) * g - p.i_l3 - ib + c.v_cc / c.r1) / c.c1);
    EXPECT_DOUBLE_EQ(f.v_c2,
                     (-(p.v_c1 + p.v_c2) * g - p.v_c2 / c.r_e - p.i_l3 + b.beta * ib + c.v_cc / c.r1) / c.c2);
    EXPECT_DOUBLE_EQ(f.v_c3, p.i_l3 / c.c3);
    EXPECT_DOUBLE_EQ(f.i_l3, (p.v_c1 + p.v_c2 - p.v_c3) / c.l3);
}

TEST(Rhs, AffineInInductorCurrent) {
    const auto c = paper_circuit();
    const auto b = paper_bjt();
    auto g = clapp::test::rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        State p = clapp::test::random_state_moderate(g);
        const double d = 1e-3;
        State q = p;
        q.i_l3 += d;
        const auto fp = rhs(c, b, p);
        const auto fq = rhs(c, b, q);
        EXPECT_NEAR((fq.v_c1 - fp.v_c1) / d, -1.0 / c.c1, 1e-6 / c.c1);
        EXPECT_NEAR((fq.v_c2 - fp.v_c2) / d, -1.0 / c.c2, 1e-6 / c.c2);
        EXPECT_NEAR((fq.v_c3 - fp.v_c3) / d, 1.0 / c.c3, 1e-9 / c.c3);
        EXPECT_NEAR(fp.v_c3, p.i_l3 / c.c3, 1e-12 * std::abs(p.i_l3 / c.c3));
    }
}

TEST(Rhs, RejectsNonFiniteState) {
    State p;
    p.v_c2 = std::numeric_limits<double>::infinity();
    EXPECT_THROW((void)rhs(paper_circuit(), paper_bjt(), p), InputError);
}

TEST(Rhs, PropagatesRangeError) {
    State p;
    p.v_c1 = 30.0;
    EXPECT_THROW((void)rhs(paper_circuit(), paper_bjt(), p), RangeError);
}

// =============================================================================
// State vector
// =============================================================================

TEST(State, ComponentNamesRoundTrip) {
    for (auto c : kComponents) EXPECT_EQ(parse_component(component_name(c)), c);
    EXPECT_THROW((void)parse_component("v_c4"), InputError);
}

TEST(State, ArrayRoundTrip) {
    const State p{1.0, -2.0, 3.5, 4e-3};
    EXPECT_EQ(State::from_array(p.to_array()), p);
    EXPECT_EQ(p[Component::v_c3], 3.5);
    EXPECT_EQ(p[Component::i_l3], 4e-3);
}

// =============================================================================
// Exponential fit
// =============================================================================

TEST(FitExponential, TwoExactPoints) {
    const double i_s = 1e-9, eta = 1.0, v_t = 25.85e-3;
    std::vector<IvSample> s;
    for (double v : {0.4, 0.6}) s.push_back({v, i_s * std::exp(eta * v / v_t)});
    const auto fit = fit_exponential(s, v_t);
    EXPECT_NEAR(fit.i_s, i_s, 1e-12 * i_s);
    EXPECT_NEAR(fit.eta, eta, 1e-12);
    EXPECT_EQ(fit.samples_used, 2u);
}

TEST(FitExponential, RecoversPaperDevice) {
    const double i_s = 47.1e-12, eta = 0.7894, v_t = 25.85e-3;
    std::vector<IvSample> s;
    for (int k = 0; k < 50; ++k) {
        const double v = 0.5 + 0.3 * k / 49.0;
        s.push_back({v, i_s * std::exp(eta * v / v_t)});
    }
    const auto fit = fit_exponential(s, v_t);
    EXPECT_LE(std::abs(fit.i_s - i_s) / i_s, 1e-9);
    EXPECT_LE(std::abs(fit.eta - eta) / eta, 1e-9);
}

TEST(FitExponential, SkipsNonPositiveCurrents) {
    const double i_s = 1e-9, eta = 1.0, v_t = 25.85e-3;
    std::vector<IvSample> s{{0.4, i_s * std::exp(eta * 0.4 / v_t)},
                            {0.45, 0.0},
                            {0.5, -1e-3},
                            {0.6, i_s * std::exp(eta * 0.6 / v_t)}};
    const auto fit = fit_exponential(s, v_t);
    EXPECT_EQ(fit.samples_used, 2u);
    EXPECT_NEAR(fit.eta, eta, 1e-12);
}

TEST(FitExponential, Errors) {
    std::vector<IvSample> one{{0.5, 1e-3}, {0.6, 0.0}};
    EXPECT_THROW((void)fit_exponential(one, 25.85e-3), InputError);
    std::vector<IvSample> same{{0.5, 1e-3}, {0.5, 2e-3}};
    EXPECT_THROW((void)fit_exponential(same, 25.85e-3), DegenerateDesignError);
}

TEST(ReadIvCsv, ParsesCrlfAndBom) {
    std::istringstream in("\xEF\xBB\xBFv_be,i_dc\r\n0.5,1e-6\r\n0.6,2.5e-5\r\n");
    const auto s = read_iv_csv(in);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[1].v_be, 0.6);
    EXPECT_EQ(s[1].i_dc, 2.5e-5);
}

TEST(ReadIvCsv, ReportsLineNumbers) {
    std::istringstream bad_cols("v_be,i_dc\n0.5,1e-6\n0.6\n");
    try {
        (void)read_iv_csv(bad_cols);
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
    std::istringstream bad_num("v_be,i_dc\n0.5,abc\n");
    EXPECT_THROW((void)read_iv_csv(bad_num), InputError);
}

// =============================================================================
// Resonance
// =============================================================================

TEST(ResonantFrequency, UnitTank) {
    CircuitParams c;
    c.l3 = 1.0;
    c.c1 = c.c2 = 2.0;
    EXPECT_NEAR(resonant_frequency(c, TankMode::two_cap), 1.0 / (2.0 * std::numbers::pi), 1e-15);
}

TEST(ResonantFrequency, PaperValues) {
    const auto c = paper_circuit();
    // Closed-form values at 50 digits.
    EXPECT_NEAR(resonant_frequency(c, TankMode::two_cap), 5799928550.9388196, 1e-4);
    EXPECT_NEAR(resonant_frequency(c, TankMode::three_cap), 19236186814.333761, 1e-4);
    EXPECT_NEAR(resonant_frequency(c, TankMode::two_cap), 5.8e9, 0.005 * 5.8e9);
}

TEST(ResonantFrequency, ScalesAsInverseSqrtL) {
    auto c = paper_circuit();
    for (auto mode : {TankMode::two_cap, TankMode::three_cap}) {
        const double f1 = resonant_frequency(c, mode);
        auto d = c;
        d.l3 *= 2.0;
        const double f2 = resonant_frequency(d, mode);
        EXPECT_NEAR(f1 / f2, std::sqrt(2.0), 4e-16 * std::sqrt(2.0));
    }
}

TEST(ResonantFrequency, ModeNames) {
    EXPECT_EQ(parse_tank_mode("two-cap"), TankMode::two_cap);
    EXPECT_EQ(parse_tank_mode(tank_mode_name(TankMode::three_cap)), TankMode::three_cap);
    EXPECT_THROW((void)parse_tank_mode("four-cap"), InputError);
}
