#include "onestep/activation.hpp"
#include "onestep/errors.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace onestep;

namespace {

Coefficients oracle_coefficients(const ActivationProfile& a) {
    const double m0 = oracle::gaussian_mean([&](double z) { return a.eval(z); });
    const double m1 = oracle::gaussian_mean([&](double z) { return z * a.eval(z); });
    const double m2sq = oracle::gaussian_mean([&](double z) { return a.eval(z) * a.eval(z); }) - m0 * m0 - m1 * m1;
    return {m0, m1, std::sqrt(std::max(0.0, m2sq))};
}

class EachActivation : public ::testing::TestWithParam<std::string> {};

}  // namespace

TEST_P(EachActivation, CoefficientsMatchAdaptiveOracle) {
    const auto a = make_activation(GetParam());
    const auto o = oracle_coefficients(a);
    EXPECT_NEAR(a.mu0, o.mu0, 1e-7);
    EXPECT_NEAR(a.mu1, o.mu1, 1e-7);
    EXPECT_NEAR(a.mu2, o.mu2, 1e-7);
}

TEST_P(EachActivation, SecondMomentSplitsIntoCoefficients) {
    const auto a = make_activation(GetParam());
    const auto& rule = rule_for(a);
    const double e2 = gaussian_expectation([&](double z) { return a.eval(z) * a.eval(z); }, rule);
    EXPECT_NEAR(a.mu0 * a.mu0 + a.mu1 * a.mu1 + a.mu2 * a.mu2, e2, 1e-10);
    // Parseval for the degree-one projection.
    const double resid = gaussian_expectation([&](double z) { return std::pow(a.eval(z) - a.mu1 * z, 2); }, rule);
    EXPECT_NEAR(a.mu2 * a.mu2, resid - a.mu0 * a.mu0, 1e-8);
    EXPECT_GE(a.mu2, 0.0);
}

TEST_P(EachActivation, CenteringRemovesMeanOnly) {
    const auto a = make_activation(GetParam());
    const auto c = center(a);
    EXPECT_LT(std::abs(gaussian_expectation(c.fn(), rule_for(c))), 1e-10);
    EXPECT_EQ(c.mu0, 0.0);
    EXPECT_DOUBLE_EQ(c.mu1, a.mu1);
    EXPECT_DOUBLE_EQ(c.mu2, a.mu2);
    const auto cc = center(c);
    EXPECT_EQ(cc.shift, c.shift);
    EXPECT_TRUE(c.centered);
}

TEST_P(EachActivation, DerivativeMatchesFiniteDifference) {
    const auto a = make_activation(GetParam());
    std::mt19937_64 gen(42);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    int checked = 0;
    while (checked < 100) {
        const double z = u(gen);
        bool near_kink = false;
        for (double k : a.kinks()) near_kink |= std::abs(z - k) < 1e-3;
        if (near_kink) continue;
        EXPECT_NEAR(a.deriv(z), oracle::central_difference([&](double x) { return a.eval(x); }, z, 1e-5), 1e-6)
            << "z=" << z;
        ++checked;
    }
}

TEST_P(EachActivation, ApplyMatchesEval) {
    const auto a = make_activation(GetParam());
    Eigen::MatrixXd m = Eigen::MatrixXd::Random(7, 5) * 3.0;
    const Eigen::MatrixXd orig = m;
    Eigen::MatrixXd d = m;
    a.apply(m);
    a.apply_deriv(d);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 5; ++j) {
            EXPECT_DOUBLE_EQ(m(i, j), a.eval(orig(i, j)));
            EXPECT_DOUBLE_EQ(d(i, j), a.deriv(orig(i, j)));
        }
}

INSTANTIATE_TEST_SUITE_P(Builtins, EachActivation, ::testing::ValuesIn(builtin_activation_names()));

TEST(Activation, IdentityCoefficients) {
    const auto a = make_activation("identity");
    EXPECT_NEAR(a.mu0, 0.0, 1e-14);
    EXPECT_NEAR(a.mu1, 1.0, 1e-13);
    EXPECT_NEAR(a.mu2, 0.0, 1e-6);
}

TEST(Activation, ErfClosedForm) {
    const auto a = make_activation("erf");
    EXPECT_EQ(a.mu0, 0.0);
    EXPECT_NEAR(a.mu1, 2.0 / std::sqrt(3.0 * std::numbers::pi), 1e-12);
    EXPECT_NEAR(a.mu1, 0.65147, 1e-5);
    // E erf(z)^2 = (2/pi) asin(2/3)
    const double e2 = 2.0 / std::numbers::pi * std::asin(2.0 / 3.0);
    EXPECT_NEAR(a.mu2 * a.mu2, e2 - a.mu1 * a.mu1, 1e-12);
}

TEST(Activation, ReluCoefficientsAndCentering) {
    const auto a = make_activation("relu");
    EXPECT_NEAR(a.mu0, 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-12);
    EXPECT_NEAR(a.mu0, 0.39894, 1e-5);
    EXPECT_NEAR(a.mu1, 0.5, 1e-12);
    EXPECT_NEAR(a.mu2 * a.mu2, 0.5 - 0.25 - 1.0 / (2.0 * std::numbers::pi), 1e-12);
    const auto c = center(a);
    EXPECT_NEAR(c.shift, 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-12);
    EXPECT_NEAR(c.eval(1.0), 1.0 - c.shift, 1e-15);
    EXPECT_EQ(a.deriv(0.0), 0.0);
    EXPECT_FALSE(a.smooth());
    EXPECT_TRUE(a.kinked());
}

TEST(Activation, TanhIsOddAndUnchangedByCentering) {
    const auto a = make_activation("tanh");
    EXPECT_TRUE(a.odd());
    EXPECT_EQ(a.mu0, 0.0);
    EXPECT_NEAR(a.mu1, 0.6057, 1e-4);
    const auto c = center(a);
    EXPECT_EQ(c.shift, 0.0);
    EXPECT_EQ(c.eval(0.7), a.eval(0.7));
}

TEST(Activation, SoftplusIsNotOdd) {
    const auto a = make_activation("softplus");
    EXPECT_FALSE(a.odd());
    EXPECT_FALSE(center(a).odd());
    EXPECT_GT(a.mu0, 0.0);
}

TEST(Activation, UnknownNameIsConfigError) {
    EXPECT_THROW(make_activation("swish"), ConfigError);
    EXPECT_THROW(parse_activation(""), ConfigError);
}

TEST(Activation, NegativeRadicandIsInconsistency) {
    // A rule with a bogus negative weight breaks Cauchy-Schwarz.
    QuadratureRule bad{{-1.0, 0.0, 1.0}, {0.5, 1.0, -0.5}, 3};
    EXPECT_THROW(coefficients([](double z) { return z; }, bad), InconsistencyError);
}

TEST(Teacher, IdentityTeacher) {
    const auto t = make_teacher(make_activation("identity"), default_beta(64), 0.0);
    EXPECT_NEAR(t.mu1_star, 1.0, 1e-13);
    EXPECT_NEAR(t.mu2_star, 0.0, 1e-6);
    EXPECT_NEAR(t.mu_bar, 1.0, 1e-12);
}

TEST(Teacher, BetaIsUnitAndBalanced) {
    for (Eigen::Index d : {2, 7, 512}) {
        const auto b = default_beta(d);
        EXPECT_NEAR(b.norm(), 1.0, 1e-12);
    }
    const auto b = default_beta(8);
    EXPECT_LT(b(0), 0.0);
    EXPECT_GT(b(7), 0.0);
    Eigen::VectorXd raw = Eigen::VectorXd::Constant(10, 3.0);
    const auto t = make_teacher(make_activation("tanh"), raw, 0.1);
    EXPECT_NEAR(t.beta_star.norm(), 1.0, 1e-12);
}

TEST(Teacher, NormSplitsIntoCoefficients) {
    for (const char* name : {"tanh", "relu", "softplus", "erf"}) {
        const auto t = make_teacher(center(make_activation(name)), default_beta(16), 0.25);
        EXPECT_NEAR(t.mu_bar * t.mu_bar, t.mu0_star * t.mu0_star + t.mu1_star * t.mu1_star + t.mu2_star * t.mu2_star,
                    1e-10)
            << name;
        EXPECT_NEAR(t.label_rms(), std::sqrt(t.mu_bar * t.mu_bar + 0.0625), 1e-14);
    }
    const auto sp = make_teacher(center(make_activation("softplus")), default_beta(16), 0.0);
    EXPECT_GT(sp.mu2_star * sp.mu2_star, 0.0);
}

TEST(Teacher, EvalIsSingleIndex) {
    const auto t = make_teacher(make_activation("tanh"), default_beta(4), 0.0);
    Eigen::MatrixXd X(2, 4);
    X << 1, 2, 3, 4, -1, 0, 0, 1;
    const auto f = t.eval(X);
    EXPECT_NEAR(f(0), std::tanh((X.row(0) * t.beta_star)(0)), 1e-15);
    EXPECT_NEAR(f(1), std::tanh((X.row(1) * t.beta_star)(0)), 1e-15);
}

TEST(DerivativeCoefficients, MatchOracle) {
    for (const char* name : {"tanh", "erf", "softplus", "relu"}) {
        const auto a = make_activation(name);
        const auto c = derivative_coefficients(a);
        const double b0 = oracle::gaussian_mean([&](double z) { return a.deriv(z); });
        const double e2 = oracle::gaussian_mean([&](double z) { return a.deriv(z) * a.deriv(z); });
        EXPECT_NEAR(c.b0, b0, 1e-8) << name;
        EXPECT_NEAR(c.b1, std::sqrt(std::max(0.0, e2 - b0 * b0)), 1e-7) << name;
        // Stein: E s'(z) = E z s(z)
        EXPECT_NEAR(c.b0, a.mu1, 1e-8) << name;
    }
}
