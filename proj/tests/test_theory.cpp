#include "onestep/activation.hpp"
#include "onestep/errors.hpp"
#include "onestep/regress.hpp"
#include "onestep/rng.hpp"
#include "onestep/spectra.hpp"
#include "onestep/theory.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace onestep;

namespace {

const std::vector<double> kGrid{0.1, 0.316, 1.0, 3.16, 10.0};

TheoryParams params(const char* student, const char* teacher, double noise = 0.0) {
    const auto s = center(make_activation(student));
    const auto t = make_teacher(center(make_activation(teacher)), default_beta(4), noise);
    return {s.mu1, s.mu2, t.mu1_star, t.mu2_star, t.label_rms()};
}

}  // namespace

TEST(FixedPoint, ResidualsOnGrid) {
    for (const auto& p : {params("tanh", "softplus"), params("erf", "erf"), params("softplus", "relu")})
        for (double lambda : kGrid)
            for (double psi1 : kGrid)
                for (double psi2 : kGrid) {
                    const double z = lambda * psi1 / psi2;
                    const auto s = solve_m1_m2(z, psi1, psi2, p.mu1, p.mu2);
                    EXPECT_LT(std::abs(s.residuals[0]), 1e-10) << lambda << " " << psi1 << " " << psi2;
                    EXPECT_LT(std::abs(s.residuals[1]), 1e-10);
                    EXPECT_GT(s.m1, 0.0);
                    EXPECT_GT(s.m2, 0.0);
                    EXPECT_LT(z * s.m1, 1.0);
                    EXPECT_LT(s.m1p, 0.0);  // a Stieltjes transform at -z decreases in z
                }
}

TEST(FixedPoint, SecondEquationSolvedExactly) {
    const auto p = params("tanh", "relu");
    const auto s = solve_m1_m2(0.3, 2.0, 1.5, p.mu1, p.mu2);
    EXPECT_NEAR(m2_given_m1(s.m1, 0.3, 2.0, 1.5, p.mu1), s.m2, 1e-15 * s.m2);
}

TEST(FixedPoint, AlternateSelfConsistentForm) {
    // m1 = int dMP_psi1(x) / ((mu1^2 x + mu2^2)(1 - r + r z m1) + z), r = psi1/psi2.
    for (const auto& p : {params("tanh", "softplus"), params("erf", "erf")})
        for (double psi1 : {0.5, 2.0, 4.0})
            for (double psi2 : {0.8, 2.0, 5.0})
                for (double z : {1e-3, 0.1, 2.0}) {
                    const auto s = solve_m1_m2(z, psi1, psi2, p.mu1, p.mu2);
                    const double r = psi1 / psi2;
                    const double rhs = mp_quadrature(
                        [&](double x) {
                            return 1.0 / ((p.mu1 * p.mu1 * x + p.mu2 * p.mu2) * (1.0 - r + r * z * s.m1) + z);
                        },
                        psi1, 400);
                    EXPECT_NEAR(s.m1, rhs, 1e-6 * s.m1) << psi1 << " " << psi2 << " " << z;
                }
}

TEST(FixedPoint, DerivativesMatchWideFiniteDifference) {
    const auto p = params("tanh", "softplus");
    for (double z : {1e-3, 0.05, 1.0}) {
        const auto s = solve_m1_m2(z, 3.0, 2.0, p.mu1, p.mu2);
        const double h = 1e-3 * z;
        const double d1 = (solve_m1_m2(z + h, 3.0, 2.0, p.mu1, p.mu2).m1 - solve_m1_m2(z - h, 3.0, 2.0, p.mu1, p.mu2).m1) /
                          (2.0 * h);
        const double d2 = (solve_m1_m2(z + h, 3.0, 2.0, p.mu1, p.mu2).m2 - solve_m1_m2(z - h, 3.0, 2.0, p.mu1, p.mu2).m2) /
                          (2.0 * h);
        EXPECT_NEAR(s.m1p, d1, 1e-5 * std::abs(d1));
        EXPECT_NEAR(s.m2p, d2, 1e-5 * std::abs(d2));
    }
}

TEST(FixedPoint, PureNoiseFeaturesReduceToMarchenkoPastur) {
    const auto s = solve_m1_m2(0.4, 2.0, 1.0, 0.0, 0.8);
    EXPECT_NEAR(s.m1, mp_stieltjes(-0.4 / 0.64, 2.0) / 0.64, 1e-14);
    EXPECT_THROW(solve_m1_m2(0.4, 2.0, 1.0, 0.0, 0.0), DomainError);
    EXPECT_THROW(solve_m1_m2(0.0, 2.0, 1.0, 0.5, 0.5), DomainError);
}

TEST(FixedPoint, MatchesEmpiricalGaussianEquivalentResolvent) {
    const auto act = make_activation("erf");
    const Eigen::Index d = 2048, n = 2048, N = 3072;
    NormalStream sx({1, 0, StreamRole::fresh, 0}), sw({1, 0, StreamRole::first_layer, 0}),
        sz({1, 0, StreamRole::ge_noise, 0});
    const Eigen::MatrixXd X = sx.matrix(n, d);
    const Eigen::MatrixXd W = sw.matrix(d, N) / std::sqrt(static_cast<double>(d));
    Eigen::MatrixXd Phi = act.mu1 * (X * W) + act.mu2 * sz.matrix(n, N);
    Phi /= std::sqrt(static_cast<double>(N));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Phi * Phi.transpose());
    const Eigen::MatrixXd XXd = X * X.transpose() / static_cast<double>(d);
    const Eigen::MatrixXd U = es.eigenvectors();
    const Eigen::VectorXd diag = (U.transpose() * XXd * U).diagonal();
    for (double z : {0.05, 0.5, 2.0}) {
        const Eigen::ArrayXd inv = 1.0 / (es.eigenvalues().array() + z);
        const double m1_emp = inv.mean();
        const double m2_emp = (inv * diag.array()).mean();
        const auto s = solve_m1_m2(z, 1.0, 1.5, act.mu1, act.mu2);
        EXPECT_NEAR(s.m1, m1_emp, 0.02 * m1_emp) << z;
        EXPECT_NEAR(s.m2, m2_emp, 0.02 * m2_emp) << z;
    }
}

TEST(Delta, ZeroStepAndLinearlyInvisibleTeacher) {
    auto p = params("tanh", "softplus", 0.25);
    EXPECT_NEAR(delta(0.0, 1e-3, 2.0, 2.0, p).delta, 0.0, 1e-14);
    p.mu1_star = 0.0;
    EXPECT_NEAR(delta(1.5, 1e-3, 2.0, 2.0, p).delta, 0.0, 1e-14);
    auto q = params("tanh", "softplus");
    q.mu1 = 0.0;
    EXPECT_EQ(delta(1.5, 1e-3, 2.0, 2.0, q).delta, 0.0);
    EXPECT_THROW(delta(1.0, 0.0, 2.0, 2.0, params("tanh", "tanh")), DomainError);
}

TEST(Delta, NonnegativeOnGrid) {
    for (const auto& p : {params("tanh", "softplus", 0.25), params("erf", "erf", 0.1), params("tanh", "relu", 0.1)})
        for (double eta : kGrid)
            for (double lambda : kGrid)
                for (double psi1 : kGrid)
                    for (double psi2 : kGrid) {
                        const auto r = delta(eta, lambda, psi1, psi2, p);
                        EXPECT_GE(r.delta, -1e-12) << eta << " " << lambda << " " << psi1 << " " << psi2;
                        EXPECT_TRUE(std::isfinite(r.delta));
                    }
}

TEST(Delta, TausScaleWithStepSize) {
    const auto p = params("tanh", "softplus", 0.25);
    const auto a = delta(1.0, 1e-2, 2.0, 2.0, p);
    const auto b = delta(2.0, 1e-2, 2.0, 2.0, p);
    ASSERT_TRUE(a.taus && b.taus);
    EXPECT_NEAR((*b.taus)(1), (*a.taus)(1), 1e-12 * std::abs((*a.taus)(1)));
    EXPECT_NEAR((*b.taus)(8), (*a.taus)(8), 1e-12 * std::abs((*a.taus)(8)));
    for (int i : {2, 3, 9, 10, 11}) EXPECT_NEAR((*b.taus)(i), 4.0 * (*a.taus)(i), 1e-10 * std::abs((*b.taus)(i)));
    for (int i : {4, 5, 6, 7, 12}) EXPECT_NEAR((*b.taus)(i), 2.0 * (*a.taus)(i), 1e-10 * std::abs((*b.taus)(i)) + 1e-15);
    EXPECT_GT(b.delta, a.delta);
}

TEST(LargeSample, MonotoneInStepSize) {
    for (const auto& p : {params("tanh", "softplus"), params("erf", "erf", 0.1)}) {
        double prev = 0.0;
        for (double eta : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
            const double v = delta_large_sample(eta, 1e-2, 2.0, p).delta;
            EXPECT_GE(v, prev - 1e-14) << eta;
            prev = v;
        }
        EXPECT_NEAR(delta_large_sample(0.0, 1e-2, 2.0, p).delta, 0.0, 1e-14);
    }
}

TEST(LargeSample, AgreesWithGeneralFormulaAtLargeRatio) {
    const auto p = params("tanh", "softplus");
    for (double eta : {0.5, 2.0}) {
        const double ls = delta_large_sample(eta, 1e-2, 2.0, p).delta;
        const double g3 = delta(eta, 1e-2, 1e3, 2.0, p).delta;
        const double g4 = delta(eta, 1e-2, 1e4, 2.0, p).delta;
        EXPECT_LT(std::abs(g4 - ls), std::abs(g3 - ls) + 1e-12);
        EXPECT_NEAR(g4, ls, 0.02 * ls) << eta;
    }
}

TEST(LargeWidth, DecaysByTenfold) {
    const auto p = params("tanh", "softplus", 0.25);
    const auto r = delta_large_width_check(1.0, 1e-2, 2.0, p);
    EXPECT_TRUE(r.decayed);
    EXPECT_LT(r.values.back(), r.values.front() / 10.0);
    EXPECT_LT(r.slope, 0.0);
}

TEST(MpQuadrature, AgreesWithStieltjes) {
    for (double psi : {0.5, 2.0})
        EXPECT_NEAR(mp_quadrature([](double x) { return 1.0 / (x + 0.3); }, psi), mp_stieltjes(-0.3, psi), 1e-10);
}
