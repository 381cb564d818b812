#include "onestep/errors.hpp"
#include "onestep/regress.hpp"
#include "onestep/simulate.hpp"
#include "onestep/stats.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace onestep;

namespace {

Eigen::MatrixXd normal(Eigen::Index r, Eigen::Index c, std::uint64_t seed, StreamRole role = StreamRole::fresh) {
    NormalStream s({seed, 0, role, 0});
    return s.matrix(r, c);
}

TeacherModel teacher(const char* name, Eigen::Index d, double noise = 0.0) {
    return make_teacher(center(make_activation(name)), default_beta(d), noise);
}

}  // namespace

TEST(CkFeatures, TrivialCases) {
    const auto id = make_activation("identity");
    const Eigen::Index d = 6, N = 4;
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d, N);
    W.topLeftCorner(N, N).setIdentity();
    const Eigen::MatrixXd X = normal(5, d, 1);
    const auto Phi = ck_features(W, X, id);
    EXPECT_LT((Phi - X.leftCols(N) / 2.0).norm(), 1e-12);

    const auto sp = make_activation("softplus");
    const auto Z = ck_features(W, Eigen::MatrixXd::Zero(3, d), sp);
    EXPECT_TRUE((Z.array() - sp.eval(0.0) / 2.0).abs().maxCoeff() < 1e-15);
}

TEST(CkFeatures, ColumnSecondMomentMatchesQuadrature) {
    const Eigen::Index d = 1024, n = 4096, N = 8;
    const auto act = make_activation("tanh");
    const Eigen::MatrixXd W = normal(d, N, 2, StreamRole::first_layer) / std::sqrt(static_cast<double>(d));
    const Eigen::MatrixXd X = normal(n, d, 3);
    const auto Phi = ck_features(W, X, act);
    for (Eigen::Index j = 0; j < N; ++j) {
        const double norm = W.col(j).norm();
        const double expected =
            gaussian_expectation([&](double z) { return std::pow(act.eval(norm * z), 2); }, rule_for(act)) / N;
        const Eigen::ArrayXd col = Phi.col(j).array().square();
        const double se = std::sqrt((col - col.mean()).square().sum() / (n - 1.0) / n);
        EXPECT_NEAR(col.mean(), expected, 4.0 * se);
        // And the linearized value is close when ||w|| ~ 1.
        EXPECT_NEAR(expected * N, act.mu1 * act.mu1 * norm * norm + act.mu2 * act.mu2, 0.05);
    }
}

TEST(GeFeatures, ZeroMu2IsLinearFeatures) {
    const Eigen::MatrixXd W = normal(8, 5, 4, StreamRole::first_layer);
    const Eigen::MatrixXd X = normal(10, 8, 5);
    const auto P = ge_features(W, X, 0.7, 0.0, {1, 0, StreamRole::ge_noise, 0});
    EXPECT_LT((P - 0.7 * X * W / std::sqrt(5.0)).norm(), 1e-12);
    const auto Q = ge_features(W, X, 0.7, 0.3, {1, 0, StreamRole::ge_noise, 0});
    const auto R = ge_features(W, X, 0.7, 0.3, {1, 0, StreamRole::ge_noise, 0});
    EXPECT_EQ(Q, R);
}

TEST(Ridge, NormalEquationResidualPrimalAndDual) {
    for (auto [n, N] : {std::pair<Eigen::Index, Eigen::Index>{200, 80}, {80, 200}}) {
        const Eigen::MatrixXd Phi = normal(n, N, 6) / std::sqrt(static_cast<double>(N));
        const Eigen::VectorXd y = normal(n, 1, 7);
        for (double lambda : {1e-6, 1e-3, 1.0, 100.0}) {
            const auto sol = ridge_fit(Phi, y, lambda);
            EXPECT_EQ(sol.dual, N > n);
            EXPECT_DOUBLE_EQ(sol.lambda_tilde, lambda * n / static_cast<double>(N));
            EXPECT_LT(normal_equation_residual(Phi, y, sol), 1e-8) << n << " " << N << " " << lambda;
            // Independent oracle: conjugate gradient on the primal system.
            Eigen::MatrixXd A = Phi.transpose() * Phi;
            A.diagonal().array() += sol.lambda_tilde;
            const Eigen::VectorXd ref = oracle::cg(A, Phi.transpose() * y);
            EXPECT_LT((sol.a_hat - ref).norm(), 1e-7 * ref.norm());
        }
    }
}

TEST(Ridge, ZeroPenaltyUsesPseudoInverse) {
    const Eigen::MatrixXd Phi = normal(30, 60, 8);
    const Eigen::VectorXd y = normal(30, 1, 9);
    const auto sol = ridge_fit(Phi, y, 0.0);
    EXPECT_TRUE(sol.pseudo_inverse);
    EXPECT_GT(sol.condition, 1.0);
    EXPECT_LT((Phi * sol.a_hat - y).norm(), 1e-9 * y.norm());  // interpolates
    EXPECT_THROW(ridge_fit(Phi, y, -1.0), ConfigError);
}

TEST(Ridge, EquivariantUnderColumnPermutation) {
    const Eigen::MatrixXd Phi = normal(50, 20, 10);
    const Eigen::VectorXd y = normal(50, 1, 11);
    std::vector<int> perm(20);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937(3));
    Eigen::MatrixXd P(50, 20);
    for (int j = 0; j < 20; ++j) P.col(j) = Phi.col(perm[j]);
    const auto a = ridge_fit(Phi, y, 0.1).a_hat;
    const auto b = ridge_fit(P, y, 0.1).a_hat;
    for (int j = 0; j < 20; ++j) EXPECT_NEAR(b(j), a(perm[j]), 1e-12);
}

TEST(Risk, ZeroPredictorGivesTeacherNorm) {
    const auto t = teacher("tanh", 64);
    const Predictor zero = [](const Eigen::MatrixXd& X) { return Eigen::VectorXd::Zero(X.rows()).eval(); };
    const auto r = risk_mc(zero, t, 20000, {1, 0, StreamRole::test, 0}, 3000);
    EXPECT_NEAR(r.mean, t.mu_bar * t.mu_bar, 3.0 * r.std_err);
    EXPECT_GE(r.mean, 0.0);
    // Block size does not change the estimate.
    const auto r2 = risk_mc(zero, t, 20000, {1, 0, StreamRole::test, 0}, 512);
    EXPECT_NEAR(r.mean, r2.mean, 1e-12);
}

TEST(Risk, GeClosedFormMatchesMonteCarlo) {
    const Eigen::Index d = 128, n = 512, N = 256;
    const auto t = teacher("softplus", d, 0.1);
    const auto act = make_activation("erf");
    const Eigen::MatrixXd W = normal(d, N, 12, StreamRole::first_layer) / std::sqrt(static_cast<double>(d));
    const auto data = sample_dataset(t, n, {12, 0, StreamRole::fresh, 0});
    const auto Phi = ge_features(W, data.X, act.mu1, act.mu2, {12, 0, StreamRole::ge_noise, 0});
    const auto sol = ridge_fit(Phi, data.y, 1e-2);
    const auto mc = risk_mc(ge_predictor(W, sol.a_hat, act.mu1, act.mu2, {12, 0, StreamRole::ge_noise, 1}), t, 40000,
                            {12, 0, StreamRole::test, 0});
    EXPECT_NEAR(mc.mean, ge_risk_closed(W, sol.a_hat, act.mu1, act.mu2, t), 3.0 * mc.std_err);
}

TEST(Risk, LargePenaltyRiskTendsToTeacherNorm) {
    const Eigen::Index d = 64, n = 256, N = 128;
    const auto t = teacher("tanh", d);
    const auto act = make_activation("erf");
    const Eigen::MatrixXd W = normal(d, N, 13, StreamRole::first_layer) / std::sqrt(static_cast<double>(d));
    const auto data = sample_dataset(t, n, {13, 0, StreamRole::fresh, 0});
    const auto Phi = ge_features(W, data.X, act.mu1, act.mu2, {13, 0, StreamRole::ge_noise, 0});
    const auto sol = ridge_fit(Phi, data.y, 1e9);
    EXPECT_NEAR(ge_risk_closed(W, sol.a_hat, act.mu1, act.mu2, t), t.mu_bar * t.mu_bar, 1e-6);
}

TEST(Risk, DecompositionIsNoiseAverageOfClosedForm) {
    const Eigen::Index d = 48, n = 96, N = 64;
    const double noise = 0.3;
    const auto t = teacher("tanh", d, noise);
    const auto act = make_activation("tanh");
    const Eigen::MatrixXd W = normal(d, N, 14, StreamRole::first_layer) / std::sqrt(static_cast<double>(d));
    const auto data = sample_dataset(t, n, {14, 0, StreamRole::fresh, 0});
    const auto Phi = ge_features(W, data.X, act.mu1, act.mu2, {14, 0, StreamRole::ge_noise, 0});
    const double lambda = 0.05;
    const auto dec = ge_risk_decomposition(W, Phi, data.f_star, lambda, act.mu1, act.mu2, t);
    // B1 alone can be negative (it carries the cross term); the bias B1 + B2 is at least mu2*^2.
    EXPECT_GE(dec.B1 + dec.B2, t.mu2_star * t.mu2_star - 1e-10);
    EXPECT_GE(dec.B2, -1e-10);
    EXPECT_GE(dec.V, -1e-10);
    // Noiseless labels: bias part equals the closed form.
    const auto clean = ridge_fit(Phi, data.f_star, lambda);
    EXPECT_NEAR(dec.B1 + dec.B2 + t.mu0_star * t.mu0_star, ge_risk_closed(W, clean.a_hat, act.mu1, act.mu2, t), 1e-10);
    // Average over label-noise draws.
    std::vector<double> r;
    for (int k = 0; k < 400; ++k) {
        NormalStream s({99, static_cast<std::uint64_t>(k), StreamRole::train, 0});
        const Eigen::VectorXd y = data.f_star + noise * s.vector(n);
        r.push_back(ge_risk_closed(W, ridge_fit(Phi, y, lambda).a_hat, act.mu1, act.mu2, t));
    }
    const auto sum = summarize(r);
    EXPECT_NEAR(sum.mean, dec.total(), 3.0 * sum.std_err);
}

TEST(LinearRidge, ClosedFormMatchesEmpiricalInputRidge) {
    const Eigen::Index d = 512;
    for (double psi1 : {0.5, 2.0, 4.0}) {
        const Eigen::Index n = static_cast<Eigen::Index>(psi1 * d);
        const auto t = teacher("tanh", d, 0.2);
        const double lambda = 0.1;
        std::vector<double> r;
        for (std::uint64_t s = 0; s < 4; ++s) {
            const auto data = sample_dataset(t, n, {s, 0, StreamRole::train, 0});
            r.push_back(input_ridge_risk(data.X, data.y, lambda, t));
        }
        const double closed = linear_ridge_risk(lambda, psi1, t.mu1_star, t.mu2_star, t.sigma_eps);
        EXPECT_NEAR(summarize(r).mean, closed, 0.03 * closed) << psi1;
    }
}

TEST(LinearRidge, OptimalPenaltyIsTheMinimum) {
    const auto t = teacher("tanh", 8, 0.3);
    for (double psi1 : {0.5, 1.0, 3.0}) {
        const auto opt = optimal_linear_ridge(psi1, t.mu1_star, t.mu2_star, t.sigma_eps);
        const double at = linear_ridge_risk(opt.lambda, psi1, t.mu1_star, t.mu2_star, t.sigma_eps);
        EXPECT_NEAR(opt.risk, at, 1e-10 * at);
        for (double f : {0.5, 0.9, 1.1, 2.0})
            EXPECT_GT(linear_ridge_risk(f * opt.lambda, psi1, t.mu1_star, t.mu2_star, t.sigma_eps), at);
    }
}

TEST(LinearRidge, LimitsAndFloor) {
    const auto t = teacher("tanh", 8, 0.1);
    // Infinite penalty predicts zero: risk mu1*^2 + mu2*^2.
    EXPECT_NEAR(linear_ridge_risk(1e9, 2.0, t.mu1_star, t.mu2_star, t.sigma_eps),
                t.mu1_star * t.mu1_star + t.mu2_star * t.mu2_star, 1e-6);
    // Infinite data: only the nonlinear part remains.
    EXPECT_NEAR(linear_ridge_risk(1e-3, 1e6, t.mu1_star, t.mu2_star, t.sigma_eps), t.mu2_star * t.mu2_star, 1e-4);
    EXPECT_THROW(linear_ridge_risk(0.0, 2.0, 1, 0, 0), DomainError);
}

TEST(Ntk, MappingAndDegenerateCase) {
    const auto t = teacher("tanh", 8, 0.1);
    EXPECT_DOUBLE_EQ(ntk_equiv_risk(0.1, 2.0, 0.0, 0.5, t), t.mu1_star * t.mu1_star + t.mu2_star * t.mu2_star);
    const double mapped = (0.1 + 0.25) / (0.36 * 2.0);
    EXPECT_DOUBLE_EQ(ntk_equiv_risk(0.1, 2.0, 0.6, 0.5, t),
                     linear_ridge_risk(mapped, 2.0, t.mu1_star, t.mu2_star, t.sigma_eps));
}

TEST(Baselines, AllAboveKernelLowerBound) {
    const Eigen::Index d = 512, n = 1024;
    const auto t = teacher("tanh", d, 0.1);
    const double lb = t.mu2_star * t.mu2_star;
    const auto data = sample_dataset(t, n, {21, 0, StreamRole::train, 0});
    const auto ipk = inner_product_kernel_ridge_mc([](double u) { return std::exp(u); }, data.X, data.y, 1e-1, t,
                                                   4096, {21, 0, StreamRole::test, 0});
    EXPECT_GE(ipk.mean, lb - 3.0 * ipk.std_err);
    const auto db = derivative_coefficients(make_activation("tanh"));
    EXPECT_GE(ntk_equiv_risk(1e-3, 2.0, db.b0, db.b1, t), lb);
    EXPECT_GE(linear_ridge_risk(1e-3, 2.0, t.mu1_star, t.mu2_star, t.sigma_eps), lb);
}

TEST(Kta, KnownValues) {
    const Eigen::VectorXd y = normal(16, 1, 30);
    EXPECT_NEAR(kta(y * y.transpose(), y), 1.0, 1e-12);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(16);
    EXPECT_NEAR(kta(Eigen::MatrixXd::Identity(16, 16), ones), 1.0 / 4.0, 1e-12);
    const Eigen::MatrixXd X = normal(16, 5, 31);
    const double v = kta(X * X.transpose(), y);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
}

TEST(Alignment, ReferencePredictors) {
    const auto t = teacher("tanh", 32);
    const StreamId s{40, 0, StreamRole::test, 0};
    const Eigen::Index n = 40000;
    const Predictor zero = [](const Eigen::MatrixXd& X) { return Eigen::VectorXd::Zero(X.rows()).eval(); };
    const auto z = alignment_components(zero, t, n, s);
    EXPECT_EQ(z.linear, 0.0);
    EXPECT_EQ(z.nonlinear, 0.0);
    const Predictor full = [&](const Eigen::MatrixXd& X) { return t.eval(X); };
    const auto f = alignment_components(full, t, n, s);
    EXPECT_NEAR(f.linear, t.mu1_star, 3.0 * f.linear_std_err);
    EXPECT_NEAR(f.nonlinear, t.mu2_star, 3.0 * f.nonlinear_std_err);
    const Predictor lin = [&](const Eigen::MatrixXd& X) { return (t.mu1_star * (X * t.beta_star)).eval(); };
    const auto l = alignment_components(lin, t, n, s);
    EXPECT_NEAR(l.linear, std::abs(t.mu1_star), 3.0 * l.linear_std_err);
    EXPECT_NEAR(l.nonlinear, 0.0, 3.0 * l.nonlinear_std_err + 1e-12);
}
