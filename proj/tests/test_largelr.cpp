#include "onestep/errors.hpp"
#include "onestep/largelr.hpp"
#include "onestep/quadrature.hpp"
#include "onestep/rng.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace onestep;

namespace {

ActivationProfile centered(const char* name) { return center(make_activation(name)); }

}  // namespace

TEST(SmoothedActivation, ClosedFormsMatchQuadrature) {
    for (const char* name : {"erf", "relu", "identity"}) {
        const auto act = make_activation(name);
        for (double c : {-2.5, -0.3, 0.0, 0.7, 3.0}) {
            const double q = oracle::gaussian_mean([&](double x) { return act.eval(c + x); });
            EXPECT_NEAR(smoothed_activation(c, act), q, 1e-9) << name << " " << c;
        }
    }
}

TEST(SmoothedActivation, QuadratureForTheRest) {
    for (const char* name : {"tanh", "softplus"}) {
        const auto act = centered(name);
        for (double c : {-1.0, 0.5, 2.0}) {
            const double q = oracle::gaussian_mean([&](double x) { return act.eval(c + x); });
            EXPECT_NEAR(smoothed_activation(c, act), q, 1e-9) << name;
        }
    }
}

TEST(TauOfKappa, ErfStudentRecoversErfTeacher) {
    // E erf(kappa x + xi) = erf(kappa x / sqrt 3), so kappa = sqrt 3 is exact.
    const auto s = make_activation("erf");
    EXPECT_NEAR(tau_of_kappa(std::sqrt(3.0), s, s), 0.0, 1e-14);
    const auto r = tau_star(s, s);
    EXPECT_TRUE(r.achieved);
    EXPECT_NEAR(r.kappa_star, std::sqrt(3.0), 1e-5);
    EXPECT_LT(r.tau_star, 1e-10);
}

TEST(TauOfKappa, ZeroKappaGivesTeacherVariance) {
    const auto s = centered("tanh");
    const auto t = centered("relu");
    const double var = oracle::gaussian_mean([&](double x) { return t.eval(x) * t.eval(x); });
    EXPECT_NEAR(tau_of_kappa(0.0, s, t), var, 1e-8);
}

TEST(TauStar, ScanIsFiniteAndMinimumIsLocal) {
    for (auto [sn, tn] : {std::pair{"tanh", "tanh"}, std::pair{"tanh", "softplus"}, std::pair{"tanh", "relu"}}) {
        const auto s = centered(sn);
        const auto t = centered(tn);
        const auto r = tau_star(s, t);
        for (const auto& [k, v] : r.scan) {
            ASSERT_TRUE(std::isfinite(v)) << k;
            EXPECT_GE(v, -1e-14);
        }
        ASSERT_TRUE(r.achieved) << sn << "/" << tn;
        EXPECT_LE(r.tau_star, tau_of_kappa(r.kappa_star - 0.01, s, t));
        EXPECT_LE(r.tau_star, tau_of_kappa(r.kappa_star + 0.01, s, t));
        for (const auto& [k, v] : r.scan) EXPECT_LE(r.tau_star, v + 1e-12);
    }
}

TEST(TauStar, ContinuousAlongTheScan) {
    const auto s = centered("tanh");
    const auto t = centered("softplus");
    double prev = tau_of_kappa(-5.0, s, t);
    for (double k = -5.0 + 1e-3; k <= 5.0; k += 1e-3) {
        const double v = tau_of_kappa(k, s, t);
        EXPECT_LT(std::abs(v - prev), 1e-2) << k;
        prev = v;
    }
}

TEST(TauStar, WarnsOnUnboundedOrUncentered) {
    EXPECT_FALSE(tau_star(make_activation("relu"), centered("softplus")).warnings.empty());
    EXPECT_THROW(tau_star(centered("tanh"), centered("tanh"), {1.0, 0.0, 0.1}), ConfigError);
}

TEST(OracleLayer, SumsToRootWidthAndHasExpectedSize) {
    const Eigen::Index N = 10000;
    NormalStream s({5, 0, StreamRole::second_layer, 0});
    const Eigen::VectorXd a = s.vector(N) / std::sqrt(static_cast<double>(N));
    const double alpha = 0.8, r = 0.25;
    const auto layer = build_oracle_layer(a, alpha, r);
    EXPECT_NEAR(layer.a_tilde.sum(), std::sqrt(static_cast<double>(N)), 1e-9);
    const double radius = std::pow(static_cast<double>(N), -r);
    const auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    const double p = cdf(alpha + radius) - cdf(alpha - radius);
    const double mean = N * p;
    const double sd = std::sqrt(N * p * (1.0 - p));
    EXPECT_NEAR(static_cast<double>(layer.N_r), mean, 5.0 * sd);
    for (Eigen::Index i : layer.subset) EXPECT_LE(std::abs(std::sqrt(double(N)) * a(i) - alpha), radius);
}

TEST(OracleLayer, EmptySubsetIsAConfigError) {
    const Eigen::VectorXd a = Eigen::VectorXd::Constant(100, 0.0);
    EXPECT_THROW(build_oracle_layer(a, 5.0, 0.25), ConfigError);
    EXPECT_THROW(build_oracle_layer(a, 0.0, 0.6), ConfigError);
}

TEST(OracleExperiment, SmallRunIsFinite) {
    ExperimentConfig cfg;
    cfg.n = 512;
    cfg.d = 128;
    cfg.N = 1024;
    cfg.eta_bar = 1.0;
    cfg.alpha = 0.5;
    cfg.n_test = 1024;
    cfg.seed = 3;
    const auto s = centered("tanh");
    const auto t = make_teacher(centered("relu"), default_beta(cfg.d), 0.0);
    TauSearch search;
    search.eta_bar = cfg.eta_bar;
    auto ts = tau_star(s, t.sigma_star, search);
    const auto rep = oracle_risk_experiment(cfg, s, t, ts, 0);
    EXPECT_GT(rep.N_r, 0);
    EXPECT_TRUE(std::isfinite(rep.oracle_risk.mean));
    EXPECT_TRUE(std::isfinite(rep.ridge_risk.mean));
    EXPECT_NEAR(rep.ridge_lambda / cfg.N, 1.0 / std::sqrt(double(cfg.n)), 1e-12);
}
