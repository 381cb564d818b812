#pragma once

#include "onestep/activation.hpp"
#include "onestep/regress.hpp"
#include "onestep/simulate.hpp"

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace onestep {

// E_{xi1} (s*(xi1) - E_{xi2} s(kappa xi1 + xi2))^2
double tau_of_kappa(double kappa, const ActivationProfile& student, const ActivationProfile& teacher,
                    int order = kDefaultQuadratureOrder);

// E_{xi} s(c + xi), closed form for erf, relu and identity.
double smoothed_activation(double c, const ActivationProfile& act, int order = kDefaultQuadratureOrder);

struct TauSearch {
    double lo = -20.0;
    double hi = 20.0;
    double step = 0.05;
    double tol = 1e-6;
    double eta_bar = 1.0;  // for alpha* only
};

struct TauStarResult {
    double tau_star = 0.0;
    double kappa_star = 0.0;
    double alpha_star = 0.0;  // kappa*/(eta_bar mu1 mu1*)
    bool achieved = false;    // false: minimum on the scan boundary
    std::vector<std::pair<double, double>> scan;
    std::vector<std::string> warnings;
};

TauStarResult tau_star(const ActivationProfile& student, const ActivationProfile& teacher,
                       const TauSearch& search = {}, int order = kDefaultQuadratureOrder);

struct OracleLayer {
    std::vector<Eigen::Index> subset;
    Eigen::Index N_r = 0;
    double r = 0.0;
    double alpha = 0.0;
    Eigen::VectorXd a_tilde;  // sqrt(N)/N_r on the subset, 0 elsewhere
};

// Neurons with |sqrt(N) a_i - alpha| <= N^{-r}. Throws ConfigError when empty.
OracleLayer build_oracle_layer(const Eigen::VectorXd& a, double alpha, double r);

struct OracleReport {
    double eta = 0.0;
    double ridge_lambda = 0.0;
    double tau_star = 0.0;
    double alpha_star = 0.0;
    Eigen::Index N_r = 0;  // 0 when the subset is empty
    RiskEstimate oracle_risk;  // NaN mean when the subset is empty
    RiskEstimate ridge_risk;
    double kernel_lb = 0.0;
};

struct OracleOptions {
    double r = 0.25;
    double penalty_exponent = 0.5;  // lambda/N = n^{-exponent}
};

// One step with eta = eta_bar sqrt(N), oracle second layer at alpha*, and the
// ridge fit on fresh data. cfg.alpha is ignored (the step is always Theta(sqrt N)).
OracleReport oracle_risk_experiment(const ExperimentConfig& cfg, const ActivationProfile& student,
                                    const TeacherModel& teacher, const TauStarResult& ts,
                                    std::uint64_t replica, const OracleOptions& opt = {});

}  // namespace onestep
