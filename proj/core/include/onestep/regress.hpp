#pragma once

#include "onestep/activation.hpp"
#include "onestep/rng.hpp"

#include <Eigen/Dense>

#include <functional>

namespace onestep {

// s(XW)/sqrt(N)
Eigen::MatrixXd ck_features(const Eigen::MatrixXd& W, const Eigen::MatrixXd& X, const ActivationProfile& act);

// (mu1 X W + mu2 Z)/sqrt(N), Z drawn row by row from the stream.
Eigen::MatrixXd ge_features(const Eigen::MatrixXd& W, const Eigen::MatrixXd& X, double mu1, double mu2,
                            StreamId z_stream);

struct RidgeSolution {
    Eigen::VectorXd a_hat;
    double lambda = 0.0;
    double lambda_tilde = 0.0;  // lambda n / N
    bool dual = false;          // solved on the n x n side
    bool pseudo_inverse = false;
    double condition = 0.0;     // estimate, filled for the lambda = 0 path
};

// argmin (1/n)||y - Phi a||^2 + (lambda/N)||a||^2, i.e.
// a = (Phi^T Phi + (lambda n/N) I)^{-1} Phi^T y.
RidgeSolution ridge_fit(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, double lambda);

// ||(Phi^T Phi + lambda_tilde I) a - Phi^T y|| / ||Phi^T y||
double normal_equation_residual(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, const RidgeSolution& sol);

struct RiskEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    Eigen::Index n_test = 0;
    int replicas = 1;
};

using Predictor = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

// Mean of (f_hat(x) - f*(x))^2 over n_test fresh Gaussian inputs (no label noise).
// The test inputs are processed in blocks; the predictor is called once per block.
RiskEstimate risk_mc(const Predictor& predictor, const TeacherModel& teacher, Eigen::Index n_test,
                     StreamId stream, Eigen::Index block = 2048);

// Predictors for the ridge fits: x -> s(x W) a / sqrt(N) and the Gaussian
// equivalent x -> (mu1 x W + mu2 z) a / sqrt(N) with z from the stream.
Predictor ck_predictor(const Eigen::MatrixXd& W, const Eigen::VectorXd& a_hat, const ActivationProfile& act);
Predictor ge_predictor(const Eigen::MatrixXd& W, const Eigen::VectorXd& a_hat, double mu1, double mu2,
                       StreamId z_stream);

// Risk of the Gaussian-equivalent predictor in closed form.
double ge_risk_closed(const Eigen::MatrixXd& W, const Eigen::VectorXd& a_hat, double mu1, double mu2,
                      const TeacherModel& teacher);

struct RiskDecompositionGE {
    double B1 = 0.0;
    double B2 = 0.0;
    double V = 0.0;
    double total() const { return B1 + B2 + V; }
};

// Bias and variance of the ridge fit on the Gaussian-equivalent features
// Phi_bar built from fresh inputs; f_star holds teacher values at those inputs.
RiskDecompositionGE ge_risk_decomposition(const Eigen::MatrixXd& W, const Eigen::MatrixXd& Phi_bar,
                                          const Eigen::VectorXd& f_star, double lambda, double mu1,
                                          double mu2, const TeacherModel& teacher);

// Asymptotic risk of ridge on raw inputs, theta = (X^T X + lambda n I)^{-1} X^T y.
double linear_ridge_risk(double lambda, double psi1, double mu1_star, double mu2_star, double sigma_eps);

struct OptimalRidge {
    double lambda = 0.0;
    double risk = 0.0;
};
OptimalRidge optimal_linear_ridge(double psi1, double mu1_star, double mu2_star, double sigma_eps);

// Linear-equivalent of the NTK ridge: R_Lin((lambda + b1^2)/(b0^2 psi1)).
double ntk_equiv_risk(double lambda, double psi1, double b0, double b1, const TeacherModel& teacher);

// Empirical input ridge, exact test risk given theta (Gaussian inputs).
double input_ridge_risk(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                        const TeacherModel& teacher);

// K_ij = g(<x_i, x_j>/d); f(x) = k(x, X)^T (K + lambda I)^{-1} y.
RiskEstimate inner_product_kernel_ridge_mc(const std::function<double(double)>& g, const Eigen::MatrixXd& X,
                                           const Eigen::VectorXd& y, double lambda, const TeacherModel& teacher,
                                           Eigen::Index n_test, StreamId test_stream);

// <K, y y^T> / (||K||_F ||y||^2)
double kta(const Eigen::MatrixXd& K, const Eigen::VectorXd& y);

struct AlignmentComponents {
    double linear = 0.0;
    double nonlinear = 0.0;
    double linear_std_err = 0.0;
    double nonlinear_std_err = 0.0;
};

// Monte Carlo <f*_L/||f*_L||, f_hat> and <f*_NL/||f*_NL||, f_hat>.
AlignmentComponents alignment_components(const Predictor& predictor, const TeacherModel& teacher,
                                         Eigen::Index n_mc, StreamId stream);

}  // namespace onestep
