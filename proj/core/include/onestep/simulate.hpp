#pragma once

#include "onestep/activation.hpp"
#include "onestep/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace onestep {

struct ExperimentConfig {
    Eigen::Index n = 0;
    Eigen::Index d = 0;
    Eigen::Index N = 0;
    double eta_bar = 1.0;
    double alpha = 0.0;  // eta = eta_bar * N^alpha
    double lambda = 1e-3;
    std::uint64_t seed = 0;
    int replicas = 1;
    Eigen::Index n_test = 4096;

    double psi1() const { return static_cast<double>(n) / static_cast<double>(d); }
    double psi2() const { return static_cast<double>(N) / static_cast<double>(d); }
    double eta() const;
    // Throws ConfigError on nonpositive sizes, alpha outside [0, 1/2], etc.
    void validate() const;
};

struct Dataset {
    Eigen::MatrixXd X;       // rows x d
    Eigen::VectorXd f_star;  // noiseless teacher values
    Eigen::VectorXd eps;
    Eigen::VectorXd y;       // f_star + eps
};

struct NetworkState {
    Eigen::MatrixXd W;  // d x N
    Eigen::VectorXd a;  // N
    int t = 0;
};

// Rows of X and the noise come from one stream, X first (row by row).
Dataset sample_dataset(const TeacherModel& teacher, Eigen::Index rows, StreamId stream);
Dataset sample_dataset(const ExperimentConfig& cfg, const TeacherModel& teacher, std::uint64_t replica,
                       StreamRole role);

// sqrt(d) W and sqrt(N) a have i.i.d. N(0,1) entries.
NetworkState init_network(const ExperimentConfig& cfg, std::uint64_t replica);

// (1/sqrt(N)) s(XW) a
Eigen::VectorXd forward(const NetworkState& net, const Eigen::MatrixXd& X, const ActivationProfile& act);

// G = (1/n) X^T [((1/sqrt N)(y - f) a^T) .* s'(XW)]
Eigen::MatrixXd gradient(const NetworkState& net, const Dataset& data, const ActivationProfile& act);

// W + eta sqrt(N) G; a unchanged; t + 1.
NetworkState gradient_step(const NetworkState& net, const Dataset& data, const ActivationProfile& act,
                           double eta);

// steps applications of gradient_step on the same dataset.
NetworkState multi_step(NetworkState net, const Dataset& data, const ActivationProfile& act, double eta,
                        int steps);

// (1/2n) ||y - f||^2
double empirical_loss(const NetworkState& net, const Dataset& data, const ActivationProfile& act);

struct MatrixNorms {
    double op = 0.0;
    double frobenius = 0.0;
    double two_inf = 0.0;  // largest row 2-norm
};

MatrixNorms matrix_norms(const Eigen::MatrixXd& M);
double operator_norm(const Eigen::MatrixXd& M);

struct GradientDecomposition {
    MatrixNorms G0, A, A1, A2, B, C;
    double relative_residual = 0.0;        // ||G0 - A|| / ||G0||, operator norm
    double reconstruction_error = 0.0;     // ||A + B - C - G0||_F / ||G0||_F
    bool has_remainder = false;            // B, C, reconstruction filled
};

// A = mu1/(n sqrt N) X^T y a^T, split into A1 (linear teacher part) and A2.
// With full = false only G0, A, A1, A2 and the residual are computed.
GradientDecomposition decompose_gradient(const NetworkState& net0, const Dataset& data,
                                         const ActivationProfile& act, const TeacherModel& teacher,
                                         bool full = true);

}  // namespace onestep
