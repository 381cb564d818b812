#pragma once

#include "onestep/activation.hpp"
#include "onestep/rng.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace onestep {

struct ThetaParams {
    double theta1 = 0.0;
    double theta2 = 0.0;
};

// theta1 = sqrt(mu_bar^2/psi1 + mu1*^2) mu1 eta, theta2 = mu1 mu1* eta.
// Pass the label root-mean-square as mu_bar when labels carry noise.
ThetaParams theta_params(double eta, double mu1, double mu1_star, double mu_bar, double psi1);

struct SpikePrediction {
    double s1_limit = 0.0;
    double overlap_sq = 0.0;
    bool supercritical = false;
};

SpikePrediction bbp_predict(const ThetaParams& theta, double psi2);

// Marchenko-Pastur law with ratio psi: edges (1 -+ sqrt psi)^2, atom
// max(0, 1 - 1/psi) at zero.
struct MpEdges {
    double lower = 0.0;
    double upper = 0.0;
};
MpEdges mp_edges(double psi);
double mp_atom(double psi);
double mp_density(double x, double psi);  // continuous part only

// Stieltjes transform m(z) = int dMP(x)/(x - z). Real z must be < 0 or above
// the upper edge (DomainError otherwise); complex z needs Im z > 0.
double mp_stieltjes(double z, double psi);
std::complex<double> mp_stieltjes(std::complex<double> z, double psi);
// dm/dz by implicit differentiation of the quadratic.
double mp_stieltjes_derivative(double z, double psi);
// Companion transform: psi m(z) - (1 - psi)/z, and its z-derivative.
double mp_companion(double z, double psi);
double mp_companion_derivative(double z, double psi);

struct Histogram {
    std::vector<double> edges;  // bins + 1
    std::vector<long> counts;
};

Histogram make_histogram(const std::vector<double>& values, int bins, double lo, double hi);

enum class SpectrumKind { svd, eig };

struct SpectralSummary {
    Eigen::VectorXd values;          // descending
    Eigen::VectorXd leading_vector;  // left singular vector / top eigenvector
    Histogram histogram;
};

// svd: singular values of M and its leading left singular vector;
// eig: eigenvalues of the symmetric M and its top eigenvector.
SpectralSummary spectral_summary(const Eigen::MatrixXd& M, SpectrumKind kind, int bins = 0);

// s1 > (1 + sqrt psi2)(1 + buffer d^{-2/3})
bool spike_isolated(double s1, double psi2, Eigen::Index d, double buffer = 5.0);

struct CkSpikeReport {
    std::vector<double> s_ck;  // top singular values of Phi
    std::vector<double> s_ge;  // top singular values of Phi_bar
    double overlap_ck = 0.0;   // |<u1, y/|y|>|^2
    double overlap_ge = 0.0;
    bool odd_activation = false;
};

// Phi = s(X W1)/sqrt N against Phi_bar = (mu1 X W1 + mu2 Z)/sqrt N, Z from stream.
CkSpikeReport ck_spike_check(const Eigen::MatrixXd& W1, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const ActivationProfile& act, StreamId z_stream, int top = 10);

}  // namespace onestep
