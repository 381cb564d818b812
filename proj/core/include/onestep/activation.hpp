#pragma once

#include "onestep/quadrature.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace onestep {

enum class ActivationKind { erf, tanh, relu, softplus, identity };

const std::vector<std::string>& builtin_activation_names();
ActivationKind parse_activation(std::string_view name);  // throws ConfigError
std::string_view activation_name(ActivationKind kind);

struct Coefficients {
    double mu0 = 0.0;
    double mu1 = 0.0;
    double mu2 = 0.0;
};

// A built-in nonlinearity, optionally shifted (eval = raw - shift), with
// its Gaussian coefficients. Cheap to copy; immutable once built.
struct ActivationProfile {
    std::string name;
    ActivationKind kind = ActivationKind::identity;
    double shift = 0.0;
    double mu0 = 0.0;
    double mu1 = 0.0;
    double mu2 = 0.0;
    bool centered = false;

    double eval(double z) const;
    double deriv(double z) const;

    // Elementwise in place.
    void apply(Eigen::Ref<Eigen::MatrixXd> m) const;
    void apply_deriv(Eigen::Ref<Eigen::MatrixXd> m) const;

    std::vector<double> kinks() const;
    bool kinked() const { return !kinks().empty(); }
    bool odd() const;      // odd after the shift is removed
    bool bounded() const;
    // Three bounded derivatives.
    bool smooth() const;
    std::function<double(double)> fn() const {
        return [p = *this](double z) { return p.eval(z); };
    }
};

// Rule matching the activation: Gauss-Hermite, or split at kinks.
const QuadratureRule& rule_for(const ActivationProfile& act, int order = kDefaultQuadratureOrder);

// mu0 = E s, mu1 = E z s, mu2 = sqrt(E s^2 - mu0^2 - mu1^2). Throws
// InconsistencyError when the radicand is below -tol.
Coefficients coefficients(const std::function<double(double)>& f, const QuadratureRule& rule,
                          double tol = 1e-10);

ActivationProfile make_activation(ActivationKind kind, int order = kDefaultQuadratureOrder);
ActivationProfile make_activation(std::string_view name, int order = kDefaultQuadratureOrder);

// eval - mu0, with mu0 = 0; idempotent.
ActivationProfile center(const ActivationProfile& act);

// (mu0*, mu1*, mu2*, mu_bar) for a teacher nonlinearity.
struct TeacherCoefficients {
    double mu0_star = 0.0;
    double mu1_star = 0.0;
    double mu2_star = 0.0;
    double mu_bar = 0.0;
};
TeacherCoefficients teacher_profile(const ActivationProfile& sigma_star, const QuadratureRule& rule);

// y = sigma_star(<x, beta_star>) + eps.
struct TeacherModel {
    Eigen::VectorXd beta_star;
    ActivationProfile sigma_star;
    double mu0_star = 0.0;
    double mu1_star = 0.0;
    double mu2_star = 0.0;
    double mu_bar = 0.0;
    double sigma_eps = 0.0;

    Eigen::VectorXd eval(const Eigen::MatrixXd& X) const;
    // sqrt(E y^2) = sqrt(mu_bar^2 + sigma_eps^2)
    double label_rms() const;
};

// [-1_{d/2}; 1_{d/2}] / sqrt(d); odd d puts the extra entry on the positive side.
Eigen::VectorXd default_beta(Eigen::Index d);

TeacherModel make_teacher(const ActivationProfile& sigma_star, Eigen::VectorXd beta_star,
                          double sigma_eps, int order = kDefaultQuadratureOrder);

// b0 = E s'(z), b1 = sqrt(E s'^2 - b0^2).
struct DerivativeCoefficients {
    double b0 = 0.0;
    double b1 = 0.0;
};
DerivativeCoefficients derivative_coefficients(const ActivationProfile& act,
                                               int order = kDefaultQuadratureOrder);

}  // namespace onestep
