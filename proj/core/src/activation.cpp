#include "onestep/activation.hpp"

#include "onestep/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace onestep {

namespace {

inline double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

constexpr double kErfDeriv = 2.0 / 1.7724538509055160273;  // 2/sqrt(pi)

inline double raw_eval(ActivationKind kind, double z) {
    switch (kind) {
        case ActivationKind::erf: return std::erf(z);
        case ActivationKind::tanh: return std::tanh(z);
        case ActivationKind::relu: return z > 0.0 ? z : 0.0;
        case ActivationKind::softplus: return softplus(z);
        case ActivationKind::identity: return z;
    }
    return 0.0;
}

inline double raw_deriv(ActivationKind kind, double z) {
    switch (kind) {
        case ActivationKind::erf: return kErfDeriv * std::exp(-z * z);
        case ActivationKind::tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case ActivationKind::relu: return z > 0.0 ? 1.0 : 0.0;
        case ActivationKind::softplus: return logistic(z);
        case ActivationKind::identity: return 1.0;
    }
    return 0.0;
}

template <class F>
void for_each_entry(Eigen::Ref<Eigen::MatrixXd> m, F f) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        double* col = m.col(j).data();
        for (Eigen::Index i = 0; i < m.rows(); ++i) col[i] = f(col[i]);
    }
}

}  // namespace

const std::vector<std::string>& builtin_activation_names() {
    static const std::vector<std::string> names{"erf", "tanh", "relu", "softplus", "identity"};
    return names;
}

ActivationKind parse_activation(std::string_view name) {
    if (name == "erf") return ActivationKind::erf;
    if (name == "tanh") return ActivationKind::tanh;
    if (name == "relu") return ActivationKind::relu;
    if (name == "softplus") return ActivationKind::softplus;
    if (name == "identity") return ActivationKind::identity;
    std::ostringstream msg;
    msg << "unknown activation '" << name << "' (expected one of: erf, tanh, relu, softplus, identity)";
    throw ConfigError(msg.str());
}

std::string_view activation_name(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::erf: return "erf";
        case ActivationKind::tanh: return "tanh";
        case ActivationKind::relu: return "relu";
        case ActivationKind::softplus: return "softplus";
        case ActivationKind::identity: return "identity";
    }
    return "unknown";
}

double ActivationProfile::eval(double z) const { return raw_eval(kind, z) - shift; }

double ActivationProfile::deriv(double z) const { return raw_deriv(kind, z); }

void ActivationProfile::apply(Eigen::Ref<Eigen::MatrixXd> m) const {
    const double s = shift;
    switch (kind) {
        case ActivationKind::erf: for_each_entry(m, [s](double z) { return std::erf(z) - s; }); break;
        case ActivationKind::tanh: for_each_entry(m, [s](double z) { return std::tanh(z) - s; }); break;
        case ActivationKind::relu: for_each_entry(m, [s](double z) { return (z > 0.0 ? z : 0.0) - s; }); break;
        case ActivationKind::softplus: for_each_entry(m, [s](double z) { return softplus(z) - s; }); break;
        case ActivationKind::identity: if (s != 0.0) m.array() -= s; break;
    }
}

void ActivationProfile::apply_deriv(Eigen::Ref<Eigen::MatrixXd> m) const {
    switch (kind) {
        case ActivationKind::erf: for_each_entry(m, [](double z) { return kErfDeriv * std::exp(-z * z); }); break;
        case ActivationKind::tanh:
            for_each_entry(m, [](double z) {
                const double t = std::tanh(z);
                return 1.0 - t * t;
            });
            break;
        case ActivationKind::relu: for_each_entry(m, [](double z) { return z > 0.0 ? 1.0 : 0.0; }); break;
        case ActivationKind::softplus: for_each_entry(m, logistic); break;
        case ActivationKind::identity: m.setOnes(); break;
    }
}

std::vector<double> ActivationProfile::kinks() const {
    if (kind == ActivationKind::relu) return {0.0};
    return {};
}

bool ActivationProfile::odd() const {
    const bool raw_odd = kind == ActivationKind::erf || kind == ActivationKind::tanh ||
                         kind == ActivationKind::identity;
    return raw_odd && shift == 0.0;
}

bool ActivationProfile::bounded() const {
    return kind == ActivationKind::erf || kind == ActivationKind::tanh;
}

bool ActivationProfile::smooth() const { return kind != ActivationKind::relu; }

const QuadratureRule& rule_for(const ActivationProfile& act, int order) {
    return gaussian_rule(order, act.kinked());
}

Coefficients coefficients(const std::function<double(double)>& f, const QuadratureRule& rule,
                          double tol) {
    const double m0 = gaussian_expectation(f, rule);
    const double m1 = gaussian_expectation([&](double z) { return z * f(z); }, rule);
    const double m2sq = gaussian_expectation([&](double z) { return f(z) * f(z); }, rule);
    const double rest = m2sq - m0 * m0 - m1 * m1;
    if (rest < -tol) {
        std::ostringstream msg;
        msg << "E s^2 - mu0^2 - mu1^2 = " << rest << " is negative beyond tolerance";
        throw InconsistencyError(msg.str());
    }
    return {m0, m1, std::sqrt(std::max(0.0, rest))};
}

ActivationProfile make_activation(ActivationKind kind, int order) {
    ActivationProfile p;
    p.name = std::string(activation_name(kind));
    p.kind = kind;
    const auto c = coefficients(p.fn(), rule_for(p, order));
    p.mu0 = c.mu0;
    p.mu1 = c.mu1;
    p.mu2 = c.mu2;
    if (p.odd()) p.mu0 = 0.0;
    p.centered = p.mu0 == 0.0;
    return p;
}

ActivationProfile make_activation(std::string_view name, int order) {
    return make_activation(parse_activation(name), order);
}

ActivationProfile center(const ActivationProfile& act) {
    if (act.centered) return act;
    ActivationProfile p = act;
    p.shift += act.mu0;
    p.mu0 = 0.0;
    p.centered = true;
    return p;
}

TeacherCoefficients teacher_profile(const ActivationProfile& sigma_star, const QuadratureRule& rule) {
    const auto f = sigma_star.fn();
    const auto c = coefficients(f, rule);
    const double second = gaussian_expectation([&](double z) { return f(z) * f(z); }, rule);
    return {c.mu0, c.mu1, c.mu2, std::sqrt(second)};
}

Eigen::VectorXd TeacherModel::eval(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd proj = X * beta_star;
    sigma_star.apply(proj);
    return proj.col(0);
}

double TeacherModel::label_rms() const { return std::sqrt(mu_bar * mu_bar + sigma_eps * sigma_eps); }

Eigen::VectorXd default_beta(Eigen::Index d) {
    Eigen::VectorXd b(d);
    const Eigen::Index half = d / 2;
    b.head(half).setConstant(-1.0);
    b.tail(d - half).setConstant(1.0);
    return b / b.norm();
}

TeacherModel make_teacher(const ActivationProfile& sigma_star, Eigen::VectorXd beta_star,
                          double sigma_eps, int order) {
    if (beta_star.size() == 0) throw ShapeError("teacher direction is empty");
    if (sigma_eps < 0.0) throw ConfigError("sigma_eps must be nonnegative");
    const double norm = beta_star.norm();
    if (!(norm > 0.0)) throw ConfigError("teacher direction has zero norm");
    TeacherModel t;
    t.beta_star = beta_star / norm;
    t.sigma_star = sigma_star;
    const auto c = teacher_profile(sigma_star, rule_for(sigma_star, order));
    t.mu0_star = c.mu0_star;
    t.mu1_star = c.mu1_star;
    t.mu2_star = c.mu2_star;
    t.mu_bar = c.mu_bar;
    t.sigma_eps = sigma_eps;
    return t;
}

DerivativeCoefficients derivative_coefficients(const ActivationProfile& act, int order) {
    const auto& rule = rule_for(act, order);
    const auto d = [&](double z) { return act.deriv(z); };
    const double b0 = gaussian_expectation(d, rule);
    const double second = gaussian_expectation([&](double z) { return d(z) * d(z); }, rule);
    return {b0, std::sqrt(std::max(0.0, second - b0 * b0))};
}

}  // namespace onestep
