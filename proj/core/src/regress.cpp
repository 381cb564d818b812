#include "onestep/regress.hpp"

#include "onestep/errors.hpp"
#include "onestep/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace onestep {

Eigen::MatrixXd ck_features(const Eigen::MatrixXd& W, const Eigen::MatrixXd& X, const ActivationProfile& act) {
    if (X.cols() != W.rows()) throw ShapeError("X columns differ from W rows");
    Eigen::MatrixXd Phi = X * W;
    act.apply(Phi);
    Phi /= std::sqrt(static_cast<double>(W.cols()));
    return Phi;
}

Eigen::MatrixXd ge_features(const Eigen::MatrixXd& W, const Eigen::MatrixXd& X, double mu1, double mu2,
                            StreamId z_stream) {
    if (X.cols() != W.rows()) throw ShapeError("X columns differ from W rows");
    Eigen::MatrixXd Phi = mu1 * (X * W);
    if (mu2 != 0.0) {
        NormalStream z(z_stream);
        Phi += mu2 * z.matrix(X.rows(), W.cols());
    }
    Phi /= std::sqrt(static_cast<double>(W.cols()));
    return Phi;
}

RidgeSolution ridge_fit(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, double lambda) {
    if (Phi.rows() != y.size()) throw ShapeError("feature rows differ from label length");
    if (!(lambda >= 0.0)) throw ConfigError("ridge penalty must be nonnegative");
    const Eigen::Index n = Phi.rows();
    const Eigen::Index N = Phi.cols();
    RidgeSolution sol;
    sol.lambda = lambda;
    sol.lambda_tilde = lambda * static_cast<double>(n) / static_cast<double>(N);
    sol.dual = N > n;

    if (lambda == 0.0) {
        sol.pseudo_inverse = true;
        const Eigen::MatrixXd gram = sol.dual ? Eigen::MatrixXd(Phi * Phi.transpose())
                                              : Eigen::MatrixXd(Phi.transpose() * Phi);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        sol.condition = lo > 0.0 ? std::sqrt(hi / lo) : std::numeric_limits<double>::infinity();
        sol.a_hat = Phi.completeOrthogonalDecomposition().solve(y);
        return sol;
    }

    if (sol.dual) {
        Eigen::MatrixXd K = Phi * Phi.transpose();
        K.diagonal().array() += sol.lambda_tilde;
        Eigen::LLT<Eigen::MatrixXd> llt(K);
        if (llt.info() != Eigen::Success) throw SolverError("ridge Cholesky failed on the dual Gram");
        sol.a_hat = Phi.transpose() * llt.solve(y);
    } else {
        Eigen::MatrixXd K = Phi.transpose() * Phi;
        K.diagonal().array() += sol.lambda_tilde;
        Eigen::LLT<Eigen::MatrixXd> llt(K);
        if (llt.info() != Eigen::Success) throw SolverError("ridge Cholesky failed on the primal Gram");
        sol.a_hat = llt.solve(Phi.transpose() * y);
    }
    return sol;
}

double normal_equation_residual(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, const RidgeSolution& sol) {
    const Eigen::VectorXd rhs = Phi.transpose() * y;
    const Eigen::VectorXd lhs = Phi.transpose() * (Phi * sol.a_hat) + sol.lambda_tilde * sol.a_hat;
    return (lhs - rhs).norm() / rhs.norm();
}

RiskEstimate risk_mc(const Predictor& predictor, const TeacherModel& teacher, Eigen::Index n_test,
                     StreamId stream, Eigen::Index block) {
    if (n_test <= 0) throw ConfigError("n_test must be positive");
    const Eigen::Index d = teacher.beta_star.size();
    NormalStream rng(stream);
    double sum = 0.0;
    double sumsq = 0.0;
    for (Eigen::Index start = 0; start < n_test; start += block) {
        const Eigen::Index rows = std::min(block, n_test - start);
        const Eigen::MatrixXd X = rng.matrix(rows, d);
        const Eigen::VectorXd err = (predictor(X) - teacher.eval(X)).array().square();
        sum += err.sum();
        sumsq += err.squaredNorm();
    }
    const double n = static_cast<double>(n_test);
    RiskEstimate r;
    r.n_test = n_test;
    r.mean = sum / n;
    if (n_test > 1) {
        const double var = std::max(0.0, (sumsq - n * r.mean * r.mean) / (n - 1.0));
        r.std_err = std::sqrt(var / n);
    }
    return r;
}

Predictor ck_predictor(const Eigen::MatrixXd& W, const Eigen::VectorXd& a_hat, const ActivationProfile& act) {
    return [W, a_hat, act](const Eigen::MatrixXd& X) -> Eigen::VectorXd {
        return ck_features(W, X, act) * a_hat;
    };
}

Predictor ge_predictor(const Eigen::MatrixXd& W, const Eigen::VectorXd& a_hat, double mu1, double mu2,
                       StreamId z_stream) {
    auto rng = std::make_shared<NormalStream>(z_stream);
    return [W, a_hat, mu1, mu2, rng](const Eigen::MatrixXd& X) -> Eigen::VectorXd {
        Eigen::MatrixXd Phi = mu1 * (X * W);
        if (mu2 != 0.0) Phi += mu2 * rng->matrix(X.rows(), W.cols());
        return Phi * a_hat / std::sqrt(static_cast<double>(W.cols()));
    };
}

double ge_risk_closed(const Eigen::MatrixXd& W, const Eigen::VectorXd& a_hat, double mu1, double mu2,
                      const TeacherModel& teacher) {
    if (W.cols() != a_hat.size()) throw ShapeError("a_hat length differs from W columns");
    const double N = static_cast<double>(W.cols());
    const Eigen::VectorXd v = W * a_hat;
    const double proj = teacher.beta_star.dot(v);
    const double lin = teacher.mu1_star - mu1 / std::sqrt(N) * proj;
    const double quad = (mu1 * mu1 * (v.squaredNorm() - proj * proj) + mu2 * mu2 * a_hat.squaredNorm()) / N;
    return lin * lin + teacher.mu2_star * teacher.mu2_star + quad;
}

RiskDecompositionGE ge_risk_decomposition(const Eigen::MatrixXd& W, const Eigen::MatrixXd& Phi_bar,
                                          const Eigen::VectorXd& f_star, double lambda, double mu1,
                                          double mu2, const TeacherModel& teacher) {
    const Eigen::Index n = Phi_bar.rows();
    const Eigen::Index Nn = Phi_bar.cols();
    if (W.cols() != Nn || f_star.size() != n) throw ShapeError("decomposition inputs disagree in shape");
    const double N = static_cast<double>(Nn);
    const double lt = lambda * static_cast<double>(n) / N;
    const Eigen::MatrixXd S_hat = Phi_bar.transpose() * Phi_bar;
    Eigen::MatrixXd shifted = S_hat;
    shifted.diagonal().array() += lt;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) throw SolverError("decomposition Cholesky failed");
    const Eigen::MatrixXd R = llt.solve(Eigen::MatrixXd::Identity(Nn, Nn));

    Eigen::MatrixXd S_bar = mu1 * mu1 * (W.transpose() * W);
    S_bar.diagonal().array() += mu2 * mu2;
    S_bar /= N;

    const Eigen::VectorXd v = R * (Phi_bar.transpose() * f_star);
    RiskDecompositionGE out;
    out.B1 = teacher.mu1_star * teacher.mu1_star + teacher.mu2_star * teacher.mu2_star -
             2.0 * mu1 * teacher.mu1_star / std::sqrt(N) * teacher.beta_star.dot(W * v);
    out.B2 = v.dot(S_bar * v);
    const Eigen::MatrixXd RSR = R * S_hat * R;
    out.V = teacher.sigma_eps * teacher.sigma_eps * (RSR.cwiseProduct(S_bar)).sum();
    return out;
}

double linear_ridge_risk(double lambda, double psi1, double mu1_star, double mu2_star, double sigma_eps) {
    if (!(lambda > 0.0)) throw DomainError("linear_ridge_risk needs lambda > 0");
    if (!(psi1 > 0.0)) throw DomainError("linear_ridge_risk needs psi1 > 0");
    const double ratio = 1.0 / psi1;
    const double mb = mp_companion(-lambda, ratio);
    const double mbp = mp_companion_derivative(-lambda, ratio);
    const double noise = sigma_eps * sigma_eps + mu2_star * mu2_star;
    const double g = mbp / (mb * mb);
    return g * mu1_star * mu1_star / ((1.0 + mb) * (1.0 + mb)) + noise * (g - 1.0) + mu2_star * mu2_star;
}

OptimalRidge optimal_linear_ridge(double psi1, double mu1_star, double mu2_star, double sigma_eps) {
    if (mu1_star == 0.0) throw DomainError("optimal_linear_ridge needs mu1* != 0");
    const double noise = sigma_eps * sigma_eps + mu2_star * mu2_star;
    OptimalRidge r;
    r.lambda = noise / (psi1 * mu1_star * mu1_star);
    if (!(r.lambda > 0.0)) throw DomainError("optimal penalty is zero (no noise and linear teacher)");
    r.risk = noise / (r.lambda * mp_companion(-r.lambda, 1.0 / psi1)) - sigma_eps * sigma_eps;
    return r;
}

double ntk_equiv_risk(double lambda, double psi1, double b0, double b1, const TeacherModel& teacher) {
    if (b0 == 0.0) return teacher.mu1_star * teacher.mu1_star + teacher.mu2_star * teacher.mu2_star;
    const double mapped = (lambda + b1 * b1) / (b0 * b0 * psi1);
    return linear_ridge_risk(mapped, psi1, teacher.mu1_star, teacher.mu2_star, teacher.sigma_eps);
}

double input_ridge_risk(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                        const TeacherModel& teacher) {
    if (X.rows() != y.size()) throw ShapeError("X rows differ from label length");
    Eigen::MatrixXd K = X.transpose() * X;
    K.diagonal().array() += lambda * static_cast<double>(X.rows());
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) throw SolverError("input ridge Cholesky failed");
    const Eigen::VectorXd theta = llt.solve(X.transpose() * y);
    return teacher.mu_bar * teacher.mu_bar - 2.0 * teacher.mu1_star * teacher.beta_star.dot(theta) +
           theta.squaredNorm();
}

RiskEstimate inner_product_kernel_ridge_mc(const std::function<double(double)>& g, const Eigen::MatrixXd& X,
                                           const Eigen::VectorXd& y, double lambda, const TeacherModel& teacher,
                                           Eigen::Index n_test, StreamId test_stream) {
    if (X.rows() != y.size()) throw ShapeError("X rows differ from label length");
    const double d = static_cast<double>(X.cols());
    Eigen::MatrixXd K = (X * X.transpose() / d).unaryExpr(g);
    K.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) throw SolverError("kernel ridge Cholesky failed");
    const Eigen::VectorXd coef = llt.solve(y);
    const Predictor pred = [&](const Eigen::MatrixXd& T) -> Eigen::VectorXd {
        return (T * X.transpose() / d).unaryExpr(g) * coef;
    };
    return risk_mc(pred, teacher, n_test, test_stream);
}

double kta(const Eigen::MatrixXd& K, const Eigen::VectorXd& y) {
    if (K.rows() != y.size() || K.cols() != y.size()) throw ShapeError("kernel and labels disagree in size");
    const double denom = K.norm() * y.squaredNorm();
    if (denom == 0.0) return 0.0;
    return y.dot(K * y) / denom;
}

AlignmentComponents alignment_components(const Predictor& predictor, const TeacherModel& teacher,
                                         Eigen::Index n_mc, StreamId stream) {
    NormalStream rng(stream);
    const Eigen::MatrixXd X = rng.matrix(n_mc, teacher.beta_star.size());
    const Eigen::VectorXd proj = X * teacher.beta_star;
    const Eigen::VectorXd f_hat = predictor(X);
    const Eigen::VectorXd lin = teacher.mu1_star * proj;
    const Eigen::VectorXd nonlin = (teacher.eval(X).array() - teacher.mu0_star).matrix() - lin;
    AlignmentComponents out;
    const double n = static_cast<double>(n_mc);
    auto component = [&](const Eigen::VectorXd& part, double norm, double& value, double& se) {
        if (norm == 0.0) return;
        const Eigen::ArrayXd prod = part.array() * f_hat.array() / norm;
        value = prod.mean();
        if (n_mc > 1) se = std::sqrt((prod - value).square().sum() / (n - 1.0) / n);
    };
    component(lin, std::abs(teacher.mu1_star), out.linear, out.linear_std_err);
    component(nonlin, teacher.mu2_star, out.nonlinear, out.nonlinear_std_err);
    return out;
}

}  // namespace onestep
