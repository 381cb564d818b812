#include "onestep/simulate.hpp"

#include "onestep/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace onestep {

namespace {

void check_rows(Eigen::Index rows, Eigen::Index cols) {
    if (rows <= 0 || cols <= 0) throw ShapeError("matrix dimensions must be positive");
    if (rows > std::numeric_limits<Eigen::Index>::max() / cols)
        throw ShapeError("rows * cols overflows the index type");
}

// Row scale by r, column scale by c.
void scale_rows_cols(Eigen::MatrixXd& M, const Eigen::VectorXd& r, const Eigen::VectorXd& c) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) M.col(j).array() *= r.array() * c(j);
}

}  // namespace

double ExperimentConfig::eta() const { return eta_bar * std::pow(static_cast<double>(N), alpha); }

void ExperimentConfig::validate() const {
    std::ostringstream bad;
    if (n <= 0) bad << " n must be positive;";
    if (d <= 0) bad << " d must be positive;";
    if (N <= 0) bad << " N must be positive;";
    if (!(alpha >= 0.0 && alpha <= 0.5)) bad << " alpha must lie in [0, 0.5];";
    if (!(lambda >= 0.0)) bad << " lambda must be nonnegative;";
    if (!(eta_bar >= 0.0)) bad << " eta_bar must be nonnegative;";
    if (replicas <= 0) bad << " replicas must be positive;";
    if (n_test <= 0) bad << " n_test must be positive;";
    const auto msg = bad.str();
    if (!msg.empty()) throw ConfigError("invalid experiment config:" + msg);
}

Dataset sample_dataset(const TeacherModel& teacher, Eigen::Index rows, StreamId stream) {
    const Eigen::Index d = teacher.beta_star.size();
    check_rows(rows, d);
    NormalStream rng(stream);
    Dataset data;
    data.X = rng.matrix(rows, d);
    data.f_star = teacher.eval(data.X);
    data.eps = teacher.sigma_eps * rng.vector(rows);
    if (teacher.sigma_eps == 0.0) data.eps.setZero();
    data.y = data.f_star + data.eps;
    return data;
}

Dataset sample_dataset(const ExperimentConfig& cfg, const TeacherModel& teacher, std::uint64_t replica,
                       StreamRole role) {
    if (teacher.beta_star.size() != cfg.d) throw ShapeError("teacher dimension differs from d");
    const Eigen::Index rows = role == StreamRole::test ? cfg.n_test : cfg.n;
    return sample_dataset(teacher, rows, StreamId{cfg.seed, replica, role, 0});
}

NetworkState init_network(const ExperimentConfig& cfg, std::uint64_t replica) {
    check_rows(cfg.d, cfg.N);
    NetworkState net;
    NormalStream w(StreamId{cfg.seed, replica, StreamRole::first_layer, 0});
    NormalStream a(StreamId{cfg.seed, replica, StreamRole::second_layer, 0});
    net.W = w.matrix(cfg.d, cfg.N) / std::sqrt(static_cast<double>(cfg.d));
    net.a = a.vector(cfg.N) / std::sqrt(static_cast<double>(cfg.N));
    return net;
}

Eigen::VectorXd forward(const NetworkState& net, const Eigen::MatrixXd& X, const ActivationProfile& act) {
    if (X.cols() != net.W.rows()) throw ShapeError("X columns differ from W rows");
    if (net.a.size() != net.W.cols()) throw ShapeError("a length differs from W columns");
    Eigen::MatrixXd H = X * net.W;
    act.apply(H);
    return H * net.a / std::sqrt(static_cast<double>(net.W.cols()));
}

Eigen::MatrixXd gradient(const NetworkState& net, const Dataset& data, const ActivationProfile& act) {
    if (data.X.cols() != net.W.rows()) throw ShapeError("X columns differ from W rows");
    const double n = static_cast<double>(data.X.rows());
    const double sqrtN = std::sqrt(static_cast<double>(net.W.cols()));
    Eigen::MatrixXd H = data.X * net.W;
    Eigen::MatrixXd S = H;
    act.apply(S);
    const Eigen::VectorXd resid = data.y - S * net.a / sqrtN;
    S = H;
    act.apply_deriv(S);
    scale_rows_cols(S, resid, net.a);
    Eigen::MatrixXd G = data.X.transpose() * S / (n * sqrtN);
    if (!G.allFinite()) throw EvaluationError("gradient has non-finite entries");
    return G;
}

NetworkState gradient_step(const NetworkState& net, const Dataset& data, const ActivationProfile& act,
                           double eta) {
    if (!(eta >= 0.0)) throw ConfigError("learning rate must be nonnegative");
    NetworkState next = net;
    if (eta > 0.0) next.W += eta * std::sqrt(static_cast<double>(net.W.cols())) * gradient(net, data, act);
    next.t = net.t + 1;
    return next;
}

NetworkState multi_step(NetworkState net, const Dataset& data, const ActivationProfile& act, double eta,
                        int steps) {
    if (steps < 0) throw ConfigError("step count must be nonnegative");
    for (int s = 0; s < steps; ++s) net = gradient_step(net, data, act, eta);
    return net;
}

double empirical_loss(const NetworkState& net, const Dataset& data, const ActivationProfile& act) {
    const Eigen::VectorXd r = data.y - forward(net, data.X, act);
    return 0.5 * r.squaredNorm() / static_cast<double>(data.X.rows());
}

double operator_norm(const Eigen::MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    const Eigen::MatrixXd gram = M.rows() <= M.cols() ? Eigen::MatrixXd(M * M.transpose())
                                                      : Eigen::MatrixXd(M.transpose() * M);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues()(es.eigenvalues().size() - 1)));
}

MatrixNorms matrix_norms(const Eigen::MatrixXd& M) {
    MatrixNorms norms;
    norms.op = operator_norm(M);
    norms.frobenius = M.norm();
    norms.two_inf = M.size() == 0 ? 0.0 : M.rowwise().norm().maxCoeff();
    return norms;
}

GradientDecomposition decompose_gradient(const NetworkState& net0, const Dataset& data,
                                         const ActivationProfile& act, const TeacherModel& teacher,
                                         bool full) {
    if (data.X.cols() != net0.W.rows()) throw ShapeError("X columns differ from W rows");
    const double n = static_cast<double>(data.X.rows());
    const double N = static_cast<double>(net0.W.cols());
    const double sqrtN = std::sqrt(N);
    const auto& X = data.X;
    const auto& a = net0.a;

    Eigen::MatrixXd H = X * net0.W;
    Eigen::MatrixXd S = H;
    act.apply(S);
    const Eigen::VectorXd pre = S * a;  // s(XW) a = sqrt(N) f
    act.apply_deriv(H);                 // H now holds s'(XW)

    S = H;
    scale_rows_cols(S, data.y - pre / sqrtN, a);
    const Eigen::MatrixXd G0 = X.transpose() * S / (n * sqrtN);

    const double c = act.mu1 / (n * sqrtN);
    const Eigen::VectorXd Xb = X * teacher.beta_star;
    const Eigen::VectorXd u_lin = X.transpose() * (teacher.mu1_star * Xb);
    const Eigen::VectorXd u_rest = X.transpose() * (data.y - teacher.mu1_star * Xb);
    const Eigen::MatrixXd A1 = c * u_lin * a.transpose();
    const Eigen::MatrixXd A2 = c * u_rest * a.transpose();
    const Eigen::MatrixXd A = A1 + A2;

    GradientDecomposition out;
    out.G0 = matrix_norms(G0);
    out.A = matrix_norms(A);
    out.A1 = matrix_norms(A1);
    out.A2 = matrix_norms(A2);
    out.relative_residual = operator_norm(G0 - A) / out.G0.op;

    if (full) {
        S = H.array() - act.mu1;
        scale_rows_cols(S, data.y, a);
        const Eigen::MatrixXd B = X.transpose() * S / (n * sqrtN);
        S = H;
        scale_rows_cols(S, pre, a);
        const Eigen::MatrixXd C = X.transpose() * S / (n * N);
        out.B = matrix_norms(B);
        out.C = matrix_norms(C);
        out.reconstruction_error = (A + B - C - G0).norm() / out.G0.frobenius;
        out.has_remainder = true;
    }
    return out;
}

}  // namespace onestep
