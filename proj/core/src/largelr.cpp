#include "onestep/largelr.hpp"

#include "onestep/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace onestep {

namespace {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

double smoothed_activation(double c, const ActivationProfile& act, int order) {
    switch (act.kind) {
        case ActivationKind::erf: return std::erf(c / std::sqrt(3.0)) - act.shift;
        case ActivationKind::relu: return c * normal_cdf(c) + normal_pdf(c) - act.shift;
        case ActivationKind::identity: return c - act.shift;
        default: break;
    }
    const auto& rule = gaussian_rule(order, false);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * act.eval(c + rule.nodes[i]);
    return sum;
}

double tau_of_kappa(double kappa, const ActivationProfile& student, const ActivationProfile& teacher, int order) {
    const auto& rule = rule_for(teacher, order);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double x = rule.nodes[i];
        const double diff = teacher.eval(x) - smoothed_activation(kappa * x, student, order);
        sum += rule.weights[i] * diff * diff;
    }
    return sum;
}

TauStarResult tau_star(const ActivationProfile& student, const ActivationProfile& teacher, const TauSearch& search,
                       int order) {
    if (!(search.step > 0.0) || !(search.hi > search.lo)) throw ConfigError("tau* scan needs lo < hi and step > 0");
    TauStarResult res;
    if (!student.bounded())
        res.warnings.push_back("student activation '" + student.name + "' is unbounded");
    if (!student.centered) res.warnings.push_back("student activation is not centered");

    const auto tau = [&](double k) { return tau_of_kappa(k, student, teacher, order); };
    const int count = static_cast<int>(std::floor((search.hi - search.lo) / search.step + 0.5)) + 1;
    std::size_t best = 0;
    for (int k = 0; k < count; ++k) {
        const double kappa = search.lo + k * search.step;
        const double v = tau(kappa);
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "tau(kappa) is not finite at kappa=" << kappa;
            throw EvaluationError(msg.str());
        }
        res.scan.emplace_back(kappa, v);
        if (v < res.scan[best].second) best = res.scan.size() - 1;
    }

    if (best == 0 || best + 1 == res.scan.size()) {
        res.achieved = false;
        res.kappa_star = res.scan[best].first;
        res.tau_star = res.scan[best].second;
    } else {
        // Golden-section search on the bracketing grid cell pair.
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = res.scan[best - 1].first;
        double b = res.scan[best + 1].first;
        double c = b - g * (b - a);
        double d = a + g * (b - a);
        double fc = tau(c);
        double fd = tau(d);
        while (b - a > search.tol) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = tau(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = tau(d);
            }
        }
        res.kappa_star = 0.5 * (a + b);
        res.tau_star = tau(res.kappa_star);
        if (res.scan[best].second < res.tau_star) {
            res.kappa_star = res.scan[best].first;
            res.tau_star = res.scan[best].second;
        }
        res.achieved = true;
    }
    const double denom = search.eta_bar * student.mu1 * teacher_profile(teacher, rule_for(teacher, order)).mu1_star;
    res.alpha_star = denom != 0.0 ? res.kappa_star / denom : std::numeric_limits<double>::quiet_NaN();
    return res;
}

OracleLayer build_oracle_layer(const Eigen::VectorXd& a, double alpha, double r) {
    if (!(r > 0.0 && r < 0.5)) throw ConfigError("oracle layer exponent r must lie in (0, 1/2)");
    const Eigen::Index N = a.size();
    if (N == 0) throw ShapeError("empty second layer");
    const double sqrtN = std::sqrt(static_cast<double>(N));
    const double radius = std::pow(static_cast<double>(N), -r);
    OracleLayer layer;
    layer.r = r;
    layer.alpha = alpha;
    for (Eigen::Index i = 0; i < N; ++i)
        if (std::abs(sqrtN * a(i) - alpha) <= radius) layer.subset.push_back(i);
    layer.N_r = static_cast<Eigen::Index>(layer.subset.size());
    if (layer.N_r == 0) {
        std::ostringstream msg;
        msg << "oracle layer is empty at alpha=" << alpha << ", r=" << r << ", N=" << N
            << "; try a smaller r or a larger eta_bar";
        throw ConfigError(msg.str());
    }
    layer.a_tilde = Eigen::VectorXd::Zero(N);
    for (Eigen::Index i : layer.subset) layer.a_tilde(i) = sqrtN / static_cast<double>(layer.N_r);
    return layer;
}

OracleReport oracle_risk_experiment(const ExperimentConfig& cfg, const ActivationProfile& student,
                                    const TeacherModel& teacher, const TauStarResult& ts, std::uint64_t replica,
                                    const OracleOptions& opt) {
    if (teacher.mu0_star != 0.0 && std::abs(teacher.mu0_star) > 1e-10)
        throw ConfigError("large learning-rate experiment needs a centered teacher (mu0* = 0)");
    OracleReport rep;
    const double N = static_cast<double>(cfg.N);
    const double n = static_cast<double>(cfg.n);
    rep.eta = cfg.eta_bar * std::sqrt(N);
    rep.ridge_lambda = N * std::pow(n, -opt.penalty_exponent);
    rep.tau_star = ts.tau_star;
    rep.kernel_lb = teacher.mu2_star * teacher.mu2_star;
    rep.alpha_star = ts.kappa_star / (cfg.eta_bar * student.mu1 * teacher.mu1_star);

    const auto train = sample_dataset(cfg, teacher, replica, StreamRole::train);
    const auto net0 = init_network(cfg, replica);
    const auto net1 = gradient_step(net0, train, student, rep.eta);
    const StreamId test{cfg.seed, replica, StreamRole::test, 0};

    try {
        const auto layer = build_oracle_layer(net0.a, rep.alpha_star, opt.r);
        rep.N_r = layer.N_r;
        const Eigen::VectorXd coef = layer.a_tilde;
        const Eigen::MatrixXd W1 = net1.W;
        rep.oracle_risk = risk_mc(ck_predictor(W1, coef, student), teacher, cfg.n_test, test);
    } catch (const ConfigError&) {
        rep.N_r = 0;
        rep.oracle_risk.mean = std::numeric_limits<double>::quiet_NaN();
        rep.oracle_risk.std_err = std::numeric_limits<double>::quiet_NaN();
        rep.oracle_risk.n_test = cfg.n_test;
    }

    const auto fresh = sample_dataset(cfg, teacher, replica, StreamRole::fresh);
    const auto fit = ridge_fit(ck_features(net1.W, fresh.X, student), fresh.y, rep.ridge_lambda);
    rep.ridge_risk = risk_mc(ck_predictor(net1.W, fit.a_hat, student), teacher, cfg.n_test, test);
    return rep;
}

}  // namespace onestep
