#include "onestep/quadrature.hpp"

#include "onestep/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace onestep {

namespace {

// Orthonormal Hermite (probabilists') recurrence at x; returns sum p_k(x)^2
// for k < order and the derivative of p_order.
struct HermiteEval {
    double p;
    double dp;
    double sumsq;
};

HermiteEval hermite_orthonormal(int order, double x) {
    double p_prev = 0.0;
    double p = 1.0;
    double dp_prev = 0.0;
    double dp = 0.0;
    double sumsq = 0.0;
    for (int k = 0; k < order; ++k) {
        sumsq += p * p;
        const double a = std::sqrt(static_cast<double>(k + 1));
        const double b = std::sqrt(static_cast<double>(k));
        const double p_next = (x * p - b * p_prev) / a;
        const double dp_next = (p + x * dp - b * dp_prev) / a;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    return {p, dp, sumsq};
}

}  // namespace

QuadratureRule gauss_hermite(int order) {
    if (order < 1) throw ConfigError("quadrature order must be positive");
    // Golub-Welsch for the start, then Newton on the orthonormal recurrence.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
    Eigen::VectorXd sub(std::max(order - 1, 0));
    for (int k = 1; k < order; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);

    QuadratureRule rule;
    rule.order = order;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        double x = es.eigenvalues()(i);
        for (int it = 0; it < 8; ++it) {
            const auto h = hermite_orthonormal(order, x);
            if (h.dp == 0.0) break;
            const double step = h.p / h.dp;
            x -= step;
            if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 1.0 / hermite_orthonormal(order, x).sumsq;
    }
    // Symmetrize: the rule is exactly symmetric in exact arithmetic.
    for (int i = 0; i < order / 2; ++i) {
        const int j = order - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = rule.weights[j] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    double total = 0.0;
    for (double w : rule.weights) total += w;
    for (double& w : rule.weights) w /= total;
    return rule;
}

QuadratureRule gauss_legendre(int order, double a, double b) {
    if (order < 1) throw ConfigError("quadrature order must be positive");
    QuadratureRule rule;
    rule.order = order;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int i = 0; i < (order + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (int k = 1; k <= order; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
            }
            dp = order * (x * p0 - p1) / (x * x - 1.0);
            const double step = p0 / dp;
            x -= step;
            if (std::abs(step) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = mid - half * x;
        rule.nodes[order - 1 - i] = mid + half * x;
        rule.weights[i] = rule.weights[order - 1 - i] = half * w;
    }
    return rule;
}

QuadratureRule gaussian_piecewise(std::span<const double> kinks, int order, double half_width) {
    std::vector<double> cuts{-half_width};
    std::vector<double> inner(kinks.begin(), kinks.end());
    std::sort(inner.begin(), inner.end());
    for (double k : inner)
        if (k > -half_width && k < half_width) cuts.push_back(k);
    cuts.push_back(half_width);

    QuadratureRule rule;
    rule.order = order;
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (std::size_t piece = 0; piece + 1 < cuts.size(); ++piece) {
        const auto gl = gauss_legendre(order, cuts[piece], cuts[piece + 1]);
        for (int i = 0; i < order; ++i) {
            const double z = gl.nodes[i];
            rule.nodes.push_back(z);
            rule.weights.push_back(gl.weights[i] * norm * std::exp(-0.5 * z * z));
        }
    }
    return rule;
}

const QuadratureRule& gaussian_rule(int order, bool kinked) {
    static std::mutex mutex;
    static std::map<std::pair<int, bool>, QuadratureRule> cache;
    std::lock_guard lock(mutex);
    auto key = std::make_pair(order, kinked);
    auto it = cache.find(key);
    if (it == cache.end()) {
        const double zero = 0.0;
        auto rule = kinked ? gaussian_piecewise(std::span<const double>(&zero, 1), order)
                           : gauss_hermite(order);
        it = cache.emplace(key, std::move(rule)).first;
    }
    return it->second;
}

double gaussian_expectation(const std::function<double(double)>& f, const QuadratureRule& rule) {
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double v = f(rule.nodes[i]);
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "non-finite integrand at quadrature node z=" << rule.nodes[i];
            throw EvaluationError(msg.str());
        }
        sum += rule.weights[i] * v;
    }
    return sum;
}

}  // namespace onestep
