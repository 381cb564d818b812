#pragma once

#include <functional>
#include <span>
#include <vector>

namespace onestep {

// Nodes and weights for E_{z~N(0,1)} or for a plain interval integral,
// depending on how the rule was built.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    int order = 0;
};

// Probabilists' Gauss-Hermite: weights sum to 1, exact for E z^k, k <= 2*order-1.
QuadratureRule gauss_hermite(int order);

// Gauss-Legendre on [a, b] (weights sum to b - a).
QuadratureRule gauss_legendre(int order, double a = -1.0, double b = 1.0);

// Gaussian-measure rule split at the given kink points: Gauss-Legendre of the
// given order on each piece of [-half_width, half_width], weights times phi(z).
QuadratureRule gaussian_piecewise(std::span<const double> kinks, int order,
                                  double half_width = 12.0);

// Cached rule used throughout: Gauss-Hermite of the given order, or the
// piecewise rule when kinks are present.
const QuadratureRule& gaussian_rule(int order, bool kinked = false);

inline constexpr int kDefaultQuadratureOrder = 200;

// Sum_i w_i f(z_i). Throws EvaluationError naming the node on a non-finite value.
double gaussian_expectation(const std::function<double(double)>& f, const QuadratureRule& rule);

}  // namespace onestep
