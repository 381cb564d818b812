#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

namespace onestep {

// Coefficients entering the asymptotic formulas.
struct TheoryParams {
    double mu1 = 0.0;
    double mu2 = 0.0;
    double mu1_star = 0.0;
    double mu2_star = 0.0;
    double mu_bar = 0.0;  // label root-mean-square used in theta1
};

struct StieltjesPair {
    double z = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
    double m1p = 0.0;  // dm1/dz
    double m2p = 0.0;
    std::array<double, 2> residuals{};
    int iterations = 0;
    bool bracketed = false;  // fell back from the damped iteration
};

// Residuals of the two self-consistent equations at (m1, m2), each divided
// by the sum of magnitudes of its terms.
std::array<double, 2> fixed_point_residuals(double m1, double m2, double z, double psi1, double psi2,
                                            double mu1, double mu2);

// m2 given m1 from the second equation.
double m2_given_m1(double m1, double z, double psi1, double psi2, double mu1);

// m1, m2 at z > 0 with derivatives by Richardson-extrapolated central
// differences at step 1e-5 z.
StieltjesPair solve_m1_m2(double z, double psi1, double psi2, double mu1, double mu2);

struct TauTable {
    std::array<double, 12> tau{};
    // 1-based, matching the usual numbering.
    double operator()(int i) const { return tau.at(static_cast<std::size_t>(i - 1)); }
};

TauTable tau_table(double eta, double lambda, double psi1, double psi2, const TheoryParams& p,
                   const StieltjesPair& pair);

enum class Regime { general, large_sample, large_width };

struct LargeSampleAux {
    double s1 = 0.0;
    double s2 = 0.0;
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
};

struct DeltaResult {
    double delta = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    Regime regime = Regime::general;
    std::optional<StieltjesPair> pair;
    std::optional<TauTable> taus;
    std::optional<LargeSampleAux> aux;
};

// Risk improvement after one step with eta = Theta(1); z = lambda psi1/psi2.
DeltaResult delta(double eta, double lambda, double psi1, double psi2, const TheoryParams& p);

// psi1 -> infinity limit.
DeltaResult delta_large_sample(double eta, double lambda, double psi2, const TheoryParams& p);

struct DecayReport {
    std::vector<double> psi2;
    std::vector<double> values;
    double slope = 0.0;  // log-log fit over the positive values
    bool decayed = false;  // last < first / 10
};

DecayReport delta_large_width_check(double eta, double lambda, double psi1, const TheoryParams& p,
                                    std::vector<double> psi2_grid = {2.0, 8.0, 32.0, 128.0, 512.0});

// Integral of f against MP(psi): Gauss-Legendre after x = l- + (l+ - l-) sin^2 u,
// plus f(0) times the atom.
double mp_quadrature(const std::function<double(double)>& f, double psi, int order = 200);

}  // namespace onestep
