#include "onestep/theory.hpp"

#include "onestep/errors.hpp"
#include "onestep/quadrature.hpp"
#include "onestep/spectra.hpp"
#include "onestep/stats.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

namespace onestep {

namespace {

constexpr double kDamping = 0.5;
constexpr int kMaxIterations = 100000;
constexpr double kIterationTolerance = 1e-12;
constexpr double kCertifyTolerance = 1e-10;
constexpr int kScanPoints = 4096;

struct PointSolution {
    double m1 = 0.0;
    double m2 = 0.0;
    int iterations = 0;
    bool bracketed = false;
};

struct Reduced {
    double z, psi1, psi2, mu1, mu2;
    double r() const { return psi1 / psi2; }
    double denom(double m) const { return 1.0 + psi1 * mu1 * mu1 * m * (1.0 - r() + r() * z * m); }
    // First equation with m2 = m1/D substituted, cleared of denominators (a quartic in m1).
    // Q(0) = -1 and Q(1/z) > 0; Q = -1/psi1 wherever D = 0.
    double quartic(double m) const {
        const double D = denom(m);
        return m * (1.0 - r() + r() * z * m) * (mu2 * mu2 * D + mu1 * mu1) + (z * m - 1.0) * D;
    }
    double map(double m) const {
        return (1.0 - m * (1.0 - r() + r() * z * m) * (mu2 * mu2 + mu1 * mu1 / denom(m))) / z;
    }
    // Zeros of D inside (0, 1/z), ascending.
    std::vector<double> denom_zeros() const {
        const double a = psi1 * mu1 * mu1 * r() * z;
        const double b = psi1 * mu1 * mu1 * (1.0 - r());
        const double disc = b * b - 4.0 * a;
        std::vector<double> out;
        if (disc < 0.0) return out;
        const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
        for (double x : {q / a, 1.0 / q})
            if (x > 0.0 && x < 1.0 / z) out.push_back(x);
        std::sort(out.begin(), out.end());
        return out;
    }
};

double max_residual(const std::array<double, 2>& r) { return std::max(std::abs(r[0]), std::abs(r[1])); }

PointSolution solve_point(double z, double psi1, double psi2, double mu1, double mu2) {
    if (mu1 == 0.0) {
        if (mu2 == 0.0) throw DomainError("solve_m1_m2: mu1 = mu2 = 0 gives no features");
        const double m = mp_stieltjes(-z / (mu2 * mu2), psi1 / psi2) / (mu2 * mu2);
        return {m, m, 0, false};
    }
    const Reduced eq{z, psi1, psi2, mu1, mu2};
    const double upper = 1.0 / z;

    double m = 1.0 / (z + mu1 * mu1 + mu2 * mu2);
    double omega = kDamping;
    double prev_step = 0.0;
    for (int it = 1; it <= kMaxIterations; ++it) {
        if (!(m > 0.0 && m < upper) || !(eq.denom(m) > 0.0)) break;
        const double m2 = m / eq.denom(m);
        if (max_residual(fixed_point_residuals(m, m2, z, psi1, psi2, mu1, mu2)) < kIterationTolerance)
            return {m, m2, it, false};
        const double step = omega * (eq.map(m) - m);
        if (!std::isfinite(step)) break;
        if (step * prev_step < 0.0) omega *= 0.5;
        if (omega < 1e-8) break;
        prev_step = step;
        m += step;
    }

    // Bracketed fallback. D > 0 on (0, a) and (b, 1/z) where a <= b are the zeros of D (if any).
    // Q is negative at 0, a and b and positive at 1/z, so (b, 1/z) holds a root.
    const auto zeros = eq.denom_zeros();
    const double lo = zeros.empty() ? 0.0 : zeros.back();
    const auto f = [&](double x) { return eq.quartic(x); };
    const auto tol = boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 1);
    std::uintmax_t iters = 400;
    const auto [x_lo, x_hi] = boost::math::tools::toms748_solve(f, lo, upper, f(lo), f(upper), tol, iters);
    const double root = 0.5 * (x_lo + x_hi);
    if (!(eq.denom(root) > 0.0)) {
        std::ostringstream msg;
        msg << "solve_m1_m2: no admissible root at z=" << z << ", psi1=" << psi1 << ", psi2=" << psi2;
        throw SolverError(msg.str());
    }
    // A second admissible branch could only sit in (0, a), entered and left with Q < 0.
    if (!zeros.empty()) {
        const double a = zeros.front();
        for (int k = 1; k < kScanPoints; ++k) {
            if (f(a * k / kScanPoints) > 0.0) {
                std::ostringstream msg;
                msg << "solve_m1_m2: second admissible branch below m1=" << a << " at z=" << z;
                throw BranchError(msg.str());
            }
        }
    }
    const double m1 = root;
    return {m1, m1 / eq.denom(m1), kMaxIterations, true};
}

}  // namespace

double m2_given_m1(double m1, double z, double psi1, double psi2, double mu1) {
    const double r = psi1 / psi2;
    return m1 / (1.0 + psi1 * mu1 * mu1 * m1 * (1.0 + r * (z * m1 - 1.0)));
}

std::array<double, 2> fixed_point_residuals(double m1, double m2, double z, double psi1, double psi2,
                                            double mu1, double mu2) {
    const double a1 = (m1 - m2) * (mu2 * mu2 * m1 + mu1 * mu1 * m2) / psi1;
    const double b = mu1 * mu1 * m1 * m2 * (z * m1 - 1.0);
    const double a2 = psi2 / psi1 * (mu1 * mu1 * m1 * m2 + (m2 - m1) / psi1);
    const double s1 = std::abs(a1) + std::abs(b);
    const double s2 = std::abs(a2) + std::abs(b);
    return {s1 > 0.0 ? (a1 + b) / s1 : 0.0, s2 > 0.0 ? (a2 + b) / s2 : 0.0};
}

StieltjesPair solve_m1_m2(double z, double psi1, double psi2, double mu1, double mu2) {
    if (!(z > 0.0)) throw DomainError("solve_m1_m2 needs z > 0");
    if (!(psi1 > 0.0 && psi2 > 0.0)) throw DomainError("solve_m1_m2 needs psi1, psi2 > 0");
    const auto centre = solve_point(z, psi1, psi2, mu1, mu2);
    StieltjesPair p;
    p.z = z;
    p.m1 = centre.m1;
    p.m2 = centre.m2;
    p.iterations = centre.iterations;
    p.bracketed = centre.bracketed;
    p.residuals = fixed_point_residuals(p.m1, p.m2, z, psi1, psi2, mu1, mu2);
    if (!(p.m1 > 0.0 && p.m2 > 0.0) || !(z * p.m1 < 1.0)) {
        std::ostringstream msg;
        msg << "solve_m1_m2: solution left the admissible cone (m1=" << p.m1 << ", m2=" << p.m2 << ")";
        throw BranchError(msg.str());
    }
    if (max_residual(p.residuals) >= kCertifyTolerance) {
        std::ostringstream msg;
        msg << "solve_m1_m2: residuals " << p.residuals[0] << ", " << p.residuals[1] << " at z=" << z;
        throw SolverError(msg.str());
    }

    const double h = 1e-5 * z;
    const auto at = [&](double zz) { return solve_point(zz, psi1, psi2, mu1, mu2); };
    const auto a = at(z + h), b = at(z - h), c = at(z + 0.5 * h), e = at(z - 0.5 * h);
    const double d1_coarse = (a.m1 - b.m1) / (2.0 * h);
    const double d1_fine = (c.m1 - e.m1) / h;
    const double d2_coarse = (a.m2 - b.m2) / (2.0 * h);
    const double d2_fine = (c.m2 - e.m2) / h;
    p.m1p = (4.0 * d1_fine - d1_coarse) / 3.0;
    p.m2p = (4.0 * d2_fine - d2_coarse) / 3.0;
    return p;
}

TauTable tau_table(double eta, double lambda, double psi1, double psi2, const TheoryParams& p,
                   const StieltjesPair& s) {
    const auto th = theta_params(eta, p.mu1, p.mu1_star, p.mu_bar, psi1);
    const double t1sq = th.theta1 * th.theta1;
    const double t2 = th.theta2;
    const double r = psi1 / psi2;
    const double mu1sq = p.mu1 * p.mu1;
    const double ms = p.mu1_star;
    const double shrink = 1.0 - lambda * r * s.m2;
    const double ratio = s.m2 / s.m1;
    const double second = 1.0 - 2.0 * ratio - s.m2p / (s.m1 * s.m1);
    const double scale = p.mu1 * r * lambda * s.m1;

    TauTable t;
    t.tau[0] = r * s.m1 + (1.0 / r - 1.0) / lambda;
    t.tau[1] = mu1sq * t1sq * r * shrink;
    t.tau[2] = mu1sq * t1sq * r;
    t.tau[3] = ms * t2;
    t.tau[4] = mu1sq * ms * t2 * r;
    t.tau[5] = ms * t2 * (1.0 - ratio);
    t.tau[6] = mu1sq * ms * t2 * r * shrink;
    t.tau[7] = (s.m1 + r * lambda * s.m1p) / (scale * scale);
    t.tau[8] = t1sq * (1.0 - ratio);
    t.tau[9] = t1sq;
    t.tau[10] = t1sq * second;
    t.tau[11] = ms * t2 * second;
    return t;
}

DeltaResult delta(double eta, double lambda, double psi1, double psi2, const TheoryParams& p) {
    DeltaResult out;
    out.regime = Regime::general;
    if (p.mu1 == 0.0) return out;
    if (!(lambda > 0.0)) throw DomainError("delta needs lambda > 0");
    const auto pair = solve_m1_m2(lambda * psi1 / psi2, psi1, psi2, p.mu1, p.mu2);
    const auto t = tau_table(eta, lambda, psi1, psi2, p, pair);
    const double D = t(1) * (t(2) - t(3)) - 1.0;
    const double diff = t(7) - t(5);
    const double lin = t(4) + t(12) - 2.0 * t(6);
    out.c1 = t(1) * diff * lin / D;
    out.c2 = -(t(1) * diff * lin + diff * diff * t(8)) / (D * D);
    out.delta = out.c1 + out.c2;
    out.pair = pair;
    out.taus = t;
    return out;
}

double mp_quadrature(const std::function<double(double)>& f, double psi, int order) {
    const auto e = mp_edges(psi);
    const auto rule = gauss_legendre(order, 0.0, 0.5 * std::numbers::pi);
    const double width = e.upper - e.lower;
    double sum = 0.0;
    for (int i = 0; i < order; ++i) {
        const double u = rule.nodes[i];
        const double s = std::sin(u);
        const double c = std::cos(u);
        const double x = e.lower + width * s * s;
        // density(x) dx with the square root absorbed by the substitution
        const double jac = width * width * 2.0 * s * s * c * c / (2.0 * std::numbers::pi * psi * x);
        sum += rule.weights[i] * jac * f(x);
    }
    const double atom = mp_atom(psi);
    if (atom > 0.0) sum += atom * f(0.0);
    return sum;
}

DeltaResult delta_large_sample(double eta, double lambda, double psi2, const TheoryParams& p) {
    if (!(lambda > 0.0)) throw DomainError("delta_large_sample needs lambda > 0");
    DeltaResult out;
    out.regime = Regime::large_sample;
    const double mu1sq = p.mu1 * p.mu1;
    const double shift = p.mu2 * p.mu2 + lambda;
    LargeSampleAux aux;
    aux.s1 = mp_quadrature([&](double x) { return 1.0 / (mu1sq * x + shift); }, psi2);
    aux.s2 = mp_quadrature([&](double x) { return 1.0 / std::pow(mu1sq * x + shift, 2); }, psi2);
    const double t2 = p.mu1 * p.mu1_star * eta;
    const double t2sq = t2 * t2;
    const double common = 1.0 + psi2 * shift * aux.s1 - psi2;
    aux.A = mu1sq * t2sq * aux.s1 * common;
    aux.B = 1.0 - psi2 + psi2 * lambda * shift * aux.s2 + p.mu2 * p.mu2 * psi2 * aux.s1;
    aux.C = lambda * mu1sq * t2sq * common *
            (2.0 * shift * psi2 * aux.s1 * aux.s2 - psi2 * aux.s1 * aux.s1 + aux.s2 * (1.0 - psi2));
    const double ms2 = p.mu1_star * p.mu1_star;
    out.c1 = ms2 * aux.A * aux.B / (aux.A + 1.0);
    out.c2 = ms2 * aux.C / ((aux.A + 1.0) * (aux.A + 1.0));
    out.delta = out.c1 + out.c2;
    out.aux = aux;
    return out;
}

DecayReport delta_large_width_check(double eta, double lambda, double psi1, const TheoryParams& p,
                                    std::vector<double> psi2_grid) {
    DecayReport r;
    r.psi2 = std::move(psi2_grid);
    std::vector<double> xs, ys;
    for (double psi2 : r.psi2) {
        const double v = delta(eta, lambda, psi1, psi2, p).delta;
        r.values.push_back(v);
        if (v > 0.0) {
            xs.push_back(psi2);
            ys.push_back(v);
        }
    }
    if (xs.size() >= 2) r.slope = loglog_slope(xs, ys);
    r.decayed = !r.values.empty() && r.values.back() < r.values.front() / 10.0;
    return r;
}

}  // namespace onestep
