#include "onestep/spectra.hpp"

#include "onestep/errors.hpp"
#include "onestep/regress.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace onestep {

ThetaParams theta_params(double eta, double mu1, double mu1_star, double mu_bar, double psi1) {
    if (!(psi1 > 0.0)) throw DomainError("theta_params needs psi1 > 0");
    return {std::sqrt(mu_bar * mu_bar / psi1 + mu1_star * mu1_star) * mu1 * eta, mu1 * mu1_star * eta};
}

SpikePrediction bbp_predict(const ThetaParams& theta, double psi2) {
    if (!(psi2 > 0.0)) throw DomainError("bbp_predict needs psi2 > 0");
    SpikePrediction p;
    const double t1 = std::abs(theta.theta1);
    if (t1 > std::pow(psi2, 0.25)) {
        const double t1sq = t1 * t1;
        p.supercritical = true;
        p.s1_limit = std::sqrt((1.0 + t1sq) * (psi2 + t1sq) / t1sq);
        const double ratio = theta.theta2 * theta.theta2 / t1sq;
        p.overlap_sq = std::clamp(ratio * (1.0 - (psi2 + t1sq) / (t1sq * (t1sq + 1.0))), 0.0, 1.0);
    } else {
        p.s1_limit = 1.0 + std::sqrt(psi2);
        p.overlap_sq = 0.0;
    }
    return p;
}

MpEdges mp_edges(double psi) {
    const double r = std::sqrt(psi);
    return {(1.0 - r) * (1.0 - r), (1.0 + r) * (1.0 + r)};
}

double mp_atom(double psi) { return std::max(0.0, 1.0 - 1.0 / psi); }

double mp_density(double x, double psi) {
    const auto e = mp_edges(psi);
    if (x <= e.lower || x >= e.upper || x <= 0.0) return 0.0;
    return std::sqrt((e.upper - x) * (x - e.lower)) / (2.0 * std::numbers::pi * psi * x);
}

double mp_stieltjes(double z, double psi) {
    if (!(psi > 0.0)) throw DomainError("mp_stieltjes needs psi > 0");
    const auto e = mp_edges(psi);
    if (z >= 0.0 && z <= e.upper) {
        std::ostringstream msg;
        msg << "mp_stieltjes: real z=" << z << " is not outside the support (need z < 0 or z > "
            << e.upper << ")";
        throw DomainError(msg.str());
    }
    // z psi m^2 + (z + psi - 1) m + 1 = 0
    const double a = z * psi;
    const double b = z + psi - 1.0;
    const double root = std::sqrt(b * b - 4.0 * a);
    if (z < 0.0) return b >= 0.0 ? (-b - root) / (2.0 * a) : 2.0 / (-b + root);
    return -2.0 / (b + root);
}

std::complex<double> mp_stieltjes(std::complex<double> z, double psi) {
    if (!(psi > 0.0)) throw DomainError("mp_stieltjes needs psi > 0");
    if (z.imag() == 0.0) return mp_stieltjes(z.real(), psi);
    if (z.imag() < 0.0) return std::conj(mp_stieltjes(std::conj(z), psi));
    const std::complex<double> a = z * psi;
    const std::complex<double> b = z + psi - 1.0;
    const std::complex<double> root = std::sqrt(b * b - 4.0 * a);
    const std::complex<double> m1 = (-b + root) / (2.0 * a);
    const std::complex<double> m2 = (-b - root) / (2.0 * a);
    return m1.imag() >= m2.imag() ? m1 : m2;
}

double mp_stieltjes_derivative(double z, double psi) {
    const double m = mp_stieltjes(z, psi);
    return -(psi * m * m + m) / (2.0 * z * psi * m + z + psi - 1.0);
}

double mp_companion(double z, double psi) { return psi * mp_stieltjes(z, psi) - (1.0 - psi) / z; }

double mp_companion_derivative(double z, double psi) {
    return psi * mp_stieltjes_derivative(z, psi) + (1.0 - psi) / (z * z);
}

Histogram make_histogram(const std::vector<double>& values, int bins, double lo, double hi) {
    if (bins <= 0 || !(hi > lo)) throw ConfigError("histogram needs bins > 0 and hi > lo");
    Histogram h;
    h.edges.resize(bins + 1);
    for (int i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * i / bins;
    h.counts.assign(bins, 0);
    for (double v : values) {
        if (v < lo || v > hi) continue;
        int k = static_cast<int>((v - lo) / (hi - lo) * bins);
        h.counts[std::min(k, bins - 1)] += 1;
    }
    return h;
}

SpectralSummary spectral_summary(const Eigen::MatrixXd& M, SpectrumKind kind, int bins) {
    SpectralSummary s;
    if (M.size() == 0) throw ShapeError("spectral_summary of an empty matrix");
    if (kind == SpectrumKind::eig) {
        if (M.rows() != M.cols()) throw ShapeError("eig spectrum needs a square matrix");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        s.values = es.eigenvalues().reverse();
        s.leading_vector = es.eigenvectors().col(M.rows() - 1);
    } else {
        const bool left = M.rows() <= M.cols();
        const Eigen::MatrixXd gram =
            left ? Eigen::MatrixXd(M * M.transpose()) : Eigen::MatrixXd(M.transpose() * M);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        const Eigen::Index k = gram.rows();
        s.values = es.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
        if (left) {
            s.leading_vector = es.eigenvectors().col(k - 1);
        } else {
            s.leading_vector = M * es.eigenvectors().col(k - 1);
            s.leading_vector.normalize();
        }
    }
    if (bins > 0) {
        std::vector<double> v(s.values.data(), s.values.data() + s.values.size());
        const double lo = std::min(0.0, s.values.minCoeff());
        const double hi = s.values.maxCoeff() * 1.05 + 1e-12;
        s.histogram = make_histogram(v, bins, lo, hi);
    }
    return s;
}

bool spike_isolated(double s1, double psi2, Eigen::Index d, double buffer) {
    return s1 > (1.0 + std::sqrt(psi2)) * (1.0 + buffer * std::pow(static_cast<double>(d), -2.0 / 3.0));
}

namespace {

struct TopSpectrum {
    std::vector<double> s;
    Eigen::VectorXd u1;
};

TopSpectrum top_spectrum(const Eigen::MatrixXd& Phi, int top) {
    const auto summary = spectral_summary(Phi, SpectrumKind::svd);
    TopSpectrum t;
    const int k = std::min<int>(top, static_cast<int>(summary.values.size()));
    t.s.assign(summary.values.data(), summary.values.data() + k);
    t.u1 = summary.leading_vector;
    return t;
}

}  // namespace

CkSpikeReport ck_spike_check(const Eigen::MatrixXd& W1, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const ActivationProfile& act, StreamId z_stream, int top) {
    if (X.rows() != y.size()) throw ShapeError("label length differs from X rows");
    CkSpikeReport r;
    r.odd_activation = act.odd();
    const Eigen::VectorXd yn = y / y.norm();
    {
        const auto ck = top_spectrum(ck_features(W1, X, act), top);
        r.s_ck = ck.s;
        r.overlap_ck = std::pow(ck.u1.dot(yn), 2);
    }
    {
        const auto ge = top_spectrum(ge_features(W1, X, act.mu1, act.mu2, z_stream), top);
        r.s_ge = ge.s;
        r.overlap_ge = std::pow(ge.u1.dot(yn), 2);
    }
    return r;
}

}  // namespace onestep
