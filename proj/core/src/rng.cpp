#include "onestep/rng.hpp"

#include <cmath>
#include <numbers>

namespace onestep {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform in (0, 1].
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

std::string_view role_name(StreamRole role) {
    switch (role) {
        case StreamRole::train: return "train";
        case StreamRole::fresh: return "fresh";
        case StreamRole::test: return "test";
        case StreamRole::ge_noise: return "ge-noise";
        case StreamRole::second_layer: return "second-layer";
        case StreamRole::first_layer: return "first-layer";
    }
    return "unknown";
}

NormalStream::NormalStream(StreamId id)
    : id_(id),
      key_{static_cast<std::uint32_t>(id.seed), static_cast<std::uint32_t>(id.seed >> 32)} {}

double NormalStream::next() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // counter = (block lo, block hi, replica, role|lane)
    const std::uint32_t tag =
        static_cast<std::uint32_t>(id_.role) | (id_.lane << 8) |
        (static_cast<std::uint32_t>(id_.replica >> 32) << 24);
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                  static_cast<std::uint32_t>(block_ >> 32),
                                  static_cast<std::uint32_t>(id_.replica), tag};
    ++block_;
    const auto out = Philox4x32::block(ctr, key_);
    const double u1 = to_unit(out[0], out[1]);
    const double u2 = to_unit(out[2], out[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

void NormalStream::fill(double* out, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) out[i] = next();
}

Eigen::MatrixXd NormalStream::matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(rows, cols);
    fill(m.data(), static_cast<std::size_t>(rows * cols));
    return m;
}

Eigen::VectorXd NormalStream::vector(Eigen::Index size) {
    Eigen::VectorXd v(size);
    fill(v.data(), static_cast<std::size_t>(size));
    return v;
}

}  // namespace onestep
