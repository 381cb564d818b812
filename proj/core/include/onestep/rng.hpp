#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string_view>

namespace onestep {

// Philox4x32-10 (Salmon et al., SC'11).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;
    static Counter block(Counter ctr, Key key);
};

enum class StreamRole : std::uint32_t {
    train = 1,
    fresh = 2,
    test = 3,
    ge_noise = 4,
    second_layer = 5,
    first_layer = 6,
};

std::string_view role_name(StreamRole role);

struct StreamId {
    std::uint64_t seed = 0;
    std::uint64_t replica = 0;
    StreamRole role = StreamRole::train;
    std::uint32_t lane = 0;  // sub-stream within a role
};

// Standard normal draws from a counter-based stream. Two normals per
// Philox block via Box-Muller, so the k-th draw depends only on
// (seed, replica, role, lane, k).
class NormalStream {
public:
    explicit NormalStream(StreamId id);

    double next();
    void fill(double* out, std::size_t count);
    // Row-major fill: row i of the result gets draws [i*cols, (i+1)*cols).
    Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols);
    Eigen::VectorXd vector(Eigen::Index size);

    std::uint64_t position() const { return 2 * block_ - (has_spare_ ? 1 : 0); }
    const StreamId& id() const { return id_; }

private:
    StreamId id_;
    Philox4x32::Key key_;
    std::uint64_t block_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace onestep
