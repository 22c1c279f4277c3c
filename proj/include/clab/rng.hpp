#pragma once

// Counter-based random number generation (Philox4x64-10) plus the noise
// samplers used by the stochastic propagators. Counter-based generation gives
// cheap, independent, reproducible streams: stream (seed, index) is the key,
// and outputs depend only on (key, counter), never on sampling order in other
// streams. Test vectors for this exact implementation live in docs/rng.md and
// the unit tests.

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "clab/errors.hpp"

namespace clab {

class RngStream;

// One Philox4x64 block: 10 rounds over a 256-bit counter with a 128-bit key.
std::array<std::uint64_t, 4> philox4x64_block(std::array<std::uint64_t, 4> counter,
                                              std::array<std::uint64_t, 2> key);

// A deterministic stream of draws identified by (master_seed, stream_index).
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

    std::uint64_t master_seed() const { return key_[0]; }
    std::uint64_t stream_index() const { return key_[1]; }

    std::uint64_t next_u64();
    // Uniform on (0, 1]: (x >> 11 + 1) * 2^-53, so log(u) is always finite.
    double uniform();
    // Standard normal via Box-Muller; draws come in cached pairs.
    double normal();

private:
    std::array<std::uint64_t, 2> key_;
    std::array<std::uint64_t, 4> counter_{};
    std::array<std::uint64_t, 4> block_{};
    int cursor_ = 4;  // next unread word in block_; 4 = empty
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;

    void refill();
};

RngStream make_stream(std::uint64_t master_seed, std::uint64_t stream_index);

// Independent Wiener increments for n channels: each value ~ N(0, eta * dt).
struct WienerIncrement {
    Eigen::VectorXd values;
    double dt = 0.0;
    double eta = 0.0;
};

WienerIncrement sample_wiener(RngStream& stream, int n_channels, double eta, double dt);

// Spatially correlated noise field on a grid of points:
//   E[dW_i dW_j] = kappa * G * dt / (2 hbar max(|r_i - r_j|, 0)),  i != j,
//   E[dW_i^2]    = kappa * G * dt / (2 hbar sigma_noise),
// sampled as L z with C = L L^T (Cholesky) and z iid standard normal.
// SI units throughout (meters, seconds, kilograms).
class CorrelatedFieldNoise {
public:
    CorrelatedFieldNoise(std::vector<Eigen::Vector3d> grid, double kappa, double sigma_noise,
                         double dt);

    int size() const { return static_cast<int>(grid_.size()); }
    double dt() const { return dt_; }
    double kappa() const { return kappa_; }
    double sigma_noise() const { return sigma_noise_; }
    // Diagonal jitter added to make the factorization succeed; 0 in the common case.
    double jitter() const { return jitter_; }
    const Eigen::MatrixXd& covariance() const { return covariance_; }
    const Eigen::MatrixXd& cholesky_factor() const { return cholesky_; }
    const std::vector<Eigen::Vector3d>& grid() const { return grid_; }

    Eigen::VectorXd sample(RngStream& stream) const;

private:
    std::vector<Eigen::Vector3d> grid_;
    double kappa_;
    double sigma_noise_;
    double dt_;
    double jitter_ = 0.0;
    Eigen::MatrixXd covariance_;
    Eigen::MatrixXd cholesky_;
};

}  // namespace clab
