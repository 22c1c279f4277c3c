#include "clab/rng.hpp"

#include <cmath>

#include "clab/constants.hpp"

namespace clab {

namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ull;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ull;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

}  // namespace

std::array<std::uint64_t, 4> philox4x64_block(std::array<std::uint64_t, 4> counter,
                                              std::array<std::uint64_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, counter[0], hi0, lo0);
        mulhilo(kMul1, counter[2], hi1, lo1);
        counter = {hi1 ^ counter[1] ^ key[0], lo1, hi0 ^ counter[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return counter;
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
    : key_{master_seed, stream_index} {}

void RngStream::refill() {
    block_ = philox4x64_block(counter_, key_);
    cursor_ = 0;
    // 256-bit counter increment, word 0 fastest.
    for (int w = 0; w < 4; ++w)
        if (++counter_[w] != 0) break;
}

std::uint64_t RngStream::next_u64() {
    if (cursor_ >= 4) refill();
    return block_[cursor_++];
}

double RngStream::uniform() {
    // 53-bit mantissa, shifted into (0, 1].
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * consts::pi * u2;
    cached_normal_ = r * std::sin(angle);
    has_cached_normal_ = true;
    return r * std::cos(angle);
}

RngStream make_stream(std::uint64_t master_seed, std::uint64_t stream_index) {
    return RngStream(master_seed, stream_index);
}

WienerIncrement sample_wiener(RngStream& stream, int n_channels, double eta, double dt) {
    if (n_channels < 1) throw BadParameter("sample_wiener needs at least one channel");
    if (!(eta > 0.0)) throw BadParameter("noise strength eta must be positive");
    if (!(dt > 0.0)) throw BadParameter("time step dt must be positive");
    WienerIncrement inc;
    inc.dt = dt;
    inc.eta = eta;
    inc.values.resize(n_channels);
    const double scale = std::sqrt(eta * dt);
    for (int i = 0; i < n_channels; ++i) inc.values(i) = scale * stream.normal();
    return inc;
}

CorrelatedFieldNoise::CorrelatedFieldNoise(std::vector<Eigen::Vector3d> grid, double kappa,
                                           double sigma_noise, double dt)
    : grid_(std::move(grid)), kappa_(kappa), sigma_noise_(sigma_noise), dt_(dt) {
    if (grid_.empty()) throw BadParameter("correlated noise needs at least one grid point");
    if (!(kappa > 0.0)) throw BadParameter("noise coupling kappa must be positive");
    if (!(sigma_noise > 0.0)) throw BadSigma("smearing length sigma_noise must be positive");
    if (!(dt > 0.0)) throw BadParameter("time step dt must be positive");

    const int n = size();
    const double prefactor = kappa_ * consts::gravitation * dt_ / (2.0 * consts::hbar);
    covariance_.resize(n, n);
    for (int i = 0; i < n; ++i) {
        covariance_(i, i) = prefactor / sigma_noise_;
        for (int j = i + 1; j < n; ++j) {
            const double r = (grid_[i] - grid_[j]).norm();
            if (!(r > 0.0)) throw BadParameter("correlated noise grid points must be distinct");
            covariance_(i, j) = covariance_(j, i) = prefactor / r;
        }
    }

    Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
    if (llt.info() != Eigen::Success) {
        // The 1/r kernel is positive definite in the continuum but discretization can push
        // eigenvalues slightly negative; retry once with a tiny diagonal jitter.
        jitter_ = 1e-12 * covariance_.diagonal().maxCoeff();
        Eigen::MatrixXd bumped = covariance_;
        bumped.diagonal().array() += jitter_;
        llt.compute(bumped);
        if (llt.info() != Eigen::Success)
            throw FactorizationFailure("noise covariance is not positive definite");
    }
    cholesky_ = llt.matrixL();
}

Eigen::VectorXd CorrelatedFieldNoise::sample(RngStream& stream) const {
    Eigen::VectorXd z(size());
    for (int i = 0; i < size(); ++i) z(i) = stream.normal();
    return cholesky_ * z;
}

}  // namespace clab
