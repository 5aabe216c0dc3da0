#pragma once

// Monte Carlo check of the covariance assembly. The channel acts on phase
// space as a random translation, so an output sample is the sum of an input
// quadrature draw, a noise displacement and (for the averaged output) a
// modulation displacement, each drawn from its own Gaussian.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include "memchan/channel.hpp"
#include "memchan/errors.hpp"
#include "memchan/linalg.hpp"
#include "memchan/optimizer.hpp"

namespace memchan {

/// Name of the generator recorded in output metadata.
inline constexpr std::string_view mc_generator_name = "std::mt19937_64 + std::normal_distribution, 16 seed_seq streams";

/// Fixed number of independent random streams a batch is split into. Results
/// depend on (seed, stream) only, never on the number of worker threads.
inline constexpr std::size_t mc_streams = 16;

struct SampleBatch {
    std::size_t count = 0;
    std::uint64_t seed = 0;
    /// count x 2n, one displacement per row in (q..., p...) order.
    Matrix samples;
};

namespace detail {

// Tags separate the input, noise and modulation draws of one estimate.
enum class StreamTag : std::uint32_t { plain = 0, input = 1, noise = 2, modulation = 3 };

inline std::mt19937_64 stream_engine(std::uint64_t seed, std::size_t stream, StreamTag tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(tag)};
    return std::mt19937_64(seq);
}

// L with L L^T = diag(q, p), from the spectral decomposition of each block;
// tolerates rank deficiency.
inline Matrix block_factor(const BlockCovariance &cov) {
    const auto n = cov.q.rows();
    Matrix factor = Matrix::Zero(2 * n, 2 * n);
    auto block = [](const Matrix &m) {
        SpectralDecomposition d = symmetric_eigen(m);
        clamp_psd(d.eigenvalues, "sample_correlated_gaussian");
        return Matrix(d.eigenvectors * d.eigenvalues.cwiseSqrt().asDiagonal());
    };
    factor.topLeftCorner(n, n) = block(cov.q);
    factor.bottomRightCorner(n, n) = block(cov.p);
    return factor;
}

inline SampleBatch sample_tagged(const BlockCovariance &cov, std::size_t count, std::uint64_t seed,
                                 StreamTag tag, unsigned threads) {
    if (count == 0) {
        throw InvalidParameter("sample_correlated_gaussian: count must be positive");
    }
    const Matrix factor = block_factor(cov);
    const auto dim = factor.rows();
    SampleBatch batch{count, seed, Matrix(static_cast<Eigen::Index>(count), dim)};
    parallel_for(mc_streams, threads, [&](std::size_t stream) {
        const std::size_t begin = stream * count / mc_streams;
        const std::size_t end = (stream + 1) * count / mc_streams;
        std::mt19937_64 engine = stream_engine(seed, stream, tag);
        std::normal_distribution<double> normal;
        Vector z(dim);
        for (std::size_t row = begin; row < end; ++row) {
            for (Eigen::Index k = 0; k < dim; ++k) {
                z(k) = normal(engine);
            }
            batch.samples.row(static_cast<Eigen::Index>(row)) = (factor * z).transpose();
        }
    });
    return batch;
}

} // namespace detail

/// Zero-mean Gaussian draws with covariance diag(q, p). Reproducible from
/// the seed. Throws NonPhysicalCovariance if a block is not PSD.
[[nodiscard]] inline SampleBatch sample_correlated_gaussian(const BlockCovariance &cov, std::size_t count,
                                                            std::uint64_t seed, unsigned threads = 0) {
    return detail::sample_tagged(cov, count, seed, detail::StreamTag::plain, threads);
}

/// Sample covariance (mean removed, 1/(count-1) normalization) of the rows.
[[nodiscard]] inline Matrix empirical_covariance(const Matrix &samples) {
    const Eigen::RowVectorXd mean = samples.colwise().mean();
    const Matrix centered = samples.rowwise() - mean;
    const double denom = static_cast<double>(std::max<Eigen::Index>(samples.rows() - 1, 1));
    return (centered.transpose() * centered) / denom;
}

/// Standard error of each sample-covariance entry for Gaussian data with
/// covariance `target`: sqrt((S_ii S_jj + S_ij^2) / count).
[[nodiscard]] inline Matrix covariance_standard_errors(const Matrix &target, std::size_t count) {
    const auto dim = target.rows();
    Matrix se(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            se(i, j) = std::sqrt((target(i, i) * target(j, j) + target(i, j) * target(i, j)) /
                                 static_cast<double>(count));
        }
    }
    return se;
}

/// Largest |estimate - target| / standard error over all entries; entries
/// with zero standard error must match exactly or count as infinite.
[[nodiscard]] inline double max_standard_score(const Matrix &estimate, const Matrix &target, std::size_t count) {
    const Matrix se = covariance_standard_errors(target, count);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < target.rows(); ++i) {
        for (Eigen::Index j = 0; j < target.cols(); ++j) {
            const double diff = std::abs(estimate(i, j) - target(i, j));
            if (se(i, j) > 0.0) {
                worst = std::max(worst, diff / se(i, j));
            } else if (diff > 0.0) {
                worst = std::numeric_limits<double>::infinity();
            }
        }
    }
    return worst;
}

struct CovarianceEstimate {
    std::size_t count = 0;
    std::uint64_t seed = 0;
    /// Full 2n x 2n sample covariance, including the q-p cross block.
    Matrix full;

    /// The q and p blocks, symmetrized.
    [[nodiscard]] BlockCovariance blocks() const {
        const auto n = full.rows() / 2;
        Matrix q = full.topLeftCorner(n, n);
        Matrix p = full.bottomRightCorner(n, n);
        return {0.5 * (q + q.transpose()), 0.5 * (p + p.transpose())};
    }
};

/// Empirical covariance of sampled outputs: input quadratures drawn from the
/// squeezed input covariance, plus a noise displacement, plus a modulation
/// displacement when `modulated` is set. Converges to the output covariance
/// (or the averaged output covariance).
[[nodiscard]] inline CovarianceEstimate estimate_output_covariance(const ChannelParams &channel,
                                                                   const InputParams &input, std::size_t count,
                                                                   std::uint64_t seed, bool modulated,
                                                                   unsigned threads = 0) {
    using detail::StreamTag;
    Matrix total = detail::sample_tagged(input_covariance(channel.n, input.r), count, seed, StreamTag::input,
                                         threads)
                       .samples;
    total += detail::sample_tagged(noise_covariance(channel), count, seed, StreamTag::noise, threads).samples;
    if (modulated) {
        total += detail::sample_tagged(modulation_covariance(channel.n, input), count, seed,
                                       StreamTag::modulation, threads)
                     .samples;
    }
    return {count, seed, empirical_covariance(total)};
}

/// Random physical block covariance: diag(A, B) with
/// A = E O diag(nu) O^T E, B = E^-1 O diag(nu) O^T E^-1, E = exp(M) for a
/// random symmetric M and orthogonal O. Its symplectic spectrum is nu.
template <typename Engine>
[[nodiscard]] BlockCovariance random_physical_covariance(int n, Engine &engine, std::vector<double> *nu_out = nullptr) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform(0.5, 3.0);
    Matrix m(n, n);
    Matrix g(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            m(i, j) = 0.3 * normal(engine);
            g(i, j) = normal(engine);
        }
    }
    m = 0.5 * (m + m.transpose());
    const Matrix o = Eigen::HouseholderQR<Matrix>(g).householderQ();
    Vector nu(n);
    for (int k = 0; k < n; ++k) {
        nu(k) = uniform(engine);
    }
    const SpectralDecomposition dm = symmetric_eigen(m);
    const Matrix e = sym_exp(dm, 1.0);
    const Matrix e_inv = sym_exp(dm, -1.0);
    const Matrix core = o * nu.asDiagonal() * o.transpose();
    Matrix a = e * core * e;
    Matrix b = e_inv * core * e_inv;
    if (nu_out != nullptr) {
        nu_out->assign(nu.data(), nu.data() + n);
    }
    return {0.5 * (a + a.transpose()), 0.5 * (b + b.transpose())};
}

} // namespace memchan
