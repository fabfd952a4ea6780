#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include "kmax/covariance.hpp"
#include "kmax/parallel.hpp"
#include "kmax/rng.hpp"

namespace kmax {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Materialized batch of N draws (rows) from one covariance model.
struct SampleBatch {
    RowMatrixXd draws;
    std::int64_t n_draws = 0;
    std::string model_id;
};

/// Rows per deterministically-seeded substream. Fixed so that the draw at a
/// given index never depends on the worker count.
inline constexpr std::int64_t kDrawBlock = 8192;

/// Seeded sampler of correlated Gaussian vectors X = L Z, Z iid standard
/// normal, with L L^T = Sigma.
///
/// The model and factor are immutable after construction and safe to share
/// across threads. Every sampling entry point derives per-block substreams
/// from (seed, salt, block index); identical (seed, salt, n) yields a
/// bit-identical sequence of draws for any worker count.
class GaussianSampler {
public:
    GaussianSampler(CovarianceModel model, std::uint64_t seed)
        : model_(std::move(model)), factor_(factorize(model_)), seed_(seed) {}

    const CovarianceModel& model() const { return model_; }
    const Eigen::MatrixXd& factor() const { return factor_; }
    std::uint64_t seed() const { return seed_; }
    int dim() const { return model_.p; }

    /// Streams n draws through visit(index, row, rng). The row span is only
    /// valid during the call; rng is the block substream, positioned after the
    /// row's normals, for any auxiliary randomness the visitor needs.
    template <typename Visit>
    void for_each_draw(std::int64_t n, int workers, std::uint64_t salt, Visit&& visit) const {
        const std::uint64_t base = derive_stream(seed_, salt);
        const int p = dim();
        const Eigen::MatrixXd lt = factor_.transpose();

        parallel_for_blocks(n, kDrawBlock, workers, [&](std::int64_t begin, std::int64_t end, std::int64_t block) {
            RngStream rng(derive_stream(base, static_cast<std::uint64_t>(block)));
            const std::int64_t rows = end - begin;
            RowMatrixXd z(rows, p);
            for (std::int64_t i = 0; i < rows; ++i)
                for (int j = 0; j < p; ++j) z(i, j) = rng.normal();
            RowMatrixXd x(rows, p);
            x.noalias() = z * lt;
            for (std::int64_t i = 0; i < rows; ++i) {
                visit(begin + i, std::span<const double>(x.data() + i * p, static_cast<std::size_t>(p)), rng);
            }
        });
    }

    SampleBatch sample(std::int64_t n, int workers = 1, std::uint64_t salt = kSaltSample) const;

private:
    CovarianceModel model_;
    Eigen::MatrixXd factor_;
    std::uint64_t seed_;
};

}  // namespace kmax
