#include "kmax/sampler.hpp"

#include <cstring>
#include <stdexcept>

namespace kmax {

SampleBatch GaussianSampler::sample(std::int64_t n, int workers, std::uint64_t salt) const {
    if (n < 1) throw std::invalid_argument("sample size must be >= 1");

    SampleBatch batch;
    batch.n_draws = n;
    batch.model_id = model_.describe();
    batch.draws.resize(n, dim());

    double* out = batch.draws.data();
    const int p = dim();
    for_each_draw(n, workers, salt, [out, p](std::int64_t idx, std::span<const double> row, RngStream&) {
        std::memcpy(out + idx * p, row.data(), sizeof(double) * static_cast<std::size_t>(p));
    });
    return batch;
}

}  // namespace kmax
