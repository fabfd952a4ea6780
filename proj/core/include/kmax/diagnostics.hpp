#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kmax/rng.hpp"
#include "kmax/sampler.hpp"

namespace kmax {

/// Paired per-draw statistics: the randomized top-k value and max(X) from the
/// same vector. Collected once, consumed by both density diagnostics.
struct KTildeSample {
    int k = 0;
    std::vector<double> values;      // k-tilde-max per draw
    std::vector<double> max_values;  // max(X) per draw
};

KTildeSample draw_ktilde_sample(const GaussianSampler& sampler, int k, std::int64_t m,
                                int workers = 1, std::uint64_t salt = kSaltDiagnostics);

struct DiagnosticBin {
    double y = 0.0;        // bin center
    double value = 0.0;    // G-hat (monotonicity) or f-hat (mills)
    double se = 0.0;       // pointwise SE (combined SE for mills)
    double bound = 0.0;    // isotonic fit (monotonicity) or M(y) * P(max >= y) (mills)
};

struct DiagnosticReport {
    std::string check;
    bool pass = false;
    double worst_value = 0.0;  // violation / margin at the worst-slack bin
    double worst_se = 0.0;
    double worst_y = 0.0;
    int n_bins = 0;
    std::int64_t n_draws = 0;
    double grid_lo = 0.0;
    double grid_hi = 0.0;
    std::vector<DiagnosticBin> bins;
};

/// Histogram-estimates the density of the randomized top-k statistic on the
/// inner [q0.01, q0.99] range, forms G-hat(y) = f-hat(y) / phi(y), fits the
/// best nondecreasing approximation by pool-adjacent-violators, and passes
/// iff every violation G-hat - fit sits within its pointwise 3-SE band.
/// Requires m >= 1e5 and at least 50 draws in every bin.
DiagnosticReport gtilde_monotonicity_check(const KTildeSample& sample, int n_bins);

/// Checks f-hat(y) <= mills_ratio(y) * P-hat(max(X) >= y) + 3 * combined SE
/// at every bin center, P-hat estimated from the same batch.
DiagnosticReport density_mills_check(const KTildeSample& sample, int n_bins);

// Convenience wrappers drawing the sample internally.
DiagnosticReport gtilde_monotonicity_check(const GaussianSampler& sampler, int k, std::int64_t m,
                                           int n_bins, int workers = 1, std::uint64_t salt = kSaltDiagnostics);
DiagnosticReport density_mills_check(const GaussianSampler& sampler, int k, std::int64_t m,
                                     int n_bins, int workers = 1, std::uint64_t salt = kSaltDiagnostics);

}  // namespace kmax
