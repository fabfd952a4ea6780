#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kmax/rng.hpp"
#include "kmax/sampler.hpp"

namespace kmax {

/// k-th largest component of x, counting multiplicity (descending sort
/// position k, 1-based). Throws std::invalid_argument when k is out of range.
double k_max(std::span<const double> x, int k);

/// Size-k index set A* maximizing the subset average, with the randomized
/// pick iota* uniform on A*.
struct TopKSelection {
    std::vector<int> a_star;  // sorted indices, |a_star| = k
    int iota_star = 0;        // member of a_star
    double kth_value = 0.0;   // the k-max of x
    bool tie_broken = false;  // true when ties at the k-th boundary forced a random choice
};

/// One draw of the randomized k-max relative: value = x[iota*].
struct KTildeMaxDraw {
    double value = 0.0;
    TopKSelection selection;
};

/// Randomized top-k statistic. A* is a uniformly random maximizer of the
/// size-k subset average (equivalently the top-k index set, with uniform
/// tie-breaking among boundary-tied indices); iota* is then uniform on A*.
/// Uses O(p) expected selection rather than subset enumeration; the
/// equivalence with the exhaustive argmax is covered by the brute-force
/// oracle tests.
KTildeMaxDraw k_tilde_max(std::span<const double> x, int k, RngStream& rng);

/// Exhaustive oracle: every size-k index set maximizing the subset average.
/// Per-subset sums are accumulated in descending value order so that tied
/// multisets produce bit-identical sums. Restricted to p <= 20 and
/// C(p, k) <= 2e5; throws beyond that scale.
std::vector<std::vector<int>> brute_force_astar(std::span<const double> x, int k);

struct RateEstimate {
    double estimate = 0.0;
    double se = 0.0;
    std::int64_t n_draws = 0;
    int k = 0;
};

/// Fraction of draws where the randomized statistic exactly equals the k-th
/// order statistic (exact floating-point comparison of stored components),
/// with binomial standard error. The fraction is exactly 1/k in expectation
/// when components are almost surely distinct, and at least 1/k in general.
RateEstimate coupling_rate(const GaussianSampler& sampler, int k, std::int64_t n,
                           int workers = 1, std::uint64_t salt = kSaltCoupling);

}  // namespace kmax
