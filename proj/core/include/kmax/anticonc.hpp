#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kmax/rng.hpp"
#include "kmax/sampler.hpp"

namespace kmax {

/// Dimension-free anticoncentration bound for the k-th order statistic of a
/// unit-variance Gaussian vector: 2 * epsilon * k * (1 + E||X||_inf).
double anticonc_bound(double epsilon, int k, double e_max_norm);

/// log C(p, k) via lgamma; overflow-safe for large p.
double log_binom(int p, int k);

/// Comparison bound (epsilon / sqrt(min var W)) * (sqrt(2 log C(p,k)) + 2)
/// for the max of the subset-minima Gaussian vector W.
double nazarov_bound(double epsilon, int p, int k, double min_var_w);

/// Evaluation grid for the sup over interval left edges.
struct GridSpec {
    double y_min = 0.0;
    double y_max = 0.0;
    double step = 0.0;

    bool operator==(const GridSpec&) const = default;
};

/// Half-width sqrt(2 ln(2p)) + 2 that the grid must cover.
double required_grid_halfwidth(int p);

/// Default grid: [-halfwidth, +halfwidth] with step = epsilon / 4.
GridSpec default_grid(int p, double epsilon);

/// Monte Carlo estimate of sup_y Pr(k-max(X) in [y, y+epsilon]).
struct ConcentrationEstimate {
    double sup_hat = 0.0;
    double argmax_y = 0.0;
    double epsilon = 0.0;
    int k = 0;
    GridSpec grid;
    std::int64_t n_draws = 0;
    double se = 0.0;  // binomial SE at the argmax window
};

/// Sorts the N k-max draws once and slides the window across both the grid
/// and every in-range sample point as a left edge (the data-anchored maximum
/// dominates any grid, removing grid bias). Cost O(N log N + grid).
/// Preconditions: the grid covers [-halfwidth, +halfwidth], step <= epsilon/4,
/// n >= 1e4.
ConcentrationEstimate estimate_sup_interval_prob(const GaussianSampler& sampler, int k, double epsilon,
                                                 const GridSpec& grid, std::int64_t n,
                                                 int workers = 1, std::uint64_t salt = kSaltSupInterval);

/// Monte Carlo mean with standard error plus the analytic ceiling
/// sqrt(2 ln(2p)) used as a sanity flag.
struct MeanEstimate {
    double value = 0.0;
    double se = 0.0;
    std::int64_t n_draws = 0;
    double ceiling = 0.0;
    bool exceeds_ceiling = false;  // estimate > ceiling + 3 se
};

/// E ||X||_inf by Monte Carlo; n >= 1e4.
MeanEstimate estimate_e_max_norm(const GaussianSampler& sampler, std::int64_t n,
                                 int workers = 1, std::uint64_t salt = kSaltEMaxNorm);

/// Subset cap for W-moment estimation and the brute-force oracle.
inline constexpr double kSubsetCap = 2e5;

struct VarMinEstimate {
    double value = 0.0;
    double se = 0.0;  // bootstrap-of-batches SE
    std::int64_t n_draws = 0;
    std::vector<int> argmin_subset;
};

/// min over |A| = k of the sample variance of min_{j in A} X_j, i.e. the
/// smallest diagonal entry of var(W) for the subset-minima vector W.
/// Preconditions: C(p,k) <= 2e5, n >= 1e4.
VarMinEstimate estimate_w_min_var(const GaussianSampler& sampler, int k, std::int64_t n,
                                  int workers = 1, std::uint64_t salt = kSaltWMinVar);

/// Bound evaluation summary for one (model, k, epsilon) input.
struct BoundReport {
    double kmax_bound = 0.0;  // 2 eps k (1 + E||X||_inf hat)
    std::optional<double> nazarov;
    std::optional<VarMinEstimate> min_var_w;
    MeanEstimate e_max_norm;
    double epsilon = 0.0;
    int k = 0;
    int p = 0;
    std::string family;
    std::string params;
};

/// Estimates E||X||_inf with n draws, evaluates the k-max bound, and fills in
/// the Nazarov comparison inputs when C(p, k) fits the desk-scale cap.
BoundReport evaluate_bounds(const GaussianSampler& sampler, int k, double epsilon, std::int64_t n,
                            int workers = 1);

}  // namespace kmax
