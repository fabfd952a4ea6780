#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "kmax/covariance.hpp"
#include "kmax/rng.hpp"
#include "kmax/sampler.hpp"

namespace kmax::mht {

/// n x p observation matrix U_1, ..., U_n (rows).
struct DataMatrix {
    Eigen::MatrixXd u;

    std::int64_t n() const { return u.rows(); }
    int p() const { return static_cast<int>(u.cols()); }
};

/// Per-hypothesis statistics t_j = n^{-1/2} sum_i u_ij.
Eigen::VectorXd compute_test_statistics(const DataMatrix& data);

/// B x p matrix of empirical-bootstrap statistics: each replicate resamples
/// n rows with replacement and computes T*_j = n^{-1/2} sum_i (U*_ij - ubar_j)
/// with ubar_j the original column mean. Deterministic in (data, b, key).
RowMatrixXd bootstrap_statistics(const DataMatrix& data, int b, std::uint64_t key, int workers = 1);

/// Index (1-based) of the ceil((1-alpha) b)-th ascending order statistic, with
/// a 1e-9 slack so values like 0.9 * 500 land on the intended integer.
int quantile_index(double alpha, int b);

/// Map K -> empirical (1-alpha) quantile of the per-replicate k-max over the
/// bootstrap statistics restricted to K. Values are cached per index set.
/// Monotone by construction: K containing I dominates per replicate, so the
/// quantiles satisfy c(K) >= c(I) exactly.
///
/// Not thread-safe; simulation replicates each own an oracle.
class CriticalValueOracle {
public:
    CriticalValueOracle(double alpha, int k, RowMatrixXd bootstrap_stats);

    /// Critical value for the index set K (|K| >= k required).
    double critical_value(std::span<const int> k_set) const;

    double alpha() const { return alpha_; }
    int k() const { return k_; }
    int p() const { return static_cast<int>(boot_.cols()); }
    int b() const { return static_cast<int>(boot_.rows()); }
    const RowMatrixXd& bootstrap_stats() const { return boot_; }

private:
    double alpha_;
    int k_;
    RowMatrixXd boot_;
    mutable std::map<std::vector<int>, double> cache_;
};

enum class Decision { Reject, FailToReject };

struct StepDownResult {
    struct Step {
        int step = 0;
        double critical_value = 0.0;
        std::vector<int> newly_rejected;
    };
    std::vector<int> rejected;        // sorted union over steps
    std::vector<Step> trace;          // critical values are nonincreasing
    std::vector<Decision> decisions;  // per hypothesis
};

using CriticalValueFn = std::function<double(const std::vector<int>&)>;

/// Step-down multiple testing against k-max critical values. Step 1 rejects
/// t_j > c({1..p}); step s >= 2 with rejected set R uses
///   d_s = max over I in R, |I| = min(k-1, |R|) of c((complement of R) u I)
/// and rejects strictly above d_s; stops at the first step with no new
/// rejection. With k = 1 this is the classic max-T step-down. The per-step
/// subset enumeration C(|R|, k-1) is capped at 1e5.
StepDownResult stepdown_kfwer(const Eigen::VectorXd& t, const CriticalValueFn& critical_value, int k);

/// Same, using a bootstrap oracle; (k, alpha) must match the oracle.
StepDownResult stepdown_kfwer(const Eigen::VectorXd& t, const CriticalValueOracle& oracle,
                              int k, double alpha);

/// Gaussian mean-model simulation scenario: rows U_i ~ N(mu, Sigma), nulls
/// H_0j: mu_j <= 0, test statistics rejected by the bootstrap step-down.
struct KfwerScenario {
    Eigen::VectorXd mu;
    CovarianceModel model;
    int n = 0;      // rows per dataset
    int k = 1;
    double alpha = 0.05;
    int b = 0;      // bootstrap replicates
    int n_sim = 0;  // simulated datasets
    std::uint64_t seed = 0;
    bool collect_null_critical_values = false;  // record c_I per sim (I = true nulls)
};

struct SimRecord {
    int n_rejected = 0;
    int n_false_rejected = 0;
    int steps = 0;
    double null_critical_value = 0.0;  // NaN unless collected and |I| >= k
};

struct KfwerSummary {
    double kfwer_hat = 0.0;  // fraction of sims with >= k false rejections
    double se = 0.0;
    double mean_rejections = 0.0;
    double mean_false_rejections = 0.0;
    int n_sim = 0;
    int k = 0;
    std::vector<SimRecord> sims;
};

/// Runs the full pipeline n_sim times with preassigned per-replicate
/// substreams; deterministic for any worker count.
KfwerSummary simulate_kfwer(const KfwerScenario& scenario, int workers = 1);

/// alpha + 2 k gamma (1 + E||U||_inf) + delta.
double kfwer_upper_bound(double alpha, int k, double gamma, double e_max_norm, double delta);

struct GammaDelta {
    double gamma = 0.0;  // quantile-gap level, >= 0
    double delta = 0.0;  // observed exceedance rate Pr(beta >= gamma)
};

/// Estimates (gamma, delta) with beta_r = q_direct - c_r over per-sim null
/// critical values: gamma is the empirical (1 - delta_target) quantile of
/// beta clamped at 0, delta the observed exceedance rate.
GammaDelta estimate_gamma_delta(std::span<const double> critical_values, double q_direct,
                                double delta_target);

/// q_{1-alpha} of k-max(X) for X ~ N(0, Sigma) by direct Monte Carlo.
double direct_kmax_quantile(const GaussianSampler& sampler, int k, double alpha, std::int64_t n,
                            int workers = 1, std::uint64_t salt = kSaltDirectQuantile);

/// Same with a mean shift: k-max(mean + X).
double direct_kmax_quantile(const GaussianSampler& sampler, const Eigen::VectorXd& mean, int k,
                            double alpha, std::int64_t n, int workers = 1,
                            std::uint64_t salt = kSaltDirectQuantile);

}  // namespace kmax::mht
