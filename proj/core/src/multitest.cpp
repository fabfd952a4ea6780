#include "kmax/multitest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "kmax/order_stats.hpp"
#include "kmax/parallel.hpp"

namespace kmax::mht {

namespace {

double binom_capped(std::int64_t n, std::int64_t r, double cap) {
    double c = 1.0;
    for (std::int64_t i = 1; i <= r; ++i) {
        c *= static_cast<double>(n - r + i) / static_cast<double>(i);
        if (c > cap) return cap + 1.0;
    }
    return c;
}

constexpr double kStepEnumerationCap = 1e5;

}  // namespace

Eigen::VectorXd compute_test_statistics(const DataMatrix& data) {
    if (data.n() < 2) throw std::invalid_argument("data matrix needs n >= 2 rows");
    if (data.p() < 1) throw std::invalid_argument("data matrix needs p >= 1 columns");
    return data.u.colwise().sum() / std::sqrt(static_cast<double>(data.n()));
}

RowMatrixXd bootstrap_statistics(const DataMatrix& data, int b, std::uint64_t key, int workers) {
    if (b < 100) throw std::invalid_argument("bootstrap needs b >= 100 replicates");
    const auto n = data.n();
    const int p = data.p();
    if (n < 2) throw std::invalid_argument("data matrix needs n >= 2 rows");

    // Column sums accumulated in row order; the resample sum below follows the
    // same order, so constant data yields exactly zero centered statistics.
    Eigen::RowVectorXd col_sum = Eigen::RowVectorXd::Zero(p);
    for (std::int64_t i = 0; i < n; ++i) col_sum += data.u.row(i);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));

    RowMatrixXd out(b, p);
    parallel_for_blocks(b, 64, workers, [&](std::int64_t begin, std::int64_t end, std::int64_t) {
        Eigen::RowVectorXd acc(p);
        for (std::int64_t r = begin; r < end; ++r) {
            RngStream rng(derive_stream(key, static_cast<std::uint64_t>(r)));
            acc.setZero();
            for (std::int64_t i = 0; i < n; ++i) {
                acc += data.u.row(static_cast<Eigen::Index>(rng.uniform_below(static_cast<std::uint64_t>(n))));
            }
            out.row(r) = (acc - col_sum) * inv_sqrt_n;
        }
    });
    return out;
}

int quantile_index(double alpha, int b) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (b < 1) throw std::invalid_argument("quantile_index needs b >= 1");
    const double m = (1.0 - alpha) * b;
    const auto idx = static_cast<int>(std::ceil(m - 1e-9));
    return std::clamp(idx, 1, b);
}

CriticalValueOracle::CriticalValueOracle(double alpha, int k, RowMatrixXd bootstrap_stats)
    : alpha_(alpha), k_(k), boot_(std::move(bootstrap_stats)) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (k < 1 || k > p()) throw std::invalid_argument("oracle needs 1 <= k <= p");
    if (b() < 1) throw std::invalid_argument("oracle needs a nonempty bootstrap matrix");
}

double CriticalValueOracle::critical_value(std::span<const int> k_set) const {
    if (static_cast<int>(k_set.size()) < k_) {
        throw std::invalid_argument("critical_value requires |K| >= k");
    }
    std::vector<int> key(k_set.begin(), k_set.end());
    std::sort(key.begin(), key.end());
    if (key.front() < 0 || key.back() >= p()) throw std::invalid_argument("index set out of range");
    if (std::adjacent_find(key.begin(), key.end()) != key.end()) {
        throw std::invalid_argument("index set contains duplicates");
    }

    if (const auto it = cache_.find(key); it != cache_.end()) return it->second;

    const int rows = b();
    std::vector<double> kmaxes(static_cast<std::size_t>(rows));
    std::vector<double> vals(key.size());
    for (int r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < key.size(); ++j) vals[j] = boot_(r, key[j]);
        kmaxes[static_cast<std::size_t>(r)] = k_max(vals, k_);
    }
    const int idx = quantile_index(alpha_, rows);
    std::nth_element(kmaxes.begin(), kmaxes.begin() + (idx - 1), kmaxes.end());
    const double value = kmaxes[static_cast<std::size_t>(idx - 1)];
    cache_.emplace(std::move(key), value);
    return value;
}

StepDownResult stepdown_kfwer(const Eigen::VectorXd& t, const CriticalValueFn& critical_value, int k) {
    const int p = static_cast<int>(t.size());
    if (p < 1) throw std::invalid_argument("stepdown needs p >= 1 statistics");
    if (k < 1 || k > p) throw std::invalid_argument("stepdown needs 1 <= k <= p");

    StepDownResult result;
    std::vector<bool> rejected(static_cast<std::size_t>(p), false);
    int n_rejected = 0;
    double prev_critical = std::numeric_limits<double>::infinity();

    for (int step = 1;; ++step) {
        double d;
        if (step == 1) {
            std::vector<int> all(static_cast<std::size_t>(p));
            for (int j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;
            d = critical_value(all);
        } else {
            if (n_rejected == p) break;
            std::vector<int> rej, active;
            for (int j = 0; j < p; ++j) (rejected[static_cast<std::size_t>(j)] ? rej : active).push_back(j);

            const int subset_size = std::min(k - 1, n_rejected);
            if (binom_capped(n_rejected, subset_size, kStepEnumerationCap) > kStepEnumerationCap) {
                throw std::runtime_error("stepdown subset enumeration cap exceeded (C(|R|, k-1) > 1e5)");
            }

            d = -std::numeric_limits<double>::infinity();
            std::vector<int> pick(static_cast<std::size_t>(subset_size));
            for (int i = 0; i < subset_size; ++i) pick[static_cast<std::size_t>(i)] = i;
            std::vector<int> k_set;
            for (;;) {
                k_set = active;
                for (int i : pick) k_set.push_back(rej[static_cast<std::size_t>(i)]);
                d = std::max(d, critical_value(k_set));
                if (subset_size == 0) break;
                int pos = subset_size - 1;
                while (pos >= 0 && pick[static_cast<std::size_t>(pos)] == n_rejected - subset_size + pos) --pos;
                if (pos < 0) break;
                ++pick[static_cast<std::size_t>(pos)];
                for (int i = pos + 1; i < subset_size; ++i) {
                    pick[static_cast<std::size_t>(i)] = pick[static_cast<std::size_t>(i - 1)] + 1;
                }
            }
        }

        if (d > prev_critical) {
            throw std::logic_error("stepdown critical values must be nonincreasing; oracle is not monotone");
        }
        prev_critical = d;

        std::vector<int> newly;
        for (int j = 0; j < p; ++j) {
            if (!rejected[static_cast<std::size_t>(j)] && t[j] > d) newly.push_back(j);
        }
        result.trace.push_back({step, d, newly});
        if (newly.empty()) break;
        for (int j : newly) rejected[static_cast<std::size_t>(j)] = true;
        n_rejected += static_cast<int>(newly.size());
    }

    result.decisions.resize(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
        result.decisions[static_cast<std::size_t>(j)] =
            rejected[static_cast<std::size_t>(j)] ? Decision::Reject : Decision::FailToReject;
        if (rejected[static_cast<std::size_t>(j)]) result.rejected.push_back(j);
    }
    return result;
}

StepDownResult stepdown_kfwer(const Eigen::VectorXd& t, const CriticalValueOracle& oracle,
                              int k, double alpha) {
    if (oracle.k() != k || oracle.alpha() != alpha) {
        throw std::invalid_argument("stepdown (k, alpha) must match the oracle");
    }
    if (static_cast<int>(t.size()) != oracle.p()) {
        throw std::invalid_argument("statistic length must match the oracle dimension");
    }
    return stepdown_kfwer(t, [&oracle](const std::vector<int>& k_set) {
        return oracle.critical_value(k_set);
    }, k);
}

KfwerSummary simulate_kfwer(const KfwerScenario& scenario, int workers) {
    const int p = scenario.model.p;
    if (scenario.mu.size() != p) throw std::invalid_argument("mu length must equal the model dimension");
    if (scenario.n < 2) throw std::invalid_argument("scenario needs n >= 2");
    if (scenario.n_sim < 1) throw std::invalid_argument("scenario needs n_sim >= 1");
    if (!(scenario.alpha > 0.0 && scenario.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (scenario.k < 1 || scenario.k > p) throw std::invalid_argument("scenario needs 1 <= k <= p");

    const Eigen::MatrixXd factor = factorize(scenario.model);
    std::vector<int> true_nulls;
    for (int j = 0; j < p; ++j) {
        if (scenario.mu[j] <= 0.0) true_nulls.push_back(j);
    }

    KfwerSummary summary;
    summary.n_sim = scenario.n_sim;
    summary.k = scenario.k;
    summary.sims.resize(static_cast<std::size_t>(scenario.n_sim));

    const std::uint64_t base = derive_stream(scenario.seed, kSaltKfwer);
    parallel_for_blocks(scenario.n_sim, 1, workers, [&](std::int64_t begin, std::int64_t, std::int64_t) {
        const auto r = begin;
        const std::uint64_t rep_key = derive_stream(base, static_cast<std::uint64_t>(r));

        DataMatrix data;
        data.u.resize(scenario.n, p);
        {
            RngStream rng(derive_stream(rep_key, 1));
            Eigen::VectorXd z(p);
            for (int i = 0; i < scenario.n; ++i) {
                for (int j = 0; j < p; ++j) z[j] = rng.normal();
                data.u.row(i) = (scenario.mu + factor * z).transpose();
            }
        }

        const Eigen::VectorXd t = compute_test_statistics(data);
        CriticalValueOracle oracle(scenario.alpha, scenario.k,
                                   bootstrap_statistics(data, scenario.b, derive_stream(rep_key, 2)));
        const StepDownResult sd = stepdown_kfwer(t, oracle, scenario.k, scenario.alpha);

        SimRecord rec;
        rec.n_rejected = static_cast<int>(sd.rejected.size());
        rec.steps = static_cast<int>(sd.trace.size());
        for (int j : sd.rejected) {
            if (scenario.mu[j] <= 0.0) ++rec.n_false_rejected;
        }
        rec.null_critical_value = std::numeric_limits<double>::quiet_NaN();
        if (scenario.collect_null_critical_values && static_cast<int>(true_nulls.size()) >= scenario.k) {
            rec.null_critical_value = oracle.critical_value(true_nulls);
        }
        summary.sims[static_cast<std::size_t>(r)] = rec;
    });

    std::int64_t events = 0, rejections = 0, false_rejections = 0;
    for (const auto& rec : summary.sims) {
        events += rec.n_false_rejected >= scenario.k ? 1 : 0;
        rejections += rec.n_rejected;
        false_rejections += rec.n_false_rejected;
    }
    const auto ns = static_cast<double>(scenario.n_sim);
    summary.kfwer_hat = static_cast<double>(events) / ns;
    summary.se = std::sqrt(summary.kfwer_hat * (1.0 - summary.kfwer_hat) / ns);
    summary.mean_rejections = static_cast<double>(rejections) / ns;
    summary.mean_false_rejections = static_cast<double>(false_rejections) / ns;
    return summary;
}

double kfwer_upper_bound(double alpha, int k, double gamma, double e_max_norm, double delta) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (gamma < 0.0 || e_max_norm < 0.0 || delta < 0.0) {
        throw std::invalid_argument("gamma, e_max_norm, delta must be >= 0");
    }
    return alpha + 2.0 * k * gamma * (1.0 + e_max_norm) + delta;
}

GammaDelta estimate_gamma_delta(std::span<const double> critical_values, double q_direct,
                                double delta_target) {
    if (critical_values.empty()) throw std::invalid_argument("no critical values supplied");
    if (!(delta_target > 0.0 && delta_target < 1.0)) throw std::invalid_argument("delta_target must lie in (0, 1)");

    std::vector<double> beta;
    beta.reserve(critical_values.size());
    for (double c : critical_values) beta.push_back(q_direct - c);
    std::sort(beta.begin(), beta.end());

    const int idx = quantile_index(delta_target, static_cast<int>(beta.size()));
    GammaDelta gd;
    gd.gamma = std::max(0.0, beta[static_cast<std::size_t>(idx - 1)]);
    std::int64_t exceed = 0;
    for (double v : beta) exceed += v >= gd.gamma ? 1 : 0;
    gd.delta = static_cast<double>(exceed) / static_cast<double>(beta.size());
    return gd;
}

double direct_kmax_quantile(const GaussianSampler& sampler, int k, double alpha, std::int64_t n,
                            int workers, std::uint64_t salt) {
    return direct_kmax_quantile(sampler, Eigen::VectorXd::Zero(sampler.dim()), k, alpha, n,
                                workers, salt);
}

double direct_kmax_quantile(const GaussianSampler& sampler, const Eigen::VectorXd& mean, int k,
                            double alpha, std::int64_t n, int workers, std::uint64_t salt) {
    if (n < 1000) throw std::invalid_argument("direct_kmax_quantile needs n >= 1000");
    if (n > std::numeric_limits<int>::max()) throw std::invalid_argument("direct_kmax_quantile draw count too large");
    if (mean.size() != sampler.dim()) throw std::invalid_argument("mean length must match the sampler dimension");

    std::vector<double> kmaxes(static_cast<std::size_t>(n));
    sampler.for_each_draw(n, workers, salt, [&](std::int64_t i, std::span<const double> row, RngStream&) {
        thread_local std::vector<double> buf;
        buf.resize(row.size());
        for (std::size_t j = 0; j < row.size(); ++j) buf[j] = mean[static_cast<Eigen::Index>(j)] + row[j];
        kmaxes[static_cast<std::size_t>(i)] = k_max(buf, k);
    });
    const int idx = quantile_index(alpha, static_cast<int>(n));
    std::nth_element(kmaxes.begin(), kmaxes.begin() + (idx - 1), kmaxes.end());
    return kmaxes[static_cast<std::size_t>(idx - 1)];
}

}  // namespace kmax::mht
