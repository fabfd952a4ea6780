#include "kmax/anticonc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kmax/order_stats.hpp"

namespace kmax {

double anticonc_bound(double epsilon, int k, double e_max_norm) {
    if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (e_max_norm < 0.0) throw std::invalid_argument("e_max_norm must be >= 0");
    return 2.0 * epsilon * k * (1.0 + e_max_norm);
}

double log_binom(int p, int k) {
    if (k < 0 || k > p) throw std::invalid_argument("log_binom requires 0 <= k <= p");
    return std::lgamma(p + 1.0) - std::lgamma(k + 1.0) - std::lgamma(p - k + 1.0);
}

double nazarov_bound(double epsilon, int p, int k, double min_var_w) {
    if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
    if (min_var_w <= 0.0) throw std::invalid_argument("min_var_w must be positive");
    return epsilon / std::sqrt(min_var_w) * (std::sqrt(2.0 * log_binom(p, k)) + 2.0);
}

double required_grid_halfwidth(int p) {
    return std::sqrt(2.0 * std::log(2.0 * p)) + 2.0;
}

GridSpec default_grid(int p, double epsilon) {
    const double hw = required_grid_halfwidth(p);
    return GridSpec{-hw, hw, epsilon / 4.0};
}

ConcentrationEstimate estimate_sup_interval_prob(const GaussianSampler& sampler, int k, double epsilon,
                                                 const GridSpec& grid, std::int64_t n,
                                                 int workers, std::uint64_t salt) {
    if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
    if (n < 10000) throw std::invalid_argument("estimate_sup_interval_prob requires n >= 1e4");
    const double hw = required_grid_halfwidth(sampler.dim());
    constexpr double tol = 1e-12;
    if (grid.y_min > -hw + tol || grid.y_max < hw - tol) {
        throw std::invalid_argument("grid narrower than the required range [-sqrt(2 ln 2p)-2, +sqrt(2 ln 2p)+2]");
    }
    if (grid.step <= 0.0 || grid.step > epsilon / 4.0 + tol) {
        throw std::invalid_argument("grid step must be positive and <= epsilon/4");
    }

    std::vector<double> kmaxes(static_cast<std::size_t>(n));
    sampler.for_each_draw(n, workers, salt, [&](std::int64_t i, std::span<const double> row, RngStream&) {
        kmaxes[static_cast<std::size_t>(i)] = k_max(row, k);
    });
    std::sort(kmaxes.begin(), kmaxes.end());

    // Candidate left edges: the grid plus every in-range sample point. The
    // data-anchored windows dominate any window starting between samples, so
    // the sweep computes the exact sup over the covered range.
    const std::int64_t n_steps = static_cast<std::int64_t>(std::floor((grid.y_max - grid.y_min) / grid.step)) + 1;
    std::vector<double> grid_edges(static_cast<std::size_t>(n_steps));
    for (std::int64_t s = 0; s < n_steps; ++s) {
        grid_edges[static_cast<std::size_t>(s)] = grid.y_min + static_cast<double>(s) * grid.step;
    }
    std::vector<double> sample_edges;
    sample_edges.reserve(kmaxes.size());
    for (double v : kmaxes) {
        if (v >= grid.y_min && v <= grid.y_max) sample_edges.push_back(v);
    }
    std::vector<double> edges(grid_edges.size() + sample_edges.size());
    std::merge(grid_edges.begin(), grid_edges.end(), sample_edges.begin(), sample_edges.end(), edges.begin());

    // Both window endpoints advance monotonically as the left edge increases.
    std::int64_t best_count = -1;
    double best_y = grid.y_min;
    std::size_t lo = 0, hi = 0;
    for (double y : edges) {
        while (lo < kmaxes.size() && kmaxes[lo] < y) ++lo;
        if (hi < lo) hi = lo;
        while (hi < kmaxes.size() && kmaxes[hi] <= y + epsilon) ++hi;
        const auto c = static_cast<std::int64_t>(hi - lo);
        if (c > best_count) {
            best_count = c;
            best_y = y;
        }
    }

    ConcentrationEstimate est;
    est.epsilon = epsilon;
    est.k = k;
    est.grid = grid;
    est.n_draws = n;
    est.sup_hat = static_cast<double>(std::max<std::int64_t>(best_count, 0)) / static_cast<double>(n);
    est.argmax_y = best_y;
    est.se = std::sqrt(est.sup_hat * (1.0 - est.sup_hat) / static_cast<double>(n));
    return est;
}

MeanEstimate estimate_e_max_norm(const GaussianSampler& sampler, std::int64_t n,
                                 int workers, std::uint64_t salt) {
    if (n < 10000) throw std::invalid_argument("estimate_e_max_norm requires n >= 1e4");

    std::vector<double> maxabs(static_cast<std::size_t>(n));
    sampler.for_each_draw(n, workers, salt, [&](std::int64_t i, std::span<const double> row, RngStream&) {
        double m = 0.0;
        for (double v : row) m = std::max(m, std::abs(v));
        maxabs[static_cast<std::size_t>(i)] = m;
    });

    double sum = 0.0;
    for (double v : maxabs) sum += v;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : maxabs) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    MeanEstimate est;
    est.value = mean;
    est.se = sd / std::sqrt(static_cast<double>(n));
    est.n_draws = n;
    est.ceiling = std::sqrt(2.0 * std::log(2.0 * sampler.dim()));
    est.exceeds_ceiling = mean > est.ceiling + 3.0 * est.se;
    return est;
}

namespace {

// Combination odometer shared by the W-moment scan.
bool next_combination(std::vector<int>& idx, int p) {
    const int k = static_cast<int>(idx.size());
    int pos = k - 1;
    while (pos >= 0 && idx[pos] == p - k + pos) --pos;
    if (pos < 0) return false;
    ++idx[pos];
    for (int i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
    return true;
}

double binom_exact_or_above(int p, int k, double cap) {
    double c = 1.0;
    for (int i = 1; i <= k; ++i) {
        c *= static_cast<double>(p - k + i) / i;
        if (c > cap) return cap + 1.0;
    }
    return c;
}

}  // namespace

VarMinEstimate estimate_w_min_var(const GaussianSampler& sampler, int k, std::int64_t n,
                                  int workers, std::uint64_t salt) {
    const int p = sampler.dim();
    if (k < 1 || k > p) throw std::invalid_argument("estimate_w_min_var requires 1 <= k <= p");
    if (n < 10000) throw std::invalid_argument("estimate_w_min_var requires n >= 1e4");
    const double n_subsets_d = binom_exact_or_above(p, k, kSubsetCap);
    if (n_subsets_d > kSubsetCap) {
        throw std::invalid_argument("estimate_w_min_var subset cap exceeded (C(p,k) <= 2e5)");
    }
    const auto n_subsets = static_cast<std::size_t>(n_subsets_d);

    std::vector<std::vector<int>> subsets;
    subsets.reserve(n_subsets);
    {
        std::vector<int> idx(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) idx[i] = i;
        do {
            subsets.push_back(idx);
        } while (next_combination(idx, p));
    }

    // Draws are split into contiguous batches, each with its own substream;
    // the batch moments merge in index order so worker count never matters.
    constexpr int kBatches = 50;
    const std::int64_t batch_rows = (n + kBatches - 1) / kBatches;
    const int n_batches = static_cast<int>((n + batch_rows - 1) / batch_rows);

    struct BatchMoments {
        std::vector<double> sum, sumsq;
        std::int64_t count = 0;
    };
    std::vector<BatchMoments> batches(static_cast<std::size_t>(n_batches));

    const std::uint64_t base = derive_stream(sampler.seed(), salt);
    const Eigen::MatrixXd lt = sampler.factor().transpose();
    parallel_for_blocks(n, batch_rows, workers, [&](std::int64_t begin, std::int64_t end, std::int64_t b) {
        RngStream rng(derive_stream(base, static_cast<std::uint64_t>(b)));
        auto& bm = batches[static_cast<std::size_t>(b)];
        bm.sum.assign(n_subsets, 0.0);
        bm.sumsq.assign(n_subsets, 0.0);
        bm.count = end - begin;

        Eigen::VectorXd z(p), x(p);
        for (std::int64_t i = begin; i < end; ++i) {
            for (int j = 0; j < p; ++j) z[j] = rng.normal();
            x.noalias() = sampler.factor() * z;
            for (std::size_t a = 0; a < n_subsets; ++a) {
                double m = x[subsets[a][0]];
                for (int j = 1; j < k; ++j) m = std::min(m, x[subsets[a][static_cast<std::size_t>(j)]]);
                bm.sum[a] += m;
                bm.sumsq[a] += m * m;
            }
        }
    });

    auto min_var_from = [&](const std::vector<const BatchMoments*>& parts, std::size_t* argmin) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_a = 0;
        for (std::size_t a = 0; a < n_subsets; ++a) {
            double s = 0.0, ss = 0.0;
            std::int64_t c = 0;
            for (const auto* bm : parts) {
                s += bm->sum[a];
                ss += bm->sumsq[a];
                c += bm->count;
            }
            const double var = (ss - s * s / static_cast<double>(c)) / static_cast<double>(c - 1);
            if (var < best) {
                best = var;
                best_a = a;
            }
        }
        if (argmin) *argmin = best_a;
        return best;
    };

    std::vector<const BatchMoments*> all;
    all.reserve(batches.size());
    for (const auto& bm : batches) all.push_back(&bm);
    std::size_t argmin = 0;
    const double value = min_var_from(all, &argmin);

    // Bootstrap over batches for the SE of the min-variance statistic.
    constexpr int kResamples = 200;
    RngStream boot_rng(derive_stream(base, 0xB007ull));
    std::vector<double> stats(kResamples);
    std::vector<const BatchMoments*> pick(batches.size());
    for (int r = 0; r < kResamples; ++r) {
        for (auto& slot : pick) {
            slot = &batches[static_cast<std::size_t>(boot_rng.uniform_below(batches.size()))];
        }
        stats[static_cast<std::size_t>(r)] = min_var_from(pick, nullptr);
    }
    double mean = 0.0;
    for (double s : stats) mean += s;
    mean /= kResamples;
    double ss = 0.0;
    for (double s : stats) ss += (s - mean) * (s - mean);

    VarMinEstimate est;
    est.value = value;
    est.se = std::sqrt(ss / (kResamples - 1));
    est.n_draws = n;
    est.argmin_subset = subsets[argmin];
    return est;
}

BoundReport evaluate_bounds(const GaussianSampler& sampler, int k, double epsilon, std::int64_t n,
                            int workers) {
    BoundReport report;
    report.epsilon = epsilon;
    report.k = k;
    report.p = sampler.dim();
    report.family = sampler.model().family_name();
    report.params = sampler.model().params_string();
    report.e_max_norm = estimate_e_max_norm(sampler, n, workers);
    report.kmax_bound = anticonc_bound(epsilon, k, report.e_max_norm.value);
    if (std::exp(log_binom(report.p, k)) <= kSubsetCap) {
        report.min_var_w = estimate_w_min_var(sampler, k, n, workers);
        report.nazarov = nazarov_bound(epsilon, report.p, k, report.min_var_w->value);
    }
    return report;
}

}  // namespace kmax
