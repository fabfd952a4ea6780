#include "kmax/order_stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace kmax {

namespace {

void check_k(std::size_t p, int k) {
    if (k < 1 || static_cast<std::size_t>(k) > p) {
        throw std::invalid_argument("k must satisfy 1 <= k <= length(x)");
    }
}

// Number of size-k subsets, capped; returns cap + 1 on overflow past cap.
double binom_capped(int p, int k, double cap) {
    double c = 1.0;
    for (int i = 1; i <= k; ++i) {
        c *= static_cast<double>(p - k + i) / i;
        if (c > cap) return cap + 1.0;
    }
    return c;
}

}  // namespace

double k_max(std::span<const double> x, int k) {
    check_k(x.size(), k);
    std::vector<double> buf(x.begin(), x.end());
    std::nth_element(buf.begin(), buf.begin() + (k - 1), buf.end(), std::greater<>());
    return buf[k - 1];
}

KTildeMaxDraw k_tilde_max(std::span<const double> x, int k, RngStream& rng) {
    check_k(x.size(), k);
    const int p = static_cast<int>(x.size());
    const double kth = k_max(x, k);

    std::vector<int> above;
    std::vector<int> boundary;
    above.reserve(k);
    for (int j = 0; j < p; ++j) {
        if (x[j] > kth) {
            above.push_back(j);
        } else if (x[j] == kth) {
            boundary.push_back(j);
        }
    }

    const int need = k - static_cast<int>(above.size());
    const bool tie_broken = static_cast<int>(boundary.size()) > need;
    if (tie_broken) {
        // Partial Fisher-Yates: the first `need` entries are a uniform subset.
        for (int i = 0; i < need; ++i) {
            const auto j = i + static_cast<int>(rng.uniform_below(boundary.size() - i));
            std::swap(boundary[i], boundary[j]);
        }
    }

    TopKSelection sel;
    sel.a_star = std::move(above);
    sel.a_star.insert(sel.a_star.end(), boundary.begin(), boundary.begin() + need);
    std::sort(sel.a_star.begin(), sel.a_star.end());
    sel.kth_value = kth;
    sel.tie_broken = tie_broken;
    sel.iota_star = sel.a_star[rng.uniform_below(static_cast<std::uint64_t>(k))];

    return KTildeMaxDraw{x[sel.iota_star], std::move(sel)};
}

std::vector<std::vector<int>> brute_force_astar(std::span<const double> x, int k) {
    check_k(x.size(), k);
    const int p = static_cast<int>(x.size());
    if (p > 20 || binom_capped(p, k, 2e5) > 2e5) {
        throw std::invalid_argument("brute_force_astar scale cap exceeded (p <= 20, C(p,k) <= 2e5)");
    }

    // Canonical per-subset sum: descending value order, so tied multisets sum
    // to bit-identical totals.
    std::vector<double> vals(static_cast<std::size_t>(k));
    auto subset_sum = [&](const std::vector<int>& idx) {
        for (int i = 0; i < k; ++i) vals[i] = x[idx[i]];
        std::sort(vals.begin(), vals.end(), std::greater<>());
        double s = 0.0;
        for (double v : vals) s += v;
        return s;
    };

    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[i] = i;

    std::vector<std::vector<int>> best_sets;
    double best = -std::numeric_limits<double>::infinity();

    for (;;) {
        const double s = subset_sum(idx);
        if (s > best) {
            best = s;
            best_sets.clear();
            best_sets.push_back(idx);
        } else if (s == best) {
            best_sets.push_back(idx);
        }

        // Advance the combination odometer.
        int pos = k - 1;
        while (pos >= 0 && idx[pos] == p - k + pos) --pos;
        if (pos < 0) break;
        ++idx[pos];
        for (int i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
    }
    return best_sets;
}

RateEstimate coupling_rate(const GaussianSampler& sampler, int k, std::int64_t n,
                           int workers, std::uint64_t salt) {
    check_k(static_cast<std::size_t>(sampler.dim()), k);
    if (n < 1000) throw std::invalid_argument("coupling_rate requires n >= 1000");

    std::vector<std::uint8_t> hit(static_cast<std::size_t>(n));
    sampler.for_each_draw(n, workers, salt, [&](std::int64_t i, std::span<const double> row, RngStream& rng) {
        const KTildeMaxDraw draw = k_tilde_max(row, k, rng);
        hit[static_cast<std::size_t>(i)] = draw.value == draw.selection.kth_value ? 1 : 0;
    });

    std::int64_t hits = 0;
    for (auto h : hit) hits += h;

    RateEstimate est;
    est.n_draws = n;
    est.k = k;
    est.estimate = static_cast<double>(hits) / static_cast<double>(n);
    est.se = std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(n));
    return est;
}

}  // namespace kmax
