#include "kmax/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "kmax/isotonic.hpp"
#include "kmax/normal.hpp"
#include "kmax/order_stats.hpp"

namespace kmax {

namespace {

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    double width = 0.0;
    std::vector<std::int64_t> counts;
    std::vector<double> centers;
};

// Equal-width histogram over the inner [q0.01, q0.99] of the draws. Bins with
// fewer than 50 draws make the binomial noise band unreliable and are an error.
Histogram build_histogram(const std::vector<double>& values, int n_bins) {
    if (n_bins < 4) throw std::invalid_argument("diagnostics need at least 4 bins");
    if (values.size() < 100000) throw std::invalid_argument("diagnostics require at least 1e5 draws");

    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    const auto m = sorted.size();
    const auto q = [&](double prob) { return sorted[static_cast<std::size_t>(prob * (m - 1))]; };

    Histogram h;
    h.lo = q(0.01);
    h.hi = q(0.99);
    if (!(h.hi > h.lo)) throw std::invalid_argument("degenerate draw distribution; cannot bin");
    h.width = (h.hi - h.lo) / n_bins;
    h.counts.assign(static_cast<std::size_t>(n_bins), 0);
    h.centers.resize(static_cast<std::size_t>(n_bins));
    for (int b = 0; b < n_bins; ++b) h.centers[static_cast<std::size_t>(b)] = h.lo + (b + 0.5) * h.width;

    for (double v : values) {
        if (v < h.lo || v >= h.hi) continue;
        const auto b = static_cast<std::size_t>((v - h.lo) / h.width);
        ++h.counts[std::min(b, static_cast<std::size_t>(n_bins - 1))];
    }
    for (auto c : h.counts) {
        if (c < 50) throw std::invalid_argument("insufficient draws per bin (< 50); use fewer bins or more draws");
    }
    return h;
}

}  // namespace

KTildeSample draw_ktilde_sample(const GaussianSampler& sampler, int k, std::int64_t m,
                                int workers, std::uint64_t salt) {
    if (k < 1 || k > sampler.dim()) throw std::invalid_argument("k out of range");

    KTildeSample out;
    out.k = k;
    out.values.resize(static_cast<std::size_t>(m));
    out.max_values.resize(static_cast<std::size_t>(m));
    sampler.for_each_draw(m, workers, salt, [&](std::int64_t i, std::span<const double> row, RngStream& rng) {
        out.values[static_cast<std::size_t>(i)] = k_tilde_max(row, k, rng).value;
        out.max_values[static_cast<std::size_t>(i)] = *std::max_element(row.begin(), row.end());
    });
    return out;
}

DiagnosticReport gtilde_monotonicity_check(const KTildeSample& sample, int n_bins) {
    const Histogram h = build_histogram(sample.values, n_bins);
    const auto m = static_cast<double>(sample.values.size());

    std::vector<double> g(h.counts.size()), se(h.counts.size()), weights(h.counts.size());
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        const double c = static_cast<double>(h.counts[b]);
        const double density = c / (m * h.width);
        const double density_se = std::sqrt(c * (1.0 - c / m)) / (m * h.width);
        const double pdf = norm_pdf(h.centers[b]);
        g[b] = density / pdf;
        se[b] = density_se / pdf;
        weights[b] = 1.0 / (se[b] * se[b]);
    }
    const std::vector<double> fit = isotonic_regression(g, weights);

    DiagnosticReport report;
    report.check = "gtilde_monotonicity";
    report.n_bins = n_bins;
    report.n_draws = static_cast<std::int64_t>(sample.values.size());
    report.grid_lo = h.lo;
    report.grid_hi = h.hi;
    report.bins.resize(h.counts.size());

    double worst_slack = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        report.bins[b] = DiagnosticBin{h.centers[b], g[b], se[b], fit[b]};
        const double violation = g[b] - fit[b];
        const double slack = violation - 3.0 * se[b];
        if (slack > worst_slack) {
            worst_slack = slack;
            report.worst_value = violation;
            report.worst_se = se[b];
            report.worst_y = h.centers[b];
        }
    }
    report.pass = worst_slack <= 0.0;
    return report;
}

DiagnosticReport density_mills_check(const KTildeSample& sample, int n_bins) {
    const Histogram h = build_histogram(sample.values, n_bins);
    const auto m = static_cast<double>(sample.values.size());

    std::vector<double> max_sorted(sample.max_values);
    std::sort(max_sorted.begin(), max_sorted.end());
    auto tail_prob = [&](double y) {
        const auto it = std::lower_bound(max_sorted.begin(), max_sorted.end(), y);
        return static_cast<double>(max_sorted.end() - it) / m;
    };

    DiagnosticReport report;
    report.check = "density_mills";
    report.n_bins = n_bins;
    report.n_draws = static_cast<std::int64_t>(sample.values.size());
    report.grid_lo = h.lo;
    report.grid_hi = h.hi;
    report.bins.resize(h.counts.size());

    double worst_slack = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        const double y = h.centers[b];
        const double c = static_cast<double>(h.counts[b]);
        const double f_hat = c / (m * h.width);
        const double f_se = std::sqrt(c * (1.0 - c / m)) / (m * h.width);
        const double mills = mills_ratio(y);
        const double p_hat = tail_prob(y);
        const double p_se = std::sqrt(p_hat * (1.0 - p_hat) / m);
        const double bound = mills * p_hat;
        const double combined_se = std::sqrt(f_se * f_se + mills * mills * p_se * p_se);

        report.bins[b] = DiagnosticBin{y, f_hat, combined_se, bound};
        const double margin = f_hat - bound;
        const double slack = margin - 3.0 * combined_se;
        if (slack > worst_slack) {
            worst_slack = slack;
            report.worst_value = margin;
            report.worst_se = combined_se;
            report.worst_y = y;
        }
    }
    report.pass = worst_slack <= 0.0;
    return report;
}

DiagnosticReport gtilde_monotonicity_check(const GaussianSampler& sampler, int k, std::int64_t m,
                                           int n_bins, int workers, std::uint64_t salt) {
    return gtilde_monotonicity_check(draw_ktilde_sample(sampler, k, m, workers, salt), n_bins);
}

DiagnosticReport density_mills_check(const GaussianSampler& sampler, int k, std::int64_t m,
                                     int n_bins, int workers, std::uint64_t salt) {
    return density_mills_check(draw_ktilde_sample(sampler, k, m, workers, salt), n_bins);
}

}  // namespace kmax
