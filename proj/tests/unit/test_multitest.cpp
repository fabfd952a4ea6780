#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "kmax/anticonc.hpp"
#include "kmax/multitest.hpp"
#include "kmax/order_stats.hpp"
#include "maxt_reference.hpp"

using kmax::build_covariance;
using kmax::CovFamily;
using kmax::RowMatrixXd;
using namespace kmax::mht;

namespace {

RowMatrixXd make_bootstrap(int b, int p, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal;
    RowMatrixXd m(b, p);
    for (int r = 0; r < b; ++r)
        for (int j = 0; j < p; ++j) m(r, j) = normal(gen);
    return m;
}

DataMatrix make_gaussian_data(int n, int p, std::uint64_t seed, double shift = 0.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal;
    DataMatrix data;
    data.u.resize(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) data.u(i, j) = shift + normal(gen);
    return data;
}

}  // namespace

TEST_SUITE("multitest") {

TEST_CASE("test statistics: zero and constant columns") {
    DataMatrix data;
    data.u = Eigen::MatrixXd::Zero(4, 2);
    data.u.col(1).setOnes();
    const Eigen::VectorXd t = compute_test_statistics(data);
    CHECK(t[0] == 0.0);
    CHECK(t[1] == 2.0);  // 4 / sqrt(4)
}

TEST_CASE("test statistics match a compensated-summation oracle") {
    const DataMatrix data = make_gaussian_data(1000, 3, 99);
    const Eigen::VectorXd t = compute_test_statistics(data);
    for (int j = 0; j < 3; ++j) {
        // Kahan summation
        double sum = 0.0, comp = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double y = data.u(i, j) - comp;
            const double next = sum + y;
            comp = (next - sum) - y;
            sum = next;
        }
        const double oracle = sum / std::sqrt(1000.0);
        CHECK(std::abs(t[j] - oracle) <= 1e-12 * std::max(1.0, std::abs(oracle)));
    }
}

TEST_CASE("bootstrap of constant data is exactly zero") {
    DataMatrix data;
    data.u = Eigen::MatrixXd::Constant(7, 3, 0.1234567);
    const RowMatrixXd boot = bootstrap_statistics(data, 200, 5);
    CHECK(boot.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bootstrap replicate means are near zero and draws are deterministic") {
    const DataMatrix data = make_gaussian_data(50, 4, 7);
    const RowMatrixXd a = bootstrap_statistics(data, 500, 11, 1);
    const RowMatrixXd b = bootstrap_statistics(data, 500, 11, 4);
    CHECK((a.array() == b.array()).all());
    CHECK(!(a.array() == bootstrap_statistics(data, 500, 12).array()).all());

    for (int j = 0; j < 4; ++j) {
        const double mean = a.col(j).mean();
        const double sd = std::sqrt((a.col(j).array() - mean).square().sum() / (a.rows() - 1));
        CHECK(std::abs(mean) <= 3.0 * sd / std::sqrt(static_cast<double>(a.rows())));
    }
}

TEST_CASE("bootstrap validates inputs") {
    const DataMatrix data = make_gaussian_data(10, 2, 1);
    CHECK_THROWS_AS((void)bootstrap_statistics(data, 50, 1), std::invalid_argument);
}

TEST_CASE("quantile index convention") {
    CHECK(quantile_index(0.05, 100) == 95);
    CHECK(quantile_index(0.1, 500) == 450);
    CHECK(quantile_index(0.5, 1) == 1);
    CHECK(quantile_index(0.999, 100) == 1);
    CHECK(quantile_index(0.01, 100) == 99);
}

TEST_CASE("critical value is the ceil((1-alpha)B)-th order statistic of per-row k-max") {
    const RowMatrixXd boot = make_bootstrap(100, 5, 42);
    const CriticalValueOracle oracle(0.05, 2, boot);
    const std::vector<int> k_set{0, 2, 4};

    std::vector<double> stats(100);
    for (int r = 0; r < 100; ++r) {
        std::vector<double> vals{boot(r, 0), boot(r, 2), boot(r, 4)};
        std::sort(vals.begin(), vals.end(), std::greater<>());
        stats[static_cast<std::size_t>(r)] = vals[1];  // 2nd largest
    }
    std::sort(stats.begin(), stats.end());
    CHECK(oracle.critical_value(k_set) == stats[94]);  // 95th ascending

    // identical set, any call order: cached and identical
    const std::vector<int> reordered{4, 0, 2};
    CHECK(oracle.critical_value(reordered) == oracle.critical_value(k_set));
}

TEST_CASE("|K| = k: per-row statistic is the minimum over K") {
    const RowMatrixXd boot = make_bootstrap(250, 6, 43);
    const CriticalValueOracle oracle(0.1, 3, boot);
    const std::vector<int> k_set{1, 3, 5};

    std::vector<double> mins(250);
    for (int r = 0; r < 250; ++r) {
        mins[static_cast<std::size_t>(r)] = std::min({boot(r, 1), boot(r, 3), boot(r, 5)});
    }
    std::sort(mins.begin(), mins.end());
    const int idx = quantile_index(0.1, 250);
    CHECK(oracle.critical_value(k_set) == mins[static_cast<std::size_t>(idx - 1)]);
}

TEST_CASE("critical value rejects undersized or invalid sets") {
    const CriticalValueOracle oracle(0.1, 2, make_bootstrap(100, 4, 44));
    CHECK_THROWS_AS((void)oracle.critical_value(std::vector<int>{1}), std::invalid_argument);
    CHECK_THROWS_AS((void)oracle.critical_value(std::vector<int>{1, 9}), std::invalid_argument);
    CHECK_THROWS_AS((void)oracle.critical_value(std::vector<int>{1, 1}), std::invalid_argument);
}

TEST_CASE("monotonicity: nested index sets give exactly ordered critical values") {
    const CriticalValueOracle oracle(0.1, 2, make_bootstrap(300, 10, 45));
    std::mt19937_64 gen(46);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> perm(10);
        for (int j = 0; j < 10; ++j) perm[static_cast<std::size_t>(j)] = j;
        std::shuffle(perm.begin(), perm.end(), gen);
        const int inner_size = 2 + static_cast<int>(gen() % 8);
        const int outer_size = inner_size + static_cast<int>(gen() % (11 - inner_size));
        const std::vector<int> inner(perm.begin(), perm.begin() + inner_size);
        const std::vector<int> outer(perm.begin(), perm.begin() + outer_size);
        CHECK(oracle.critical_value(outer) >= oracle.critical_value(inner));
    }
}

TEST_CASE("stepdown: hand-traced 3-hypothesis max-T run with a stub oracle") {
    // stub: c_K = max over K of fixed per-index constants {5, 3, 1}
    const std::vector<double> constants{5.0, 3.0, 1.0};
    const CriticalValueFn stub = [&constants](const std::vector<int>& k_set) {
        double m = -1e300;
        for (int j : k_set) m = std::max(m, constants[static_cast<std::size_t>(j)]);
        return m;
    };
    Eigen::VectorXd t(3);
    t << 6.0, 4.0, 2.0;

    const StepDownResult result = stepdown_kfwer(t, stub, 1);
    REQUIRE(result.trace.size() == 3);
    CHECK(result.trace[0].critical_value == 5.0);
    CHECK(result.trace[0].newly_rejected == std::vector<int>{0});
    CHECK(result.trace[1].critical_value == 3.0);
    CHECK(result.trace[1].newly_rejected == std::vector<int>{1});
    CHECK(result.trace[2].critical_value == 1.0);
    CHECK(result.trace[2].newly_rejected == std::vector<int>{2});
    CHECK(result.rejected == std::vector<int>{0, 1, 2});
    CHECK(result.decisions == std::vector<Decision>(3, Decision::Reject));
}

TEST_CASE("stepdown: no rejections stops after one step") {
    const CriticalValueOracle oracle(0.1, 2, make_bootstrap(200, 4, 47));
    Eigen::VectorXd t = Eigen::VectorXd::Constant(4, -100.0);
    const StepDownResult result = stepdown_kfwer(t, oracle, 2, 0.1);
    CHECK(result.rejected.empty());
    CHECK(result.trace.size() == 1);
    CHECK(std::all_of(result.decisions.begin(), result.decisions.end(),
                      [](Decision d) { return d == Decision::FailToReject; }));
}

TEST_CASE("stepdown: everything enormous rejects everything within p steps") {
    const CriticalValueOracle oracle(0.1, 2, make_bootstrap(200, 6, 48));
    Eigen::VectorXd t = Eigen::VectorXd::Constant(6, 1e6);
    const StepDownResult result = stepdown_kfwer(t, oracle, 2, 0.1);
    CHECK(result.rejected == std::vector<int>{0, 1, 2, 3, 4, 5});
    CHECK(result.trace.size() <= 6);
}

TEST_CASE("stepdown trace critical values never increase") {
    std::mt19937_64 gen(49);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 50; ++trial) {
        const int p = 3 + static_cast<int>(gen() % 6);
        const int k = 1 + static_cast<int>(gen() % 3);
        if (k > p) continue;
        const CriticalValueOracle oracle(0.1, k, make_bootstrap(200, p, gen()));
        Eigen::VectorXd t(p);
        for (int j = 0; j < p; ++j) t[j] = 2.0 * normal(gen);
        const StepDownResult result = stepdown_kfwer(t, oracle, k, 0.1);
        for (std::size_t s = 1; s < result.trace.size(); ++s) {
            CHECK(result.trace[s].critical_value <= result.trace[s - 1].critical_value);
        }
    }
}

TEST_CASE("stepdown: raising one statistic never shrinks the rejected set") {
    std::mt19937_64 gen(50);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 50; ++trial) {
        const int p = 4 + static_cast<int>(gen() % 5);
        const int k = 1 + static_cast<int>(gen() % 2);
        const CriticalValueOracle oracle(0.1, k, make_bootstrap(150, p, gen()));
        Eigen::VectorXd t(p);
        for (int j = 0; j < p; ++j) t[j] = 1.5 * normal(gen);

        const auto before = stepdown_kfwer(t, oracle, k, 0.1).rejected;
        Eigen::VectorXd bumped = t;
        bumped[static_cast<int>(gen() % p)] += 1.0 + std::abs(normal(gen));
        const auto after = stepdown_kfwer(bumped, oracle, k, 0.1).rejected;
        CHECK(std::includes(after.begin(), after.end(), before.begin(), before.end()));
    }
}

TEST_CASE("stepdown k=1 equals the independent max-T reference") {
    std::mt19937_64 gen(51);
    for (int trial = 0; trial < 30; ++trial) {
        const DataMatrix data = make_gaussian_data(50, 5, gen(), 0.15);
        const Eigen::VectorXd t = compute_test_statistics(data);
        const RowMatrixXd boot = bootstrap_statistics(data, 300, gen());
        const CriticalValueOracle oracle(0.1, 1, boot);
        const auto ours = stepdown_kfwer(t, oracle, 1, 0.1).rejected;
        const auto reference = kmax_test::maxt_stepdown_reference(t, boot, 0.1);
        CHECK(ours == reference);
    }
}

TEST_CASE("simulate: deeply negative means reject nothing") {
    KfwerScenario scenario;
    scenario.model = build_covariance(CovFamily::ar1, 4, std::vector<double>{0.3});
    scenario.mu = Eigen::VectorXd::Constant(4, -10.0);
    scenario.n = 100;
    scenario.k = 2;
    scenario.alpha = 0.1;
    scenario.b = 100;
    scenario.n_sim = 50;
    scenario.seed = 52;
    const KfwerSummary summary = simulate_kfwer(scenario, 4);
    CHECK(summary.kfwer_hat == 0.0);
    CHECK(summary.mean_rejections == 0.0);
}

TEST_CASE("simulate: p = k all-null scenario controls the error rate") {
    KfwerScenario scenario;
    scenario.model = build_covariance(CovFamily::identity, 3, {});
    scenario.mu = Eigen::VectorXd::Zero(3);
    scenario.n = 50;
    scenario.k = 3;
    scenario.alpha = 0.1;
    scenario.b = 200;
    scenario.n_sim = 400;
    scenario.seed = 53;
    const KfwerSummary summary = simulate_kfwer(scenario, 4);
    const double se_at_alpha = std::sqrt(0.1 * 0.9 / 400.0);
    CHECK(summary.kfwer_hat <= 0.1 + 3.0 * se_at_alpha);
}

TEST_CASE("simulate is deterministic across worker counts") {
    KfwerScenario scenario;
    scenario.model = build_covariance(CovFamily::equicorrelated, 5, std::vector<double>{0.4});
    scenario.mu = Eigen::VectorXd::Zero(5);
    scenario.n = 40;
    scenario.k = 2;
    scenario.alpha = 0.1;
    scenario.b = 150;
    scenario.n_sim = 60;
    scenario.seed = 54;
    scenario.collect_null_critical_values = true;

    const KfwerSummary a = simulate_kfwer(scenario, 1);
    const KfwerSummary b = simulate_kfwer(scenario, 4);
    CHECK(a.kfwer_hat == b.kfwer_hat);
    CHECK(a.mean_rejections == b.mean_rejections);
    REQUIRE(a.sims.size() == b.sims.size());
    for (std::size_t i = 0; i < a.sims.size(); ++i) {
        CHECK(a.sims[i].n_rejected == b.sims[i].n_rejected);
        CHECK(a.sims[i].null_critical_value == b.sims[i].null_critical_value);
    }
}

TEST_CASE("stepdown enforces the subset enumeration cap") {
    // 30 of 40 hypotheses rejected in step 1, k = 16: C(30, 15) >> 1e5
    const CriticalValueFn stub = [](const std::vector<int>&) { return 0.5; };
    Eigen::VectorXd t(40);
    for (int j = 0; j < 40; ++j) t[j] = j < 30 ? 1.0 : 0.0;
    CHECK_THROWS_AS((void)stepdown_kfwer(t, stub, 16), std::runtime_error);
}

TEST_CASE("estimated upper bound dominates the empirical error rate") {
    KfwerScenario scenario;
    scenario.model = build_covariance(CovFamily::equicorrelated, 5, std::vector<double>{0.5});
    scenario.mu = Eigen::VectorXd::Zero(5);
    scenario.n = 50;
    scenario.k = 2;
    scenario.alpha = 0.1;
    scenario.b = 200;
    scenario.n_sim = 300;
    scenario.seed = 56;
    scenario.collect_null_critical_values = true;
    const KfwerSummary summary = simulate_kfwer(scenario, 4);

    // exact null law: T ~ N(0, Sigma); q_{1-alpha} of its k-max by direct MC
    kmax::GaussianSampler direct(scenario.model, 57);
    const double q_direct = direct_kmax_quantile(direct, 2, 0.1, 200000, 4);

    std::vector<double> chats;
    for (const auto& rec : summary.sims) chats.push_back(rec.null_critical_value);
    const GammaDelta gd = estimate_gamma_delta(chats, q_direct, 0.05);

    const auto e_max = kmax::estimate_e_max_norm(direct, 100000, 4);
    const double bound = kfwer_upper_bound(0.1, 2, gd.gamma, e_max.value, gd.delta);
    CHECK(bound >= 0.1);
    CHECK(bound >= summary.kfwer_hat);
}

TEST_CASE("upper bound formula") {
    CHECK(kfwer_upper_bound(0.1, 2, 0.0, 123.0, 0.0) == 0.1);
    CHECK(kfwer_upper_bound(0.05, 1, 0.01, 2.0, 0.01) == doctest::Approx(0.12).epsilon(1e-12));
    CHECK_THROWS_AS((void)kfwer_upper_bound(0.1, 2, -0.1, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("gamma/delta estimation from quantile gaps") {
    const std::vector<double> chats{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const GammaDelta gd = estimate_gamma_delta(chats, 5.0, 0.2);
    // beta sorted: -5..4; ceil(0.8 * 10) = 8 -> beta_(8) = 2
    CHECK(gd.gamma == 2.0);
    CHECK(gd.delta == doctest::Approx(0.3));  // {2, 3, 4} are >= gamma

    // all bootstrap critical values above the direct quantile: gamma clamps at 0
    const std::vector<double> high{10, 11, 12, 13, 14};
    const GammaDelta clamped = estimate_gamma_delta(high, 5.0, 0.5);
    CHECK(clamped.gamma == 0.0);
    CHECK(clamped.delta == 0.0);
}

TEST_CASE("direct k-max quantile against the normal CDF") {
    const auto model = build_covariance(CovFamily::identity, 1, {});
    kmax::GaussianSampler sampler(model, 55);
    const double q = direct_kmax_quantile(sampler, 1, 0.05, 400000, 4);
    CHECK(q == doctest::Approx(1.6448536269514722).epsilon(5e-3));
}

}  // TEST_SUITE
