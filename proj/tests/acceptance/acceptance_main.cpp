// Acceptance suite: one criterion per function, each printing a PASS/FAIL
// line. Run with no arguments for all criteria or with a number for one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kmax/anticonc.hpp"
#include "kmax/config.hpp"
#include "kmax/diagnostics.hpp"
#include "kmax/multitest.hpp"
#include "kmax/order_stats.hpp"
#include "kmax/parallel.hpp"
#include "kmax/runner.hpp"
#include "../support/maxt_reference.hpp"

using namespace kmax;

namespace {

int workers() { return std::min(8, resolve_workers(0)); }

struct ModelCase {
    std::string name;
    CovFamily family;
    std::vector<double> params;
};

CovarianceModel make_model(const ModelCase& mc, int p) {
    return build_covariance(mc.family, p, mc.params);
}

// ---------------------------------------------------------------- criterion 1
bool criterion_domination_grid(std::ostream& log) {
    const std::vector<ModelCase> families = {
        {"identity", CovFamily::identity, {}},
        {"equicorrelated(0.5)", CovFamily::equicorrelated, {0.5}},
        {"equicorrelated(0.9)", CovFamily::equicorrelated, {0.9}},
        {"equicorrelated(1.0)", CovFamily::equicorrelated, {1.0}},
        {"ar1(0.7)", CovFamily::ar1, {0.7}},
    };
    const std::int64_t n = 200000;
    bool ok = true;
    int combos = 0;

    for (const auto& mc : families) {
        for (int p : {2, 8, 64}) {
            const CovarianceModel model = make_model(mc, p);
            for (int k : {1, 2, 5}) {
                if (k > p) continue;
                const std::string tag = mc.name + ",p=" + std::to_string(p) + ",k=" + std::to_string(k);
                GaussianSampler sampler(model, fnv1a64(tag));
                const MeanEstimate em = estimate_e_max_norm(sampler, n, workers());
                for (double eps : {0.01, 0.1}) {
                    const auto sup = estimate_sup_interval_prob(sampler, k, eps, default_grid(p, eps),
                                                                n, workers());
                    const double bound = anticonc_bound(eps, k, em.value);
                    const double margin = 3.0 * (sup.se + 2.0 * eps * k * em.se);
                    ++combos;
                    if (sup.sup_hat > bound + margin) {
                        ok = false;
                        log << "  VIOLATION " << tag << ",eps=" << eps << ": sup_hat=" << sup.sup_hat
                            << " > bound=" << bound << " + margin=" << margin << "\n";
                    }
                }
            }
        }
    }
    log << "  " << combos << " (family, p, k, eps) combinations checked\n";
    return ok;
}

// ---------------------------------------------------------------- criterion 2
bool criterion_univariate_exact(std::ostream& log) {
    const CovarianceModel model = build_covariance(CovFamily::identity, 1, {});
    GaussianSampler sampler(model, 0xACC2);
    const auto est = estimate_sup_interval_prob(sampler, 1, 0.1, default_grid(1, 0.1), 1000000, workers());
    const double exact = 0.0398776116767449;  // 2 Phi(0.05) - 1
    const double err = std::abs(est.sup_hat - exact);
    log << "  sup_hat=" << est.sup_hat << " exact=" << exact << " |diff|=" << err
        << " 3se=" << 3.0 * est.se << "\n";
    return err <= 3.0 * est.se;
}

// ---------------------------------------------------------------- criterion 3
bool criterion_coupling(std::ostream& log) {
    bool ok = true;
    const auto identity4 = build_covariance(CovFamily::identity, 4, {});
    const auto ar1_8 = build_covariance(CovFamily::ar1, 8, std::vector<double>{0.7});

    int case_id = 0;
    for (const auto* model : {&identity4, &ar1_8}) {
        for (int k : {2, 4}) {
            GaussianSampler sampler(*model, 0xC0 + case_id++);
            const auto est = coupling_rate(sampler, k, 100000, workers());
            const double err = std::abs(est.estimate - 1.0 / k);
            log << "  " << model->describe() << " k=" << k << ": rate=" << est.estimate
                << " |rate-1/k|=" << err << " 3se=" << 3.0 * est.se << "\n";
            ok = ok && err <= 3.0 * est.se;
        }
        GaussianSampler sampler(*model, 0xC0 + case_id++);
        const auto one = coupling_rate(sampler, 1, 100000, workers());
        log << "  " << model->describe() << " k=1: rate=" << one.estimate << " (exact 1 required)\n";
        ok = ok && one.estimate == 1.0;
    }
    return ok;
}

// ---------------------------------------------------------------- criterion 4
bool criterion_density_diagnostics(std::ostream& log) {
    bool ok = true;
    const auto identity8 = build_covariance(CovFamily::identity, 8, {});
    const auto equi9 = build_covariance(CovFamily::equicorrelated, 8, std::vector<double>{0.9});

    int case_id = 0;
    for (const auto* model : {&identity8, &equi9}) {
        for (int k : {2, 3}) {
            GaussianSampler sampler(*model, 0xD0 + case_id++);
            const KTildeSample sample = draw_ktilde_sample(sampler, k, 1000000, workers());
            const auto mono = gtilde_monotonicity_check(sample, 40);
            const auto mills = density_mills_check(sample, 40);
            log << "  " << model->describe() << " k=" << k
                << ": gtilde worst=" << mono.worst_value << " (3se=" << 3.0 * mono.worst_se << ") "
                << (mono.pass ? "pass" : "FAIL") << "; mills worst=" << mills.worst_value
                << " (3se=" << 3.0 * mills.worst_se << ") " << (mills.pass ? "pass" : "FAIL") << "\n";
            ok = ok && mono.pass && mills.pass;
        }
    }
    return ok;
}

// ---------------------------------------------------------------- criterion 5
bool criterion_subset_oracle(std::ostream& log) {
    std::mt19937_64 gen(0xACC5);
    std::normal_distribution<double> normal;
    RngStream rng(0xACC5);
    int checked = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const int p = 2 + static_cast<int>(gen() % 7);  // p in [2, 8]
        const int k = 1 + static_cast<int>(gen() % static_cast<std::uint64_t>(std::min(3, p)));
        std::vector<double> x(static_cast<std::size_t>(p));
        for (auto& v : x) v = normal(gen);

        const auto draw = k_tilde_max(x, k, rng);
        const auto oracle = brute_force_astar(x, k);
        const bool member =
            std::find(oracle.begin(), oracle.end(), draw.selection.a_star) != oracle.end();
        if (!member || (oracle.size() == 1 && draw.selection.a_star != oracle.front())) {
            log << "  VIOLATION at trial " << trial << " (p=" << p << ", k=" << k << ")\n";
            return false;
        }
        ++checked;
    }
    log << "  " << checked << " random vectors, zero violations\n";
    return true;
}

// ---------------------------------------------------------------- criterion 6
bool criterion_nazarov_inputs(std::ostream& log) {
    const auto model = build_covariance(CovFamily::identity, 2, {});
    GaussianSampler sampler(model, 0xACC6);
    const auto est = estimate_w_min_var(sampler, 2, 200000, workers());
    const double closed_form = 0.6816901138162093;  // 1 - 1/pi
    const double err = std::abs(est.value - closed_form);
    log << "  min var(W) hat=" << est.value << " closed form=" << closed_form
        << " |diff|=" << err << " 3se=" << 3.0 * est.se << "\n";
    bool ok = err <= 3.0 * est.se;

    const double formula = nazarov_bound(0.1, 5, 1, 1.0);
    log << "  nazarov_bound(0.1, 5, 1, 1.0)=" << formula << " (expect 0.379412 +- 1e-6)\n";
    ok = ok && std::abs(formula - 0.379412) <= 1e-6;
    return ok;
}

// ---------------------------------------------------------------- criterion 7
bool criterion_kfwer_control(std::ostream& log) {
    bool ok = true;
    for (const bool equicorrelated : {true, false}) {
        mht::KfwerScenario scenario;
        scenario.model = equicorrelated
                             ? build_covariance(CovFamily::equicorrelated, 10, std::vector<double>{0.5})
                             : build_covariance(CovFamily::identity, 10, {});
        scenario.mu = Eigen::VectorXd::Zero(10);
        scenario.n = 100;
        scenario.k = 2;
        scenario.alpha = 0.1;
        scenario.b = 500;
        scenario.n_sim = 2000;
        scenario.seed = equicorrelated ? 0xACC7 : 0xACC8;
        const auto summary = mht::simulate_kfwer(scenario, workers());
        log << "  " << scenario.model.describe() << ": kfwer_hat=" << summary.kfwer_hat
            << " (limit 0.13), mean rejections=" << summary.mean_rejections << "\n";
        ok = ok && summary.kfwer_hat <= 0.13;
    }
    return ok;
}

// ---------------------------------------------------------------- criterion 8
bool criterion_critical_value_monotonicity(std::ostream& log) {
    bool ok = true;
    std::mt19937_64 gen(0xACC9);
    for (const bool equicorrelated : {true, false}) {
        const auto model = equicorrelated
                               ? build_covariance(CovFamily::equicorrelated, 10, std::vector<double>{0.5})
                               : build_covariance(CovFamily::identity, 10, {});
        GaussianSampler sampler(model, gen());

        // one simulated dataset per scenario, bootstrap exactly as in the run
        mht::DataMatrix data;
        data.u.resize(100, 10);
        {
            RngStream rng(gen());
            Eigen::VectorXd z(10);
            for (int i = 0; i < 100; ++i) {
                for (int j = 0; j < 10; ++j) z[j] = rng.normal();
                data.u.row(i) = (sampler.factor() * z).transpose();
            }
        }
        const mht::CriticalValueOracle oracle(0.1, 2, mht::bootstrap_statistics(data, 500, gen()));

        int violations = 0;
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<int> perm(10);
            for (int j = 0; j < 10; ++j) perm[static_cast<std::size_t>(j)] = j;
            std::shuffle(perm.begin(), perm.end(), gen);
            const int inner = 2 + static_cast<int>(gen() % 8);
            const int outer = inner + 1 + static_cast<int>(gen() % (10 - inner));
            const std::vector<int> i_set(perm.begin(), perm.begin() + inner);
            const std::vector<int> k_set(perm.begin(), perm.begin() + outer);
            if (oracle.critical_value(k_set) < oracle.critical_value(i_set)) ++violations;
        }
        log << "  " << model.describe() << ": 100 nested pairs, " << violations << " violations\n";
        ok = ok && violations == 0;
    }
    return ok;
}

// ---------------------------------------------------------------- criterion 9
bool criterion_k1_reduction(std::ostream& log) {
    std::mt19937_64 gen(0xACCA);
    std::normal_distribution<double> normal;
    int agreements = 0;
    for (int trial = 0; trial < 100; ++trial) {
        mht::DataMatrix data;
        data.u.resize(50, 5);
        const double shift = 0.3 * normal(gen);
        for (int i = 0; i < 50; ++i)
            for (int j = 0; j < 5; ++j) data.u(i, j) = shift * j / 4.0 + normal(gen);

        const Eigen::VectorXd t = mht::compute_test_statistics(data);
        const RowMatrixXd boot = mht::bootstrap_statistics(data, 300, gen());
        const mht::CriticalValueOracle oracle(0.1, 1, boot);
        const auto ours = mht::stepdown_kfwer(t, oracle, 1, 0.1).rejected;
        const auto reference = kmax_test::maxt_stepdown_reference(t, boot, 0.1);
        if (ours != reference) {
            log << "  MISMATCH at trial " << trial << "\n";
            return false;
        }
        ++agreements;
    }
    log << "  " << agreements << " datasets, rejected sets identical\n";
    return true;
}

// --------------------------------------------------------------- criterion 10
bool criterion_determinism(std::ostream& log) {
    const std::string config_text = R"({"seed": 77001, "scenarios": [
      {"id": "det_anticonc", "kind": "anticonc", "family": "identity", "p": 4, "k": 2,
       "epsilon": 0.1, "n": 20000},
      {"id": "det_coupling", "kind": "coupling", "family": "ar1", "p": 4, "rho": 0.5, "k": 2, "n": 20000},
      {"id": "det_density", "kind": "density", "family": "identity", "p": 4, "k": 2,
       "m": 100000, "bins": 20},
      {"id": "det_nazarov", "kind": "nazarov", "family": "identity", "p": 2, "k": 2,
       "epsilon": 0.1, "n": 20000, "expect_min_var_w": 0.6816901138162093},
      {"id": "det_kfwer", "kind": "kfwer", "family": "identity", "p": 5, "k": 2, "alpha": 0.1,
       "n": 40, "b": 150, "n_sim": 100, "estimate_bound": true, "direct_draws": 20000}
    ]})";

    namespace fs = std::filesystem;
    auto read = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };

    std::vector<fs::path> dirs;
    for (int w : {1, 4, 7}) {
        cli::RunConfig config = cli::parse_config_text(config_text);
        const fs::path dir = fs::temp_directory_path() / ("kmax_acceptance_det_" + std::to_string(w));
        fs::remove_all(dir);
        config.out_dir = dir.string();
        config.workers = w;
        (void)cli::run(config);
        dirs.push_back(dir);
    }

    bool ok = true;
    for (const char* name : {"anticonc.csv", "kfwer.csv", "diagnostics.csv"}) {
        const std::string reference = read(dirs.front() / name);
        for (std::size_t d = 1; d < dirs.size(); ++d) {
            if (read(dirs[d] / name) != reference) {
                ok = false;
                log << "  " << name << " differs between worker counts 1 and "
                    << (d == 1 ? 4 : 7) << "\n";
            }
        }
    }
    log << "  worker counts {1, 4, 7} produced " << (ok ? "identical" : "DIFFERENT")
        << " CSV bytes\n";
    for (const auto& dir : dirs) fs::remove_all(dir);
    return ok;
}

struct Criterion {
    int number;
    std::string description;
    std::function<bool(std::ostream&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {1, "Theorem-type bound dominates the MC sup over the family/p/k/eps grid", criterion_domination_grid},
        {2, "univariate exact check: sup within 3 SE of 2 Phi(0.05) - 1", criterion_univariate_exact},
        {3, "coupling rate matches 1/k (exact 1 at k = 1)", criterion_coupling},
        {4, "density diagnostics pass for I8 and equicorrelated(0.9)", criterion_density_diagnostics},
        {5, "top-k selection always lies in the brute-force argmax family", criterion_subset_oracle},
        {6, "Nazarov inputs: min var(W) closed form and formula arithmetic", criterion_nazarov_inputs},
        {7, "k-FWER control at alpha = 0.1 (limit 0.13) for both scenarios", criterion_kfwer_control},
        {8, "critical-value monotonicity on nested sets, zero violations", criterion_critical_value_monotonicity},
        {9, "k = 1 step-down equals the independent max-T reference", criterion_k1_reduction},
        {10, "byte-identical CSVs across worker counts", criterion_determinism},
    };

    int selected = 0;
    if (argc > 1) {
        selected = std::atoi(argv[1]);
        if (selected < 1 || selected > static_cast<int>(criteria.size())) {
            std::cerr << "usage: " << argv[0] << " [1-" << criteria.size() << "]\n";
            return 2;
        }
    }

    int failures = 0;
    for (const auto& criterion : criteria) {
        if (selected != 0 && criterion.number != selected) continue;
        std::ostringstream log;
        const auto start = std::chrono::steady_clock::now();
        bool pass = false;
        try {
            pass = criterion.run(log);
        } catch (const std::exception& e) {
            log << "  exception: " << e.what() << "\n";
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] criterion %d: %s (%.1fs)\n", pass ? "PASS" : "FAIL", criterion.number,
                    criterion.description.c_str(), seconds);
        std::fputs(log.str().c_str(), stdout);
        if (!pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
