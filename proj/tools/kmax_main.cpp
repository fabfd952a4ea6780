#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kmax/anticonc.hpp"
#include "kmax/config.hpp"
#include "kmax/multitest.hpp"
#include "kmax/report.hpp"
#include "kmax/runner.hpp"
#include "kmax/version.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override,
            const std::optional<std::uint64_t>& seed_override, int workers_override) {
    kmax::cli::RunConfig config = kmax::cli::parse_config(config_path);
    if (!out_override.empty()) config.out_dir = out_override;
    if (seed_override) config.seed = *seed_override;
    if (workers_override >= 0) config.workers = workers_override;

    const kmax::cli::ReportBundle bundle = kmax::cli::run(config);
    std::cout << "wrote " << config.out_dir << "/{summary.json,anticonc.csv,kfwer.csv,diagnostics.csv}\n";
    std::cout << (bundle.all_passed ? "all scenario checks passed" : "some scenario checks FAILED") << "\n";
    if (bundle.n_errors > 0) {
        std::cerr << bundle.n_errors << " scenario(s) errored; see summary.json\n";
        return 1;
    }
    return 0;
}

int cmd_verify(const std::string& dir) {
    const kmax::cli::VerifyResult result = kmax::cli::verify_reports(dir);
    for (const auto& issue : result.issues) {
        std::cerr << issue.file << ": scenario '" << issue.scenario_id << "': " << issue.message << "\n";
    }
    std::cout << "verify: " << result.rows_checked << " rows checked, "
              << result.issues.size() << " failures\n";
    return result.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo verification of anticoncentration bounds for Gaussian order statistics "
                 "and bootstrap step-down k-FWER testing"};
    app.set_version_flag("--version", KMAX_VERSION);
    app.require_subcommand(1);

    // run
    std::string config_path, out_override;
    std::optional<std::uint64_t> seed_override;
    int workers_override = -1;
    auto* run_cmd = app.add_subcommand("run", "Run all scenarios from a config file");
    run_cmd->add_option("--config", config_path, "Path to the JSON config")->required();
    run_cmd->add_option("--out", out_override, "Output directory (overrides the config)");
    run_cmd->add_option("--seed", seed_override, "Seed override");
    run_cmd->add_option("--workers", workers_override, "Worker count override (0 = hardware)");

    // verify
    std::string verify_dir;
    auto* verify_cmd = app.add_subcommand("verify", "Recompute pass/fail from a completed output directory");
    verify_cmd->add_option("--out", verify_dir, "Output directory to verify")->required();

    // bound: pure formula evaluation, no simulation
    auto* bound_cmd = app.add_subcommand("bound", "Evaluate a bound formula from flags");
    bound_cmd->require_subcommand(1);

    double b_epsilon = 0.0, b_e_max = 0.0, b_min_var = 1.0, b_alpha = 0.0, b_gamma = 0.0, b_delta = 0.0;
    int b_k = 1, b_p = 1;
    auto* t1 = bound_cmd->add_subcommand("theorem1", "2 epsilon k (1 + E||X||_inf)");
    t1->add_option("--epsilon", b_epsilon)->required();
    t1->add_option("--k", b_k)->required();
    t1->add_option("--e-max-norm", b_e_max)->required();

    auto* nz = bound_cmd->add_subcommand("nazarov", "(epsilon / sqrt(min var W)) (sqrt(2 ln C(p,k)) + 2)");
    nz->add_option("--epsilon", b_epsilon)->required();
    nz->add_option("--p", b_p)->required();
    nz->add_option("--k", b_k)->required();
    nz->add_option("--min-var-w", b_min_var)->required();

    auto* ku = bound_cmd->add_subcommand("kfwer-upper", "alpha + 2 k gamma (1 + E||U||_inf) + delta");
    ku->add_option("--alpha", b_alpha)->required();
    ku->add_option("--k", b_k)->required();
    ku->add_option("--gamma", b_gamma)->required();
    ku->add_option("--e-max-norm", b_e_max)->required();
    ku->add_option("--delta", b_delta)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(config_path, out_override, seed_override, workers_override);
        if (verify_cmd->parsed()) return cmd_verify(verify_dir);
        if (t1->parsed()) {
            std::cout << kmax::cli::format_number(kmax::anticonc_bound(b_epsilon, b_k, b_e_max)) << "\n";
            return 0;
        }
        if (nz->parsed()) {
            std::cout << kmax::cli::format_number(kmax::nazarov_bound(b_epsilon, b_p, b_k, b_min_var)) << "\n";
            return 0;
        }
        if (ku->parsed()) {
            std::cout << kmax::cli::format_number(
                             kmax::mht::kfwer_upper_bound(b_alpha, b_k, b_gamma, b_e_max, b_delta))
                      << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
