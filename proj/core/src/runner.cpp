#include "kmax/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>

#include <json.hpp>

#include "kmax/anticonc.hpp"
#include "kmax/diagnostics.hpp"
#include "kmax/multitest.hpp"
#include "kmax/order_stats.hpp"
#include "kmax/parallel.hpp"
#include "kmax/version.hpp"

namespace kmax::cli {

using nlohmann::ordered_json;

namespace {

std::string pass_field(bool pass) { return pass ? "1" : "0"; }

double json_num(double v) { return round12(v); }

struct ScenarioOutput {
    std::vector<std::vector<std::string>> anticonc_rows;
    std::vector<std::vector<std::string>> kfwer_rows;
    std::vector<std::vector<std::string>> diagnostics_rows;
    ordered_json summary;
    bool pass = false;
    bool errored = false;
    double seconds = 0.0;
};

ordered_json model_inputs(const Scenario& s) {
    ordered_json inputs;
    inputs["family"] = kmax::to_string(s.model.family);
    inputs["params"] = s.model.build().params_string();
    inputs["p"] = s.model.p;
    inputs["k"] = s.k;
    return inputs;
}

void run_anticonc(const Scenario& s, const CovarianceModel& model, std::uint64_t scen_key,
                  std::uint64_t seed, int workers, ScenarioOutput& out) {
    GaussianSampler sampler(model, scen_key);
    const GridSpec grid = s.grid.value_or(default_grid(model.p, s.epsilon));
    const ConcentrationEstimate ce =
        estimate_sup_interval_prob(sampler, s.k, s.epsilon, grid, s.n, workers);
    const BoundReport bounds = evaluate_bounds(sampler, s.k, s.epsilon, s.n, workers);

    const double sup_hat = round12(ce.sup_hat);
    const double sup_se = round12(ce.se);
    const double e_hat = round12(bounds.e_max_norm.value);
    const double e_se = round12(bounds.e_max_norm.se);
    const double bound_r = round12(bounds.kmax_bound);
    out.pass = anticonc_row_pass(sup_hat, sup_se, s.epsilon, s.k, e_se, bound_r);

    out.anticonc_rows.push_back({
        s.id, model.family_name(), model.params_string(), std::to_string(model.p),
        std::to_string(s.k), format_number(s.epsilon), std::to_string(s.n),
        format_number(sup_hat), format_number(sup_se), format_number(round12(ce.argmax_y)),
        format_number(e_hat), format_number(e_se), format_number(bound_r),
        bounds.nazarov ? format_number(round12(*bounds.nazarov)) : "",
        bounds.min_var_w ? format_number(round12(bounds.min_var_w->value)) : "",
        pass_field(out.pass), std::to_string(seed)});

    ordered_json results;
    results["sup_hat"] = json_num(ce.sup_hat);
    results["sup_se"] = json_num(ce.se);
    results["argmax_y"] = json_num(ce.argmax_y);
    results["grid"] = {{"y_min", json_num(grid.y_min)}, {"y_max", json_num(grid.y_max)}, {"step", json_num(grid.step)}};
    results["e_max_norm_hat"] = json_num(bounds.e_max_norm.value);
    results["e_max_norm_se"] = json_num(bounds.e_max_norm.se);
    results["e_max_norm_ceiling"] = json_num(bounds.e_max_norm.ceiling);
    results["e_max_norm_exceeds_ceiling"] = bounds.e_max_norm.exceeds_ceiling;
    results["bound_theorem1"] = json_num(bounds.kmax_bound);
    if (bounds.nazarov) {
        results["bound_nazarov"] = json_num(*bounds.nazarov);
        results["min_var_w_hat"] = json_num(bounds.min_var_w->value);
        results["min_var_w_se"] = json_num(bounds.min_var_w->se);
    }
    out.summary["inputs"]["epsilon"] = s.epsilon;
    out.summary["inputs"]["n"] = s.n;
    out.summary["results"] = std::move(results);
}

void run_coupling(const Scenario& s, const CovarianceModel& model, std::uint64_t scen_key,
                  std::uint64_t seed, int workers, ScenarioOutput& out) {
    GaussianSampler sampler(model, scen_key);
    const RateEstimate rate = coupling_rate(sampler, s.k, s.n, workers);
    const double reference = 1.0 / s.k;
    const bool degenerate = smallest_eigenvalue(model.entries) < 1e-10;
    const std::string mode = s.k == 1 ? "exact_one" : degenerate ? "lower" : "two_sided";

    const double value = round12(rate.estimate);
    const double se = round12(rate.se);
    const double ref = round12(reference);
    out.pass = diagnostics_row_pass(mode, value, se, ref);

    out.diagnostics_rows.push_back({
        s.id, "coupling_rate", model.family_name(), model.params_string(), std::to_string(model.p),
        std::to_string(s.k), std::to_string(s.n), "", format_number(value), format_number(se),
        format_number(ref), mode, pass_field(out.pass), std::to_string(seed)});

    ordered_json results;
    results["coupling_rate"] = value;
    results["se"] = se;
    results["reference"] = ref;
    results["mode"] = mode;
    out.summary["inputs"]["n"] = s.n;
    out.summary["results"] = std::move(results);
}

void run_density(const Scenario& s, const CovarianceModel& model, std::uint64_t scen_key,
                 std::uint64_t seed, int workers, ScenarioOutput& out) {
    GaussianSampler sampler(model, scen_key);
    const KTildeSample sample = draw_ktilde_sample(sampler, s.k, s.m, workers);

    out.pass = true;
    ordered_json results;
    for (const DiagnosticReport& report :
         {gtilde_monotonicity_check(sample, s.bins), density_mills_check(sample, s.bins)}) {
        const double value = round12(report.worst_value);
        const double se = round12(report.worst_se);
        const bool pass = diagnostics_row_pass("band3", value, se, 0.0);
        out.pass = out.pass && pass;

        out.diagnostics_rows.push_back({
            s.id, report.check, model.family_name(), model.params_string(), std::to_string(model.p),
            std::to_string(s.k), std::to_string(s.m), std::to_string(s.bins), format_number(value),
            format_number(se), "0", "band3", pass_field(pass), std::to_string(seed)});

        ordered_json entry;
        entry["pass"] = pass;
        entry["worst_value"] = value;
        entry["worst_se"] = se;
        entry["worst_y"] = json_num(report.worst_y);
        entry["grid"] = {{"lo", json_num(report.grid_lo)}, {"hi", json_num(report.grid_hi)}};
        results[report.check] = std::move(entry);
    }
    out.summary["inputs"]["m"] = s.m;
    out.summary["inputs"]["bins"] = s.bins;
    out.summary["results"] = std::move(results);
}

void run_nazarov(const Scenario& s, const CovarianceModel& model, std::uint64_t scen_key,
                 std::uint64_t seed, int workers, ScenarioOutput& out) {
    GaussianSampler sampler(model, scen_key);
    const VarMinEstimate wvar = estimate_w_min_var(sampler, s.k, s.n, workers);
    const double bound = nazarov_bound(s.epsilon, model.p, s.k, wvar.value);

    const double value = round12(wvar.value);
    const double se = round12(wvar.se);
    const std::string mode = s.expect_min_var_w ? "two_sided" : "info";
    const double ref = s.expect_min_var_w ? round12(*s.expect_min_var_w) : 0.0;
    out.pass = diagnostics_row_pass(mode, value, se, ref);

    out.diagnostics_rows.push_back({
        s.id, "w_min_var", model.family_name(), model.params_string(), std::to_string(model.p),
        std::to_string(s.k), std::to_string(s.n), "", format_number(value), format_number(se),
        s.expect_min_var_w ? format_number(ref) : "", mode, pass_field(out.pass), std::to_string(seed)});
    out.diagnostics_rows.push_back({
        s.id, "nazarov_bound", model.family_name(), model.params_string(), std::to_string(model.p),
        std::to_string(s.k), std::to_string(s.n), "", format_number(round12(bound)), "", "", "info",
        "1", std::to_string(seed)});

    ordered_json results;
    results["min_var_w_hat"] = value;
    results["min_var_w_se"] = se;
    results["argmin_subset"] = wvar.argmin_subset;
    results["bound_nazarov"] = json_num(bound);
    if (s.expect_min_var_w) results["expect_min_var_w"] = ref;
    out.summary["inputs"]["epsilon"] = s.epsilon;
    out.summary["inputs"]["n"] = s.n;
    out.summary["results"] = std::move(results);
}

void run_kfwer(const Scenario& s, const CovarianceModel& model, std::uint64_t scen_key,
               std::uint64_t seed, int workers, ScenarioOutput& out) {
    mht::KfwerScenario scenario;
    scenario.mu = Eigen::Map<const Eigen::VectorXd>(s.mu.data(), static_cast<Eigen::Index>(s.mu.size()));
    scenario.model = model;
    scenario.n = static_cast<int>(s.n);
    scenario.k = s.k;
    scenario.alpha = s.alpha;
    scenario.b = s.b;
    scenario.n_sim = s.n_sim;
    scenario.seed = scen_key;
    scenario.collect_null_critical_values = s.estimate_bound;

    const mht::KfwerSummary summary = mht::simulate_kfwer(scenario, workers);

    std::vector<int> true_nulls;
    for (int j = 0; j < model.p; ++j) {
        if (scenario.mu[j] <= 0.0) true_nulls.push_back(j);
    }

    std::optional<double> bound;
    ordered_json bound_detail;
    if (s.estimate_bound && static_cast<int>(true_nulls.size()) >= s.k) {
        // Direct Monte Carlo of the exact null statistic law: T_I is Gaussian
        // with mean sqrt(n) mu_I and the I-submatrix covariance.
        Eigen::MatrixXd sub(true_nulls.size(), true_nulls.size());
        Eigen::VectorXd shift(static_cast<Eigen::Index>(true_nulls.size()));
        for (std::size_t a = 0; a < true_nulls.size(); ++a) {
            shift[static_cast<Eigen::Index>(a)] =
                std::sqrt(static_cast<double>(s.n)) * scenario.mu[true_nulls[a]];
            for (std::size_t c = 0; c < true_nulls.size(); ++c) {
                sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) =
                    model.entries(true_nulls[a], true_nulls[c]);
            }
        }
        GaussianSampler null_sampler(build_explicit_covariance(sub), derive_stream(scen_key, 0xD1));
        const double q_direct =
            mht::direct_kmax_quantile(null_sampler, shift, s.k, s.alpha, s.direct_draws, workers);

        std::vector<double> chats;
        for (const auto& rec : summary.sims) {
            if (!std::isnan(rec.null_critical_value)) chats.push_back(rec.null_critical_value);
        }
        const mht::GammaDelta gd = mht::estimate_gamma_delta(chats, q_direct, s.delta_target);

        // E||U||_inf over the full data vector, mean mu included.
        GaussianSampler full_sampler(model, derive_stream(scen_key, 0xD2));
        std::vector<double> maxabs(static_cast<std::size_t>(s.direct_draws));
        full_sampler.for_each_draw(s.direct_draws, workers, kSaltEMaxNorm,
                                   [&](std::int64_t i, std::span<const double> row, RngStream&) {
                                       double m = 0.0;
                                       for (std::size_t j = 0; j < row.size(); ++j) {
                                           m = std::max(m, std::abs(scenario.mu[static_cast<Eigen::Index>(j)] + row[j]));
                                       }
                                       maxabs[static_cast<std::size_t>(i)] = m;
                                   });
        double e_max = 0.0;
        for (double v : maxabs) e_max += v;
        e_max /= static_cast<double>(maxabs.size());

        bound = mht::kfwer_upper_bound(s.alpha, s.k, gd.gamma, e_max, gd.delta);
        bound_detail["q_direct"] = json_num(q_direct);
        bound_detail["gamma"] = json_num(gd.gamma);
        bound_detail["delta"] = json_num(gd.delta);
        bound_detail["e_max_norm_hat"] = json_num(e_max);
        bound_detail["delta_target"] = s.delta_target;
        bound_detail["direct_draws"] = s.direct_draws;
    }

    const double kfwer_hat = round12(summary.kfwer_hat);
    out.pass = kfwer_row_pass(kfwer_hat, s.alpha, s.n_sim);

    out.kfwer_rows.push_back({
        s.id, std::to_string(s.n), std::to_string(model.p), std::to_string(s.k),
        format_number(s.alpha), std::to_string(s.b), std::to_string(s.n_sim),
        model.params_string(), format_number(kfwer_hat), format_number(round12(summary.se)),
        format_number(round12(summary.mean_rejections)),
        format_number(round12(summary.mean_false_rejections)),
        bound ? format_number(round12(*bound)) : "", pass_field(out.pass), std::to_string(seed)});

    ordered_json results;
    results["kfwer_hat"] = kfwer_hat;
    results["kfwer_se"] = json_num(summary.se);
    results["mean_rejections"] = json_num(summary.mean_rejections);
    results["mean_false_rejections"] = json_num(summary.mean_false_rejections);
    results["n_true_nulls"] = static_cast<int>(true_nulls.size());
    if (bound) {
        results["bound_formula_value"] = json_num(*bound);
        results["bound_detail"] = std::move(bound_detail);
    }
    ordered_json sims = ordered_json::array();
    for (const auto& rec : summary.sims) {
        sims.push_back({{"rejected", rec.n_rejected},
                        {"false_rejected", rec.n_false_rejected},
                        {"steps", rec.steps}});
    }
    results["sims"] = std::move(sims);
    out.summary["inputs"]["n"] = s.n;
    out.summary["inputs"]["alpha"] = s.alpha;
    out.summary["inputs"]["b"] = s.b;
    out.summary["inputs"]["n_sim"] = s.n_sim;
    out.summary["inputs"]["mu"] = s.mu;
    out.summary["results"] = std::move(results);
}

ScenarioOutput run_scenario(const Scenario& s, std::uint64_t seed, int workers) {
    ScenarioOutput out;
    out.summary["id"] = s.id;
    out.summary["kind"] = to_string(s.kind);
    const auto start = std::chrono::steady_clock::now();

    try {
        const CovarianceModel model = s.model.build();
        out.summary["inputs"] = model_inputs(s);
        const std::uint64_t scen_key = derive_stream(seed, fnv1a64(s.id));
        switch (s.kind) {
            case ScenarioKind::anticonc: run_anticonc(s, model, scen_key, seed, workers, out); break;
            case ScenarioKind::coupling: run_coupling(s, model, scen_key, seed, workers, out); break;
            case ScenarioKind::density: run_density(s, model, scen_key, seed, workers, out); break;
            case ScenarioKind::nazarov: run_nazarov(s, model, scen_key, seed, workers, out); break;
            case ScenarioKind::kfwer: run_kfwer(s, model, scen_key, seed, workers, out); break;
        }
        out.summary["pass"] = out.pass;
    } catch (const std::exception& e) {
        out.errored = true;
        out.pass = false;
        out.summary["pass"] = false;
        out.summary["error"] = std::string("scenario '") + s.id + "': " + e.what();
    }

    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream outfile(path, std::ios::binary | std::ios::trunc);
    if (!outfile) throw std::runtime_error("cannot write " + path.string());
    outfile << content;
}

}  // namespace

ReportBundle run(const RunConfig& config) {
    const auto total_start = std::chrono::steady_clock::now();
    const auto n_scen = static_cast<std::int64_t>(config.scenarios.size());
    const int total_workers = resolve_workers(config.workers);
    const int outer = static_cast<int>(std::min<std::int64_t>(total_workers, n_scen));
    const int inner = std::max(1, total_workers / std::max(1, outer));

    std::vector<ScenarioOutput> outputs(static_cast<std::size_t>(n_scen));
    parallel_for_blocks(n_scen, 1, outer, [&](std::int64_t i, std::int64_t, std::int64_t) {
        outputs[static_cast<std::size_t>(i)] =
            run_scenario(config.scenarios[static_cast<std::size_t>(i)], config.seed, inner);
    });

    ReportBundle bundle;
    bundle.anticonc.header = kAnticoncColumns;
    bundle.kfwer.header = kKfwerColumns;
    bundle.diagnostics.header = kDiagnosticsColumns;

    ordered_json summary;
    summary["tool"] = {{"name", "kmax"}, {"version", KMAX_VERSION}};
    summary["generator"] = {{"engine", "mt19937_64"},
                            {"normal_method", "box_muller"},
                            {"factorization", "cholesky_with_psd_eigen_fallback"}};
    summary["seed"] = config.seed;
    summary["workers"] = config.workers;
    summary["scenarios"] = ordered_json::array();

    bool all_passed = true;
    ordered_json timing_scenarios;
    for (auto& out : outputs) {
        all_passed = all_passed && out.pass;
        bundle.n_errors += out.errored ? 1 : 0;
        for (auto& row : out.anticonc_rows) bundle.anticonc.rows.push_back(std::move(row));
        for (auto& row : out.kfwer_rows) bundle.kfwer.rows.push_back(std::move(row));
        for (auto& row : out.diagnostics_rows) bundle.diagnostics.rows.push_back(std::move(row));
        timing_scenarios[out.summary["id"].get<std::string>()] = out.seconds;
        summary["scenarios"].push_back(std::move(out.summary));
    }
    bundle.all_passed = all_passed;
    summary["all_passed"] = all_passed;
    summary["timing"] = {{"total_seconds",
                          std::chrono::duration<double>(std::chrono::steady_clock::now() - total_start).count()},
                         {"scenarios", std::move(timing_scenarios)}};
    summary["generated_at"] = iso8601_now();
    bundle.summary_json = summary.dump(2) + "\n";

    namespace fs = std::filesystem;
    const fs::path out_dir(config.out_dir);
    fs::create_directories(out_dir);
    write_file(out_dir / "anticonc.csv", bundle.anticonc.to_string());
    write_file(out_dir / "kfwer.csv", bundle.kfwer.to_string());
    write_file(out_dir / "diagnostics.csv", bundle.diagnostics.to_string());
    write_file(out_dir / "summary.json", bundle.summary_json);
    return bundle;
}

}  // namespace kmax::cli
