#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kmax/anticonc.hpp"
#include "kmax/covariance.hpp"

namespace kmax::cli {

enum class ScenarioKind { anticonc, coupling, density, nazarov, kfwer };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name);

/// Covariance model specification as it appears in a config file.
struct ModelSpec {
    CovFamily family = CovFamily::identity;
    int p = 0;
    double rho = 0.0;
    int block_size = 0;
    std::optional<Eigen::MatrixXd> entries;  // explicit family only

    CovarianceModel build() const;
    bool operator==(const ModelSpec& other) const;
};

/// One validated scenario. Field use depends on kind:
///   anticonc: k, epsilon, n [, grid]
///   coupling: k, n
///   density:  k, m, bins
///   nazarov:  k, epsilon, n [, expect_min_var_w]
///   kfwer:    k, alpha, n, b, n_sim, mu [, estimate_bound, delta_target, direct_draws]
struct Scenario {
    std::string id;
    ScenarioKind kind = ScenarioKind::anticonc;
    ModelSpec model;

    int k = 1;
    double epsilon = 0.0;
    std::int64_t n = 0;
    std::int64_t m = 0;
    int bins = 40;
    double alpha = 0.0;
    int b = 0;
    int n_sim = 0;
    std::vector<double> mu;
    std::optional<GridSpec> grid;
    std::optional<double> expect_min_var_w;
    bool estimate_bound = false;
    double delta_target = 0.05;
    std::int64_t direct_draws = 1000000;

    bool operator==(const Scenario& other) const;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    int workers = 0;  // 0 = hardware concurrency
    std::vector<Scenario> scenarios;

    bool operator==(const RunConfig& other) const = default;
};

/// Parses and fully validates a JSON config file. Unknown keys are errors;
/// constraint violations name the scenario id and key.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& json_text);

/// Serializes a config back to JSON; parse_config_text(write_config(c)) == c.
std::string write_config(const RunConfig& config);

}  // namespace kmax::cli
