#include "kmax/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace kmax::cli {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& scenario_id, const std::string& message) {
    if (scenario_id.empty()) throw std::invalid_argument("config: " + message);
    throw std::invalid_argument("config: scenario '" + scenario_id + "': " + message);
}

const ordered_json& get_required(const ordered_json& obj, const std::string& key, const std::string& id) {
    const auto it = obj.find(key);
    if (it == obj.end()) fail(id, "missing required key '" + key + "'");
    return *it;
}

void check_known_keys(const ordered_json& obj, const std::set<std::string>& allowed, const std::string& id) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.contains(key)) fail(id, "unknown key '" + key + "'");
    }
}

double get_number(const ordered_json& obj, const std::string& key, const std::string& id) {
    const auto& v = get_required(obj, key, id);
    if (!v.is_number()) fail(id, "key '" + key + "' must be a number");
    return v.get<double>();
}

std::int64_t get_integer(const ordered_json& obj, const std::string& key, const std::string& id) {
    const auto& v = get_required(obj, key, id);
    if (!v.is_number_integer()) fail(id, "key '" + key + "' must be an integer");
    return v.get<std::int64_t>();
}

ModelSpec parse_model(const ordered_json& obj, const std::string& id) {
    ModelSpec spec;
    const auto& fam = get_required(obj, "family", id);
    if (!fam.is_string()) fail(id, "key 'family' must be a string");
    try {
        spec.family = cov_family_from_string(fam.get<std::string>());
    } catch (const std::exception& e) {
        fail(id, e.what());
    }

    if (spec.family == CovFamily::explicit_matrix) {
        const auto& entries = get_required(obj, "entries", id);
        if (!entries.is_array() || entries.empty()) fail(id, "key 'entries' must be a nonempty 2D array");
        const auto p = static_cast<int>(entries.size());
        Eigen::MatrixXd sigma(p, p);
        for (int i = 0; i < p; ++i) {
            const auto& row = entries[static_cast<std::size_t>(i)];
            if (!row.is_array() || static_cast<int>(row.size()) != p) fail(id, "'entries' rows must all have length p");
            for (int j = 0; j < p; ++j) {
                const auto& cell = row[static_cast<std::size_t>(j)];
                if (!cell.is_number()) fail(id, "'entries' cells must be numbers");
                sigma(i, j) = cell.get<double>();
            }
        }
        spec.p = p;
        spec.entries = std::move(sigma);
        if (obj.contains("p") && get_integer(obj, "p", id) != p) fail(id, "'p' must match the 'entries' dimension");
    } else {
        const auto p = get_integer(obj, "p", id);
        if (p < 1) fail(id, "'p' must be >= 1");
        spec.p = static_cast<int>(p);
        if (spec.family == CovFamily::equicorrelated || spec.family == CovFamily::ar1 ||
            spec.family == CovFamily::block) {
            spec.rho = get_number(obj, "rho", id);
        }
        if (spec.family == CovFamily::block) {
            spec.block_size = static_cast<int>(get_integer(obj, "block_size", id));
        }
    }
    return spec;
}

Scenario parse_scenario(const ordered_json& obj, const std::string& id) {
    Scenario s;
    s.id = id;
    const auto& kind = get_required(obj, "kind", id);
    if (!kind.is_string()) fail(id, "key 'kind' must be a string");
    try {
        s.kind = scenario_kind_from_string(kind.get<std::string>());
    } catch (const std::exception& e) {
        fail(id, e.what());
    }

    std::set<std::string> allowed = {"id", "kind", "family", "p", "rho", "block_size", "entries", "k"};
    switch (s.kind) {
        case ScenarioKind::anticonc:
            allowed.insert({"epsilon", "n", "y_min", "y_max", "step"});
            break;
        case ScenarioKind::coupling:
            allowed.insert({"n"});
            break;
        case ScenarioKind::density:
            allowed.insert({"m", "bins"});
            break;
        case ScenarioKind::nazarov:
            allowed.insert({"epsilon", "n", "expect_min_var_w"});
            break;
        case ScenarioKind::kfwer:
            allowed.insert({"alpha", "n", "b", "n_sim", "mu", "estimate_bound", "delta_target", "direct_draws"});
            break;
    }
    check_known_keys(obj, allowed, id);

    s.model = parse_model(obj, id);

    const auto k = get_integer(obj, "k", id);
    if (k < 1) fail(id, "'k' must be >= 1");
    if (k > s.model.p) fail(id, "'k' must not exceed 'p' (k <= p required)");
    s.k = static_cast<int>(k);

    switch (s.kind) {
        case ScenarioKind::anticonc: {
            s.epsilon = get_number(obj, "epsilon", id);
            if (s.epsilon <= 0.0) fail(id, "'epsilon' must be positive");
            s.n = get_integer(obj, "n", id);
            if (s.n < 10000) fail(id, "'n' must be >= 10000 for anticonc scenarios");
            const bool any_grid = obj.contains("y_min") || obj.contains("y_max") || obj.contains("step");
            if (any_grid) {
                GridSpec g;
                g.y_min = get_number(obj, "y_min", id);
                g.y_max = get_number(obj, "y_max", id);
                g.step = get_number(obj, "step", id);
                const double hw = required_grid_halfwidth(s.model.p);
                if (g.y_min > -hw || g.y_max < hw) fail(id, "grid [y_min, y_max] narrower than the required range");
                if (g.step <= 0.0 || g.step > s.epsilon / 4.0) fail(id, "'step' must be in (0, epsilon/4]");
                s.grid = g;
            }
            break;
        }
        case ScenarioKind::coupling: {
            s.n = get_integer(obj, "n", id);
            if (s.n < 1000) fail(id, "'n' must be >= 1000 for coupling scenarios");
            break;
        }
        case ScenarioKind::density: {
            s.m = get_integer(obj, "m", id);
            if (s.m < 100000) fail(id, "'m' must be >= 100000 for density scenarios");
            if (obj.contains("bins")) {
                const auto bins = get_integer(obj, "bins", id);
                if (bins < 4) fail(id, "'bins' must be >= 4");
                s.bins = static_cast<int>(bins);
            }
            break;
        }
        case ScenarioKind::nazarov: {
            s.epsilon = get_number(obj, "epsilon", id);
            if (s.epsilon <= 0.0) fail(id, "'epsilon' must be positive");
            s.n = get_integer(obj, "n", id);
            if (s.n < 10000) fail(id, "'n' must be >= 10000 for nazarov scenarios");
            if (obj.contains("expect_min_var_w")) {
                s.expect_min_var_w = get_number(obj, "expect_min_var_w", id);
            }
            const double cap_probe = std::exp(log_binom(s.model.p, s.k));
            if (cap_probe > kSubsetCap * 1.0001) fail(id, "C(p, k) exceeds the desk-scale subset cap 2e5");
            break;
        }
        case ScenarioKind::kfwer: {
            s.alpha = get_number(obj, "alpha", id);
            if (!(s.alpha > 0.0 && s.alpha < 1.0)) fail(id, "'alpha' must lie in (0, 1)");
            const auto n = get_integer(obj, "n", id);
            if (n < 2) fail(id, "'n' must be >= 2 for kfwer scenarios");
            s.n = n;
            const auto b = get_integer(obj, "b", id);
            if (b < 100) fail(id, "'b' must be >= 100");
            s.b = static_cast<int>(b);
            const auto n_sim = get_integer(obj, "n_sim", id);
            if (n_sim < 1) fail(id, "'n_sim' must be >= 1");
            s.n_sim = static_cast<int>(n_sim);

            const auto it = obj.find("mu");
            if (it == obj.end()) {
                s.mu.assign(static_cast<std::size_t>(s.model.p), 0.0);
            } else if (it->is_number()) {
                s.mu.assign(static_cast<std::size_t>(s.model.p), it->get<double>());
            } else if (it->is_array()) {
                if (static_cast<int>(it->size()) != s.model.p) fail(id, "'mu' length must equal 'p'");
                for (const auto& v : *it) {
                    if (!v.is_number()) fail(id, "'mu' entries must be numbers");
                    s.mu.push_back(v.get<double>());
                }
            } else {
                fail(id, "'mu' must be a number or an array of numbers");
            }

            if (obj.contains("estimate_bound")) {
                const auto& v = obj["estimate_bound"];
                if (!v.is_boolean()) fail(id, "'estimate_bound' must be a boolean");
                s.estimate_bound = v.get<bool>();
            }
            if (obj.contains("delta_target")) {
                s.delta_target = get_number(obj, "delta_target", id);
                if (!(s.delta_target > 0.0 && s.delta_target < 1.0)) fail(id, "'delta_target' must lie in (0, 1)");
            }
            if (obj.contains("direct_draws")) {
                s.direct_draws = get_integer(obj, "direct_draws", id);
                if (s.direct_draws < 1000) fail(id, "'direct_draws' must be >= 1000");
            }
            break;
        }
    }

    // Building the model validates family parameters (PSD, rho ranges, ...).
    try {
        (void)s.model.build();
    } catch (const std::exception& e) {
        fail(id, e.what());
    }
    return s;
}

}  // namespace

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::anticonc: return "anticonc";
        case ScenarioKind::coupling: return "coupling";
        case ScenarioKind::density: return "density";
        case ScenarioKind::nazarov: return "nazarov";
        case ScenarioKind::kfwer: return "kfwer";
    }
    return "unknown";
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
    if (name == "anticonc") return ScenarioKind::anticonc;
    if (name == "coupling") return ScenarioKind::coupling;
    if (name == "density") return ScenarioKind::density;
    if (name == "nazarov") return ScenarioKind::nazarov;
    if (name == "kfwer") return ScenarioKind::kfwer;
    throw std::invalid_argument("unknown scenario kind: " + name);
}

CovarianceModel ModelSpec::build() const {
    switch (family) {
        case CovFamily::identity:
            return build_covariance(family, p, {});
        case CovFamily::equicorrelated:
        case CovFamily::ar1: {
            const double params[] = {rho};
            return build_covariance(family, p, params);
        }
        case CovFamily::block: {
            const double params[] = {rho, static_cast<double>(block_size)};
            return build_covariance(family, p, params);
        }
        case CovFamily::explicit_matrix:
            if (!entries) throw std::invalid_argument("explicit model spec has no entries");
            return build_explicit_covariance(*entries);
    }
    throw std::invalid_argument("invalid model spec");
}

bool ModelSpec::operator==(const ModelSpec& other) const {
    if (family != other.family || p != other.p || rho != other.rho || block_size != other.block_size) {
        return false;
    }
    if (entries.has_value() != other.entries.has_value()) return false;
    if (entries && (*entries - *other.entries).cwiseAbs().maxCoeff() != 0.0) return false;
    return true;
}

bool Scenario::operator==(const Scenario& other) const {
    return id == other.id && kind == other.kind && model == other.model && k == other.k &&
           epsilon == other.epsilon && n == other.n && m == other.m && bins == other.bins &&
           alpha == other.alpha && b == other.b && n_sim == other.n_sim && mu == other.mu &&
           grid == other.grid && expect_min_var_w == other.expect_min_var_w &&
           estimate_bound == other.estimate_bound && delta_target == other.delta_target &&
           direct_draws == other.direct_draws;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

RunConfig parse_config_text(const std::string& json_text) {
    ordered_json root;
    try {
        root = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw std::invalid_argument("config: top level must be an object");
    check_known_keys(root, {"seed", "out", "workers", "scenarios"}, "");

    RunConfig config;
    const auto& seed = get_required(root, "seed", "");
    const bool seed_ok = seed.is_number_unsigned() ||
                         (seed.is_number_integer() && seed.get<std::int64_t>() >= 0);
    if (!seed_ok) throw std::invalid_argument("config: 'seed' must be a nonnegative integer");
    config.seed = seed.get<std::uint64_t>();

    if (root.contains("out")) {
        if (!root["out"].is_string()) throw std::invalid_argument("config: 'out' must be a string");
        config.out_dir = root["out"].get<std::string>();
    }
    if (root.contains("workers")) {
        if (!root["workers"].is_number_integer()) throw std::invalid_argument("config: 'workers' must be an integer");
        config.workers = root["workers"].get<int>();
    }

    const auto& scenarios = get_required(root, "scenarios", "");
    if (!scenarios.is_array() || scenarios.empty()) {
        throw std::invalid_argument("config: 'scenarios' must be a nonempty array");
    }

    std::set<std::string> ids;
    for (const auto& obj : scenarios) {
        if (!obj.is_object()) throw std::invalid_argument("config: scenarios must be objects");
        const auto it = obj.find("id");
        if (it == obj.end() || !it->is_string() || it->get<std::string>().empty()) {
            throw std::invalid_argument("config: every scenario needs a nonempty string 'id'");
        }
        const auto id = it->get<std::string>();
        if (!ids.insert(id).second) throw std::invalid_argument("config: duplicate scenario id '" + id + "'");
        config.scenarios.push_back(parse_scenario(obj, id));
    }
    return config;
}

std::string write_config(const RunConfig& config) {
    ordered_json root;
    root["seed"] = config.seed;
    root["out"] = config.out_dir;
    root["workers"] = config.workers;
    root["scenarios"] = ordered_json::array();

    for (const auto& s : config.scenarios) {
        ordered_json obj;
        obj["id"] = s.id;
        obj["kind"] = to_string(s.kind);
        obj["family"] = kmax::to_string(s.model.family);
        if (s.model.family == CovFamily::explicit_matrix) {
            ordered_json entries = ordered_json::array();
            for (int i = 0; i < s.model.p; ++i) {
                ordered_json row = ordered_json::array();
                for (int j = 0; j < s.model.p; ++j) row.push_back((*s.model.entries)(i, j));
                entries.push_back(std::move(row));
            }
            obj["entries"] = std::move(entries);
        } else {
            obj["p"] = s.model.p;
            if (s.model.family == CovFamily::equicorrelated || s.model.family == CovFamily::ar1 ||
                s.model.family == CovFamily::block) {
                obj["rho"] = s.model.rho;
            }
            if (s.model.family == CovFamily::block) obj["block_size"] = s.model.block_size;
        }
        obj["k"] = s.k;

        switch (s.kind) {
            case ScenarioKind::anticonc:
                obj["epsilon"] = s.epsilon;
                obj["n"] = s.n;
                if (s.grid) {
                    obj["y_min"] = s.grid->y_min;
                    obj["y_max"] = s.grid->y_max;
                    obj["step"] = s.grid->step;
                }
                break;
            case ScenarioKind::coupling:
                obj["n"] = s.n;
                break;
            case ScenarioKind::density:
                obj["m"] = s.m;
                obj["bins"] = s.bins;
                break;
            case ScenarioKind::nazarov:
                obj["epsilon"] = s.epsilon;
                obj["n"] = s.n;
                if (s.expect_min_var_w) obj["expect_min_var_w"] = *s.expect_min_var_w;
                break;
            case ScenarioKind::kfwer:
                obj["alpha"] = s.alpha;
                obj["n"] = s.n;
                obj["b"] = s.b;
                obj["n_sim"] = s.n_sim;
                obj["mu"] = s.mu;
                obj["estimate_bound"] = s.estimate_bound;
                obj["delta_target"] = s.delta_target;
                obj["direct_draws"] = s.direct_draws;
                break;
        }
        root["scenarios"].push_back(std::move(obj));
    }
    return root.dump(2) + "\n";
}

}  // namespace kmax::cli
