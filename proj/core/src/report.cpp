#include "kmax/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kmax::cli {

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

double round12(double v) {
    return std::strtod(format_number(v).c_str(), nullptr);
}

std::string CsvTable::to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) os << ',';
        os << header[i];
    }
    os << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << row[i];
        }
        os << '\n';
    }
    return os.str();
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream is(text);
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && is.eof()) break;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const auto pos = line.find(',', start);
            if (pos == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            table.rows.push_back(std::move(fields));
        }
    }
    return table;
}

const std::vector<std::string> kAnticoncColumns = {
    "scenario_id", "family", "params", "p", "k", "epsilon", "n_draws",
    "sup_hat", "sup_se", "argmax_y", "e_max_norm_hat", "e_max_norm_se",
    "bound_theorem1", "bound_nazarov", "min_var_w_hat", "pass", "seed"};

const std::vector<std::string> kKfwerColumns = {
    "scenario_id", "n", "p", "k", "alpha", "b", "n_sim", "rho_or_params",
    "kfwer_hat", "kfwer_se", "mean_rejections", "mean_false_rejections",
    "bound_formula_value", "pass", "seed"};

const std::vector<std::string> kDiagnosticsColumns = {
    "scenario_id", "check", "family", "params", "p", "k", "n_draws", "n_bins",
    "value", "se", "reference", "mode", "pass", "seed"};

bool anticonc_row_pass(double sup_hat, double sup_se, double epsilon, int k,
                       double e_max_norm_se, double bound_theorem1) {
    const double margin = 3.0 * (sup_se + 2.0 * epsilon * k * e_max_norm_se);
    return sup_hat <= bound_theorem1 + margin;
}

bool kfwer_row_pass(double kfwer_hat, double alpha, int n_sim) {
    const double se_at_alpha = std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(n_sim));
    return kfwer_hat <= alpha + 3.0 * se_at_alpha;
}

bool diagnostics_row_pass(const std::string& mode, double value, double se, double reference) {
    if (mode == "exact_one") return value == 1.0;
    if (mode == "two_sided") return std::abs(value - reference) <= 3.0 * se;
    if (mode == "lower") return value >= reference - 3.0 * se;
    if (mode == "band3") return value <= reference + 3.0 * se;
    if (mode == "info") return true;
    throw std::runtime_error("unknown diagnostics mode: " + mode);
}

namespace {

struct Row {
    const CsvTable* table;
    std::size_t index;
    const std::string& file;

    const std::string& field(const std::string& name) const {
        for (std::size_t i = 0; i < table->header.size(); ++i) {
            if (table->header[i] == name) return table->rows[index][i];
        }
        throw std::runtime_error(file + ": missing column " + name);
    }
    double number(const std::string& name) const {
        const std::string& f = field(name);
        if (f.empty()) throw std::runtime_error(file + ": empty numeric field " + name);
        char* end = nullptr;
        const double v = std::strtod(f.c_str(), &end);
        if (end == f.c_str()) throw std::runtime_error(file + ": bad number in column " + name);
        return v;
    }
    bool stored_pass() const { return field("pass") == "1"; }
};

CsvTable load_table(const std::filesystem::path& path, const std::vector<std::string>& expected_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("verify: missing report file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    CsvTable table = parse_csv(buf.str());
    if (table.header != expected_header) {
        throw std::runtime_error("verify: unexpected header in " + path.string());
    }
    for (const auto& row : table.rows) {
        if (row.size() != expected_header.size()) {
            throw std::runtime_error("verify: malformed row in " + path.string());
        }
    }
    return table;
}

}  // namespace

VerifyResult verify_reports(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path base(dir);
    if (!fs::is_directory(base)) throw std::runtime_error("verify: not a directory: " + dir);

    const CsvTable anticonc = load_table(base / "anticonc.csv", kAnticoncColumns);
    const CsvTable kfwer = load_table(base / "kfwer.csv", kKfwerColumns);
    const CsvTable diagnostics = load_table(base / "diagnostics.csv", kDiagnosticsColumns);
    if (anticonc.rows.empty() && kfwer.rows.empty() && diagnostics.rows.empty()) {
        throw std::runtime_error("verify: reports contain no scenario rows");
    }

    VerifyResult result;
    auto check = [&result](const std::string& file, const Row& row, bool recomputed) {
        ++result.rows_checked;
        const bool stored = row.stored_pass();
        if (!recomputed) {
            result.issues.push_back({file, row.field("scenario_id"), "criterion fails on recomputation"});
        } else if (!stored) {
            result.issues.push_back({file, row.field("scenario_id"), "stored pass flag contradicts recomputation"});
        }
    };

    const std::string anticonc_name = "anticonc.csv";
    for (std::size_t i = 0; i < anticonc.rows.size(); ++i) {
        const Row row{&anticonc, i, anticonc_name};
        check(anticonc_name, row,
              anticonc_row_pass(row.number("sup_hat"), row.number("sup_se"), row.number("epsilon"),
                                static_cast<int>(row.number("k")), row.number("e_max_norm_se"),
                                row.number("bound_theorem1")));
    }

    const std::string kfwer_name = "kfwer.csv";
    for (std::size_t i = 0; i < kfwer.rows.size(); ++i) {
        const Row row{&kfwer, i, kfwer_name};
        check(kfwer_name, row,
              kfwer_row_pass(row.number("kfwer_hat"), row.number("alpha"),
                             static_cast<int>(row.number("n_sim"))));
    }

    const std::string diag_name = "diagnostics.csv";
    for (std::size_t i = 0; i < diagnostics.rows.size(); ++i) {
        const Row row{&diagnostics, i, diag_name};
        const std::string& mode = row.field("mode");
        const double reference = mode == "exact_one" || mode == "info" ? 0.0 : row.number("reference");
        const double se = mode == "exact_one" || mode == "info" ? 0.0 : row.number("se");
        check(diag_name, row, diagnostics_row_pass(mode, row.number("value"), se, reference));
    }

    result.ok = result.issues.empty();
    return result;
}

}  // namespace kmax::cli
