#pragma once

#include <string>
#include <vector>

namespace kmax::cli {

/// Formats with 12 significant digits, the serialization contract for all
/// report numbers. Empty optionals are serialized as the empty string.
std::string format_number(double v);

/// Rounds through the 12-significant-digit representation so that pass/fail
/// decisions made before writing agree exactly with decisions recomputed from
/// the files.
double round12(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_string() const;
};

/// Minimal CSV reader for verify (fields never contain commas or quotes).
CsvTable parse_csv(const std::string& text);

// Normative column orders.
extern const std::vector<std::string> kAnticoncColumns;
extern const std::vector<std::string> kKfwerColumns;
extern const std::vector<std::string> kDiagnosticsColumns;

// Recomputable pass rules shared by the runner and verify.
bool anticonc_row_pass(double sup_hat, double sup_se, double epsilon, int k,
                       double e_max_norm_se, double bound_theorem1);
bool kfwer_row_pass(double kfwer_hat, double alpha, int n_sim);
/// Diagnostics rows carry a `mode` column naming their rule:
///   exact_one: value == 1            (coupling with k = 1)
///   two_sided: |value - ref| <= 3 se (coupling, w_min_var with oracle value)
///   lower:     value >= ref - 3 se   (coupling under a degenerate model)
///   band3:     value <= ref + 3 se   (density diagnostics worst slack)
///   info:      always passes         (computed values with no check)
bool diagnostics_row_pass(const std::string& mode, double value, double se, double reference);

struct VerifyIssue {
    std::string file;
    std::string scenario_id;
    std::string message;
};

struct VerifyResult {
    bool ok = false;
    int rows_checked = 0;
    std::vector<VerifyIssue> issues;
};

/// Recomputes every pass/fail decision from the CSV numbers alone (no
/// simulation) and cross-checks the stored pass column. Missing or corrupt
/// files throw std::runtime_error; rule failures land in issues.
VerifyResult verify_reports(const std::string& dir);

}  // namespace kmax::cli
