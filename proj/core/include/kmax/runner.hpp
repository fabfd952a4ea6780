#pragma once

#include <string>

#include "kmax/config.hpp"
#include "kmax/report.hpp"

namespace kmax::cli {

struct ReportBundle {
    CsvTable anticonc;
    CsvTable kfwer;
    CsvTable diagnostics;
    std::string summary_json;
    bool all_passed = false;
    int n_errors = 0;
};

/// Executes every scenario (parallel across scenarios and within estimators),
/// writes summary.json, anticonc.csv, kfwer.csv and diagnostics.csv into the
/// config's output directory, and returns the bundle. All randomness derives
/// from (seed, scenario id, replicate index); rerunning with the same config
/// and seed reproduces the numeric content byte for byte regardless of worker
/// count. One scenario's failure is recorded and does not abort the others.
ReportBundle run(const RunConfig& config);

}  // namespace kmax::cli
