#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "perfstokes/cli_io.hpp"

namespace perfstokes::acceptance {

struct CriterionResult {
    int id = 0;
    std::string title;
    /// Outcome of the numerical checks alone; deterministic.
    bool value_passed = false;
    std::string expected;
    std::string observed;
    double seconds = 0.0;
    double budget = 0.0;  // seconds, 0 when unbounded

    bool within_budget() const { return budget <= 0.0 || seconds < budget; }
    bool passed() const { return value_passed && within_budget(); }
};

/// Criteria that run inside one process (1 to 13).
std::vector<int> in_process_ids();

/// Runs criterion `id` (1 to 13), writing its CSV artifacts to `out_dir` and
/// its solves to `log`. Expensive cell and DNS results are shared between
/// criteria within one process.
CriterionResult run_criterion(int id, const std::filesystem::path& out_dir, cli::RunLog& log);

/// Criterion 14: every file of the two check directories is byte-identical.
CriterionResult compare_runs(const std::filesystem::path& a, const std::filesystem::path& b);

/// "[PASS] 7 title: observed (expected ...) 12.3 s".
std::string summary_line(const CriterionResult& r);

/// acceptance.csv: criterion,title,passed,expected,observed (no timing).
void write_summary_csv(std::ostream& out, const std::vector<CriterionResult>& results);

}  // namespace perfstokes::acceptance
