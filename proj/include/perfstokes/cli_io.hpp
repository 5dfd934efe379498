#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "perfstokes/cell_problem.hpp"
#include "perfstokes/errors.hpp"
#include "perfstokes/fields.hpp"

namespace perfstokes::cli {

/// Version string written into manifests and CSV provenance headers.
std::string_view version();

/// Subcommand plus raw key=value settings. Values stay text until the run
/// resolves them against the per-command defaults.
struct RunConfig {
    std::string command;
    std::map<std::string, std::string> values;
};

/// Subcommands in help order.
const std::vector<std::string>& commands();

/// Known keys of a command with their defaults; ConfigError for an unknown
/// command.
const std::vector<std::pair<std::string, std::string>>& command_keys(const std::string& command);

/// key=value lines; '#' starts a comment. A `command` key selects the
/// subcommand. Later values override earlier ones.
void parse_config_text(std::string_view text, RunConfig& config);

/// True for keys that take true/false.
bool is_flag_key(const std::string& key);

/// Defaults merged with the given values; ConfigError on unknown keys or
/// values that do not parse. Nothing is solved.
RunConfig resolve(const RunConfig& config);

/// key=value text that reproduces the run when fed back through --config.
std::string manifest_text(const RunConfig& resolved);

/// One per-solve report row of run.csv.
struct RunRow {
    std::string problem;
    int n = 0;
    int iterations = 0;
    double residual = 0.0;
    double seconds = 0.0;
};

struct RunLog {
    bool timing = true;
    std::vector<RunRow> rows;

    void add(std::string problem, int n, const SolveReport& report);
    /// Header problem_id,N,iterations,residual,seconds; seconds are 0 when
    /// timing is off.
    void write(std::ostream& out) const;
};

/// A failed solve or invariant check.
struct Failure {
    std::string check;
    std::string expected;
    std::string observed;
};

/// Quotes a CSV field when it holds a comma, quote or newline.
std::string csv_field(const std::string& text);

void write_failures(std::ostream& out, const std::vector<Failure>& failures);

/// Sweep CSV: eta,c_eta,N,A11_energy,A12_energy,A11_avg,A12_avg,norm_w,
/// norm_gradw,norm_q,poincare,iterations,seconds, then a '#' line with the
/// extrapolated limit.
void write_sweep_csv(std::ostream& out, const cell::PermeabilityReport& report, bool with_timing = true);

/// Reads a field written by write_field: "dim N components" and values.
/// The result lives on hole-free no-slip box masks.
VelocityField read_velocity_file(const std::filesystem::path& path);

/// Runs one command, writing artifacts under the `out` key.
/// Returns the exit status: 0 when every solve converged and every enabled
/// check passed, 1 otherwise with the failures printed to `err` and written
/// to failures.csv.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace perfstokes::cli
