// Runs `perfstokes check` twice in separate processes: the first run decides
// criteria 1-13, the comparison of both runs' CSVs decides criterion 14.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "perfstokes/acceptance.hpp"

namespace fs = std::filesystem;
namespace acc = perfstokes::acceptance;

namespace {

struct Status {
    int id = 0;
    bool passed = false;
    std::string title;
};

std::vector<Status> read_status(const fs::path& dir) {
    std::vector<Status> out;
    std::ifstream in(dir / "criteria_status.tsv");
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string id, passed, value_passed, seconds, budget, title;
        std::getline(ss, id, '\t');
        std::getline(ss, passed, '\t');
        std::getline(ss, value_passed, '\t');
        std::getline(ss, seconds, '\t');
        std::getline(ss, budget, '\t');
        std::getline(ss, title);
        if (id.empty()) continue;
        out.push_back({std::stoi(id), passed == "1", title});
    }
    return out;
}

int run_check(const std::string& cli_path, const fs::path& dir, const std::string& criteria, const std::string& redirect) {
    fs::remove_all(dir);
    const std::string cmd = "\"" + cli_path + "\" check --out \"" + dir.string() + "\" --criteria " + criteria + redirect;
    std::cout.flush();
    return std::system(cmd.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria 1-14"};
    std::string cli_path;
    std::string out = "acceptance_runs";
    std::string criteria = "1-14";
    app.add_option("--cli", cli_path, "perfstokes executable")->required();
    app.add_option("--out", out, "directory for the two check runs");
    app.add_option("--criteria", criteria, "criteria to run, e.g. 1-13 or 1,2,14");
    CLI11_PARSE(app, argc, argv);

    bool want14 = false;
    std::string in_process;
    for (const auto& part : CLI::detail::split(criteria, ',')) {
        if (part == "14" || part == "1-14") want14 = true;
        std::string p = part == "1-14" ? "1-13" : part;
        if (p == "14") continue;
        in_process += (in_process.empty() ? "" : ",") + p;
    }
    // Determinism compares complete check runs.
    if (want14) in_process = "1-13";

    const fs::path first = fs::path(out) / "check_a";
    const fs::path second = fs::path(out) / "check_b";
    std::vector<Status> status;
    if (!in_process.empty()) {
        std::cout << "== check run 1 (" << first.string() << ")" << std::endl;
        run_check(cli_path, first, in_process, "");
        status = read_status(first);
    }
    if (want14) {
        const fs::path log = fs::path(out) / "check_b_stdout.txt";
        std::cout << "== check run 2 (" << second.string() << ", output in " << log.string() << ")" << std::endl;
        fs::create_directories(out);
        run_check(cli_path, second, in_process, " > \"" + log.string() + "\" 2>&1");
        const auto r = acc::compare_runs(first, second);
        std::cout << acc::summary_line(r) << std::endl;
        status.push_back({14, r.passed(), r.title});
    }

    std::sort(status.begin(), status.end(), [](const Status& a, const Status& b) { return a.id < b.id; });
    std::cout << "\n== acceptance summary\n";
    int failed = 0;
    for (const auto& s : status) {
        std::cout << "criterion " << s.id << ": " << (s.passed ? "PASS" : "FAIL") << " (" << s.title << ")\n";
        failed += !s.passed;
    }
    std::cout << status.size() - failed << " passed, " << failed << " failed" << std::endl;
    return failed == 0 && !status.empty() ? 0 : 1;
}
