#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "perfstokes/cell_problem.hpp"
#include "perfstokes/cli_io.hpp"
#include "perfstokes/errors.hpp"
#include "perfstokes/format.hpp"

using namespace perfstokes;
using namespace perfstokes::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::current_path() / "cli_io_scratch" / name;
    fs::remove_all(dir);
    return dir;
}

int run_cli(const std::string& args, const fs::path& stdout_file) {
    const std::string cmd = std::string("\"") + PERFSTOKES_CLI + "\" " + args + " > \"" + stdout_file.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
#ifdef WEXITSTATUS
    return WEXITSTATUS(status);
#else
    return status;
#endif
}

ErrorCode resolve_code(const RunConfig& c) {
    try {
        resolve(c);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("config text parsing") {
    RunConfig c;
    parse_config_text("# comment\ncommand = cell\neta=0.2\n\n  N = 64  # trailing\neta=0.1\n", c);
    CHECK(c.command == "cell");
    CHECK(c.values.at("eta") == "0.1");
    CHECK(c.values.at("N") == "64");
    RunConfig bad;
    CHECK_THROWS_AS(parse_config_text("no equals sign\n", bad), Error);
}

TEST_CASE("resolve fills defaults and rejects unknown keys") {
    RunConfig c{"cell", {{"eta", "0.2"}}};
    const auto r = resolve(c);
    CHECK(r.values.at("eta") == "0.2");
    CHECK(r.values.at("dim") == "2");
    CHECK(r.values.at("timing") == "false");
    CHECK(r.values.size() == command_keys("cell").size());

    CHECK(resolve_code({"cell", {{"etta", "0.2"}}}) == ErrorCode::ConfigError);
    CHECK(resolve_code({"cell", {{"eta", "zero"}}}) == ErrorCode::ConfigError);
    CHECK(resolve_code({"frobnicate", {}}) == ErrorCode::ConfigError);
    CHECK(is_flag_key("dump_fields"));
    CHECK(!is_flag_key("eta"));
}

TEST_CASE("manifest text round-trips through the parser") {
    const auto r = resolve({"compare", {{"eps", "1/4,1/8"}}});
    RunConfig back;
    parse_config_text(manifest_text(r), back);
    CHECK(back.command == "compare");
    CHECK(back.values == r.values);
}

TEST_CASE("fractions parse exactly") {
    CHECK(parse_real("1/16") == 0.0625);
    CHECK(parse_real("1/3") == 1.0 / 3.0);
    CHECK(parse_real_list("1/8,0.25") == std::vector<double>{0.125, 0.25});
    CHECK(parse_real(format_real(0.1)) == 0.1);
    CHECK(parse_real(format_real(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK_THROWS_AS(parse_real("1/0"), Error);
}

TEST_CASE("csv fields and failure lists") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    std::ostringstream s;
    write_failures(s, {{"check one", "<= 3", "4, then 5"}});
    CHECK(s.str() == "check,expected,observed\ncheck one,<= 3,\"4, then 5\"\n");
}

TEST_CASE("run log zeroes seconds without timing") {
    RunLog log;
    log.timing = false;
    log.add("cell", 64, SolveReport{12, 1e-9, 3.5});
    std::ostringstream s;
    log.write(s);
    CHECK(s.str() == "problem_id,N,iterations,residual,seconds\ncell,64,12," + format_real(1e-9) + ",0\n");
}

TEST_CASE("sweep CSV has one row per eta and an extrapolation line") {
    cell::SweepOptions o;
    o.etas = {0.2, 0.1};
    o.poincare = false;
    const auto rep = cell::sweep_eta(o);
    std::ostringstream s;
    write_sweep_csv(s, rep, false);
    const auto lines = split(s.str(), '\n');
    REQUIRE(lines.size() == 5);  // header, 2 rows, extrapolation, trailing empty
    CHECK(lines[0].rfind("eta,c_eta,N,", 0) == 0);
    CHECK(lines[3].rfind("# extrapolated A11=", 0) == 0);
    CHECK(lines[1].substr(lines[1].rfind(',') + 1) == "0");
}

TEST_CASE("classify through the executable") {
    const auto dir = scratch("classify");
    fs::create_directories(dir);
    CHECK(run_cli("classify --dim 3 --family powerlaw:1,3 --out \"" + (dir / "out").string() + "\"", dir / "stdout") == 0);
    CHECK(slurp(dir / "stdout") == "critical sigma_star=1\n");
    CHECK(run_cli("classify --dim 2 --family logcritical:2", dir / "stdout2") == 0);
    CHECK(slurp(dir / "stdout2") == "critical sigma_star=2\n");
}

TEST_CASE("unknown key writes only the error report") {
    const auto dir = scratch("unknown");
    fs::create_directories(dir);
    RunConfig c{"cell", {{"out", (dir / "out").string()}, {"etta", "0.2"}}};
    std::ostringstream out, err;
    CHECK(run(c, out, err) == 1);
    CHECK(err.str().rfind("check,expected,observed\n", 0) == 0);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir / "out")) files.push_back(e.path().filename().string());
    CHECK(files == std::vector<std::string>{"failures.csv"});

    CHECK(run_cli("cell --etta 0.2 --out \"" + (dir / "cli").string() + "\"", dir / "stdout") == 1);
    CHECK(!fs::exists(dir / "cli" / "manifest"));
}

TEST_CASE("manifest reproduces the run") {
    const auto dir = scratch("manifest");
    fs::create_directories(dir);
    const auto first = dir / "first";
    REQUIRE(run_cli("cell --eta 0.25 --N 64 --out \"" + first.string() + "\"", dir / "stdout1") == 0);
    const auto manifest = slurp(first / "manifest");
    CHECK(manifest.find("command=cell") != std::string::npos);

    // Same manifest with a different output directory.
    RunConfig c;
    parse_config_text(manifest, c);
    c.values["out"] = (dir / "second").string();
    std::ofstream(dir / "second.cfg") << manifest_text(c);
    REQUIRE(run_cli("cell --config \"" + (dir / "second.cfg").string() + "\"", dir / "stdout2") == 0);
    for (const char* name : {"cell.csv", "permeability.csv", "run.csv"}) {
        CAPTURE(name);
        CHECK(slurp(first / name) == slurp(dir / "second" / name));
    }
    CHECK(slurp(dir / "stdout1") == slurp(dir / "stdout2"));
}

TEST_CASE("config file command must match the subcommand") {
    const auto dir = scratch("mismatch");
    fs::create_directories(dir);
    std::ofstream(dir / "c.cfg") << "command=cell\neta=0.2\n";
    CHECK(run_cli("sweep --config \"" + (dir / "c.cfg").string() + "\"", dir / "stdout") == 1);
}
