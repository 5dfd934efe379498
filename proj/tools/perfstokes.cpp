#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "perfstokes/cli_io.hpp"

namespace cli = perfstokes::cli;

namespace {

const std::map<std::string, std::string> kHelp{
    {"classify", "regime of a scaling family: small, large or critical sigma_star=S"},
    {"cell", "cell problem at one eta; prints A_energy and A_average"},
    {"sweep", "eta sweep with extrapolated permeability and scaling bands"},
    {"poincare", "Poincare constant of the punctured cell"},
    {"limit", "homogenized Stokes, Darcy or Brinkman on the unit box"},
    {"dns", "Stokes flow in one perforated domain"},
    {"compare", "perforated flow against its homogenized limit over an epsilon list"},
    {"check", "acceptance suite; CSVs carry no timing"},
};

std::string dashed(std::string key) {
    for (auto& ch : key) {
        if (ch == '_') ch = '-';
    }
    return key;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Homogenization of Stokes flow in perforated domains.\n"
                 "Families: powerlaw:C,gamma (a = C eps^gamma) or logcritical:sigma (2D only).\n"
                 "Holes: disk:R, ball:R, square:H. Forcing: sinshear, gradient, constant:a,b[,c], file:PATH.\n"
                 "Threads: PERFSTOKES_THREADS (default 1)."};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(cli::version()));

    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, std::string> config_files;
    std::map<std::string, std::vector<std::pair<std::string, CLI::Option*>>> options;
    for (const auto& command : cli::commands()) {
        auto* sub = app.add_subcommand(command, kHelp.at(command));
        sub->add_option("--config", config_files[command], "key=value file read before the command line");
        for (const auto& [key, fallback] : cli::command_keys(command)) {
            std::string names = "--" + key;
            if (dashed(key) != key) names += ",--" + dashed(key);
            const std::string desc = "default: " + (fallback.empty() ? std::string("(none)") : fallback);
            CLI::Option* opt = nullptr;
            if (cli::is_flag_key(key)) {
                std::string flag = "--" + key + "{true}";
                if (dashed(key) != key) flag += ",--" + dashed(key) + "{true}";
                opt = sub->add_flag(flag, values[command][key], desc);
            } else {
                opt = sub->add_option(names, values[command][key], desc);
            }
            options[command].emplace_back(key, opt);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        cli::write_failures(std::cerr, {{"arguments", "valid command line", e.what()}});
        return 1;
    }

    cli::RunConfig config;
    for (auto* sub : app.get_subcommands()) config.command = sub->get_name();
    const auto& file = config_files[config.command];
    if (!file.empty()) {
        std::ifstream in(file, std::ios::binary);
        if (!in) {
            cli::write_failures(std::cerr, {{"config", "readable config file", file}});
            return 1;
        }
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string wanted = config.command;
        try {
            cli::parse_config_text(ss.str(), config);
        } catch (const perfstokes::Error& e) {
            cli::write_failures(std::cerr, {{"config", "valid config file", e.what()}});
            return 1;
        }
        if (config.command != wanted) {
            cli::write_failures(std::cerr, {{"config", "command " + wanted, "file is for " + config.command}});
            return 1;
        }
    }
    for (const auto& [key, opt] : options[config.command]) {
        if (opt->count() > 0) config.values[key] = values[config.command][key];
    }
    return cli::run(config, std::cout, std::cerr);
}
