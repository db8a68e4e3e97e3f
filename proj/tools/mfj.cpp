// SPDX-License-Identifier: MIT
//
// mfj: Monte Carlo Delta estimation for mean-field SDEs with jumps.
//
//   mfj delta --config run.cfg --out results/ --seed 42
//   mfj compare --config run.cfg --out results/
//   mfj --replay results/delta.csv --out again/

#include "mfj/cli.hpp"
#include "mfj/config.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mfj::ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo Delta estimation for mean-field SDEs with jumps"};
    app.require_subcommand(0, 1);

    std::string config_path;
    std::string out_dir;
    std::string replay_path;
    std::uint64_t seed = 0;
    std::string fd_mode;
    bool trace = false;
    bool uncompensated = false;
    bool timing = false;
    unsigned threads = 0;

    std::vector<CLI::Option*> seed_options;
    auto add_common = [&](CLI::App* c) {
        c->add_option("--config", config_path, "flat key = value run configuration");
        c->add_option("--out", out_dir, "output directory");
        seed_options.push_back(c->add_option("--seed", seed, "master seed (overrides the config)"));
        c->add_option("--fd-mode", fd_mode, "finite-difference quotient")->check(CLI::IsMember({"central", "forward"}));
        c->add_flag("--trace", trace, "also write trace.csv for path 0");
        c->add_flag("--uncompensated-euler", uncompensated, "drop the jump compensator from the Euler step");
        c->add_flag("--timing", timing, "record wall-clock runtimes in the CSV");
        c->add_option("--threads", threads, "worker threads (default: MFJ_THREADS or all cores)");
    };
    add_common(&app);
    app.add_option("--replay", replay_path, "re-run the command recorded in a CSV header");
    std::string command;
    for (auto name : mfj::kCommands) {
        auto* sub = app.add_subcommand(std::string(name), "run the " + std::string(name) + " command");
        add_common(sub);
        sub->callback([&command, name] { command = std::string(name); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? mfj::kExitOk : mfj::kExitConfig;
    }

    mfj::RunConfig cfg;
    try {
        std::string text;
        if (!replay_path.empty()) {
            if (!command.empty() || !config_path.empty()) {
                throw mfj::ConfigError("--replay takes neither a command nor --config");
            }
            const auto src = mfj::read_replay_header(read_file(replay_path));
            command = src.command;
            text = src.config_text;
        } else {
            if (command.empty()) throw mfj::ConfigError("a command is required: simulate, delta, compare or converge");
            if (config_path.empty()) throw mfj::ConfigError("--config is required");
            text = read_file(config_path);
        }
        std::map<std::string, std::string> overrides;
        for (const auto* opt : seed_options) {
            if (opt->count()) overrides["seed"] = std::to_string(seed);
        }
        if (!fd_mode.empty()) overrides["fd_mode"] = fd_mode;
        if (trace) overrides["trace"] = "true";
        if (uncompensated) overrides["compensated"] = "false";
        if (timing) overrides["timing"] = "true";
        if (threads) overrides["threads"] = std::to_string(threads);
        if (!out_dir.empty()) overrides["out"] = out_dir;
        cfg = mfj::parse_config(text, overrides);
    } catch (const mfj::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return mfj::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return mfj::kExitRuntime;
    }
    return mfj::run_command(command, cfg, std::cerr);
}
