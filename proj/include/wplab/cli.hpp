#pragma once

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wplab/harness.hpp"

namespace wplab {

// Exit codes: 0 success, 2 ConfigError, 3 ModuleError, 4 IoError, 1 anything
// else. The same function backs the installed binary and the tests.
inline int cli_main(int argc, const char* const* argv) {
    CLI::App app{"wplab -- stochastic wavepacket laboratory"};
    app.set_version_flag("--version", WPLAB_VERSION);
    app.require_subcommand(1);

    std::string scenario_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    RunOptions opts;

    CLI::App* run_cmd = app.add_subcommand("run", "run a scenario file");
    run_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
    CLI::Option* seed_opt =
        run_cmd->add_option("--seed", seed, "override the scenario master_seed");
    CLI::Option* out_opt = run_cmd->add_option("--out", out_dir, "output directory");
    run_cmd->add_flag("--force", opts.force, "overwrite an existing output directory");
    run_cmd->add_option("--threads", opts.threads,
                        "worker threads (affects wall time only, never results)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (seed_opt->count() > 0) opts.seed_override = seed;
        if (out_opt->count() > 0) opts.out_override = out_dir;
        const Scenario sc = load_scenario_file(scenario_path);
        const RunResult rr = run_scenario(sc, opts);
        std::cout << "wrote " << rr.output_dir.string() << "\n";
        for (const auto& f : rr.result_files)
            std::cout << "  " << f << "\n";
        if (rr.summary.contains("verdict"))
            std::cout << "verdict: " << rr.summary["verdict"].get<std::string>() << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.code()) {
        case Errc::config_error: return 2;
        case Errc::io_error: return 4;
        default: return 3;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace wplab
