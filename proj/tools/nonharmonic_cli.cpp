#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nonharmonic/cli/run.hpp"

int main(int argc, char** argv) {
    namespace cli = nonharmonic::cli;
    CLI::App app{"Nonharmonic symbol calculus experiments"};
    app.set_version_flag("--version", NONHARMONIC_VERSION);
    app.require_subcommand(1);

    cli::RunOptions ro;
    std::string out_dir;
    std::uint64_t seed = 0;
    auto* run = app.add_subcommand("run", "Run one experiment from a JSON config");
    run->add_option("--config", ro.config_path, "Experiment config (JSON)")->required();
    auto* out_opt = run->add_option("--out", out_dir, "Output directory (overrides the config)");
    auto* seed_opt = run->add_option("--seed", seed, "Seed (overrides the config)");

    std::string registry;
    auto* rep = app.add_subcommand("report", "Summarize a run registry as CSV");
    rep->add_option("--registry", registry, "Registry file (JSON lines)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::kInvalidConfig;
    }

    if (*run) {
        if (*out_opt) ro.out_dir = out_dir;
        if (*seed_opt) ro.seed = seed;
        return cli::run(ro);
    }
    return cli::report(registry, std::cout);
}
