#include "orliczq/cli/commands.hpp"
#include "orliczq/cli/config.hpp"
#include "orliczq/error.hpp"
#include "orliczq/parallel.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace orliczq;
using namespace orliczq::cli;

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
};

int run(const std::string& command, const Options& opt) {
    const ExperimentConfig cfg = load_config(opt.config);
    RunContext ctx;
    if (!opt.out.empty()) {
        ctx.out_dir = opt.out;
    } else if (cfg.output_dir) {
        ctx.out_dir = *cfg.output_dir;
    } else {
        throw UsageError("no output directory: pass --out or set output_dir in the config");
    }
    ctx.seed = opt.seed ? *opt.seed : cfg.seed;
    ctx.threads = resolve_threads(opt.threads);
    ctx.log = &std::cout;
    if (command == "g-table") return cmd_g_table(cfg, ctx);
    if (command == "solve") return cmd_solve(cfg, ctx);
    if (command == "convergence") return cmd_convergence(cfg, ctx);
    if (command == "growth-check") return cmd_growth_check(cfg, ctx);
    return cmd_codebook_export(cfg, ctx);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"High-resolution quantization under Orlicz-norm distortion"};
    app.require_subcommand(1, 1);
    Options opt;
    const std::pair<const char*, const char*> commands[] = {
        {"g-table", "Tabulate the complexity function g and its derivative"},
        {"solve", "Solve the point allocation problem and its dual"},
        {"convergence", "Build codebooks along the schedule and estimate their distortion"},
        {"growth-check", "Check the summability condition for tail codebooks"},
        {"codebook-export", "Write the codebooks of the schedule as CSV"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "Output directory (overrides output_dir)");
        sub->add_option_function<std::uint64_t>("--seed", [&opt](const std::uint64_t& s) { opt.seed = s; },
                                                "Random seed (overrides the config)");
        sub->add_option("--threads", opt.threads, "Worker threads (default: ORLICZQ_THREADS, else all cores)")
            ->check(CLI::PositiveNumber);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run(command, opt);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumeric;
    }
}
