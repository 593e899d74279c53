#pragma once

// The batch pipelines behind the command-line subcommands. Each command
// writes its reports into the output directory and returns the exit code;
// invalid input raises UsageError, numerical failures NumericError or
// SolverError.

#include "orliczq/allocation.hpp"
#include "orliczq/cli/config.hpp"
#include "orliczq/codebook.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace orliczq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumeric = 2;

struct RunContext {
    std::filesystem::path out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    // Human-readable summary; nullptr silences it.
    std::ostream* log = nullptr;
};

struct GTableRow {
    double eta = 0.0;
    double g = 0.0;
    double gprime = 0.0;
};

std::vector<GTableRow> g_table(const GFunction& g, const std::vector<double>& eta_grid);

struct ShapeFlags {
    bool nonincreasing = true;
    // Secant slopes nondecreasing along the grid.
    bool convex = true;
};

ShapeFlags shape_flags(const std::vector<GTableRow>& rows);

// Solves the allocation problem of the configured source.
AllocationSolution solve_config(const ExperimentConfig& cfg);

// Subdivision level used for the codebook family of the configuration.
int family_level(const ExperimentConfig& cfg);

// Stratified codebook for xi / I on the support box, joined with the tail net
// when one is configured.
Codebook build_family_codebook(const ExperimentConfig& cfg, const AllocationSolution& sol, long long n, int level);

struct ConvergenceRow {
    long long n = 0;
    std::size_t size = 0;
    double distortion = 0.0;
    double std_error = 0.0;
    // n^{1/d} distortion and its standard error.
    double scaled = 0.0;
    double scaled_error = 0.0;
    double l1 = 0.0;
};

struct ConvergenceRun {
    AllocationSolution solution;
    int level = 0;
    HistogramSpec histogram;
    std::vector<ConvergenceRow> rows;
};

ConvergenceRun run_convergence(const ExperimentConfig& cfg, std::uint64_t seed, unsigned threads);

int cmd_g_table(const ExperimentConfig& cfg, const RunContext& ctx);
int cmd_solve(const ExperimentConfig& cfg, const RunContext& ctx);
int cmd_convergence(const ExperimentConfig& cfg, const RunContext& ctx);
int cmd_growth_check(const ExperimentConfig& cfg, const RunContext& ctx);
int cmd_codebook_export(const ExperimentConfig& cfg, const RunContext& ctx);

}  // namespace orliczq::cli
