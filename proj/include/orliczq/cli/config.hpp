#pragma once

// Experiment configuration: a single JSON document, validated field by field
// with the JSON path of the first offending value in the error message.

#include "orliczq/allocation.hpp"
#include "orliczq/codebook.hpp"
#include "orliczq/error.hpp"
#include "orliczq/g_function.hpp"
#include "orliczq/growth.hpp"
#include "orliczq/orlicz.hpp"
#include "orliczq/source.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace orliczq::cli {

// Invalid configuration; path is a JSON path such as "$.source.sigma".
class ConfigError : public UsageError {
public:
    ConfigError(const std::string& path, const std::string& message)
        : UsageError(path + ": " + message), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

struct SolverConfig {
    SolveOptions options;
    // |I - dual| <= primal_dual_tol * max(1, I) for a successful solve.
    double primal_dual_tol = 1e-4;
    // Also search the dual objective for its supremum over kappa.
    bool dual_search = false;
};

// Sampling grid for the point density: points per axis on [lower, upper].
struct XiTableConfig {
    std::vector<double> lower;
    std::vector<double> upper;
    int points = 81;
};

struct CodebookConfig {
    std::vector<long long> schedule;
    Box support_box;
    // Subdivision level; unset selects the default for the largest N.
    std::optional<int> level;
    double safety_kappa = 0.0;
    std::optional<TailNetParams> tail;
};

struct MonteCarloConfig {
    std::size_t samples = 200000;
    unsigned shards = 16;
};

struct GrowthConfig {
    TailSpec tail;
    // Unset selects covering_constant(geometry).
    std::optional<double> c_E;
    int n_max = 2000;
};

struct ExperimentConfig {
    PhiFunction phi = PhiFunction::power(2.0);
    NormSpace geometry{1, NormKind::SupNorm};
    GFunction g = GFunction::one_dim_abs(PhiFunction::power(2.0));
    std::string g_variant;
    std::optional<SourceDensity> source;
    std::string source_kind;
    SolverConfig solver;
    std::vector<double> eta_grid;
    std::optional<XiTableConfig> xi_table;
    std::optional<CodebookConfig> codebook;
    MonteCarloConfig monte_carlo;
    std::optional<HistogramSpec> histogram;
    std::optional<GrowthConfig> growth;
    std::uint64_t seed = 0;
    std::optional<std::filesystem::path> output_dir;
};

// Parses and validates a JSON document. Relative paths inside the document
// (grid density files) resolve against base_dir.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace orliczq::cli
