#include "orliczq/cli/commands.hpp"
#include "orliczq/cli/config.hpp"
#include "orliczq/cli/report.hpp"
#include "orliczq/parallel.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace orliczq;
using namespace orliczq::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = ORLICZQ_CONFIG_DIR;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("orliczq_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ORLICZQ_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string expect_config_error(const std::string& json) {
    try {
        parse_config(json);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "<accepted>";
}

const char* kMinimal = R"({"phi": {"kind": "power", "p": 2}, "geometry": {"dimension": 1, "norm": "sup"}, "seed": 1})";

}  // namespace

TEST_CASE("config validation reports the offending path") {
    CHECK_NOTHROW(parse_config(kMinimal));
    CHECK(expect_config_error("{") == "$");
    CHECK(expect_config_error(R"({"phi": {"kind": "power", "p": 2}, "geometry": {"dimension": 1, "norm": "sup"}})") == "$.seed");
    CHECK(expect_config_error(R"({"phi": {"kind": "power", "p": 2}, "geometry": {"dimension": 1, "norm": "sup"}, "seed": 1, "colour": 3})") ==
          "$.colour");
    CHECK(expect_config_error(R"({"phi": {"kind": "cosh"}, "geometry": {"dimension": 1, "norm": "sup"}, "seed": 1})") == "$.phi.kind");
    CHECK(expect_config_error(R"({"phi": {"kind": "power", "p": -2}, "geometry": {"dimension": 1, "norm": "sup"}, "seed": 1})") == "$.phi.p");
    CHECK(expect_config_error(R"({"phi": {"kind": "power", "p": 2}, "geometry": {"dimension": 3, "norm": "sup"}, "seed": 1})") ==
          "$.geometry.dimension");
    CHECK(expect_config_error(R"({"phi": {"kind": "power", "p": 2}, "geometry": {"dimension": 1, "norm": "sup"}, "seed": 1,
                                 "source": {"kind": "gaussian", "mean": 0, "sigma": -1}})") == "$.source.sigma");
    CHECK(expect_config_error(R"({"phi": {"kind": "power", "p": 2}, "geometry": {"dimension": 1, "norm": "sup"}, "seed": "x"})") == "$.seed");
    CHECK(expect_config_error(R"({"phi": {"kind": "power", "p": 2}, "geometry": {"dimension": 1, "norm": "sup"}, "seed": 1,
                                 "source": {"kind": "gaussian", "mean": 0, "sigma": 1},
                                 "codebook": {"schedule": [100, 0], "support_box": {"lower": [-1], "upper": [1]}}})")
              .rfind("$.codebook.schedule", 0) == 0);
}

TEST_CASE("shipped configurations parse") {
    for (const auto& entry : fs::directory_iterator(kConfigs)) {
        if (entry.path().extension() != ".json") continue;
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(load_config(entry.path()));
    }
}

TEST_CASE("csv helpers") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(num(0.1) == "0.1");
    CHECK(num(std::numeric_limits<double>::infinity()) == "inf");
    CsvTable t({"a", "b"});
    t.comment("k=v");
    t.row({"1", "2"});
    t.footer("done=true");
    CHECK(t.str() == "# k=v\na,b\n1,2\n# done=true\n");
}

TEST_CASE("atomic writes replace files without leftovers") {
    const auto dir = scratch("atomic");
    const auto target = dir / "nested" / "file.txt";
    write_atomic(target, "first");
    write_atomic(target, "second");
    CHECK(slurp(target) == "second");
    int entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(target.parent_path())) ++entries;
    CHECK(entries == 1);
}

TEST_CASE("thread count resolution") {
    CHECK(resolve_threads(3) == 3);
    setenv("ORLICZQ_THREADS", "5", 1);
    CHECK(resolve_threads(0) == 5);
    unsetenv("ORLICZQ_THREADS");
    CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("g table shape flags") {
    const auto g = GFunction::one_dim_abs(PhiFunction::exp_minus_one());
    const auto rows = g_table(g, {0.1, 0.5, 1.0, 4.0});
    REQUIRE(rows.size() == 4);
    const auto flags = shape_flags(rows);
    CHECK(flags.nonincreasing);
    CHECK(flags.convex);
    CHECK(rows[2].g == doctest::Approx(g(1.0)));
    const std::vector<GTableRow> bumpy{{1.0, 1.0, 0.0}, {2.0, 2.0, 0.0}, {3.0, 0.0, 0.0}};
    CHECK_FALSE(shape_flags(bumpy).nonincreasing);
    CHECK_FALSE(shape_flags(bumpy).convex);
}

TEST_CASE("g-table command tabulates the hexagonal cell") {
    const auto out = scratch("gtable");
    REQUIRE(run_cli("g-table --config " + (kConfigs / "hexagon.json").string() + " --out " + out.string()) == 0);
    const auto text = slurp(out / "g_table.csv");
    CHECK(text.find("# g_variant=hexagon_2d") != std::string::npos);
    CHECK(text.find("# nonincreasing=true") != std::string::npos);
    std::istringstream in(text);
    std::string line;
    bool found = false;
    while (std::getline(in, line)) {
        if (line.rfind("1,", 0) != 0) continue;
        const double g = std::stod(line.substr(2, line.find(',', 2) - 2));
        CHECK(g == doctest::Approx(5.0 / (18.0 * std::sqrt(3.0))).epsilon(1e-9));
        found = true;
    }
    CHECK(found);
}

TEST_CASE("solve output is byte-identical across runs and thread counts") {
    const auto a = scratch("solve_a");
    const auto b = scratch("solve_b");
    const auto cfg = (kConfigs / "power2_gaussian.json").string();
    REQUIRE(run_cli("solve --config " + cfg + " --out " + a.string() + " --threads 1") == 0);
    REQUIRE(run_cli("solve --config " + cfg + " --out " + b.string() + " --threads 3") == 0);
    CHECK(slurp(a / "solve.csv") == slurp(b / "solve.csv"));
    CHECK(slurp(a / "solve.csv").find("primal_dual_agree=true") != std::string::npos);
}

TEST_CASE("codebook export honours the seed override and is deterministic") {
    const auto a = scratch("export_a");
    const auto b = scratch("export_b");
    const auto cfg = (kConfigs / "power2_uniform.json").string();
    REQUIRE(run_cli("codebook-export --config " + cfg + " --out " + a.string() + " --seed 77") == 0);
    REQUIRE(run_cli("codebook-export --config " + cfg + " --out " + b.string() + " --seed 77") == 0);
    const auto text = slurp(a / "codebook_N256.csv");
    CHECK(text == slurp(b / "codebook_N256.csv"));
    CHECK(text.find("# seed=77") != std::string::npos);
    std::istringstream in(text);
    const auto cb = read_codebook_csv(in, NormSpace(1, NormKind::SupNorm));
    CHECK(cb.size() == 256);
}

TEST_CASE("exit codes") {
    const auto out = scratch("exit");
    CHECK(run_cli("") == 1);
    CHECK(run_cli("solve") == 1);
    CHECK(run_cli("solve --config /nonexistent.json --out " + out.string()) == 1);
    CHECK(run_cli("solve --config " + (kConfigs / "hexagon.json").string() + " --threads 0 --out " + out.string()) == 1);
    const auto bad = out / "bad.json";
    std::ofstream(bad) << R"({"phi": {"kind": "power"}, "seed": 1})";
    CHECK(run_cli("g-table --config " + bad.string() + " --out " + out.string()) == 1);
    // No source: nothing to solve.
    CHECK(run_cli("solve --config " + (kConfigs / "hexagon.json").string() + " --out " + out.string()) == 1);
    CHECK(run_cli("solve --config " + (kConfigs / "degenerate.json").string() + " --out " + out.string()) == 0);
    CHECK(run_cli("growth-check --config " + (kConfigs / "growth_exp.json").string() + " --out " + out.string()) == 0);
    CHECK(run_cli("growth-check --config " + (kConfigs / "growth_exp_diverging.json").string() + " --out " + out.string()) == 2);
    CHECK(slurp(out / "growth.csv").find("# verdict=diverging") != std::string::npos);
}
