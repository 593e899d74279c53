#include "orliczq/cli/commands.hpp"

#include "orliczq/cli/report.hpp"
#include "orliczq/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace orliczq::cli {

namespace {

constexpr double kShapeTol = 1e-12;
constexpr int kDefaultHistogramBins = 24;

const SourceDensity& require_source(const ExperimentConfig& cfg, const char* command) {
    if (!cfg.source) throw ConfigError("$.source", std::string("required by ") + command);
    return *cfg.source;
}

const CodebookConfig& require_codebook(const ExperimentConfig& cfg, const char* command) {
    if (!cfg.codebook) throw ConfigError("$.codebook", std::string("required by ") + command);
    return *cfg.codebook;
}

void log_line(const RunContext& ctx, const std::string& s) {
    if (ctx.log) *ctx.log << s << '\n';
}

std::vector<std::string> metadata_lines(const ExperimentConfig& cfg, const char* command, const RunContext& ctx) {
    std::vector<std::string> lines{
        fmt::format("orliczq {}", command),
        fmt::format("g_variant={}", cfg.g_variant),
        fmt::format("dimension={}", cfg.geometry.dimension()),
        fmt::format("norm={}", cfg.geometry.kind() == NormKind::SupNorm ? "sup" : "euclidean"),
    };
    if (cfg.source) lines.push_back(fmt::format("source={}", cfg.source_kind));
    lines.push_back(fmt::format("seed={}", ctx.seed));
    return lines;
}

void add_metadata(CsvTable& t, const ExperimentConfig& cfg, const char* command, const RunContext& ctx) {
    for (const auto& line : metadata_lines(cfg, command, ctx)) t.comment(line);
}

HistogramSpec histogram_of(const ExperimentConfig& cfg, const CodebookConfig& cb) {
    if (cfg.histogram) return *cfg.histogram;
    HistogramSpec h{cb.support_box.lower, cb.support_box.upper, {}};
    h.bins.assign(static_cast<std::size_t>(cfg.geometry.dimension()), kDefaultHistogramBins);
    return h;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

}  // namespace

std::vector<GTableRow> g_table(const GFunction& g, const std::vector<double>& eta_grid) {
    std::vector<GTableRow> rows;
    rows.reserve(eta_grid.size());
    for (double eta : eta_grid) rows.push_back({eta, g(eta), g.derivative(eta)});
    return rows;
}

ShapeFlags shape_flags(const std::vector<GTableRow>& rows) {
    ShapeFlags f;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double scale = std::max(std::abs(rows[i].g), std::abs(rows[i - 1].g));
        if (rows[i].g > rows[i - 1].g + kShapeTol * scale) f.nonincreasing = false;
        if (i + 1 < rows.size()) {
            const double s0 = (rows[i].g - rows[i - 1].g) / (rows[i].eta - rows[i - 1].eta);
            const double s1 = (rows[i + 1].g - rows[i].g) / (rows[i + 1].eta - rows[i].eta);
            if (s1 < s0 - kShapeTol * std::max(std::abs(s0), std::abs(s1))) f.convex = false;
        }
    }
    return f;
}

AllocationSolution solve_config(const ExperimentConfig& cfg) {
    const SourceDensity& src = require_source(cfg, "the allocation solver");
    const ConjugatePair cp(cfg.g);
    return solve(cp, src, cfg.g.at_zero(), cfg.solver.options);
}

int family_level(const ExperimentConfig& cfg) {
    const CodebookConfig& cb = require_codebook(cfg, "codebook construction");
    if (cb.level) return *cb.level;
    return default_subdivision_level(cb.schedule.back(), cfg.geometry.dimension());
}

Codebook build_family_codebook(const ExperimentConfig& cfg, const AllocationSolution& sol, long long n, int level) {
    const CodebookConfig& cb = require_codebook(cfg, "codebook construction");
    if (sol.degenerate || !(sol.I > 0.0)) {
        throw SolverError("the allocation problem is degenerate (I = 0): there is no point density to stratify");
    }
    const PointDensity xi = sol.xi;
    const double I = sol.I;
    auto xibar = [xi, I](std::span<const double> x) { return xi(x) / I; };
    Codebook book = build_stratified(xibar, n, cb.support_box, level, cb.safety_kappa, cfg.geometry);
    if (cb.tail) book = Codebook::unite(book, build_tail_net(*cb.tail, n, cfg.geometry));
    return book;
}

ConvergenceRun run_convergence(const ExperimentConfig& cfg, std::uint64_t seed, unsigned threads) {
    const CodebookConfig& cb = require_codebook(cfg, "convergence");
    const SourceDensity& src = require_source(cfg, "convergence");
    ConvergenceRun run;
    run.solution = solve_config(cfg);
    run.level = family_level(cfg);
    run.histogram = histogram_of(cfg, cb);
    const int d = cfg.geometry.dimension();
    const PointDensity xi = run.solution.xi;
    const double I = run.solution.I;
    auto xibar = [xi, I](std::span<const double> x) { return xi(x) / I; };
    for (long long n : cb.schedule) {
        const Codebook book = build_family_codebook(cfg, run.solution, n, run.level);
        DistortionOptions opt;
        opt.mc_samples = cfg.monte_carlo.samples;
        opt.shards = cfg.monte_carlo.shards;
        opt.seed = seed;
        opt.threads = threads;
        const DistortionEstimate est = distortion(book, src, cfg.phi, opt);
        ConvergenceRow row;
        row.n = n;
        row.size = book.size();
        row.distortion = est.orlicz_value;
        row.std_error = est.std_error;
        const double scale = std::pow(static_cast<double>(n), 1.0 / d);
        row.scaled = scale * est.orlicz_value;
        row.scaled_error = scale * est.std_error;
        row.l1 = l1_distance(empirical_measure(book, run.histogram), xibar);
        run.rows.push_back(row);
    }
    return run;
}

int cmd_g_table(const ExperimentConfig& cfg, const RunContext& ctx) {
    const auto rows = g_table(cfg.g, cfg.eta_grid);
    const ShapeFlags flags = shape_flags(rows);
    CsvTable t({"eta", "g", "gprime"});
    add_metadata(t, cfg, "g-table", ctx);
    for (const auto& r : rows) t.row({num(r.eta), num(r.g), num(r.gprime)});
    t.footer("nonincreasing=" + bool_str(flags.nonincreasing));
    t.footer("convex=" + bool_str(flags.convex));
    write_atomic(ctx.out_dir / "g_table.csv", t.str());
    log_line(ctx, fmt::format("g-table: {} rows, nonincreasing={}, convex={}", rows.size(),
                              bool_str(flags.nonincreasing), bool_str(flags.convex)));
    return kExitOk;
}

int cmd_solve(const ExperimentConfig& cfg, const RunContext& ctx) {
    const SourceDensity& src = require_source(cfg, "solve");
    const AllocationSolution sol = solve_config(cfg);
    const int d = cfg.geometry.dimension();

    CsvTable summary({"quantity", "value"});
    add_metadata(summary, cfg, "solve", ctx);
    summary.row({"degenerate", bool_str(sol.degenerate)});
    bool agree = true;
    if (sol.degenerate) {
        summary.row({"I", num(0.0)});
        summary.row({"ac_mass_times_sup_phi", num(sol.constraint_value)});
        log_line(ctx, fmt::format("solve: degenerate (ac_mass * sup phi = {} <= 1), I = 0, xi = 0",
                                  num(sol.constraint_value)));
    } else {
        const double gap = std::abs(sol.I - sol.dual_value);
        agree = gap <= cfg.solver.primal_dual_tol * std::max(1.0, sol.I);
        summary.row({"kappa0", num(*sol.kappa0)});
        summary.row({"kappa_lo", num(sol.kappa_lo)});
        summary.row({"kappa_hi", num(sol.kappa_hi)});
        summary.row({"I", num(sol.I)});
        summary.row({"I_error", num(sol.primal_error)});
        summary.row({"dual_value", num(sol.dual_value)});
        summary.row({"primal_dual_gap", num(gap)});
        summary.row({"constraint_value", num(sol.constraint_value)});
        summary.row({"constraint_minus", num(sol.constraint_minus)});
        summary.row({"constraint_plus", num(sol.constraint_plus)});
        summary.row({"alpha_mix", num(sol.alpha_mix)});
        summary.row({"limit_constant", num(std::pow(sol.I, 1.0 / d))});
        if (cfg.solver.dual_search) {
            const DualMaximum dm = maximize_dual(ConjugatePair(cfg.g), src, *sol.kappa0);
            summary.row({"dual_sup", num(dm.value)});
            summary.row({"dual_sup_kappa", num(dm.kappa)});
            agree = agree && std::abs(sol.I - dm.value) <= cfg.solver.primal_dual_tol * std::max(1.0, sol.I);
        }
        log_line(ctx, fmt::format("solve: kappa0 = {}, I = {}, dual = {}, constraint = {}", num(*sol.kappa0),
                                  num(sol.I), num(sol.dual_value), num(sol.constraint_value)));
    }
    summary.footer("primal_dual_agree=" + bool_str(agree));
    write_atomic(ctx.out_dir / "solve.csv", summary.str());

    if (cfg.xi_table) {
        const XiTableConfig& xt = *cfg.xi_table;
        std::vector<std::string> header = d == 1 ? std::vector<std::string>{"x", "h", "xi"}
                                                 : std::vector<std::string>{"x", "y", "h", "xi"};
        CsvTable table(header);
        add_metadata(table, cfg, "solve", ctx);
        auto axis = [&](int k, int i) {
            const double lo = xt.lower[static_cast<std::size_t>(k)];
            const double hi = xt.upper[static_cast<std::size_t>(k)];
            return i == xt.points - 1 ? hi : lo + (hi - lo) * i / (xt.points - 1);
        };
        const int ny = d == 1 ? 1 : xt.points;
        for (int i = 0; i < xt.points; ++i) {
            for (int j = 0; j < ny; ++j) {
                std::vector<double> x{axis(0, i)};
                if (d == 2) x.push_back(axis(1, j));
                const double h = src.density(x);
                const double xi = sol.degenerate ? 0.0 : sol.xi(x);
                std::vector<std::string> cells;
                for (double v : x) cells.push_back(num(v));
                cells.push_back(num(h));
                cells.push_back(num(xi));
                table.row(cells);
            }
        }
        write_atomic(ctx.out_dir / "xi.csv", table.str());
    }
    if (!agree) {
        log_line(ctx, "solve: primal and dual values disagree beyond the configured tolerance");
        return kExitNumeric;
    }
    return kExitOk;
}

int cmd_convergence(const ExperimentConfig& cfg, const RunContext& ctx) {
    const ConvergenceRun run = run_convergence(cfg, ctx.seed, ctx.threads);
    const int d = cfg.geometry.dimension();
    const double limit = std::pow(run.solution.I, 1.0 / d);
    CsvTable t({"N", "size", "scaled_distortion", "scaled_std_error", "distortion", "l1_histogram"});
    add_metadata(t, cfg, "convergence", ctx);
    t.comment(fmt::format("I={}", num(run.solution.I)));
    t.comment(fmt::format("limit_constant={}", num(limit)));
    t.comment(fmt::format("subdivision_level={}", run.level));
    t.comment(fmt::format("mc_samples={}", cfg.monte_carlo.samples));
    t.comment(fmt::format("shards={}", cfg.monte_carlo.shards));
    LinePlot plot;
    plot.title = "Scaled distortion N^(1/d) x distortion";
    plot.x_label = "codebook size N";
    plot.y_label = "N^(1/d) x distortion";
    plot.log2_x = true;
    plot.reference = limit;
    plot.reference_label = "limit I^(1/d) = " + fmt::format("{:.5f}", limit);
    for (const auto& r : run.rows) {
        t.row({std::to_string(r.n), std::to_string(r.size), num(r.scaled), num(r.scaled_error), num(r.distortion),
               num(r.l1)});
        plot.xs.push_back(static_cast<double>(r.n));
        plot.ys.push_back(r.scaled);
        log_line(ctx, fmt::format("N = {:6d}  |C| = {:6d}  N^(1/d) dist = {:.5f} +- {:.5f}  L1 = {:.4f}", r.n, r.size,
                                  r.scaled, r.scaled_error, r.l1));
    }
    write_atomic(ctx.out_dir / "convergence.csv", t.str());
    write_atomic(ctx.out_dir / "convergence.svg", render_svg(plot));
    log_line(ctx, fmt::format("limit constant I^(1/d) = {}", num(limit)));
    return kExitOk;
}

int cmd_growth_check(const ExperimentConfig& cfg, const RunContext& ctx) {
    if (!cfg.growth) throw ConfigError("$.growth", "required by growth-check");
    const GrowthConfig& gc = *cfg.growth;
    const int d = cfg.geometry.dimension();
    const double c_E = gc.c_E ? *gc.c_E : covering_constant(cfg.geometry);
    const GrowthReport rep = check_growth_condition(gc.tail, cfg.phi, d, c_E, gc.n_max);
    CsvTable t({"n", "log_term", "log_partial_sum"});
    add_metadata(t, cfg, "growth-check", ctx);
    t.comment(fmt::format("c_E={}", num(c_E)));
    for (std::size_t i = 0; i < rep.log_terms.size(); ++i) {
        t.row({std::to_string(rep.first_index + static_cast<int>(i)), num(rep.log_terms[i]),
               num(rep.log_partial_sums[i])});
    }
    t.footer(fmt::format("verdict={}", to_string(rep.verdict)));
    t.footer(fmt::format("reason={}", rep.reason));
    t.footer(fmt::format("term_ratio={}", num(rep.term_ratio)));
    t.footer(fmt::format("decay_exponent={}", num(rep.decay_exponent)));
    t.footer(fmt::format("log_remainder={}", num(rep.log_remainder)));
    write_atomic(ctx.out_dir / "growth.csv", t.str());
    if (ctx.log) {
        // Partial sums can exceed double range; those are shown as exp(log S).
        auto show = [&](std::size_t k) {
            const double ls = rep.log_partial_sums[k];
            const std::string value = ls < 700.0 ? num(std::exp(ls)) : "exp(" + num(ls) + ")";
            log_line(ctx, fmt::format("S_{} = {}", rep.first_index + static_cast<int>(k), value));
        };
        const std::size_t n = rep.log_partial_sums.size();
        for (std::size_t k = 1; k <= n; k *= 2) show(k - 1);
        if (n > 0 && (n & (n - 1)) != 0) show(n - 1);
        log_line(ctx, fmt::format("verdict: {} ({})", to_string(rep.verdict), rep.reason));
    }
    return rep.verdict == GrowthVerdict::converged ? kExitOk : kExitNumeric;
}

int cmd_codebook_export(const ExperimentConfig& cfg, const RunContext& ctx) {
    const CodebookConfig& cb = require_codebook(cfg, "codebook-export");
    const AllocationSolution sol = solve_config(cfg);
    const int level = family_level(cfg);
    for (long long n : cb.schedule) {
        const Codebook book = build_family_codebook(cfg, sol, n, level);
        std::ostringstream out;
        for (const auto& line : metadata_lines(cfg, "codebook-export", ctx)) out << "# " << line << '\n';
        write_codebook_csv(out, book);
        write_atomic(ctx.out_dir / fmt::format("codebook_N{}.csv", n), out.str());
        log_line(ctx, fmt::format("N = {}: {} points", n, book.size()));
    }
    return kExitOk;
}

}  // namespace orliczq::cli
