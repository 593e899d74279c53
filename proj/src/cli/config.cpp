#include "orliczq/cli/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace orliczq::cli {

namespace {

using json = nlohmann::json;

// A JSON value together with its path, for error messages.
class Node {
public:
    Node(const json& value, std::string path) : value_(&value), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }
    const json& raw() const noexcept { return *value_; }

    [[noreturn]] void fail(const std::string& message) const { throw ConfigError(path_, message); }

    Node object_at(const char* key) const {
        auto n = optional(key);
        if (!n) throw ConfigError(path_ + "." + key, "required field is missing");
        return *n;
    }

    std::optional<Node> optional(const char* key) const {
        require_object();
        auto it = value_->find(key);
        if (it == value_->end() || it->is_null()) return std::nullopt;
        return Node(*it, path_ + "." + key);
    }

    Node element(std::size_t i) const { return Node((*value_)[i], path_ + "[" + std::to_string(i) + "]"); }

    void require_object() const {
        if (!value_->is_object()) fail("expected an object");
    }

    void allow_only(std::initializer_list<const char*> keys) const {
        require_object();
        for (auto it = value_->begin(); it != value_->end(); ++it) {
            bool known = false;
            for (const char* k : keys) known = known || it.key() == k;
            if (!known) throw ConfigError(path_ + "." + it.key(), "unknown field");
        }
    }

    double number() const {
        if (!value_->is_number()) fail("expected a number");
        const double v = value_->get<double>();
        if (!std::isfinite(v)) fail("expected a finite number");
        return v;
    }

    double positive() const {
        const double v = number();
        if (!(v > 0.0)) fail("expected a number > 0");
        return v;
    }

    double nonnegative() const {
        const double v = number();
        if (!(v >= 0.0)) fail("expected a number >= 0");
        return v;
    }

    long long integer() const {
        if (!value_->is_number_integer()) fail("expected an integer");
        if (value_->is_number_unsigned() && value_->get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
            fail("integer out of range");
        }
        return value_->get<long long>();
    }

    long long integer_in(long long lo, long long hi) const {
        const long long v = integer();
        if (v < lo || v > hi) fail("expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return v;
    }

    std::uint64_t unsigned64() const {
        if (value_->is_number_unsigned()) return value_->get<std::uint64_t>();
        if (value_->is_number_integer()) fail("expected an integer >= 0");
        fail("expected an unsigned integer");
    }

    bool boolean() const {
        if (!value_->is_boolean()) fail("expected true or false");
        return value_->get<bool>();
    }

    std::string string() const {
        if (!value_->is_string()) fail("expected a string");
        return value_->get<std::string>();
    }

    std::vector<double> numbers(std::size_t min_size = 1) const {
        if (!value_->is_array()) fail("expected an array of numbers");
        if (value_->size() < min_size) fail("expected at least " + std::to_string(min_size) + " entries");
        std::vector<double> out;
        for (std::size_t i = 0; i < value_->size(); ++i) out.push_back(element(i).number());
        return out;
    }

    std::string kind(std::initializer_list<const char*> allowed) const {
        const Node k = object_at("kind");
        const std::string s = k.string();
        std::string list;
        for (const char* a : allowed) {
            if (s == a) return s;
            list += list.empty() ? a : std::string(", ") + a;
        }
        k.fail("unknown kind '" + s + "'; expected one of: " + list);
    }

private:
    const json* value_;
    std::string path_;
};

// Library validation errors are reported at the node that triggered them.
template <class F>
auto at_node(const Node& n, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        n.fail(e.what());
    }
}

PhiFunction parse_phi(const Node& n) {
    const std::string kind = n.kind({"power", "exp_minus_one", "scaled", "tabulated"});
    if (kind == "power") {
        n.allow_only({"kind", "p"});
        const double p = n.object_at("p").positive();
        return at_node(n, [&] { return PhiFunction::power(p); });
    }
    if (kind == "exp_minus_one") {
        n.allow_only({"kind"});
        return PhiFunction::exp_minus_one();
    }
    if (kind == "scaled") {
        n.allow_only({"kind", "base", "delta"});
        const PhiFunction base = parse_phi(n.object_at("base"));
        const double delta = n.object_at("delta").positive();
        return at_node(n, [&] { return PhiFunction::scaled(base, delta); });
    }
    n.allow_only({"kind", "knots"});
    const Node knots = n.object_at("knots");
    if (!knots.raw().is_array() || knots.raw().empty()) knots.fail("expected a non-empty array of [t, phi(t)] pairs");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < knots.raw().size(); ++i) {
        const Node k = knots.element(i);
        const std::vector<double> pair = k.numbers(2);
        if (pair.size() != 2) k.fail("expected a pair [t, phi(t)]");
        pts.emplace_back(pair[0], pair[1]);
    }
    return at_node(knots, [&] { return PhiFunction::tabulated(pts); });
}

NormSpace parse_geometry(const Node& n) {
    n.allow_only({"dimension", "norm"});
    const int d = static_cast<int>(n.object_at("dimension").integer_in(1, 2));
    const Node norm = n.object_at("norm");
    const std::string s = norm.string();
    if (s == "sup") return NormSpace(d, NormKind::SupNorm);
    if (s == "euclidean") return NormSpace(d, NormKind::Euclidean);
    norm.fail("unknown norm '" + s + "'; expected sup or euclidean");
}

GFunction parse_g(const std::optional<Node>& n, const PhiFunction& phi, const NormSpace& geo, std::string& variant) {
    variant = "auto";
    if (n) {
        n->allow_only({"variant", "c", "p", "rel_tol"});
        if (auto v = n->optional("variant")) variant = v->string();
    }
    const int d = geo.dimension();
    if (variant == "auto") {
        if (d == 1) {
            variant = "one_dim_abs";
        } else if (geo.kind() == NormKind::SupNorm) {
            variant = "sup_norm_cube";
        } else {
            variant = "hexagon_2d";
        }
    }
    const std::string path = n ? n->path() + ".variant" : std::string("$.g.variant");
    GFunction g = GFunction::one_dim_abs(phi);
    if (variant == "one_dim_abs") {
        if (d != 1) throw ConfigError(path, "one_dim_abs needs geometry dimension 1");
    } else if (variant == "sup_norm_cube") {
        if (geo.kind() != NormKind::SupNorm && d != 1) throw ConfigError(path, "sup_norm_cube needs the sup norm");
        g = GFunction::sup_norm_cube(phi, d);
    } else if (variant == "hexagon_2d") {
        if (d != 2 || geo.kind() != NormKind::Euclidean) {
            throw ConfigError(path, "hexagon_2d needs the Euclidean norm in dimension 2");
        }
        g = GFunction::hexagon_2d(phi);
    } else if (variant == "power_law") {
        const double c = n->object_at("c").positive();
        const double p = n->object_at("p").positive();
        g = at_node(*n, [&] { return GFunction::power_law(c, p, d); });
    } else {
        throw ConfigError(path, "unknown variant '" + variant +
                                    "'; expected auto, one_dim_abs, sup_norm_cube, hexagon_2d or power_law");
    }
    if (n) {
        if (auto t = n->optional("rel_tol")) {
            QuadOptions q = g.quadrature();
            q.rel_tol = t->positive();
            g.set_quadrature(q);
        }
    }
    return g;
}

// strict: the object holds nothing but the two bounds.
Box parse_box(const Node& n, int d, bool strict = true) {
    if (strict) n.allow_only({"lower", "upper"});
    Box b{n.object_at("lower").numbers(), n.object_at("upper").numbers()};
    if (b.dimension() != d) n.object_at("lower").fail("expected " + std::to_string(d) + " entries");
    if (static_cast<int>(b.upper.size()) != d) n.object_at("upper").fail("expected " + std::to_string(d) + " entries");
    for (int k = 0; k < d; ++k) {
        if (!(b.upper[k] > b.lower[k])) n.fail("upper must exceed lower on every axis");
    }
    return b;
}

SourceDensity parse_source(const Node& n, int d, const std::filesystem::path& base_dir, std::string& kind) {
    kind = n.kind({"gaussian", "uniform_box", "gaussian_mixture", "grid"});
    double ac = 1.0;
    if (auto a = n.optional("ac_mass")) {
        ac = a->number();
        if (!(ac > 0.0 && ac <= 1.0)) a->fail("expected a number in (0, 1]");
    }
    std::optional<SourceDensity> src;
    if (kind == "gaussian") {
        n.allow_only({"kind", "mean", "sigma", "ac_mass", "quad_domain"});
        const double mean = n.optional("mean") ? n.object_at("mean").number() : 0.0;
        const double sigma = n.optional("sigma") ? n.object_at("sigma").positive() : 1.0;
        src = at_node(n, [&] { return SourceDensity::gaussian(mean, sigma, ac); });
    } else if (kind == "uniform_box") {
        n.allow_only({"kind", "lower", "upper", "ac_mass", "quad_domain"});
        Box b{n.object_at("lower").numbers(), n.object_at("upper").numbers()};
        if (b.lower.size() != b.upper.size()) n.object_at("upper").fail("lower and upper differ in length");
        for (std::size_t k = 0; k < b.lower.size(); ++k) {
            if (!(b.upper[k] > b.lower[k])) n.fail("upper must exceed lower on every axis");
        }
        src = at_node(n, [&] { return SourceDensity::uniform_box(b, ac); });
    } else if (kind == "gaussian_mixture") {
        n.allow_only({"kind", "weights", "means", "sigmas", "ac_mass", "quad_domain"});
        auto w = n.object_at("weights").numbers();
        auto m = n.object_at("means").numbers();
        auto s = n.object_at("sigmas").numbers();
        if (m.size() != w.size()) n.object_at("means").fail("expected as many entries as weights");
        if (s.size() != w.size()) n.object_at("sigmas").fail("expected as many entries as weights");
        src = at_node(n, [&] { return SourceDensity::gaussian_mixture(w, m, s, ac); });
    } else {
        n.allow_only({"kind", "path", "xs", "ys", "values", "ac_mass", "quad_domain"});
        if (auto p = n.optional("path")) {
            if (n.optional("xs") || n.optional("values")) n.fail("give either path or xs/values, not both");
            std::filesystem::path file = p->string();
            if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
            src = at_node(*p, [&] { return SourceDensity::grid_from_csv_file(file.string(), ac); });
        } else {
            GridDensity grid;
            grid.xs = n.object_at("xs").numbers(2);
            if (auto ys = n.optional("ys")) grid.ys = ys->numbers(2);
            grid.values = n.object_at("values").numbers();
            src = at_node(n, [&] { return SourceDensity::grid(grid, ac); });
        }
    }
    if (src->dimension() != d) {
        n.fail("source dimension " + std::to_string(src->dimension()) + " differs from geometry dimension " +
               std::to_string(d));
    }
    if (auto q = n.optional("quad_domain")) {
        const Box b = parse_box(*q, d);
        src = at_node(*q, [&] { return src->with_quad_domain(b); });
    }
    return *src;
}

RadiusSequence parse_radii(const Node& n) {
    const std::string kind = n.kind({"geometric", "polynomial", "tabulated"});
    if (kind == "geometric") {
        n.allow_only({"kind", "base", "scale"});
        GeometricRadii g;
        if (auto b = n.optional("base")) g.base = b->positive();
        if (auto s = n.optional("scale")) g.scale = s->positive();
        if (!(g.base > 1.0)) n.object_at("base").fail("expected a number > 1");
        return g;
    }
    if (kind == "polynomial") {
        n.allow_only({"kind", "exponent", "scale"});
        PolynomialRadii p;
        p.exponent = n.object_at("exponent").positive();
        if (auto s = n.optional("scale")) p.scale = s->positive();
        return p;
    }
    n.allow_only({"kind", "values"});
    return TabulatedSequence{n.object_at("values").numbers(2)};
}

WeightSequence parse_weights(const Node& n) {
    const std::string kind = n.kind({"polynomial", "tabulated"});
    if (kind == "polynomial") {
        n.allow_only({"kind", "gamma", "scale"});
        PolynomialWeights p;
        p.gamma = n.object_at("gamma").positive();
        if (auto s = n.optional("scale")) p.scale = s->positive();
        return p;
    }
    n.allow_only({"kind", "values"});
    return TabulatedSequence{n.object_at("values").numbers(2)};
}

TailWeight parse_psi(const Node& n) {
    const std::string kind = n.kind({"power_log", "exp_power"});
    if (kind == "power_log") {
        n.allow_only({"kind", "p", "beta"});
        return PowerLogPsi{n.object_at("p").positive(), n.optional("beta") ? n.object_at("beta").nonnegative() : 0.0};
    }
    n.allow_only({"kind", "kappa"});
    return ExpPowerPsi{n.object_at("kappa").positive()};
}

std::vector<double> parse_eta_grid(const std::optional<Node>& n) {
    if (!n) {
        std::vector<double> grid;
        for (int k = -6; k <= 6; ++k) grid.push_back(std::ldexp(1.0, k));
        return grid;
    }
    n->allow_only({"eta", "eta_min", "eta_max", "points"});
    std::vector<double> grid;
    if (auto e = n->optional("eta")) {
        if (n->optional("eta_min") || n->optional("eta_max") || n->optional("points")) {
            n->fail("give either eta or eta_min/eta_max/points, not both");
        }
        grid = e->numbers();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!(grid[i] > 0.0)) e->element(i).fail("expected a number > 0");
            if (i > 0 && !(grid[i] > grid[i - 1])) e->element(i).fail("eta values must be strictly increasing");
        }
        return grid;
    }
    const double lo = n->object_at("eta_min").positive();
    const double hi = n->object_at("eta_max").positive();
    const int pts = static_cast<int>(n->object_at("points").integer_in(2, 100000));
    if (!(hi > lo)) n->object_at("eta_max").fail("expected eta_max > eta_min");
    for (int i = 0; i < pts; ++i) grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (pts - 1)));
    grid.back() = hi;
    return grid;
}

ExperimentConfig parse_document(const json& doc, const std::filesystem::path& base_dir) {
    const Node root(doc, "$");
    root.allow_only({"description", "phi", "geometry", "g", "source", "solver", "g_table", "xi_table", "codebook",
                     "monte_carlo", "histogram", "growth", "seed", "output_dir"});
    ExperimentConfig cfg;
    if (auto d = root.optional("description")) d->string();
    cfg.phi = parse_phi(root.object_at("phi"));
    cfg.geometry = parse_geometry(root.object_at("geometry"));
    const int d = cfg.geometry.dimension();
    cfg.g = parse_g(root.optional("g"), cfg.phi, cfg.geometry, cfg.g_variant);
    if (auto s = root.optional("source")) cfg.source = parse_source(*s, d, base_dir, cfg.source_kind);

    if (auto s = root.optional("solver")) {
        s->allow_only({"kappa_rel_tol", "alpha_tol", "quad_rel_tol", "side_gap_tol", "primal_dual_tol", "dual_search"});
        SolveOptions& o = cfg.solver.options;
        if (auto v = s->optional("kappa_rel_tol")) o.kappa_rel_tol = v->positive();
        if (auto v = s->optional("alpha_tol")) o.alpha_tol = v->positive();
        if (auto v = s->optional("quad_rel_tol")) o.quad_rel_tol = v->positive();
        if (auto v = s->optional("side_gap_tol")) o.side_gap_tol = v->positive();
        if (auto v = s->optional("primal_dual_tol")) cfg.solver.primal_dual_tol = v->positive();
        if (auto v = s->optional("dual_search")) cfg.solver.dual_search = v->boolean();
    }
    cfg.eta_grid = parse_eta_grid(root.optional("g_table"));

    if (auto x = root.optional("xi_table")) {
        x->allow_only({"lower", "upper", "points"});
        XiTableConfig t;
        const Box b = parse_box(*x, d, false);
        t.lower = b.lower;
        t.upper = b.upper;
        if (auto p = x->optional("points")) t.points = static_cast<int>(p->integer_in(2, d == 1 ? 1000000 : 2000));
        cfg.xi_table = t;
    }

    if (auto c = root.optional("codebook")) {
        c->allow_only({"schedule", "support_box", "level", "safety_kappa", "tail"});
        CodebookConfig cb;
        const Node sched = c->object_at("schedule");
        if (!sched.raw().is_array() || sched.raw().empty()) sched.fail("expected a non-empty array of sizes");
        for (std::size_t i = 0; i < sched.raw().size(); ++i) {
            const Node e = sched.element(i);
            const long long n = e.integer_in(1, 100000000);
            if (!cb.schedule.empty() && n <= cb.schedule.back()) e.fail("schedule must be strictly increasing");
            cb.schedule.push_back(n);
        }
        cb.support_box = parse_box(c->object_at("support_box"), d);
        if (auto l = c->optional("level")) cb.level = static_cast<int>(l->integer_in(0, d == 1 ? 20 : 10));
        if (auto s = c->optional("safety_kappa")) cb.safety_kappa = s->nonnegative();
        if (auto t = c->optional("tail")) {
            t->allow_only({"J", "radii", "weights", "c_E", "eps_tail"});
            TailNetParams p;
            if (auto j = t->optional("J")) p.J = static_cast<int>(j->integer_in(0, 1000000));
            p.r = parse_radii(t->object_at("radii"));
            p.alpha = parse_weights(t->object_at("weights"));
            if (auto ce = t->optional("c_E")) p.c_E = ce->positive();
            if (auto e = t->optional("eps_tail")) p.eps_tail = e->positive();
            at_node(*t, [&] {
                p.validate();
                return 0;
            });
            cb.tail = p;
        }
        cfg.codebook = cb;
    }

    if (auto m = root.optional("monte_carlo")) {
        m->allow_only({"samples", "shards"});
        if (auto s = m->optional("samples")) cfg.monte_carlo.samples = static_cast<std::size_t>(s->integer_in(1000, 1000000000));
        if (auto s = m->optional("shards")) cfg.monte_carlo.shards = static_cast<unsigned>(s->integer_in(2, 4096));
    }

    if (auto h = root.optional("histogram")) {
        h->allow_only({"lower", "upper", "bins"});
        const Box b = parse_box(*h, d, false);
        HistogramSpec spec{b.lower, b.upper, {}};
        const Node bins = h->object_at("bins");
        if (!bins.raw().is_array() || static_cast<int>(bins.raw().size()) != d) {
            bins.fail("expected " + std::to_string(d) + " bin counts");
        }
        for (std::size_t i = 0; i < bins.raw().size(); ++i) spec.bins.push_back(static_cast<int>(bins.element(i).integer_in(1, 100000)));
        cfg.histogram = spec;
    }

    if (auto g = root.optional("growth")) {
        g->allow_only({"psi", "radii", "weights", "c_E", "n_max"});
        GrowthConfig gc{TailSpec{parse_psi(g->object_at("psi")), parse_radii(g->object_at("radii")),
                                 parse_weights(g->object_at("weights"))},
                        std::nullopt, 2000};
        if (auto c = g->optional("c_E")) gc.c_E = c->positive();
        if (auto n = g->optional("n_max")) gc.n_max = static_cast<int>(n->integer_in(8, 10000));
        at_node(*g, [&] {
            gc.tail.validate(gc.n_max);
            return 0;
        });
        cfg.growth = gc;
    }

    cfg.seed = root.object_at("seed").unsigned64();
    if (auto o = root.optional("output_dir")) cfg.output_dir = o->string();
    return cfg;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("$", std::string("malformed JSON: ") + e.what());
    }
    return parse_document(doc, base_dir);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("$", "cannot open config file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.parent_path());
}

}  // namespace orliczq::cli
