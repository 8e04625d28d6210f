#include "stable_degen/cli.hpp"

#include "stable_degen/errors.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace stable_degen::cli {

namespace {

using io::Json;
namespace fs = std::filesystem;

constexpr double kOrthonormalityTolerance = 1e-8;
constexpr double kRatioFloorTolerance = 1e-10;

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& what) {
    if (!j.is_object()) throw ConfigError(what + ": expected an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError(what + ": unknown key '" + key + "'");
}

int get_int(const Json& j, const std::string& key, int fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
    return v.get<int>();
}

double get_real(const Json& j, const std::string& key, double fallback) {
    return j.contains(key) ? io::parse_real(j.at(key), key) : fallback;
}

bool get_bool(const Json& j, const std::string& key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) throw ConfigError("'" + key + "' must be a boolean");
    return j.at(key).get<bool>();
}

diff::Branch parse_branch(const Json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        throw ConfigError("model.nodes: a branch is [component, point]");
    return {j[0].get<int>(), j[1].get<int>()};
}

surface::PantsGraph parse_graph(const Json& j) {
    check_keys(j, {"genus", "vertex_count", "edges"}, "graph");
    surface::PantsGraph g;
    g.genus = get_int(j, "genus", 2);
    g.vertex_count = get_int(j, "vertex_count", 2 * g.genus - 2);
    if (!j.contains("edges") || !j.at("edges").is_array()) throw ConfigError("graph.edges must be a list");
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
            throw ConfigError("graph.edges: an edge is [u, v]");
        g.edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    return g;
}

diff::NodalCurveModel parse_model(const Json& j) {
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        if (name == "two_self_node") return diff::two_self_node_model();
        if (name == "dollar_sign") return diff::dollar_sign_model();
        if (name == "three_self_node") return diff::three_self_node_model();
        throw ConfigError("unknown model preset '" + name + "'");
    }
    check_keys(j, {"name", "components", "nodes", "pants_graph"}, "model");
    diff::NodalCurveModel model;
    if (j.contains("pants_graph")) {
        if (j.contains("components") || j.contains("nodes"))
            throw ConfigError("model: give either pants_graph or components and nodes");
        const auto g = parse_graph(j.at("pants_graph"));
        const auto verdict = surface::validate_pants_graph(g);
        if (!verdict.accepted) throw ConfigError("model.pants_graph rejected: " + verdict.violations.front());
        model = diff::model_from_pants_graph(g);
    } else {
        if (!j.contains("components") || !j.contains("nodes")) throw ConfigError("model: components and nodes required");
        for (const auto& c : j.at("components")) {
            if (!c.is_array()) throw ConfigError("model.components: each component is a list of points");
            diff::Component comp;
            for (const auto& p : c) comp.points.push_back(io::parse_complex(p, "model.components"));
            model.components.push_back(std::move(comp));
        }
        for (const auto& n : j.at("nodes")) {
            if (!n.is_array() || n.size() != 2) throw ConfigError("model.nodes: a node is [branch, branch]");
            model.nodes.push_back({parse_branch(n[0]), parse_branch(n[1])});
        }
    }
    if (j.contains("name")) {
        if (!j.at("name").is_string()) throw ConfigError("model.name must be a string");
        model.name = j.at("name").get<std::string>();
    }
    diff::validate_model(model);
    return model;
}

bergman::QuadratureOrders parse_orders(const Json& j) {
    check_keys(j, {"radial", "angular", "outer_radial", "outer_angular", "max_panel", "max_angle_panel"}, "quadrature");
    bergman::QuadratureOrders q;
    q.radial = get_int(j, "radial", q.radial);
    q.angular = get_int(j, "angular", q.angular);
    q.outer_radial = get_int(j, "outer_radial", q.outer_radial);
    q.outer_angular = get_int(j, "outer_angular", q.outer_angular);
    q.max_panel = get_real(j, "max_panel", q.max_panel);
    q.max_angle_panel = get_real(j, "max_angle_panel", q.max_angle_panel);
    return q;
}

std::vector<complex> parse_schedule(const Json& j, const std::string& what) {
    check_keys(j, {"kind", "first", "count", "base", "floor", "ceiling", "arg", "values"}, what);
    if (!j.contains("kind") || !j.at("kind").is_string()) throw ConfigError(what + ".kind required");
    const std::string kind = j.at("kind").get<std::string>();
    const double arg = get_real(j, "arg", 0.0);
    if (kind == "decades") return degen::decade_schedule(get_real(j, "first", 0.1), get_int(j, "count", 6), arg);
    if (kind == "geometric")
        return degen::geometric_schedule(get_real(j, "base", 2.0), get_real(j, "floor", 1e-6), arg,
                                         get_real(j, "ceiling", 0.1));
    if (kind == "list") {
        if (!j.contains("values") || !j.at("values").is_array()) throw ConfigError(what + ".values must be a list");
        std::vector<complex> out;
        for (const auto& v : j.at("values")) out.push_back(io::parse_complex(v, what + ".values"));
        return out;
    }
    throw ConfigError(what + ".kind must be decades, geometric or list");
}

surface::FNCoordinates parse_fn(const Json& j) {
    check_keys(j, {"lengths", "twists", "bers_bound", "bers_normalized"}, "fn");
    surface::FNCoordinates fn;
    if (!j.contains("lengths") || !j.at("lengths").is_array()) throw ConfigError("fn.lengths must be a list");
    for (const auto& v : j.at("lengths")) fn.lengths.push_back(io::parse_real(v, "fn.lengths"));
    if (j.contains("twists")) {
        if (!j.at("twists").is_array()) throw ConfigError("fn.twists must be a list");
        for (const auto& v : j.at("twists")) fn.twists.push_back(io::parse_real(v, "fn.twists"));
    } else {
        fn.twists.assign(fn.lengths.size(), 0.0);
    }
    fn.bers_bound = get_real(j, "bers_bound", 0.0);
    fn.bers_normalized = get_bool(j, "bers_normalized", false);
    return fn;
}

std::set<std::string> keys_for(const std::string& command) {
    static const std::set<std::string> common = {"command", "workers"};
    static const std::map<std::string, std::set<std::string>> extra = {
        {"graphs", {"genus"}},
        {"surface", {"genus", "fn", "thick_thin", "graph"}},
        {"basis", {"model", "m", "truncation", "t", "t_per_node"}},
        {"gram", {"model", "m", "truncation", "t", "t_per_node", "epsilon", "margulis_cap", "quadrature", "richardson"}},
        {"embed",
         {"model", "m", "truncation", "t", "t_per_node", "epsilon", "margulis_cap", "quadrature", "richardson", "samples"}},
        {"degenerate",
         {"model", "m", "truncation", "epsilon", "margulis_cap", "quadrature", "richardson", "samples", "schedule",
          "ratio_cap", "include_limit"}},
        {"robustness",
         {"model", "m", "truncation", "epsilon", "margulis_cap", "quadrature", "samples", "schedule", "eps2",
          "condition_cap"}},
        {"uniqueness",
         {"model", "m", "truncation", "epsilon", "margulis_cap", "quadrature", "samples", "schedule", "schedule_b",
          "tolerance"}},
    };
    std::set<std::string> s = common;
    s.insert(extra.at(command).begin(), extra.at(command).end());
    return s;
}

void parse_single_t(RunConfig& cfg, const Json& j) {
    const auto& model = cfg.family.model;
    if (j.contains("t") && j.contains("t_per_node")) throw ConfigError("give either t or t_per_node");
    if (j.contains("t_per_node")) {
        if (!j.at("t_per_node").is_array()) throw ConfigError("t_per_node must be a list");
        for (const auto& v : j.at("t_per_node")) cfg.t.push_back(io::parse_complex(v, "t_per_node"));
        if (cfg.t.size() != model.nodes.size()) throw ConfigError("t_per_node needs one value per node");
    } else {
        const complex t = j.contains("t") ? io::parse_complex(j.at("t"), "t") : complex(0.0, 0.0);
        cfg.t.assign(model.nodes.size(), t);
    }
    const double r2 = diff::kAnnulusRadius * diff::kAnnulusRadius;
    for (const auto& t : cfg.t)
        if (!std::isfinite(std::abs(t)) || std::abs(t) >= r2) throw ConfigError("t must satisfy |t| < R^2 = e^{-2}");
}

bool all_nodal(const std::vector<complex>& t) {
    return std::all_of(t.begin(), t.end(), [](complex z) { return z == complex(0.0, 0.0); });
}

diff::SectionBasis solve(const RunConfig& cfg) {
    const auto& f = cfg.family;
    const int k = f.truncation < 0 ? diff::default_truncation(f.m) : f.truncation;
    if (all_nodal(cfg.t)) return diff::nodal_basis(f.model, f.m);
    auto basis = diff::plumbed_basis(f.model, cfg.t, f.m, k);
    const auto pivots = diff::canonical_pivots(diff::nodal_basis(f.model, f.m));
    return diff::canonicalize(basis, pivots);
}

Json tolerances(const RunConfig& cfg) {
    Json t{{"rank_gap", io::real(diff::kRankGap)},
           {"richardson", io::real(bergman::kRichardsonTolerance)},
           {"orthonormality", io::real(kOrthonormalityTolerance)},
           {"ratio_floor", io::real(kRatioFloorTolerance)}};
    if (cfg.command == "degenerate") t["ratio_cap"] = io::real(cfg.family.ratio_cap);
    if (cfg.command == "robustness") t["condition_cap"] = io::real(cfg.condition_cap);
    if (cfg.command == "uniqueness") t["uniqueness"] = io::real(cfg.tolerance);
    return t;
}

void check_family_invariants(const degen::ConvergenceReport& rep) {
    for (const auto& s : rep.steps) {
        if (s.min_ratio < 1.0 - kRatioFloorTolerance) throw InvariantError("norm ratio below 1");
        if (s.orthonormality_error > kOrthonormalityTolerance) throw InvariantError("ONB Gram differs from identity");
        if (s.aligned_distance < 0.0 && &s != &rep.steps.front()) throw InvariantError("negative aligned distance");
    }
}

}  // namespace

RunConfig parse_config(const std::string& command, const Json& j, bool paper_normalization) {
    if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
        throw ConfigError("unknown command '" + command + "'");
    check_keys(j, keys_for(command), "config");
    if (j.contains("command") && (!j.at("command").is_string() || j.at("command").get<std::string>() != command))
        throw ConfigError("config command does not match '" + command + "'");
    RunConfig cfg;
    cfg.command = command;
    cfg.source = j;
    cfg.paper_normalization = paper_normalization;
    cfg.family.workers = get_int(j, "workers", 0);
    if (cfg.family.workers < 0) throw ConfigError("workers must be >= 0");

    if (command == "graphs") {
        cfg.genus = get_int(j, "genus", 2);
        if (cfg.genus < 2 || cfg.genus > 4) throw ConfigError("graphs: genus must be in 2..4");
        return cfg;
    }
    if (command == "surface") {
        cfg.genus = get_int(j, "genus", 2);
        if (!j.contains("fn")) throw ConfigError("surface: fn required");
        cfg.fn = parse_fn(j.at("fn"));
        surface::validate_fn(cfg.fn, cfg.genus);
        if (j.contains("thick_thin")) {
            const Json& tt = j.at("thick_thin");
            check_keys(tt, {"epsilon", "margulis_cap"}, "thick_thin");
            cfg.thick_thin.epsilon = get_real(tt, "epsilon", cfg.thick_thin.epsilon);
            cfg.thick_thin.margulis_cap = get_real(tt, "margulis_cap", cfg.thick_thin.margulis_cap);
        }
        surface::validate_thick_thin(cfg.thick_thin);
        if (j.contains("graph")) {
            cfg.graph = parse_graph(j.at("graph"));
            if (cfg.graph->genus != cfg.genus) throw ConfigError("surface: graph genus differs from genus");
        }
        return cfg;
    }

    auto& f = cfg.family;
    if (!j.contains("model")) throw ConfigError(command + ": model required");
    f.model = parse_model(j.at("model"));
    f.m = get_int(j, "m", 3);
    if (f.m < 2) throw ConfigError("m must be >= 2");
    f.truncation = get_int(j, "truncation", -1);
    if (f.truncation != -1 && f.truncation < f.m + 4) throw ConfigError("truncation must be -1 or >= m + 4");
    f.product.epsilon = get_real(j, "epsilon", f.product.epsilon);
    f.product.margulis_cap = get_real(j, "margulis_cap", f.product.margulis_cap);
    if (j.contains("quadrature")) f.product.orders = parse_orders(j.at("quadrature"));
    f.richardson = get_bool(j, "richardson", false);
    if (j.contains("samples")) {
        const Json& s = j.at("samples");
        check_keys(s, {"per_component", "seed"}, "samples");
        f.samples_per_component = get_int(s, "per_component", f.samples_per_component);
        if (s.contains("seed")) {
            if (!s.at("seed").is_number_unsigned()) throw ConfigError("samples.seed must be a nonnegative integer");
            f.seed = s.at("seed").get<std::uint64_t>();
        }
    }
    if (f.samples_per_component < 1) throw ConfigError("samples.per_component must be >= 1");
    if (command != "basis") bergman::validate(f.product);

    if (command == "basis" || command == "gram" || command == "embed") {
        parse_single_t(cfg, j);
        if (command == "embed" && f.m < 3) throw ConfigError("embed requires m >= 3");
        return cfg;
    }

    if (!j.contains("schedule")) throw ConfigError(command + ": schedule required");
    f.schedule = parse_schedule(j.at("schedule"), "schedule");
    f.ratio_cap = get_real(j, "ratio_cap", 0.0);
    f.include_limit = get_bool(j, "include_limit", command == "degenerate");
    if (command == "robustness") {
        f.include_limit = false;
        cfg.eps2 = get_real(j, "eps2", 0.5 * f.product.epsilon);
        cfg.condition_cap = get_real(j, "condition_cap", 0.0);
        if (!(cfg.condition_cap >= 0.0)) throw ConfigError("condition_cap must be >= 0");
        auto c2 = f.product;
        c2.epsilon = cfg.eps2;
        bergman::validate(c2);
    }
    if (command == "uniqueness") {
        if (!j.contains("schedule_b")) throw ConfigError("uniqueness: schedule_b required");
        cfg.schedule_b = parse_schedule(j.at("schedule_b"), "schedule_b");
        cfg.tolerance = get_real(j, "tolerance", cfg.tolerance);
        if (!(cfg.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
        auto b = f;
        b.schedule = cfg.schedule_b;
        degen::validate(b);
    }
    if (f.m < 3) throw ConfigError(command + " embeds sample clouds and requires m >= 3");
    degen::validate(f);
    return cfg;
}

RunResult run_config(const RunConfig& cfg) {
    RunResult res;
    const bool paper = cfg.paper_normalization;
    auto add = [&](const std::string& name, std::string content) { res.artifacts.push_back({name, std::move(content)}); };
    const std::string& c = cfg.command;

    if (c == "graphs") {
        const auto graphs = surface::enumerate_pants_graphs(cfg.genus);
        Json list = Json::array();
        for (const auto& g : graphs) {
            if (!surface::validate_pants_graph(g).accepted) throw InvariantError("enumerated graph fails validation");
            list.push_back(io::to_json(g));
        }
        add("graphs.json", io::dump(Json{{"genus", cfg.genus}, {"count", graphs.size()}, {"graphs", list}}));
    } else if (c == "surface") {
        const auto rep = surface::thick_thin_decompose(cfg.fn, cfg.thick_thin);
        if (static_cast<int>(rep.short_edges.size()) > 3 * cfg.genus - 3)
            throw InvariantError("more short curves than 3g - 3");
        Json out{{"genus", cfg.genus},
                 {"volume", io::real(surface::surface_volume(cfg.genus, paper))},
                 {"volume_convention", paper ? "2g - 2" : "2 pi (2g - 2)"},
                 {"length_convention", paper ? "lambda" : "2 pi lambda"},
                 {"epsilon", io::real(cfg.thick_thin.epsilon)},
                 {"thick_thin", io::to_json(rep, paper)}};
        if (cfg.graph) {
            const auto v = surface::validate_pants_graph(*cfg.graph);
            out["graph"] = Json{{"graph", io::to_json(*cfg.graph)}, {"accepted", v.accepted}, {"violations", v.violations}};
        }
        add("surface.json", io::dump(out));
    } else if (c == "basis") {
        const auto basis = solve(cfg);
        if (basis.size() != diff::dimension(basis.layout->surface->genus(), cfg.family.m))
            throw InvariantError("kernel dimension differs from (2m-1)(g-1)");
        Json out = io::to_json(basis);
        out["model"] = io::to_json(cfg.family.model);
        add("basis.json", io::dump(out));
    } else if (c == "gram" || c == "embed") {
        const auto basis = solve(cfg);
        const auto gram = bergman::gram_matrix(basis, cfg.family.product, cfg.family.richardson);
        Json out{{"model", io::to_json(cfg.family.model)},
                 {"dimension", basis.size()},
                 {"epsilon", io::real(cfg.family.product.epsilon)},
                 {"gram", io::to_json(gram)}};
        if (c == "embed") {
            const auto onb = bergman::orthonormalize(basis, gram);
            const auto samples = bergman::default_sample_plan(cfg.family.model, cfg.family.samples_per_component,
                                                              cfg.family.seed);
            const auto cloud = bergman::embed_cloud(onb, samples);
            Json pts = Json::array();
            for (const auto& p : samples.points)
                pts.push_back(Json{{"component", p.component}, {"x", io::complex_json(p.coord)}});
            out.erase("gram");
            out["gram_condition"] = io::real(gram.condition_number);
            out["onb_transform"] = io::matrix_json(onb.transform);
            out["samples"] = pts;
            out["cloud"] = io::to_json(cloud);
        }
        add(c + ".json", io::dump(out));
    } else if (c == "degenerate") {
        const auto run = degen::run_family(cfg.family);
        const auto& rep = run.report;
        add("report.json", io::dump(io::to_json(rep, paper)));
        add("steps.csv", io::steps_csv(rep.steps, paper));
        if (!rep.complete) {
            res.exit_code = kExitNumerical;
            res.message = rep.failure;
        } else {
            check_family_invariants(rep);
            if (!rep.cauchy || !rep.ratio_bounded) {
                res.exit_code = kExitFlags;
                res.message = "summary flags: cauchy or ratio_bounded false";
            }
        }
    } else if (c == "robustness") {
        const auto rep = degen::epsilon_robustness(cfg.family, cfg.family.product.epsilon, cfg.eps2);
        add("robustness.json", io::dump(io::to_json(rep)));
        add("robustness.csv", io::robustness_csv(rep));
        if (!rep.complete) {
            res.exit_code = kExitNumerical;
            res.message = rep.failure;
        } else if (!rep.increments_decreasing || (cfg.condition_cap > 0.0 && rep.max_condition > cfg.condition_cap)) {
            res.exit_code = kExitFlags;
            res.message = "robustness flags failed";
        }
    } else if (c == "uniqueness") {
        const auto v = degen::schedule_uniqueness_check(cfg.family, cfg.family.schedule, cfg.schedule_b, cfg.tolerance);
        add("uniqueness.json", io::dump(io::to_json(v)));
        if (!v.complete) {
            res.exit_code = kExitNumerical;
            res.message = v.failure;
        } else if (!v.pass) {
            res.exit_code = kExitFlags;
            res.message = "uniqueness residual above tolerance";
        }
    }

    Json artifacts = Json::array();
    for (const auto& a : res.artifacts)
        artifacts.push_back(Json{{"name", a.name}, {"bytes", a.content.size()}, {"fnv1a", io::hex64(io::fnv1a(a.content))}});
    const Json manifest{{"tool", kToolName},
                        {"version", kToolVersion},
                        {"command", c},
                        {"config_hash", io::hex64(io::fnv1a(cfg.source.dump()))},
                        {"paper_normalization", paper},
                        {"tolerances", tolerances(cfg)},
                        {"artifacts", artifacts},
                        {"exit_code", res.exit_code}};
    add("run.json", io::dump(manifest));
    return res;
}

int main_entry(int argc, char** argv) {
    CLI::App app{"Degenerating hyperbolic surfaces and epsilon-Bergman embeddings", kToolName};
    std::string command;
    std::string config_path;
    std::string out_dir;
    bool paper = false;
    app.add_option("command", command, "graphs|surface|basis|gram|embed|degenerate|robustness|uniqueness")
        ->required()
        ->check(CLI::IsMember(kCommands));
    app.add_option("--config", config_path, "JSON config")->required();
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_flag("--paper-normalization", paper, "report volume 2g-2 and collar length lambda");
    app.set_version_flag("--version", kToolVersion);
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    RunConfig cfg;
    try {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) throw ConfigError("cannot read config '" + config_path + "'");
        Json j;
        try {
            j = Json::parse(in);
        } catch (const Json::parse_error& e) {
            throw ConfigError(std::string("malformed JSON: ") + e.what());
        }
        cfg = parse_config(command, j, paper);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    RunResult res;
    try {
        res = run_config(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const InvariantError& e) {
        std::cerr << "invariant violated: " << e.what() << '\n';
        return kExitInvariant;
    }

    try {
        fs::create_directories(out_dir);
        for (const auto& a : res.artifacts) {
            std::ofstream out(fs::path(out_dir) / a.name, std::ios::binary | std::ios::trunc);
            out << a.content;
            if (!out) throw std::runtime_error("cannot write " + a.name);
        }
    } catch (const std::exception& e) {
        std::cerr << "output error: " << e.what() << '\n';
        return kExitUsage;
    }
    if (!res.message.empty()) std::cerr << res.message << '\n';
    return res.exit_code;
}

}  // namespace stable_degen::cli
