// refsim: scenario runner for branching state-vector dynamics.
//
// Subcommands: validate, evolve, branch, check-consistency, entropy, born,
// trajectory, fidelity, allowed-region. Every run writes a JSON run record
// plus CSV series into the output directory; identical config + seed yields
// byte-identical artifacts.
//
// Exit codes: 0 success, 1 configuration/usage error, 2 a physics assertion
// declared in the config ("asserts" section) was violated.

#include "refsim/consistency.hpp"
#include "refsim/entropy.hpp"
#include "refsim/io.hpp"
#include "refsim/measurement.hpp"
#include "refsim/scenario.hpp"
#include "refsim/two_level.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>

using namespace refsim;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitVerdict = 2;

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> eps_r, eps_d, tau_s;
};

ScenarioConfig load_with_overrides(const CliOptions& opt) {
    ScenarioConfig cfg = load_config(opt.config_path);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.eps_r) cfg.tol.eps_r = *opt.eps_r;
    if (opt.eps_d) cfg.tol.eps_d = *opt.eps_d;
    if (opt.tau_s) cfg.tol.tau_s = *opt.tau_s;
    cfg.tol.validate();
    return cfg;
}

// Resolved inputs for tree-based subcommands, from either the generic-system
// sections or the two_level section.
struct RunContext {
    EvolutionPtr evolution;
    Index dim_r = 0, dim_e = 0;
    DivisionSet lifted_wd;
    Vector initial;
    double t0 = 0.0;
};

Vector build_composite_state(const json& spec, Index dim_r, Index dim_e, const std::string& where) {
    if (spec.is_object() && spec.value("kind", "") == "product") {
        if (!spec.contains("rs") || !spec.contains("env")) {
            throw ConfigError(where + ": product state needs 'rs' and 'env'");
        }
        Vector rs = parse_vector(spec.at("rs"), where + ".rs");
        if (rs.size() != dim_r) throw ConfigError(where + ".rs: dimension mismatch");
        Vector env = build_state(spec.at("env"), dim_e, where + ".env");
        Vector out = tensor(rs, env);
        const double n = out.norm();
        if (n <= 0) throw ConfigError(where + ": zero state");
        return out / n;
    }
    return build_state(spec, dim_r * dim_e, where);
}

RunContext make_context(const ScenarioConfig& cfg) {
    RunContext ctx;
    if (cfg.has_two_level()) {
        TwoLevelScenario scenario(build_two_level(cfg));
        ctx.evolution = scenario.evolution();
        ctx.dim_r = 2;
        ctx.dim_e = scenario.dim_e();
        ctx.lifted_wd = scenario.division_set_lifted();
        if (!cfg.raw.contains("initial_state")) throw ConfigError("config: missing 'initial_state'");
        ctx.initial = build_composite_state(cfg.raw.at("initial_state"), 2, scenario.dim_e(), "initial_state");
        ctx.t0 = cfg.grid.t0;
        return ctx;
    }
    SystemSetup setup = build_setup(cfg);
    ctx.evolution = setup.evolution;
    ctx.dim_r = setup.dim_r;
    ctx.dim_e = setup.dim_e;
    ctx.lifted_wd = lift(build_divisions(cfg, setup.dim_r), setup.dim_e);
    ctx.initial = setup.initial;
    ctx.t0 = setup.t0;
    return ctx;
}

json tree_to_json(const BranchTree& tree) {
    json paths = json::array();
    for (const Branch& b : tree.leaves()) {
        json steps = json::array();
        for (const SplitStep& s : b.path.steps) {
            steps.push_back({{"time", s.time}, {"division", s.division}, {"value", s.op_label}});
        }
        paths.push_back({{"key", b.path.key()}, {"steps", steps}, {"probability", b.probability()}});
    }
    json events = json::array();
    for (const SplitEvent& e : tree.events()) {
        events.push_back({{"time", e.time},
                          {"division", e.division},
                          {"parent", e.parent_key},
                          {"selected", e.selected},
                          {"children", e.child_ops},
                          {"child_probabilities", e.child_probabilities}});
    }
    return json{{"time", tree.time()},
                {"start_time", tree.start_time()},
                {"paths", paths},
                {"events", events},
                {"total_probability", tree.total_probability()}};
}

int finish(const ScenarioConfig& cfg, const std::string& out_dir, const std::string& command, json summary,
           std::vector<std::string> artifacts, bool verdict_ok) {
    RunRecord rec;
    rec.name = cfg.name + "_" + command;
    rec.config_hash = config_hash_hex(cfg.raw, cfg.seed);
    rec.seed = cfg.seed;
    rec.artifacts = std::move(artifacts);
    rec.summary = std::move(summary);
    const std::string path = write_run_record(out_dir, rec);
    std::cout << (verdict_ok ? "ok: " : "verdict-failure: ") << path << "\n";
    return verdict_ok ? kExitOk : kExitVerdict;
}

std::string csv_path(const std::string& out_dir, const ScenarioConfig& cfg, const std::string& name) {
    return out_dir + "/" + cfg.name + "_" + name + ".csv";
}

// asserts section: reads "pass"/"fail" expectations; missing key -> no check
bool assert_matches(const ScenarioConfig& cfg, const std::string& key, bool passed, std::string* msg) {
    if (!cfg.raw.contains("asserts")) return true;
    const json& a = cfg.raw.at("asserts");
    if (!a.contains(key)) return true;
    const std::string want = a.at(key).get<std::string>();
    const bool expect_pass = want == "pass";
    if (passed != expect_pass) {
        *msg = "assert '" + key + "' expected " + want + " but scenario " + (passed ? "passed" : "failed");
        return false;
    }
    return true;
}

int cmd_validate(const CliOptions& opt) {
    std::ifstream in(opt.config_path);
    if (!in) {
        std::cerr << "error: cannot open '" << opt.config_path << "'\n";
        return kExitConfig;
    }
    json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        std::cerr << "error: JSON parse failure: " << e.what() << "\n";
        return kExitConfig;
    }
    const ValidationReport rep = validate_config(doc);
    for (const std::string& n : rep.notes) std::cout << "note: " << n << "\n";
    for (const std::string& e : rep.errors) std::cout << "error: " << e << "\n";
    std::cout << (rep.ok ? "valid" : "invalid") << "\n";
    return rep.ok ? kExitOk : kExitConfig;
}

int cmd_evolve(const CliOptions& opt) {
    const ScenarioConfig cfg = load_with_overrides(opt);
    const RunContext ctx = make_context(cfg);
    const std::vector<double> grid = cfg.grid.make();

    std::vector<std::string> header = {"time", "norm"};
    for (const Division& d : ctx.lifted_wd.divisions) {
        for (const std::string& v : d.value_labels) header.push_back(d.label + "=" + v);
    }
    std::vector<std::vector<std::string>> rows;
    Vector psi = ctx.initial;
    double t_prev = ctx.t0;
    for (double t : grid) {
        psi = ctx.evolution->propagate(psi, t_prev, t);
        t_prev = t;
        std::vector<std::string> row = {format_g12(t), format_g12(psi.norm())};
        for (const Division& d : ctx.lifted_wd.divisions) {
            for (std::size_t i = 0; i < d.size(); ++i) {
                row.push_back(format_g12(std::real(psi.dot(d.projectors[i] * psi))));
            }
        }
        rows.push_back(std::move(row));
    }
    const std::string csv = csv_path(opt.out_dir, cfg, "evolve");
    write_csv(csv, header, rows);

    json summary;
    summary["final_norm"] = psi.norm();
    summary["t_final"] = t_prev;
    return finish(cfg, opt.out_dir, "evolve", summary, {csv}, true);
}

int cmd_branch(const CliOptions& opt) {
    const ScenarioConfig cfg = load_with_overrides(opt);
    const RunContext ctx = make_context(cfg);
    auto res = run_tree(ctx.evolution, ctx.initial.normalized(), ctx.t0, cfg.grid.make(), ctx.lifted_wd, cfg.tol,
                        cfg.policy);

    std::vector<std::vector<std::string>> rows;
    for (const TreeRunPoint& p : res.trace) {
        for (std::size_t i = 0; i < p.path_probabilities.size(); ++i) {
            rows.push_back({format_g12(p.time), std::to_string(i), format_g12(p.path_probabilities[i]),
                            p.split_event ? "1" : "0"});
        }
    }
    const std::string csv = csv_path(opt.out_dir, cfg, "branch");
    write_csv(csv, {"time", "path_index", "probability", "split_event"}, rows);

    const std::string tree_file = opt.out_dir + "/" + cfg.name + "_branch_tree.json";
    write_json_file(tree_file, tree_to_json(res.tree));

    json summary;
    summary["paths"] = res.tree.size();
    summary["splits"] = res.tree.events().size();
    summary["total_probability"] = res.tree.total_probability();
    summary["entropy"] = tree_entropy(res.tree);
    return finish(cfg, opt.out_dir, "branch", summary, {csv, tree_file}, true);
}

int cmd_check_consistency(const CliOptions& opt) {
    const ScenarioConfig cfg = load_with_overrides(opt);
    const RunContext ctx = make_context(cfg);
    const std::vector<double> grid = cfg.grid.make();

    BranchTree tree(ctx.evolution, ctx.initial.normalized(), ctx.t0, cfg.tol);
    std::vector<std::vector<std::string>> rows;
    bool all_pass = true;
    json worst;
    double worst_ratio = -1.0;
    const double step = grid.size() > 1 ? grid[1] - grid[0] : 1.0;
    auto scheduled_here = [&](double t) {
        for (double ts : cfg.policy.times) {
            if (std::abs(ts - t) <= 0.5 * step) return true;
        }
        return false;
    };
    for (double t : grid) {
        tree.advance_to(t);
        for (const Division& d : ctx.lifted_wd.divisions) {
            const ConsistencyVerdict v = check_principle(tree, d, cfg.tol.eps_d);
            rows.push_back({format_g12(t), d.label, v.applicable ? "1" : "0", format_g12(v.max_offdiag),
                            format_g12(v.max_offdiag_abs), v.pass ? "1" : "0"});
            if (v.applicable && !v.pass) all_pass = false;
            if (v.applicable && v.max_offdiag > worst_ratio) {
                worst_ratio = v.max_offdiag;
                worst = {{"time", t},
                         {"division", d.label},
                         {"max_offdiag", v.max_offdiag},
                         {"value", v.witness_value},
                         {"path_a", v.witness_path_a},
                         {"path_b", v.witness_path_b}};
            }
        }
        const bool want_split = cfg.policy.kind == SplitPolicy::Kind::Greedy ||
                                (cfg.policy.kind == SplitPolicy::Kind::Scheduled && scheduled_here(t));
        if (want_split) {
            for (const Division& d : ctx.lifted_wd.divisions) tree.split_all(d);
        }
    }
    const std::string csv = csv_path(opt.out_dir, cfg, "consistency");
    write_csv(csv, {"time", "division", "applicable", "max_offdiag", "max_offdiag_abs", "pass"}, rows);

    json summary;
    summary["all_pass"] = all_pass;
    summary["worst"] = worst;
    summary["paths"] = tree.size();
    std::string msg;
    const bool ok = assert_matches(cfg, "consistency", all_pass, &msg);
    if (!ok) summary["assert_failure"] = msg;
    return finish(cfg, opt.out_dir, "check-consistency", summary, {csv}, ok);
}

int cmd_entropy(const CliOptions& opt) {
    const ScenarioConfig cfg = load_with_overrides(opt);
    const RunContext ctx = make_context(cfg);
    const std::vector<double> grid = cfg.grid.make();
    const Vector psi0 = ctx.initial.normalized();

    auto configured = run_tree(ctx.evolution, psi0, ctx.t0, grid, ctx.lifted_wd, cfg.tol, cfg.policy);
    const EntropySeries tree_series = entropy_series_from_trace(configured.trace);
    const EntropySeries greedy = max_entropy_series(ctx.evolution, psi0, ctx.t0, grid, ctx.lifted_wd, cfg.tol);

    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        rows.push_back({format_g12(grid[i]), format_g12(tree_series.s_tree[i]), format_g12(greedy.s_max[i]),
                        tree_series.split_events[i] ? "1" : "0", greedy.split_events[i] ? "1" : "0"});
    }
    const std::string csv = csv_path(opt.out_dir, cfg, "entropy");
    write_csv(csv, {"time", "s_tree", "s_max", "split_tree", "split_max"}, rows);

    json summary;
    summary["final_s_tree"] = tree_series.s_tree.back();
    summary["final_s_max"] = greedy.s_max.back();
    summary["monotone"] = true;
    return finish(cfg, opt.out_dir, "entropy", summary, {csv}, true);
}

int cmd_born(const CliOptions& opt) {
    const ScenarioConfig cfg = load_with_overrides(opt);
    if (!cfg.has_measurement()) throw ConfigError("config: missing 'measurement' section");
    const json& m = cfg.raw.at("measurement");
    if (!m.contains("amplitudes")) throw ConfigError("measurement: needs 'amplitudes'");
    const Vector c = parse_vector(m.at("amplitudes"), "measurement.amplitudes");
    const Index dim_pointer = m.value("dim_pointer", static_cast<Index>(c.size() + 1));

    const MeasurementScheme scheme = MeasurementScheme::pointer_shift(c.size(), dim_pointer);
    scheme.validate();
    const OutcomeTable table = run_measurement(scheme, c);

    std::vector<std::vector<std::string>> rows;
    json outcomes = json::array();
    for (const OutcomeRow& row : table.rows) {
        rows.push_back({std::to_string(row.a), std::to_string(row.pointer_value), format_g12(row.probability),
                        format_g12(row.expected_probability), format_g12(row.post_state_residual)});
        outcomes.push_back({{"a", row.a},
                            {"pointer", row.pointer_value},
                            {"probability", row.probability},
                            {"expected", row.expected_probability},
                            {"residual", row.post_state_residual}});
    }
    const std::string csv = csv_path(opt.out_dir, cfg, "born");
    write_csv(csv, {"a", "pointer", "probability", "expected", "residual"}, rows);

    json summary;
    summary["outcomes"] = outcomes;
    summary["probability_sum"] = table.probability_sum;
    return finish(cfg, opt.out_dir, "born", summary, {csv}, true);
}

int cmd_trajectory(const CliOptions& opt) {
    const ScenarioConfig cfg = load_with_overrides(opt);
    if (!cfg.has_measurement()) throw ConfigError("config: missing 'measurement' section");
    const json& m = cfg.raw.at("measurement");
    if (!m.contains("amplitudes")) throw ConfigError("measurement: needs 'amplitudes'");
    const Vector c = parse_vector(m.at("amplitudes"), "measurement.amplitudes");
    const Index dim_pointer = m.value("dim_pointer", static_cast<Index>(c.size() + 1));
    const int runs = m.value("trajectory_runs", 10000);
    if (runs < 1) throw ConfigError("measurement.trajectory_runs must be >= 1");

    const PremeasurementTrajectory pre = make_premeasurement_trajectory(c, dim_pointer);
    Tolerances tol = cfg.tol;
    tol.tau_s = std::min(tol.tau_s, 0.5);
    TrajectorySampler sampler(pre.evolution, pre.intervals, tol);

    std::map<std::string, int> counts;
    std::map<std::string, double> born;
    for (int s = 0; s < runs; ++s) {
        const TrajectoryResult res = sampler.run(pre.psi0, cfg.seed + static_cast<std::uint64_t>(s));
        ++counts[res.jumps.at(0).to_value];
        born[res.jumps.at(0).to_value] = res.jumps.at(0).probability;
    }

    std::vector<std::vector<std::string>> rows;
    json freq = json::array();
    bool within_3sigma = true;
    for (const auto& [value, count] : counts) {
        const double f = static_cast<double>(count) / runs;
        const double p = born[value];
        const double sigma = std::sqrt(std::max(p * (1 - p), 1e-300) / runs);
        if (std::abs(f - p) > 3.0 * sigma) within_3sigma = false;
        rows.push_back({value, std::to_string(count), format_g12(f), format_g12(p)});
        freq.push_back({{"value", value}, {"count", count}, {"frequency", f}, {"born", p}});
    }
    const std::string csv = csv_path(opt.out_dir, cfg, "trajectory");
    write_csv(csv, {"value", "count", "frequency", "born"}, rows);

    json summary;
    summary["runs"] = runs;
    summary["frequencies"] = freq;
    summary["within_3sigma"] = within_3sigma;
    std::string msg;
    const bool ok = assert_matches(cfg, "born_3sigma", within_3sigma, &msg);
    if (!ok) summary["assert_failure"] = msg;
    return finish(cfg, opt.out_dir, "trajectory", summary, {csv}, ok);
}

int cmd_fidelity(const CliOptions& opt) {
    const ScenarioConfig cfg = load_with_overrides(opt);
    Matrix h0, h1;
    Vector psi0;
    GridSpec grid = cfg.grid;
    double tau_factor = 10.0;
    if (cfg.has_two_level()) {
        const TwoLevelScenario scenario(build_two_level(cfg));
        h0 = scenario.h_env() + scenario.h_block(0);
        h1 = scenario.h_env() + scenario.h_block(1);
        SeededRng rng(cfg.seed);
        psi0 = random_state(scenario.dim_e(), rng);
    } else if (cfg.has_fidelity()) {
        const json& f = cfg.raw.at("fidelity");
        if (!f.contains("dim") || !f.contains("H0") || !f.contains("H") || !f.contains("psi0")) {
            throw ConfigError("fidelity: needs dim, H0, H and psi0");
        }
        const auto dim = f.at("dim").get<Index>();
        h0 = build_operator(f.at("H0"), dim, 0, 0, "fidelity.H0");
        h1 = build_operator(f.at("H"), dim, 0, 0, "fidelity.H");
        psi0 = build_state(f.at("psi0"), dim, "fidelity.psi0");
        tau_factor = f.value("tau_factor", 10.0);
    } else {
        throw ConfigError("config: fidelity needs a 'fidelity' or 'two_level' section");
    }

    const FidelityFit fit = peres_fidelity(h0, h1, psi0, grid.make());

    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < fit.times.size(); ++i) {
        rows.push_back({format_g12(fit.times[i]), format_g12(fit.m_values[i])});
    }
    const std::string csv = csv_path(opt.out_dir, cfg, "fidelity");
    write_csv(csv, {"time", "M"}, rows);

    json summary;
    summary["has_decay"] = fit.has_decay;
    summary["plateau"] = fit.plateau;
    summary["fit_points"] = fit.fit_points;
    if (fit.has_decay) {
        summary["tau_d"] = fit.tau_d;
        summary["r_squared"] = fit.r_squared;
        summary["recommended_tau_s"] = tau_policy(fit, tau_factor);
    }
    std::string msg;
    const bool ok = assert_matches(cfg, "fidelity_decay", fit.has_decay, &msg);
    if (!ok) summary["assert_failure"] = msg;
    return finish(cfg, opt.out_dir, "fidelity", summary, {csv}, ok);
}

int cmd_allowed_region(const CliOptions& opt) {
    const ScenarioConfig cfg = load_with_overrides(opt);
    const RunContext ctx = make_context(cfg);
    auto res = allowed_region_test(ctx.evolution, ctx.initial, ctx.t0, cfg.grid.make(), ctx.lifted_wd, cfg.tol);

    std::vector<std::vector<std::string>> rows;
    for (const RegionCheck& c : res.log) {
        rows.push_back({format_g12(c.time), c.division, c.applicable ? "1" : "0", format_g12(c.max_offdiag),
                        c.pass ? "1" : "0", std::to_string(c.paths)});
    }
    const std::string csv = csv_path(opt.out_dir, cfg, "allowed_region");
    write_csv(csv, {"time", "division", "applicable", "max_offdiag", "pass", "paths"}, rows);

    json summary;
    summary["pass"] = res.pass;
    summary["checks_run"] = res.checks_run;
    if (!res.violations.empty()) {
        const RegionViolation& v = res.violations.front();
        summary["first_violation"] = {{"time", v.time},
                                      {"division", v.division},
                                      {"max_offdiag", v.verdict.max_offdiag},
                                      {"value", v.verdict.witness_value},
                                      {"path_a", v.verdict.witness_path_a},
                                      {"path_b", v.verdict.witness_path_b}};
    }
    std::string msg;
    const bool ok = assert_matches(cfg, "allowed_region", res.pass, &msg);
    if (!ok) summary["assert_failure"] = msg;
    return finish(cfg, opt.out_dir, "allowed-region", summary, {csv}, ok);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"branching state-vector dynamics scenario runner"};
    app.require_subcommand(1);

    CliOptions opt;
    const char* env_dir = std::getenv("REFSIM_OUT_DIR");
    opt.out_dir = env_dir ? env_dir : "out";

    app.add_option("--config", opt.config_path, "scenario config (JSON)")->required();
    app.add_option("--out-dir", opt.out_dir, "artifact directory");
    std::uint64_t seed_val = 0;
    double eps_r = 0, eps_d = 0, tau_s = 0;
    auto* seed_opt = app.add_option("--seed", seed_val, "seed override");
    auto* eps_r_opt = app.add_option("--eps-r", eps_r, "leakage tolerance override");
    auto* eps_d_opt = app.add_option("--eps-d", eps_d, "consistency tolerance override");
    auto* tau_s_opt = app.add_option("--tau-s", tau_s, "stability window override");

    std::map<std::string, int (*)(const CliOptions&)> handlers = {
        {"validate", cmd_validate},
        {"evolve", cmd_evolve},
        {"branch", cmd_branch},
        {"check-consistency", cmd_check_consistency},
        {"entropy", cmd_entropy},
        {"born", cmd_born},
        {"trajectory", cmd_trajectory},
        {"fidelity", cmd_fidelity},
        {"allowed-region", cmd_allowed_region},
    };
    for (const auto& [name, handler] : handlers) {
        app.add_subcommand(name)->callback([]() {});
    }

    CLI11_PARSE(app, argc, argv);

    if (*seed_opt) opt.seed = seed_val;
    if (*eps_r_opt) opt.eps_r = eps_r;
    if (*eps_d_opt) opt.eps_d = eps_d;
    if (*tau_s_opt) opt.tau_s = tau_s;

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        std::filesystem::create_directories(opt.out_dir);
        return handlers.at(sub)(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
