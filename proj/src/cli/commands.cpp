#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "arith/analysis.hpp"
#include "arith/cli.hpp"
#include "arith/cli_config.hpp"
#include "arith/domains.hpp"
#include "arith/io.hpp"

namespace arith::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string config;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::vector<std::string> suites;
    int verbose = 0;
};

struct Context {
    const Options& opt;
    std::ostream& out;
    std::ostream& err;

    [[nodiscard]] json config() const {
        return opt.config.empty() ? json::object() : load_config_file(opt.config);
    }
    [[nodiscard]] fs::path path(const std::string& name) const { return fs::path(opt.out_dir) / name; }
    [[nodiscard]] bool verbose() const { return opt.verbose > 0; }

    void save_sidecar(const std::string& command, const json& config, json extra = json::object()) const {
        json j = {{"command", command}, {"config", config}};
        for (auto& [k, v] : extra.items()) j[k] = v;
        write_file_atomic(path(command + ".json"), j.dump(2) + "\n");
    }

    void wrote(const fs::path& p) const { out << "wrote " << p.string() << "\n"; }
};

std::string pct(double x) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << 100.0 * x;
    return s.str();
}

int cmd_bench(const Context& ctx) {
    BenchJob job = bench_from_json(ctx.config());
    if (ctx.opt.seed_given) job.bench.seeds = {ctx.opt.seed};
    const DomainSuite suite = build_suite(job.suite);
    const BenchTable table = run_bench(job.bench, suite);
    write_bench_csv(table, ctx.path("bench.csv"));
    write_bench_runs_csv(table, ctx.path("bench_runs.csv"));
    ctx.save_sidecar("bench", to_json(job));
    if (ctx.verbose()) {
        for (const auto& row : table.rows) {
            ctx.out << std::left << std::setw(10) << row.method;
            for (std::size_t t = 0; t < row.target_acc.size(); ++t) {
                ctx.out << " target_" << table.target_ids[t] << " " << pct(row.target_acc[t].mean) << " +- "
                        << pct(row.target_acc[t].sd);
            }
            ctx.out << " val " << pct(row.val_acc.mean) << "\n";
        }
    }
    ctx.wrote(ctx.path("bench.csv"));
    ctx.wrote(ctx.path("bench_runs.csv"));
    return exit_ok;
}

int cmd_plane(const Context& ctx) {
    PlaneJob job = plane_from_json(ctx.config());
    if (ctx.opt.seed_given) job.train.seed = ctx.opt.seed;
    const DomainSuite suite = build_suite(job.suite);
    const RunResult run = train(job.train, suite);
    const double lr = job.anchor_lr.value_or(job.train.inner_lr);
    const auto anchors = plane_anchors(job.train.network, run.final_params, suite, job.anchor_steps, lr,
                                       job.train.batch_size, job.train.seed);
    const PlaneBasis basis = plane_basis(anchors[0], anchors[1], anchors[2]);
    const PlaneRanges ranges = job.ranges.value_or(default_ranges(basis, job.margin));
    const auto losses = validation_losses(job.train.network, suite);
    const LossGrid grid = eval_plane(basis, losses, ranges, job.resolution_a, job.resolution_b);
    write_plane_csv(grid, ctx.path("plane.csv"));
    write_plane_points_csv(grid, ctx.path("plane_points.csv"));

    json anchors_json = json::array();
    for (const auto& a : grid.anchors) anchors_json.push_back({a.a, a.b});
    ctx.save_sidecar("plane", to_json(job),
                     {{"anchors", anchors_json},
                      {"centroid", {grid.centroid.a, grid.centroid.b}},
                      {"ranges", {ranges.a_min, ranges.a_max, ranges.b_min, ranges.b_max}},
                      {"u_norm", norm2(basis.u)},
                      {"v_norm", norm2(basis.v)},
                      {"u_dot_v", dot(basis.u, basis.v)}});
    if (ctx.verbose()) {
        ctx.out << "plane through anchors at";
        for (const auto& a : grid.anchors) ctx.out << " (" << a.a << ", " << a.b << ")";
        ctx.out << "\n";
    }
    ctx.wrote(ctx.path("plane.csv"));
    ctx.wrote(ctx.path("plane_points.csv"));
    return exit_ok;
}

int cmd_adamtrace(const Context& ctx) {
    AdamTraceJob job = adamtrace_from_json(ctx.config());
    if (ctx.opt.seed_given) job.seed = ctx.opt.seed;
    std::vector<std::vector<double>> rows;
    if (job.gradients == TraceGradients::unit) {
        rows = adam_trace_unit(job.domains, job.steps, job.adam.beta1);
    } else {
        if (job.network.input_dim() != job.suite.input_dim()) {
            throw ConfigError("adamtrace: network input size does not match the suite");
        }
        rows = adam_trace_network(job.network, build_suite(job.suite), job.steps, job.adam, job.batch_size,
                                  job.seed);
    }
    write_adamtrace_csv(rows, ctx.path("adamtrace.csv"));
    ctx.save_sidecar("adamtrace", to_json(job), {{"final_fractions", rows.back()}});
    if (ctx.verbose()) {
        ctx.out << "final fractions:";
        for (double f : rows.back()) ctx.out << " " << f;
        ctx.out << " (max gap " << max_fraction_gap(rows.back()) << ")\n";
    }
    ctx.wrote(ctx.path("adamtrace.csv"));
    return exit_ok;
}

int cmd_quadratic(const Context& ctx) {
    QuadraticStudyConfig config = quadratic_from_json(ctx.config());
    if (ctx.opt.seed_given) config.seed = ctx.opt.seed;
    const auto rows = quadratic_study(config);
    write_quadratic_csv(rows, ctx.path("quadratic.csv"));
    write_quadratic_points_csv(rows, ctx.path("quadratic_points.csv"));
    ctx.save_sidecar("quadratic", to_json(config));
    if (ctx.verbose()) {
        for (const auto& r : rows) {
            if (r.task != 0) continue;
            ctx.out << r.scheme << " lr=" << r.lr << " fixed point " << r.fixed_point(0) << "\n";
        }
    }
    ctx.wrote(ctx.path("quadratic.csv"));
    ctx.wrote(ctx.path("quadratic_points.csv"));
    return exit_ok;
}

int cmd_sweep(const Context& ctx) {
    SweepJob job = sweep_from_json(ctx.config());
    if (ctx.opt.seed_given) job.sweep.seeds = {ctx.opt.seed};
    const auto rows = sweep_steps(job.sweep, build_suite(job.suite));
    write_sweep_csv(rows, ctx.path("sweep.csv"));
    ctx.save_sidecar("sweep", to_json(job));
    if (ctx.verbose()) {
        for (const auto& r : rows) {
            ctx.out << r.scheme << " k=" << r.k << " target " << pct(r.target_acc.mean) << " +- "
                    << pct(r.target_acc.sd) << "\n";
        }
    }
    ctx.wrote(ctx.path("sweep.csv"));
    return exit_ok;
}

int cmd_ablation(const Context& ctx) {
    AblationJob job = ablation_from_json(ctx.config());
    if (ctx.opt.seed_given) job.ablation.seeds = {ctx.opt.seed};
    const auto rows = ablation_grid(job.ablation, build_suite(job.suite));
    write_ablation_csv(rows, ctx.path("ablation.csv"));
    ctx.save_sidecar("ablation", to_json(job));
    if (ctx.verbose()) {
        for (const auto& r : rows) {
            ctx.out << to_string(r.scheme) << (r.scaled ? " scaled" : "") << " outer="
                    << (r.outer == OuterKind::direct ? "direct" : "adam")
                    << (r.momentum_in_inner ? " inner-momentum" : "")
                    << (r.domain_specific_sampling ? "" : " pooled-inner") << " target "
                    << pct(r.target_acc.mean) << "\n";
        }
    }
    ctx.wrote(ctx.path("ablation.csv"));
    return exit_ok;
}

int cmd_verify(const Context& ctx, const VerifyOptions& base) {
    std::vector<std::string> names = ctx.opt.suites.empty() ? verify_suite_names() : ctx.opt.suites;
    for (const auto& n : names) {
        const auto& known = verify_suite_names();
        if (std::find(known.begin(), known.end(), n) == known.end()) {
            throw ConfigError("unknown verify suite '" + n + "'");
        }
    }
    VerifyOptions options = base;
    if (ctx.opt.seed_given) options.seed = ctx.opt.seed;
    bool all_pass = true;
    for (const auto& n : names) {
        const SuiteReport r = run_verify_suite(n, options);
        ctx.out << (r.passed() ? "PASS " : "FAIL ") << r.name << " (" << r.checks << " checks, "
                << r.failures.size() << " failed)\n";
        for (const auto& f : r.failures) ctx.out << "  - " << f << "\n";
        all_pass = all_pass && r.passed();
    }
    return all_pass ? exit_ok : exit_verify_failed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const VerifyOptions& verify_options) {
    CLI::App app{"Meta-learning toolkit for domain generalization experiments", "arith"};
    app.require_subcommand(1);
    Options opt;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"bench", "Train ERM, Fish and Arith on the toy suite and tabulate accuracies"},
        {"verify", "Run the built-in invariant suites"},
        {"plane", "Export per-domain losses on the plane through three inner-loop models"},
        {"adamtrace", "Export per-domain shares of Adam's first moment"},
        {"quadratic", "Export fixed points of the outer update on point-optimum tasks"},
        {"sweep", "Sweep the number of inner steps per domain"},
        {"ablation", "Run the ablation grid"}};
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "JSON experiment file");
        sub->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
        sub->add_option("--seed", opt.seed, "Seed override")->each([&opt](const std::string&) {
            opt.seed_given = true;
        });
        sub->add_flag("-v,--verbose", "Print result summaries");
        if (name == "verify") sub->add_option("--suite", opt.suites, "Suite(s) to run");
        subs[name] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config_error;
    }

    for (const auto& [name, sub] : subs) {
        if (sub->parsed()) opt.verbose = static_cast<int>(sub->count("--verbose"));
    }
    const Context ctx{opt, out, err};
    try {
        if (subs["verify"]->parsed()) return cmd_verify(ctx, verify_options);
        fs::create_directories(opt.out_dir);
        if (subs["bench"]->parsed()) return cmd_bench(ctx);
        if (subs["plane"]->parsed()) return cmd_plane(ctx);
        if (subs["adamtrace"]->parsed()) return cmd_adamtrace(ctx);
        if (subs["quadratic"]->parsed()) return cmd_quadratic(ctx);
        if (subs["sweep"]->parsed()) return cmd_sweep(ctx);
        if (subs["ablation"]->parsed()) return cmd_ablation(ctx);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_config_error;
    }
    return exit_config_error;
}

}  // namespace arith::cli
