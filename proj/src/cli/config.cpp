#include "arith/cli_config.hpp"

#include <fstream>
#include <sstream>

namespace arith::cli {

using nlohmann::json;

namespace {

template <class T>
T get_as(const json& j, const char* key, std::string_view context) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(context) + "." + key + ": " + e.what());
    }
}

template <class T>
void read_if(const json& j, const char* key, T& out, std::string_view context) {
    if (j.contains(key)) out = get_as<T>(j, key, context);
}

const json& empty_object() {
    static const json obj = json::object();
    return obj;
}

const json& section(const json& j, const char* key) {
    return j.contains(key) ? j.at(key) : empty_object();
}

MetaConfig train_from_json(const json& j, std::size_t n_sources, MetaConfig base = {}) {
    apply_json(base, j, n_sources);
    try {
        base.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("train: ") + e.what());
    }
    return base;
}

WeightScheme scheme_or(const json& j, const char* key, std::size_t n, WeightScheme fallback) {
    return j.contains(key) ? scheme_from_json(j.at(key), n) : fallback;
}

std::vector<std::uint64_t> seeds_from(const json& j) {
    auto seeds = get_as<std::vector<std::uint64_t>>(j, "seeds", "config");
    if (seeds.empty()) throw ConfigError("config.seeds: must be non-empty");
    return seeds;
}

SuiteSpec checked_suite(const json& j) {
    SuiteSpec s = suite_from_json(section(j, "suite"));
    return s;
}

/// Wraps library validation errors raised while building a job.
template <class F>
auto as_config_error(std::string_view context, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(context) + ": " + e.what());
    }
}

}  // namespace

json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in '" + path.string() + "': " + e.what());
    }
}

SuiteSpec suite_from_json(const json& j) {
    require_known_keys(j,
                       {"kind", "source_angles", "target_angles", "regression_weights", "source_shifts",
                        "target_shifts", "samples_per_domain", "noise", "val_fraction", "seed"},
                       "suite");
    SuiteSpec s;
    if (j.contains("kind")) {
        const auto kind = get_as<std::string>(j, "kind", "suite");
        if (kind == "moons") s.kind = SuiteKind::moons;
        else if (kind == "regression") s.kind = SuiteKind::regression;
        else throw ConfigError("suite.kind: unknown suite '" + kind + "'");
    }
    read_if(j, "source_angles", s.source_angles, "suite");
    read_if(j, "target_angles", s.target_angles, "suite");
    read_if(j, "regression_weights", s.regression_weights, "suite");
    read_if(j, "source_shifts", s.source_shifts, "suite");
    read_if(j, "target_shifts", s.target_shifts, "suite");
    read_if(j, "samples_per_domain", s.samples_per_domain, "suite");
    read_if(j, "noise", s.noise, "suite");
    read_if(j, "val_fraction", s.val_fraction, "suite");
    read_if(j, "seed", s.seed, "suite");
    as_config_error("suite", [&] { s.validate(); return 0; });
    return s;
}

json to_json(const SuiteSpec& s) {
    json j = {{"kind", s.kind == SuiteKind::moons ? "moons" : "regression"},
              {"samples_per_domain", s.samples_per_domain},
              {"noise", s.noise},
              {"val_fraction", s.val_fraction},
              {"seed", s.seed}};
    if (s.kind == SuiteKind::moons) {
        j["source_angles"] = s.source_angles;
        j["target_angles"] = s.target_angles;
    } else {
        j["regression_weights"] = s.regression_weights;
        j["source_shifts"] = s.source_shifts;
        j["target_shifts"] = s.target_shifts;
    }
    return j;
}

BenchJob bench_from_json(const json& j) {
    require_known_keys(j, {"description", "suite", "train", "seeds", "fish", "arith"}, "bench");
    BenchJob job;
    job.suite = checked_suite(j);
    const std::size_t n = job.suite.num_sources();
    job.bench.base = train_from_json(section(j, "train"), n);
    if (j.contains("seeds")) job.bench.seeds = seeds_from(j);
    job.bench.fish = scheme_or(j, "fish", n, WeightScheme::fish_normalized(n));
    job.bench.arith = scheme_or(j, "arith", n, WeightScheme::arith_normalized(n));
    as_config_error("bench", [&] {
        weights(job.bench.fish, n);
        weights(job.bench.arith, n);
        return 0;
    });
    return job;
}

json to_json(const BenchJob& job) {
    return {{"suite", to_json(job.suite)},
            {"train", arith::to_json(job.bench.base)},
            {"seeds", job.bench.seeds},
            {"fish", arith::to_json(job.bench.fish)},
            {"arith", arith::to_json(job.bench.arith)}};
}

PlaneJob plane_from_json(const json& j) {
    require_known_keys(j,
                       {"description", "suite", "train", "anchor_steps", "anchor_lr", "resolution", "margin",
                        "ranges"},
                       "plane");
    PlaneJob job;
    job.suite = checked_suite(j);
    job.train = train_from_json(section(j, "train"), job.suite.num_sources());
    read_if(j, "anchor_steps", job.anchor_steps, "plane");
    if (j.contains("anchor_lr")) job.anchor_lr = get_as<double>(j, "anchor_lr", "plane");
    if (j.contains("resolution")) {
        const json& r = j.at("resolution");
        if (r.is_array()) {
            const auto v = get_as<std::vector<std::size_t>>(j, "resolution", "plane");
            if (v.size() != 2) throw ConfigError("plane.resolution: expected a number or [a, b]");
            job.resolution_a = v[0];
            job.resolution_b = v[1];
        } else {
            job.resolution_a = job.resolution_b = get_as<std::size_t>(j, "resolution", "plane");
        }
    }
    read_if(j, "margin", job.margin, "plane");
    if (j.contains("ranges")) {
        const json& r = j.at("ranges");
        require_known_keys(r, {"a_min", "a_max", "b_min", "b_max"}, "plane.ranges");
        job.ranges = PlaneRanges{get_as<double>(r, "a_min", "plane.ranges"), get_as<double>(r, "a_max", "plane.ranges"),
                                 get_as<double>(r, "b_min", "plane.ranges"), get_as<double>(r, "b_max", "plane.ranges")};
    }
    if (job.anchor_steps == 0) throw ConfigError("plane.anchor_steps: must be >= 1");
    if (job.resolution_a < 2 || job.resolution_b < 2) throw ConfigError("plane.resolution: must be >= 2");
    if (!(job.margin >= 0.0)) throw ConfigError("plane.margin: must be >= 0");
    if (job.anchor_lr && !(*job.anchor_lr > 0.0)) throw ConfigError("plane.anchor_lr: must be > 0");
    if (job.suite.num_sources() < 3) throw ConfigError("plane: the suite needs at least three sources");
    if (job.train.network.input_dim() != job.suite.input_dim()) {
        throw ConfigError("plane: network input size does not match the suite");
    }
    return job;
}

json to_json(const PlaneJob& job) {
    json j = {{"suite", to_json(job.suite)},
              {"train", arith::to_json(job.train)},
              {"anchor_steps", job.anchor_steps},
              {"anchor_lr", job.anchor_lr.value_or(job.train.inner_lr)},
              {"resolution", {job.resolution_a, job.resolution_b}},
              {"margin", job.margin}};
    if (job.ranges) {
        j["ranges"] = {{"a_min", job.ranges->a_min},
                       {"a_max", job.ranges->a_max},
                       {"b_min", job.ranges->b_min},
                       {"b_max", job.ranges->b_max}};
    }
    return j;
}

AdamTraceJob adamtrace_from_json(const json& j) {
    require_known_keys(j,
                       {"description", "gradients", "domains", "steps", "adam", "suite", "network",
                        "batch_size", "seed"},
                       "adamtrace");
    AdamTraceJob job;
    if (j.contains("gradients")) {
        const auto g = get_as<std::string>(j, "gradients", "adamtrace");
        if (g == "unit") job.gradients = TraceGradients::unit;
        else if (g == "network") job.gradients = TraceGradients::network;
        else throw ConfigError("adamtrace.gradients: unknown source '" + g + "'");
    }
    read_if(j, "domains", job.domains, "adamtrace");
    read_if(j, "steps", job.steps, "adamtrace");
    if (j.contains("adam")) {
        const json& a = j.at("adam");
        require_known_keys(a, {"learning_rate", "beta1", "beta2", "eps"}, "adamtrace.adam");
        read_if(a, "learning_rate", job.adam.learning_rate, "adamtrace.adam");
        read_if(a, "beta1", job.adam.beta1, "adamtrace.adam");
        read_if(a, "beta2", job.adam.beta2, "adamtrace.adam");
        read_if(a, "eps", job.adam.eps, "adamtrace.adam");
    }
    job.suite = checked_suite(j);
    if (j.contains("network")) job.network = network_from_json(j.at("network"));
    read_if(j, "batch_size", job.batch_size, "adamtrace");
    read_if(j, "seed", job.seed, "adamtrace");
    as_config_error("adamtrace.adam", [&] { job.adam.validate(); return 0; });
    if (job.steps == 0) throw ConfigError("adamtrace.steps: must be >= 1");
    if (job.gradients == TraceGradients::unit && job.domains == 0) {
        throw ConfigError("adamtrace.domains: must be >= 1");
    }
    if (job.batch_size == 0) throw ConfigError("adamtrace.batch_size: must be >= 1");
    return job;
}

json to_json(const AdamTraceJob& job) {
    json j = {{"gradients", job.gradients == TraceGradients::unit ? "unit" : "network"},
              {"steps", job.steps},
              {"adam",
               {{"learning_rate", job.adam.learning_rate},
                {"beta1", job.adam.beta1},
                {"beta2", job.adam.beta2},
                {"eps", job.adam.eps}}}};
    if (job.gradients == TraceGradients::unit) {
        j["domains"] = job.domains;
    } else {
        j["suite"] = to_json(job.suite);
        j["network"] = arith::to_json(job.network);
        j["batch_size"] = job.batch_size;
        j["seed"] = job.seed;
    }
    return j;
}

QuadraticStudyConfig quadratic_from_json(const json& j) {
    require_known_keys(j,
                       {"description", "learning_rates", "arith_epsilon", "simplex_sizes",
                        "simplex_tasks_per_size", "seed", "max_iters", "tolerance"},
                       "quadratic");
    QuadraticStudyConfig c;
    read_if(j, "learning_rates", c.learning_rates, "quadratic");
    read_if(j, "arith_epsilon", c.arith_epsilon, "quadratic");
    read_if(j, "simplex_sizes", c.simplex_sizes, "quadratic");
    read_if(j, "simplex_tasks_per_size", c.simplex_tasks_per_size, "quadratic");
    read_if(j, "seed", c.seed, "quadratic");
    read_if(j, "max_iters", c.max_iters, "quadratic");
    read_if(j, "tolerance", c.tolerance, "quadratic");
    if (!(c.tolerance > 0.0)) throw ConfigError("quadratic.tolerance: must be > 0");
    if (c.learning_rates.empty()) throw ConfigError("quadratic.learning_rates: must be non-empty");
    for (double lr : c.learning_rates) {
        if (!(lr > 0.0 && lr <= 1.0)) throw ConfigError("quadratic.learning_rates: values must lie in (0, 1]");
    }
    if (!(c.arith_epsilon > 0.0)) throw ConfigError("quadratic.arith_epsilon: must be > 0");
    for (std::size_t n : c.simplex_sizes) {
        if (n < 2) throw ConfigError("quadratic.simplex_sizes: values must be >= 2");
    }
    return c;
}

json to_json(const QuadraticStudyConfig& c) {
    return {{"learning_rates", c.learning_rates},
            {"arith_epsilon", c.arith_epsilon},
            {"simplex_sizes", c.simplex_sizes},
            {"simplex_tasks_per_size", c.simplex_tasks_per_size},
            {"seed", c.seed},
            {"max_iters", c.max_iters},
            {"tolerance", c.tolerance}};
}

SweepJob sweep_from_json(const json& j) {
    require_known_keys(j, {"description", "suite", "train", "k_values", "seeds", "fish", "arith"}, "sweep");
    SweepJob job;
    job.suite = checked_suite(j);
    const std::size_t n = job.suite.num_sources();
    job.sweep.base = train_from_json(section(j, "train"), n);
    read_if(j, "k_values", job.sweep.k_values, "sweep");
    if (job.sweep.k_values.empty()) throw ConfigError("sweep.k_values: must be non-empty");
    for (std::size_t k : job.sweep.k_values) {
        if (k == 0) throw ConfigError("sweep.k_values: values must be >= 1");
    }
    if (j.contains("seeds")) job.sweep.seeds = seeds_from(j);
    job.sweep.fish = scheme_or(j, "fish", n, WeightScheme::fish_normalized(n));
    job.sweep.arith = scheme_or(j, "arith", n, WeightScheme::arith_normalized(n));
    return job;
}

json to_json(const SweepJob& job) {
    return {{"suite", to_json(job.suite)},
            {"train", arith::to_json(job.sweep.base)},
            {"k_values", job.sweep.k_values},
            {"seeds", job.sweep.seeds},
            {"fish", arith::to_json(job.sweep.fish)},
            {"arith", arith::to_json(job.sweep.arith)}};
}

AblationJob ablation_from_json(const json& j) {
    require_known_keys(j, {"description", "suite", "train", "seeds", "axes"}, "ablation");
    AblationJob job;
    job.suite = checked_suite(j);
    job.ablation.base = train_from_json(section(j, "train"), job.suite.num_sources());
    if (j.contains("seeds")) job.ablation.seeds = seeds_from(j);
    const json& ax = section(j, "axes");
    require_known_keys(ax, {"scheme", "scaled", "outer", "momentum_in_inner", "domain_specific_sampling"},
                       "ablation.axes");
    auto& axes = job.ablation.axes;
    if (ax.contains("scheme")) {
        axes.scheme.clear();
        for (const auto& s : get_as<std::vector<std::string>>(ax, "scheme", "ablation.axes")) {
            if (s == "constant") axes.scheme.push_back(SchemeKind::constant);
            else if (s == "arithmetic") axes.scheme.push_back(SchemeKind::arithmetic);
            else throw ConfigError("ablation.axes.scheme: unknown scheme '" + s + "'");
        }
    }
    if (ax.contains("outer")) {
        axes.outer.clear();
        for (const auto& s : get_as<std::vector<std::string>>(ax, "outer", "ablation.axes")) {
            if (s == "direct") axes.outer.push_back(OuterKind::direct);
            else if (s == "adam") axes.outer.push_back(OuterKind::adam);
            else throw ConfigError("ablation.axes.outer: unknown outer update '" + s + "'");
        }
    }
    read_if(ax, "scaled", axes.scaled, "ablation.axes");
    read_if(ax, "momentum_in_inner", axes.momentum_in_inner, "ablation.axes");
    read_if(ax, "domain_specific_sampling", axes.domain_specific_sampling, "ablation.axes");
    if (axes.cells() == 0) throw ConfigError("ablation.axes: every axis needs at least one value");
    return job;
}

json to_json(const AblationJob& job) {
    const auto& a = job.ablation.axes;
    std::vector<std::string> schemes, outers;
    for (auto s : a.scheme) schemes.push_back(to_string(s));
    for (auto o : a.outer) outers.push_back(o == OuterKind::direct ? "direct" : "adam");
    return {{"suite", to_json(job.suite)},
            {"train", arith::to_json(job.ablation.base)},
            {"seeds", job.ablation.seeds},
            {"axes",
             {{"scheme", schemes},
              {"scaled", a.scaled},
              {"outer", outers},
              {"momentum_in_inner", a.momentum_in_inner},
              {"domain_specific_sampling", a.domain_specific_sampling}}}};
}

}  // namespace arith::cli
