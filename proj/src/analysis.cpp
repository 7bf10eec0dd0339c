#include "arith/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>

#include "arith/io.hpp"
#include "arith/parallel.hpp"

namespace arith {

// ---------------------------------------------------------------------------
// Suite
// ---------------------------------------------------------------------------

void SuiteSpec::validate() const {
    if (num_sources() == 0) throw std::invalid_argument("suite: at least one source domain is required");
    if (kind == SuiteKind::regression && regression_weights.empty()) {
        throw std::invalid_argument("suite: regression_weights must be non-empty");
    }
    if (samples_per_domain < 2) throw std::invalid_argument("suite: samples_per_domain must be >= 2");
    if (!(noise >= 0.0)) throw std::invalid_argument("suite: noise must be >= 0");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw std::invalid_argument("suite: val_fraction must lie in (0, 1)");
    }
}

std::size_t SuiteSpec::num_sources() const {
    return kind == SuiteKind::moons ? source_angles.size() : source_shifts.size();
}

std::size_t SuiteSpec::input_dim() const {
    return kind == SuiteKind::moons ? 2 : regression_weights.size();
}

DomainSuite build_suite(const SuiteSpec& spec) {
    spec.validate();
    int id = 0;
    auto make = [&](double param) {
        const std::uint64_t seed = derive_seed(spec.seed, 100 + static_cast<std::uint64_t>(id));
        DomainDataset d = spec.kind == SuiteKind::moons
                              ? make_rotated_moons(param, spec.samples_per_domain, spec.noise, seed, id)
                              : make_shifted_regression(spec.regression_weights, param,
                                                        spec.samples_per_domain, spec.noise, seed, id);
        ++id;
        return d;
    };
    const bool moons = spec.kind == SuiteKind::moons;
    std::vector<DomainDataset> sources;
    std::vector<DomainDataset> targets;
    for (double p : moons ? spec.source_angles : spec.source_shifts) sources.push_back(make(p));
    for (double p : moons ? spec.target_angles : spec.target_shifts) targets.push_back(make(p));
    return make_suite(std::move(sources), std::move(targets), spec.val_fraction,
                      derive_seed(spec.seed, 99));
}

// ---------------------------------------------------------------------------
// Planes
// ---------------------------------------------------------------------------

ParamVector PlaneBasis::point(double a, double b) const {
    ParamVector p = origin;
    for (std::size_t i = 0; i < p.size(); ++i) p.values[i] += a * u[i] + b * v[i];
    return p;
}

PlaneCoord PlaneBasis::coords(const ParamVector& theta) const {
    const GradVector d = theta - origin;
    return {dot(d.span(), u), dot(d.span(), v)};
}

PlaneBasis plane_basis(const ParamVector& theta_a, const ParamVector& theta_b,
                       const ParamVector& theta_c) {
    require_same_size(theta_a.size(), theta_b.size(), "plane_basis");
    require_same_size(theta_a.size(), theta_c.size(), "plane_basis");
    PlaneBasis basis;
    basis.origin = theta_a;

    const GradVector db = theta_b - theta_a;
    const double nb = norm2(db.span());
    if (nb < 1e-10) throw std::invalid_argument("plane_basis: first two anchors coincide");
    basis.u = db.values;
    for (double& x : basis.u) x /= nb;

    GradVector dc = theta_c - theta_a;
    const double proj = dot(dc.span(), basis.u);
    for (std::size_t i = 0; i < dc.size(); ++i) dc.values[i] -= proj * basis.u[i];
    const double nc = norm2(dc.span());
    if (nc < 1e-10) throw std::invalid_argument("plane_basis: anchors are collinear");
    basis.v = dc.values;
    for (double& x : basis.v) x /= nc;

    basis.anchors = {PlaneCoord{0.0, 0.0}, basis.coords(theta_b), basis.coords(theta_c)};
    return basis;
}

PlaneRanges default_ranges(const PlaneBasis& basis, double margin) {
    if (!(margin >= 0.0)) throw std::invalid_argument("default_ranges: margin must be >= 0");
    PlaneRanges r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& c : basis.anchors) {
        r.a_min = std::min(r.a_min, c.a);
        r.a_max = std::max(r.a_max, c.a);
        r.b_min = std::min(r.b_min, c.b);
        r.b_max = std::max(r.b_max, c.b);
    }
    const double wa = r.a_max - r.a_min;
    const double wb = r.b_max - r.b_min;
    r.a_min -= margin * wa;
    r.a_max += margin * wa;
    r.b_min -= margin * wb;
    r.b_max += margin * wb;
    return r;
}

double LossGrid::at(std::size_t domain, std::size_t ia, std::size_t ib) const {
    if (domain >= losses.size() || ia >= resolution_a || ib >= resolution_b) {
        throw std::out_of_range("LossGrid::at index out of range");
    }
    return losses[domain][ia * resolution_b + ib];
}

namespace {

std::vector<double> axis(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    out.back() = hi;
    return out;
}

std::vector<double> eval_all(std::span<const ParamLoss> fns, const ParamVector& p) {
    std::vector<double> out;
    out.reserve(fns.size());
    for (const auto& f : fns) {
        const double l = f(p);
        if (!std::isfinite(l)) throw std::runtime_error("eval_plane: non-finite loss");
        out.push_back(l);
    }
    return out;
}

}  // namespace

LossGrid eval_plane(const PlaneBasis& basis, std::span<const ParamLoss> loss_fns,
                    const PlaneRanges& ranges, std::size_t resolution_a, std::size_t resolution_b) {
    if (resolution_a < 2 || resolution_b < 2) {
        throw std::invalid_argument("eval_plane: resolution must be >= 2 on both axes");
    }
    if (loss_fns.empty()) throw std::invalid_argument("eval_plane: no loss functions");
    if (!(ranges.a_max > ranges.a_min && ranges.b_max > ranges.b_min)) {
        throw std::invalid_argument("eval_plane: empty axis range");
    }
    LossGrid grid;
    grid.ranges = ranges;
    grid.resolution_a = resolution_a;
    grid.resolution_b = resolution_b;
    grid.a_values = axis(ranges.a_min, ranges.a_max, resolution_a);
    grid.b_values = axis(ranges.b_min, ranges.b_max, resolution_b);

    const std::size_t cells = resolution_a * resolution_b;
    grid.losses.assign(loss_fns.size(), std::vector<double>(cells));
    parallel_for(cells, [&](std::size_t c) {
        const std::size_t ia = c / resolution_b;
        const std::size_t ib = c % resolution_b;
        const auto l = eval_all(loss_fns, basis.point(grid.a_values[ia], grid.b_values[ib]));
        for (std::size_t d = 0; d < l.size(); ++d) grid.losses[d][c] = l[d];
    });

    grid.anchors = basis.anchors;
    for (std::size_t k = 0; k < 3; ++k) {
        grid.anchor_losses[k] = eval_all(loss_fns, basis.point(basis.anchors[k].a, basis.anchors[k].b));
    }
    grid.centroid = {(basis.anchors[0].a + basis.anchors[1].a + basis.anchors[2].a) / 3.0,
                     (basis.anchors[0].b + basis.anchors[1].b + basis.anchors[2].b) / 3.0};
    grid.centroid_losses = eval_all(loss_fns, basis.point(grid.centroid.a, grid.centroid.b));
    return grid;
}

std::vector<ParamLoss> validation_losses(const NetworkSpec& spec, const DomainSuite& suite) {
    std::vector<ParamLoss> out;
    for (const auto& split : suite.splits) {
        auto batch = std::make_shared<const Batch>(split.val.as_batch());
        out.emplace_back([spec, batch](const ParamVector& p) { return forward_loss(spec, p, *batch); });
    }
    return out;
}

std::array<ParamVector, 3> plane_anchors(const NetworkSpec& spec, const ParamVector& theta,
                                         const DomainSuite& suite, std::size_t steps,
                                         double learning_rate, std::size_t batch_size,
                                         std::uint64_t seed) {
    if (suite.num_sources() < 3) throw std::invalid_argument("plane_anchors: need at least three sources");
    const std::vector<DomainDataset> all = suite.train_sets();
    const std::vector<DomainDataset> sources(all.begin(), all.begin() + 3);
    const std::vector<std::size_t> order{0, 1, 2};
    InnerLoopOptions options;
    options.k = steps;
    options.learning_rate = learning_rate;
    options.batch_size = batch_size;
    SamplerState sampler(derive_seed(seed, 1));
    const InnerTrace trace = inner_loop(spec, theta, sources, order, options, sampler);
    return {trace.thetas[1], trace.thetas[2], trace.thetas[3]};
}

namespace {

std::vector<std::string> loss_columns(std::size_t n) {
    std::vector<std::string> cols;
    for (std::size_t d = 0; d < n; ++d) cols.push_back("loss_domain" + std::to_string(d));
    return cols;
}

}  // namespace

void write_plane_csv(const LossGrid& grid, const std::filesystem::path& path) {
    std::vector<std::string> header{"a", "b"};
    for (auto& c : loss_columns(grid.num_domains())) header.push_back(std::move(c));
    CsvWriter csv(header);
    for (std::size_t ia = 0; ia < grid.resolution_a; ++ia) {
        for (std::size_t ib = 0; ib < grid.resolution_b; ++ib) {
            std::vector<std::string> row{format_double(grid.a_values[ia]), format_double(grid.b_values[ib])};
            for (std::size_t d = 0; d < grid.num_domains(); ++d) row.push_back(format_double(grid.at(d, ia, ib)));
            csv.row(row);
        }
    }
    csv.save(path);
}

void write_plane_points_csv(const LossGrid& grid, const std::filesystem::path& path) {
    std::vector<std::string> header{"point", "a", "b"};
    for (auto& c : loss_columns(grid.num_domains())) header.push_back(std::move(c));
    CsvWriter csv(header);
    auto emit = [&](const std::string& name, PlaneCoord c, const std::vector<double>& losses) {
        std::vector<std::string> row{name, format_double(c.a), format_double(c.b)};
        for (double l : losses) row.push_back(format_double(l));
        csv.row(row);
    };
    for (std::size_t k = 0; k < 3; ++k) emit("anchor_" + std::to_string(k), grid.anchors[k], grid.anchor_losses[k]);
    emit("centroid", grid.centroid, grid.centroid_losses);
    csv.save(path);
}

// ---------------------------------------------------------------------------
// Adam traces
// ---------------------------------------------------------------------------

namespace {

std::vector<double> fractions_row(const MomentumLedger& ledger) {
    std::vector<double> row;
    for (const auto& [id, f] : ledger_fractions(ledger)) row.push_back(f);
    return row;
}

std::vector<int> iota_ids(std::size_t n) {
    std::vector<int> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i);
    return ids;
}

}  // namespace

std::vector<std::vector<double>> adam_trace_unit(std::size_t domains, std::size_t steps, double beta1) {
    if (domains == 0) throw std::invalid_argument("adam_trace: need at least one domain");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("adam_trace: beta1 must lie in [0, 1)");
    const std::vector<int> ids = iota_ids(domains);
    MomentumLedger ledger(domains, ids);
    std::vector<std::vector<double>> rows;
    rows.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t d = t % domains;
        GradVector e(domains);
        e.values[d] = 1.0;
        ledger = ledger_update(std::move(ledger), e, static_cast<int>(d), beta1);
        rows.push_back(fractions_row(ledger));
    }
    return rows;
}

std::vector<std::vector<double>> adam_trace_network(const NetworkSpec& spec, const DomainSuite& suite,
                                                    std::size_t steps, const AdamConfig& adam,
                                                    std::size_t batch_size, std::uint64_t seed) {
    adam.validate();
    const std::vector<DomainDataset> sources = suite.train_sets();
    if (sources.empty()) throw std::invalid_argument("adam_trace: suite has no sources");
    std::vector<int> ids;
    for (const auto& s : sources) ids.push_back(s.domain_id);
    ParamVector theta = init_params(spec, derive_seed(seed, 0));
    SamplerState sampler(derive_seed(seed, 1));
    AdamState state(theta.size(), adam);
    MomentumLedger ledger(theta.size(), ids);
    std::vector<std::vector<double>> rows;
    rows.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        const DomainDataset& d = sources[t % sources.size()];
        const GradVector g = backward(spec, theta, sample_batch(sampler, d, batch_size));
        ledger = ledger_update(std::move(ledger), g, d.domain_id, adam.beta1);
        auto [next, s] = adam_step(theta, g, std::move(state));
        theta = std::move(next);
        state = std::move(s);
        rows.push_back(fractions_row(ledger));
    }
    return rows;
}

void write_adamtrace_csv(std::span<const std::vector<double>> rows, const std::filesystem::path& path) {
    if (rows.empty()) throw std::invalid_argument("write_adamtrace_csv: no rows");
    std::vector<std::string> header{"step"};
    for (std::size_t d = 0; d < rows.front().size(); ++d) header.push_back("domain_" + std::to_string(d));
    CsvWriter csv(header);
    for (std::size_t t = 0; t < rows.size(); ++t) {
        std::vector<std::string> row{std::to_string(t + 1)};
        for (double f : rows[t]) row.push_back(format_double(f));
        csv.row(row);
    }
    csv.save(path);
}

double max_fraction_gap(std::span<const double> fractions) {
    if (fractions.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(fractions.begin(), fractions.end());
    return *hi - *lo;
}

// ---------------------------------------------------------------------------
// Bench
// ---------------------------------------------------------------------------

namespace {

struct MethodSpec {
    std::string name;
    MetaConfig config;
};

std::vector<MethodSpec> bench_methods(const BenchConfig& config) {
    MetaConfig erm = config.base;
    erm.method = Method::erm;
    MetaConfig fish = config.base;
    fish.method = Method::meta;
    fish.scheme = config.fish;
    MetaConfig arith = config.base;
    arith.method = Method::meta;
    arith.scheme = config.arith;
    return {{"ERM", erm}, {"Fish", fish}, {"Arith", arith}};
}

BenchRow summarize(const std::string& method, const std::vector<const BenchRun*>& runs,
                   std::size_t n_targets) {
    BenchRow row;
    row.method = method;
    std::vector<double> val;
    for (const auto* r : runs) val.push_back(r->val_acc);
    row.val_acc = mean_sd(val);
    for (std::size_t t = 0; t < n_targets; ++t) {
        std::vector<double> acc;
        for (const auto* r : runs) acc.push_back(r->target_acc[t]);
        row.target_acc.push_back(mean_sd(acc));
    }
    return row;
}

}  // namespace

const BenchRow& BenchTable::row(const std::string& method) const {
    for (const auto& r : rows) {
        if (r.method == method) return r;
    }
    throw std::out_of_range("bench table has no row '" + method + "'");
}

BenchTable run_bench(const BenchConfig& config, const DomainSuite& suite) {
    if (config.seeds.empty()) throw std::invalid_argument("bench: seed list is empty");
    const auto methods = bench_methods(config);
    for (const auto& m : methods) m.config.validate();
    const std::size_t jobs = methods.size() * config.seeds.size();
    std::vector<RunResult> results(jobs);
    parallel_for(jobs, [&](std::size_t j) {
        MetaConfig c = methods[j / config.seeds.size()].config;
        c.seed = config.seeds[j % config.seeds.size()];
        c.track_metrics = true;
        results[j] = train(c, suite);
    });

    BenchTable table;
    for (const auto& t : suite.targets) table.target_ids.push_back(t.domain_id);
    const bool swa = config.base.swa.has_value();
    for (std::size_t m = 0; m < methods.size(); ++m) {
        for (std::size_t s = 0; s < config.seeds.size(); ++s) {
            const RunResult& r = results[m * config.seeds.size() + s];
            table.runs.push_back({methods[m].name, config.seeds[s], r.selected_iteration, r.selected.val_acc,
                                  r.final_eval.val_acc, r.selected.target_acc_per_domain});
        }
    }
    if (swa) {
        for (std::size_t m = 0; m < methods.size(); ++m) {
            for (std::size_t s = 0; s < config.seeds.size(); ++s) {
                const RunResult& r = results[m * config.seeds.size() + s];
                if (!r.swa_eval) throw std::runtime_error("bench: SWA was enabled but collected no checkpoints");
                table.runs.push_back({methods[m].name + "+SWA", config.seeds[s], r.metrics.size() - 1,
                                      r.swa_eval->val_acc, r.swa_eval->val_acc,
                                      r.swa_eval->target_acc_per_domain});
            }
        }
    }
    std::vector<std::string> names;
    for (const auto& m : methods) names.push_back(m.name);
    if (swa) {
        for (const auto& m : methods) names.push_back(m.name + "+SWA");
    }
    for (const auto& name : names) {
        std::vector<const BenchRun*> runs;
        for (const auto& r : table.runs) {
            if (r.method == name) runs.push_back(&r);
        }
        table.rows.push_back(summarize(name, runs, table.target_ids.size()));
    }
    return table;
}

void write_bench_csv(const BenchTable& table, const std::filesystem::path& path) {
    std::vector<std::string> header{"method"};
    for (int id : table.target_ids) {
        header.push_back("target_" + std::to_string(id) + "_mean");
        header.push_back("target_" + std::to_string(id) + "_sd");
    }
    header.push_back("val_acc_mean");
    header.push_back("val_acc_sd");
    CsvWriter csv(header);
    for (const auto& r : table.rows) {
        std::vector<std::string> row{r.method};
        for (const auto& t : r.target_acc) {
            row.push_back(format_double(t.mean));
            row.push_back(format_double(t.sd));
        }
        row.push_back(format_double(r.val_acc.mean));
        row.push_back(format_double(r.val_acc.sd));
        csv.row(row);
    }
    csv.save(path);
}

void write_bench_runs_csv(const BenchTable& table, const std::filesystem::path& path) {
    std::vector<std::string> header{"method", "seed", "selected_iteration", "val_acc", "final_val_acc"};
    for (int id : table.target_ids) header.push_back("target_" + std::to_string(id));
    CsvWriter csv(header);
    for (const auto& r : table.runs) {
        std::vector<std::string> row{r.method, std::to_string(r.seed), std::to_string(r.selected_iteration),
                                     format_double(r.val_acc), format_double(r.final_val_acc)};
        for (double a : r.target_acc) row.push_back(format_double(a));
        csv.row(row);
    }
    csv.save(path);
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

std::vector<SweepRow> sweep_steps(const SweepConfig& config, const DomainSuite& suite) {
    if (config.k_values.empty() || config.seeds.empty()) {
        throw std::invalid_argument("sweep: k_values and seeds must be non-empty");
    }
    const std::array<std::pair<std::string, WeightScheme>, 2> schemes{
        {{"constant", config.fish}, {"arithmetic", config.arith}}};
    const std::size_t nk = config.k_values.size();
    const std::size_t ns = config.seeds.size();
    std::vector<double> acc(schemes.size() * nk * ns);
    parallel_for(acc.size(), [&](std::size_t j) {
        MetaConfig c = config.base;
        c.method = Method::meta;
        c.scheme = schemes[j / (nk * ns)].second;
        c.k = config.k_values[(j / ns) % nk];
        c.seed = config.seeds[j % ns];
        c.track_metrics = true;
        acc[j] = train(c, suite).selected.target_acc;
    });
    std::vector<SweepRow> rows;
    for (std::size_t s = 0; s < schemes.size(); ++s) {
        for (std::size_t k = 0; k < nk; ++k) {
            SweepRow row;
            row.scheme = schemes[s].first;
            row.k = config.k_values[k];
            const auto first = acc.begin() + static_cast<std::ptrdiff_t>((s * nk + k) * ns);
            row.per_seed.assign(first, first + static_cast<std::ptrdiff_t>(ns));
            row.target_acc = mean_sd(row.per_seed);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path) {
    CsvWriter csv({"scheme", "k", "target_acc_mean", "target_acc_sd", "num_seeds"});
    for (const auto& r : rows) {
        csv.row({r.scheme, std::to_string(r.k), format_double(r.target_acc.mean),
                 format_double(r.target_acc.sd), std::to_string(r.per_seed.size())});
    }
    csv.save(path);
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

std::size_t AblationAxes::cells() const {
    return scheme.size() * scaled.size() * outer.size() * momentum_in_inner.size() *
           domain_specific_sampling.size();
}

MetaConfig ablation_cell_config(const MetaConfig& base, const AblationRow& cell, std::size_t n_sources) {
    MetaConfig c = base;
    c.method = Method::meta;
    if (cell.scheme == SchemeKind::constant) {
        c.scheme = cell.scaled ? WeightScheme::fish_scaled(n_sources) : WeightScheme::fish_normalized(n_sources);
    } else if (cell.scheme == SchemeKind::arithmetic) {
        c.scheme = cell.scaled ? WeightScheme::arith_scaled(n_sources) : WeightScheme::arith_normalized(n_sources);
    } else {
        throw std::invalid_argument("ablation: scheme axis accepts constant or arithmetic");
    }
    c.outer = cell.outer;
    c.momentum_in_inner = cell.momentum_in_inner;
    c.domain_specific_sampling = cell.domain_specific_sampling;
    return c;
}

std::vector<AblationRow> ablation_grid(const AblationConfig& config, const DomainSuite& suite) {
    const auto& ax = config.axes;
    if (ax.cells() == 0) throw std::invalid_argument("ablation: every axis needs at least one value");
    if (config.seeds.empty()) throw std::invalid_argument("ablation: seed list is empty");
    std::vector<AblationRow> rows;
    for (auto s : ax.scheme)
        for (bool sc : ax.scaled)
            for (auto o : ax.outer)
                for (bool m : ax.momentum_in_inner)
                    for (bool d : ax.domain_specific_sampling) rows.push_back({s, sc, o, m, d, {}, {}});

    const std::size_t n = suite.num_sources();
    for (const auto& r : rows) ablation_cell_config(config.base, r, n).validate();
    const std::size_t ns = config.seeds.size();
    std::vector<EvalResult> evals(rows.size() * ns);
    parallel_for(evals.size(), [&](std::size_t j) {
        MetaConfig c = ablation_cell_config(config.base, rows[j / ns], n);
        c.seed = config.seeds[j % ns];
        c.track_metrics = true;
        evals[j] = train(c, suite).selected;
    });
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<double> val, tgt;
        for (std::size_t s = 0; s < ns; ++s) {
            val.push_back(evals[i * ns + s].val_acc);
            tgt.push_back(evals[i * ns + s].target_acc);
        }
        rows[i].val_acc = mean_sd(val);
        rows[i].target_acc = mean_sd(tgt);
    }
    return rows;
}

void write_ablation_csv(std::span<const AblationRow> rows, const std::filesystem::path& path) {
    CsvWriter csv({"scheme", "scaled", "outer", "momentum_in_inner", "domain_specific_sampling",
                   "val_acc_mean", "val_acc_sd", "target_acc_mean", "target_acc_sd"});
    auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
    for (const auto& r : rows) {
        csv.row({to_string(r.scheme), flag(r.scaled), r.outer == OuterKind::direct ? "direct" : "adam",
                 flag(r.momentum_in_inner), flag(r.domain_specific_sampling), format_double(r.val_acc.mean),
                 format_double(r.val_acc.sd), format_double(r.target_acc.mean), format_double(r.target_acc.sd)});
    }
    csv.save(path);
}

// ---------------------------------------------------------------------------
// Quadratic study
// ---------------------------------------------------------------------------

namespace {

quadratic::QuadraticTask simplex_task(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto dim = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd g(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) g(i, j) = gauss(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    quadratic::Vector offset(dim);
    for (Eigen::Index i = 0; i < dim; ++i) offset(i) = gauss(rng);
    const quadratic::Vector mean = quadratic::Vector::Constant(dim, 1.0 / static_cast<double>(n));
    quadratic::QuadraticTask task;
    for (Eigen::Index i = 0; i < dim; ++i) {
        const quadratic::Vector vertex = quadratic::Vector::Unit(dim, i) - mean;
        task.manifolds.push_back(quadratic::AffineManifold::point(q * vertex + offset));
    }
    return task;
}

}  // namespace

std::vector<QuadraticRow> quadratic_study(const QuadraticStudyConfig& config) {
    if (config.learning_rates.empty()) throw std::invalid_argument("quadratic: learning_rates is empty");
    if (!(config.arith_epsilon > 0.0)) throw std::invalid_argument("quadratic: arith_epsilon must be > 0");
    for (std::size_t n : config.simplex_sizes) {
        if (n < 2) throw std::invalid_argument("quadratic: simplex sizes must be >= 2");
    }

    std::vector<quadratic::QuadraticTask> tasks;
    tasks.push_back({{quadratic::AffineManifold::point(quadratic::Vector::Constant(1, 1.0)),
                      quadratic::AffineManifold::point(quadratic::Vector::Constant(1, -1.0))}});
    std::mt19937_64 rng(derive_seed(config.seed, 0));
    for (std::size_t n : config.simplex_sizes) {
        for (std::size_t i = 0; i < config.simplex_tasks_per_size; ++i) tasks.push_back(simplex_task(n, rng));
    }

    const std::array<std::pair<std::string, WeightScheme>, 2> schemes{
        {{"arithmetic", WeightScheme::arithmetic(config.arith_epsilon)}, {"constant", WeightScheme::constant(1.0)}}};
    std::vector<QuadraticRow> rows;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& task = tasks[t];
        std::vector<std::size_t> order(task.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        const quadratic::Vector start = quadratic::Vector::Zero(task.dimension());
        for (double lr : config.learning_rates) {
            for (const auto& [name, scheme] : schemes) {
                const auto fp = quadratic::fixed_point(task, scheme, lr, order, config.max_iters, start,
                                                        config.tolerance);
                const auto cd = quadratic::centroid_distance(fp.theta, task);
                rows.push_back({t, name, lr, task.size(), cd.distance, cd.spread(), fp.iterations, fp.theta});
            }
        }
    }
    return rows;
}

void write_quadratic_csv(std::span<const QuadraticRow> rows, const std::filesystem::path& path) {
    CsvWriter csv({"scheme", "lr", "n", "centroid_dist", "spread", "iters_to_converge"});
    for (const auto& r : rows) {
        csv.row({r.scheme, format_double(r.lr), std::to_string(r.n), format_double(r.centroid_dist),
                 format_double(r.spread), std::to_string(r.iters_to_converge)});
    }
    csv.save(path);
}

void write_quadratic_points_csv(std::span<const QuadraticRow> rows, const std::filesystem::path& path) {
    CsvWriter csv({"task", "scheme", "lr", "coord", "value"});
    for (const auto& r : rows) {
        for (Eigen::Index i = 0; i < r.fixed_point.size(); ++i) {
            csv.row({std::to_string(r.task), r.scheme, format_double(r.lr), std::to_string(i),
                     format_double(r.fixed_point(i))});
        }
    }
    csv.save(path);
}

}  // namespace arith
