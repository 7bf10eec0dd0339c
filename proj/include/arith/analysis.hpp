#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "arith/domains.hpp"
#include "arith/flat_vector.hpp"
#include "arith/metalearn.hpp"
#include "arith/quadratic.hpp"

namespace arith {

// ---------------------------------------------------------------------------
// Toy suite
// ---------------------------------------------------------------------------

enum class SuiteKind { moons, regression };

/// Synthetic multi-domain suite. Sources get domain ids 0..n-1, targets follow.
///   moons:      two-moons rotated by each angle (degrees)
///   regression: y = w.x + shift per domain, x ~ N(0, I)
struct SuiteSpec {
    SuiteKind kind = SuiteKind::moons;
    std::vector<double> source_angles{0.0, 30.0, 60.0};
    std::vector<double> target_angles{90.0};
    std::vector<double> regression_weights{1.0};
    std::vector<double> source_shifts{-1.0, 0.0, 1.0};
    std::vector<double> target_shifts{2.0};
    std::size_t samples_per_domain = 200;
    double noise = 0.1;
    double val_fraction = 0.2;
    std::uint64_t seed = 0;

    void validate() const;
    [[nodiscard]] std::size_t num_sources() const;
    [[nodiscard]] std::size_t input_dim() const;
};

DomainSuite build_suite(const SuiteSpec& spec);

// ---------------------------------------------------------------------------
// Loss planes
// ---------------------------------------------------------------------------

struct PlaneCoord {
    double a = 0.0;
    double b = 0.0;
};

/// Orthonormal frame of the affine plane through three models.
struct PlaneBasis {
    ParamVector origin;
    std::vector<double> u;
    std::vector<double> v;
    std::array<PlaneCoord, 3> anchors{};

    [[nodiscard]] ParamVector point(double a, double b) const;
    /// Projection of `theta - origin` onto (u, v).
    [[nodiscard]] PlaneCoord coords(const ParamVector& theta) const;
};

/// Gram-Schmidt frame with origin theta_a. Throws std::invalid_argument when
/// the anchors are (numerically) collinear.
PlaneBasis plane_basis(const ParamVector& theta_a, const ParamVector& theta_b,
                       const ParamVector& theta_c);

struct PlaneRanges {
    double a_min = 0.0;
    double a_max = 1.0;
    double b_min = 0.0;
    double b_max = 1.0;
};

/// Anchor bounding box widened by `margin` of its extent on every side.
PlaneRanges default_ranges(const PlaneBasis& basis, double margin = 0.3);

using ParamLoss = std::function<double(const ParamVector&)>;

/// Per-domain losses over a regular grid, plus the same losses evaluated at
/// the exact anchor and centroid coordinates (which rarely fall on grid nodes).
struct LossGrid {
    PlaneRanges ranges;
    std::size_t resolution_a = 0;
    std::size_t resolution_b = 0;
    std::vector<double> a_values;
    std::vector<double> b_values;
    /// losses[d][ia * resolution_b + ib]
    std::vector<std::vector<double>> losses;
    std::array<PlaneCoord, 3> anchors{};
    /// anchor_losses[anchor][d]
    std::array<std::vector<double>, 3> anchor_losses;
    PlaneCoord centroid;
    std::vector<double> centroid_losses;

    [[nodiscard]] std::size_t num_domains() const { return losses.size(); }
    [[nodiscard]] double at(std::size_t domain, std::size_t ia, std::size_t ib) const;
};

LossGrid eval_plane(const PlaneBasis& basis, std::span<const ParamLoss> loss_fns,
                    const PlaneRanges& ranges, std::size_t resolution_a, std::size_t resolution_b);

/// Full validation-split loss of every source domain.
std::vector<ParamLoss> validation_losses(const NetworkSpec& spec, const DomainSuite& suite);

/// Three intermediate models of one inner loop run from theta in source
/// order, taking `steps` SGD updates on each of the first three sources.
std::array<ParamVector, 3> plane_anchors(const NetworkSpec& spec, const ParamVector& theta,
                                         const DomainSuite& suite, std::size_t steps,
                                         double learning_rate, std::size_t batch_size,
                                         std::uint64_t seed);

/// `a,b,loss_domain0,...`, a-major.
void write_plane_csv(const LossGrid& grid, const std::filesystem::path& path);
/// `point,a,b,loss_domain0,...` for anchor_0..2 and the centroid.
void write_plane_points_csv(const LossGrid& grid, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Adam momentum traces
// ---------------------------------------------------------------------------

/// Ledger fractions after each step when domains 0..n-1 take turns feeding
/// gradient e_d (unit basis vector) into Adam's first moment.
/// Row t holds the fractions by domain id after step t + 1.
std::vector<std::vector<double>> adam_trace_unit(std::size_t domains, std::size_t steps,
                                                 double beta1);

/// Same ledger while Adam trains the network on alternating source batches.
std::vector<std::vector<double>> adam_trace_network(const NetworkSpec& spec,
                                                    const DomainSuite& suite, std::size_t steps,
                                                    const AdamConfig& adam,
                                                    std::size_t batch_size, std::uint64_t seed);

/// `step,domain_0,...,domain_{n-1}`, steps counted from 1.
void write_adamtrace_csv(std::span<const std::vector<double>> rows,
                         const std::filesystem::path& path);

/// Largest pairwise difference between the fractions of one row.
double max_fraction_gap(std::span<const double> fractions);

// ---------------------------------------------------------------------------
// Benchmark, sweeps and ablations
// ---------------------------------------------------------------------------

struct BenchConfig {
    MetaConfig base;
    std::vector<std::uint64_t> seeds{0};
    WeightScheme fish = WeightScheme::fish_normalized(3);
    WeightScheme arith = WeightScheme::arith_normalized(3);
};

struct BenchRun {
    std::string method;
    std::uint64_t seed = 0;
    std::size_t selected_iteration = 0;
    double val_acc = 0.0;
    double final_val_acc = 0.0;
    std::vector<double> target_acc;
};

struct BenchRow {
    std::string method;
    std::vector<MeanSd> target_acc;
    MeanSd val_acc;
};

struct BenchTable {
    std::vector<int> target_ids;
    std::vector<BenchRow> rows;
    std::vector<BenchRun> runs;

    [[nodiscard]] const BenchRow& row(const std::string& method) const;
};

/// ERM, Fish and Arith (plus their "+SWA" variants when base.swa is set) over
/// every seed. Method rows report the validation-selected model.
BenchTable run_bench(const BenchConfig& config, const DomainSuite& suite);

/// `method,target_<id>_mean,target_<id>_sd,...,val_acc_mean,val_acc_sd`.
void write_bench_csv(const BenchTable& table, const std::filesystem::path& path);
/// `method,seed,selected_iteration,val_acc,final_val_acc,target_<id>,...`.
void write_bench_runs_csv(const BenchTable& table, const std::filesystem::path& path);

struct SweepConfig {
    MetaConfig base;
    std::vector<std::size_t> k_values{1, 2, 4};
    std::vector<std::uint64_t> seeds{0};
    WeightScheme fish = WeightScheme::fish_normalized(3);
    WeightScheme arith = WeightScheme::arith_normalized(3);
};

struct SweepRow {
    std::string scheme;
    std::size_t k = 1;
    MeanSd target_acc;
    std::vector<double> per_seed;
};

/// Rows are ordered scheme-major (constant, then arithmetic), then by k.
std::vector<SweepRow> sweep_steps(const SweepConfig& config, const DomainSuite& suite);

/// `scheme,k,target_acc_mean,target_acc_sd,num_seeds`.
void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path);

struct AblationAxes {
    std::vector<SchemeKind> scheme{SchemeKind::arithmetic};
    std::vector<bool> scaled{false};
    std::vector<OuterKind> outer{OuterKind::adam};
    std::vector<bool> momentum_in_inner{false};
    std::vector<bool> domain_specific_sampling{true};

    [[nodiscard]] std::size_t cells() const;
};

struct AblationConfig {
    MetaConfig base;
    AblationAxes axes;
    std::vector<std::uint64_t> seeds{0};
};

struct AblationRow {
    SchemeKind scheme = SchemeKind::arithmetic;
    bool scaled = false;
    OuterKind outer = OuterKind::adam;
    bool momentum_in_inner = false;
    bool domain_specific_sampling = true;
    MeanSd val_acc;
    MeanSd target_acc;
};

/// Cartesian product of the axes (last axis varies fastest). Schemes use the
/// normalized preset, or the scaled one when `scaled` is set.
std::vector<AblationRow> ablation_grid(const AblationConfig& config, const DomainSuite& suite);

/// The MetaConfig an ablation cell trains with.
MetaConfig ablation_cell_config(const MetaConfig& base, const AblationRow& cell,
                                std::size_t n_sources);

/// `scheme,scaled,outer,momentum_in_inner,domain_specific_sampling,val_acc_mean,val_acc_sd,target_acc_mean,target_acc_sd`.
void write_ablation_csv(std::span<const AblationRow> rows, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Quadratic fixed points
// ---------------------------------------------------------------------------

struct QuadraticStudyConfig {
    std::vector<double> learning_rates{0.5, 1.0};
    double arith_epsilon = 1.0;
    /// Regular-simplex tasks with a random rotation, one batch per n.
    std::vector<std::size_t> simplex_sizes{2, 3, 5};
    std::size_t simplex_tasks_per_size = 5;
    std::uint64_t seed = 0;
    std::size_t max_iters = 100000;
    double tolerance = 1e-14;
};

struct QuadraticRow {
    std::size_t task = 0;
    std::string scheme;
    double lr = 0.0;
    std::size_t n = 0;
    double centroid_dist = 0.0;
    double spread = 0.0;
    std::size_t iters_to_converge = 0;
    quadratic::Vector fixed_point;
};

/// The 1-D task {+1, -1} (task 0) followed by the simplex tasks. Arith uses
/// arithmetic(arith_epsilon); Fish interpolates fully to the last inner model.
std::vector<QuadraticRow> quadratic_study(const QuadraticStudyConfig& config);

/// `scheme,lr,n,centroid_dist,spread,iters_to_converge`.
void write_quadratic_csv(std::span<const QuadraticRow> rows, const std::filesystem::path& path);
/// `task,scheme,lr,coord,value`: the fixed points themselves.
void write_quadratic_points_csv(std::span<const QuadraticRow> rows,
                                const std::filesystem::path& path);

}  // namespace arith
