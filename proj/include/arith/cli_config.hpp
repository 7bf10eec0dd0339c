#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "arith/analysis.hpp"
#include "arith/run_config.hpp"

namespace arith::cli {

/// Parses a JSON file; throws ConfigError naming the path when it is missing
/// or malformed.
nlohmann::json load_config_file(const std::filesystem::path& path);

SuiteSpec suite_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SuiteSpec& spec);

/// Every experiment file may carry a free-text "description"; all other keys
/// are checked against the experiment's schema.

struct BenchJob {
    SuiteSpec suite;
    BenchConfig bench;
};

struct PlaneJob {
    SuiteSpec suite;
    /// Trains the model the plane is centred on.
    MetaConfig train;
    std::size_t anchor_steps = 30;
    /// Defaults to train.inner_lr.
    std::optional<double> anchor_lr;
    std::size_t resolution_a = 41;
    std::size_t resolution_b = 41;
    double margin = 0.3;
    std::optional<PlaneRanges> ranges;
};

enum class TraceGradients { unit, network };

struct AdamTraceJob {
    TraceGradients gradients = TraceGradients::unit;
    std::size_t domains = 3;
    std::size_t steps = 50;
    AdamConfig adam{0.01, 0.9, 0.999, 1e-8};
    /// Used only with network gradients.
    SuiteSpec suite;
    NetworkSpec network{{2, 16, 2}, Activation::tanh, LossKind::softmax_cross_entropy};
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
};

struct SweepJob {
    SuiteSpec suite;
    SweepConfig sweep;
};

struct AblationJob {
    SuiteSpec suite;
    AblationConfig ablation;
};

BenchJob bench_from_json(const nlohmann::json& j);
PlaneJob plane_from_json(const nlohmann::json& j);
AdamTraceJob adamtrace_from_json(const nlohmann::json& j);
QuadraticStudyConfig quadratic_from_json(const nlohmann::json& j);
SweepJob sweep_from_json(const nlohmann::json& j);
AblationJob ablation_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BenchJob& job);
nlohmann::json to_json(const PlaneJob& job);
nlohmann::json to_json(const AdamTraceJob& job);
nlohmann::json to_json(const QuadraticStudyConfig& config);
nlohmann::json to_json(const SweepJob& job);
nlohmann::json to_json(const AblationJob& job);

}  // namespace arith::cli
