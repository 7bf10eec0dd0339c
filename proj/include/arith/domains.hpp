#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "arith/nn.hpp"

namespace arith {

/// Labeled samples of a single domain. `num_classes == 0` marks a regression
/// domain whose labels are real-valued scalars.
struct DomainDataset {
    Matrix inputs;
    std::vector<double> labels;
    int domain_id = 0;
    std::size_t num_classes = 0;
    nlohmann::json descriptor = nlohmann::json::object();

    [[nodiscard]] std::size_t size() const { return inputs.rows; }
    [[nodiscard]] std::size_t dim() const { return inputs.cols; }
    [[nodiscard]] bool is_classification() const { return num_classes > 0; }

    void validate() const;
    /// Rows selected by `indices`, in that order; metadata is kept.
    [[nodiscard]] DomainDataset subset(std::span<const std::size_t> indices) const;
    /// The whole domain as one batch (full-batch losses).
    [[nodiscard]] Batch as_batch() const;

    friend bool operator==(const DomainDataset&, const DomainDataset&) = default;
};

/// Builds a batch from selected rows of a dataset, stamping the domain id.
Batch make_batch(const DomainDataset& d, std::span<const std::size_t> rows);

struct DomainSplit {
    DomainDataset train;
    DomainDataset val;
};

struct DomainSuite {
    std::vector<DomainDataset> sources;
    std::vector<DomainDataset> targets;
    double val_fraction = 0.2;
    std::vector<DomainSplit> splits;  // one per source

    [[nodiscard]] std::size_t num_sources() const { return sources.size(); }
    [[nodiscard]] std::vector<DomainDataset> train_sets() const;
    /// Concatenation of every source validation split.
    [[nodiscard]] DomainDataset pooled_validation() const;
};

/// Validates domain ids and carves a seed-deterministic train/validation split
/// out of each source (`val_fraction` of each source goes to validation).
DomainSuite make_suite(std::vector<DomainDataset> sources, std::vector<DomainDataset> targets,
                       double val_fraction, std::uint64_t seed);

DomainDataset make_rotated_moons(double angle_deg, std::size_t n, double noise_sd,
                                 std::uint64_t seed, int domain_id = 0);

/// y = w.x + bias_shift for a single input (noise-free response).
double shifted_linear_response(std::span<const double> weights, double bias_shift,
                               std::span<const double> x);

DomainDataset make_shifted_regression(std::span<const double> weights, double bias_shift,
                                      std::size_t n, double noise_sd, std::uint64_t seed,
                                      int domain_id = 0);

/// Sampling state: a seeded engine plus, per domain, the current epoch
/// permutation and cursor. Copying the state snapshots it for replay.
struct SamplerState {
    struct Cursor {
        std::vector<std::size_t> order;
        std::size_t next = 0;
        friend bool operator==(const Cursor&, const Cursor&) = default;
    };

    explicit SamplerState(std::uint64_t seed = 0) : rng(seed) {}

    std::mt19937_64 rng;
    std::map<int, Cursor> cursors;

    friend bool operator==(const SamplerState&, const SamplerState&) = default;
};

/// Draws `batch_size` samples of one domain without replacement within an
/// epoch; the domain is reshuffled when fewer than `batch_size` rows remain.
Batch sample_batch(SamplerState& state, const DomainDataset& dataset, std::size_t batch_size);

struct MixtureBatch {
    Batch batch;
    std::vector<int> sample_domains;
};

/// Pooled batch where each sample picks its source domain uniformly at random.
MixtureBatch sample_mixture_batch(SamplerState& state, std::span<const DomainDataset> datasets,
                                  std::size_t batch_size);

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

void save_csv(const DomainDataset& dataset, const std::filesystem::path& path);
DomainDataset load_csv(const std::filesystem::path& path);

}  // namespace arith
