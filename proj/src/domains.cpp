#include "arith/domains.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "arith/io.hpp"

namespace arith {

void DomainDataset::validate() const {
    if (labels.size() != inputs.rows) {
        throw std::invalid_argument("dataset has " + std::to_string(inputs.rows) + " inputs but " +
                                    std::to_string(labels.size()) + " labels");
    }
    if (inputs.data.size() != inputs.rows * inputs.cols) {
        throw std::invalid_argument("dataset input matrix is inconsistent");
    }
    if (num_classes > 0) {
        for (double y : labels) {
            if (y < 0.0 || y != std::floor(y) || y >= static_cast<double>(num_classes)) {
                throw std::invalid_argument("label " + format_double(y) + " outside [0, " +
                                            std::to_string(num_classes) + ")");
            }
        }
    }
}

DomainDataset DomainDataset::subset(std::span<const std::size_t> indices) const {
    DomainDataset out;
    out.domain_id = domain_id;
    out.num_classes = num_classes;
    out.descriptor = descriptor;
    out.inputs = Matrix(indices.size(), inputs.cols);
    out.labels.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto src = inputs.row(indices[r]);
        std::copy(src.begin(), src.end(), out.inputs.data.begin() + r * inputs.cols);
        out.labels.push_back(labels[indices[r]]);
    }
    return out;
}

Batch make_batch(const DomainDataset& d, std::span<const std::size_t> rows) {
    Batch b;
    b.domain_id = d.domain_id;
    b.inputs = Matrix(rows.size(), d.dim());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = d.inputs.row(rows[r]);
        std::copy(src.begin(), src.end(), b.inputs.data.begin() + r * d.dim());
    }
    if (d.is_classification()) {
        ClassTargets t(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) t[r] = static_cast<std::size_t>(d.labels[rows[r]]);
        b.targets = std::move(t);
    } else {
        RealTargets t(rows.size(), 1);
        for (std::size_t r = 0; r < rows.size(); ++r) t(r, 0) = d.labels[rows[r]];
        b.targets = std::move(t);
    }
    return b;
}

Batch DomainDataset::as_batch() const {
    std::vector<std::size_t> all(size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return make_batch(*this, all);
}

std::vector<DomainDataset> DomainSuite::train_sets() const {
    std::vector<DomainDataset> out;
    out.reserve(splits.size());
    for (const auto& s : splits) out.push_back(s.train);
    return out;
}

DomainDataset DomainSuite::pooled_validation() const {
    if (splits.empty()) throw std::logic_error("suite has no source splits");
    DomainDataset out;
    out.domain_id = -1;
    out.num_classes = splits.front().val.num_classes;
    out.descriptor = {{"pooled_validation", true}};
    std::size_t rows = 0;
    for (const auto& s : splits) rows += s.val.size();
    out.inputs = Matrix(rows, splits.front().val.dim());
    std::size_t r = 0;
    for (const auto& s : splits) {
        std::copy(s.val.inputs.data.begin(), s.val.inputs.data.end(),
                  out.inputs.data.begin() + r * out.inputs.cols);
        out.labels.insert(out.labels.end(), s.val.labels.begin(), s.val.labels.end());
        r += s.val.size();
    }
    return out;
}

DomainSuite make_suite(std::vector<DomainDataset> sources, std::vector<DomainDataset> targets,
                       double val_fraction, std::uint64_t seed) {
    if (sources.empty()) throw std::invalid_argument("a domain suite needs at least one source");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
        throw std::invalid_argument("val_fraction must lie in [0, 1)");
    }
    std::set<int> ids;
    for (const auto* group : {&sources, &targets}) {
        for (const auto& d : *group) {
            d.validate();
            if (!ids.insert(d.domain_id).second) {
                throw std::invalid_argument("duplicate domain id " + std::to_string(d.domain_id));
            }
        }
    }
    DomainSuite suite;
    suite.val_fraction = val_fraction;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        const auto& d = sources[s];
        std::vector<std::size_t> perm(d.size());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::mt19937_64 rng(seed * 1000003u + static_cast<std::uint64_t>(s));
        std::shuffle(perm.begin(), perm.end(), rng);
        const auto n_val = static_cast<std::size_t>(
            std::llround(val_fraction * static_cast<double>(d.size())));
        if (n_val >= d.size()) {
            throw std::invalid_argument("validation split leaves domain " +
                                        std::to_string(d.domain_id) + " without training data");
        }
        std::vector<std::size_t> val_rows(perm.begin(), perm.begin() + static_cast<long>(n_val));
        std::vector<std::size_t> train_rows(perm.begin() + static_cast<long>(n_val), perm.end());
        std::sort(val_rows.begin(), val_rows.end());
        std::sort(train_rows.begin(), train_rows.end());
        suite.splits.push_back({d.subset(train_rows), d.subset(val_rows)});
    }
    suite.sources = std::move(sources);
    suite.targets = std::move(targets);
    return suite;
}

namespace {

DomainDataset moons_points(std::size_t n, double noise_sd, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("two-moons needs n >= 2");
    if (noise_sd < 0.0) throw std::invalid_argument("noise_sd must be >= 0");
    const std::size_t n_outer = (n + 1) / 2;
    const std::size_t n_inner = n / 2;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DomainDataset d;
    d.num_classes = 2;
    d.inputs = Matrix(n, 2);
    d.labels.resize(n);
    auto param = [](std::size_t j, std::size_t count) {
        return count > 1 ? std::numbers::pi * static_cast<double>(j) / static_cast<double>(count - 1)
                         : 0.0;
    };
    // Classes alternate: even rows lie on the outer moon, odd rows on the inner one.
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i / 2;
        double x = 0.0;
        double y = 0.0;
        if (i % 2 == 0) {
            const double t = param(j, n_outer);
            x = std::cos(t);
            y = std::sin(t);
        } else {
            const double t = param(j, n_inner);
            x = 1.0 - std::cos(t);
            y = 0.5 - std::sin(t);
        }
        const double ex = gauss(rng);
        const double ey = gauss(rng);
        d.inputs(i, 0) = x + noise_sd * ex;
        d.inputs(i, 1) = y + noise_sd * ey;
        d.labels[i] = static_cast<double>(i % 2);
    }
    return d;
}

}  // namespace

DomainDataset make_rotated_moons(double angle_deg, std::size_t n, double noise_sd,
                                 std::uint64_t seed, int domain_id) {
    DomainDataset d = moons_points(n, noise_sd, seed);
    const double rad = angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = d.inputs(i, 0);
        const double y = d.inputs(i, 1);
        d.inputs(i, 0) = c * x - s * y;
        d.inputs(i, 1) = s * x + c * y;
    }
    d.domain_id = domain_id;
    d.descriptor = {{"generator", "rotated_moons"},
                    {"angle_deg", angle_deg},
                    {"n", n},
                    {"noise_sd", noise_sd},
                    {"seed", seed}};
    return d;
}

double shifted_linear_response(std::span<const double> weights, double bias_shift,
                               std::span<const double> x) {
    return dot(weights, x) + bias_shift;
}

DomainDataset make_shifted_regression(std::span<const double> weights, double bias_shift,
                                      std::size_t n, double noise_sd, std::uint64_t seed,
                                      int domain_id) {
    if (n < 2) throw std::invalid_argument("shifted regression needs n >= 2");
    if (weights.empty()) throw std::invalid_argument("shifted regression needs a weight vector");
    if (noise_sd < 0.0) throw std::invalid_argument("noise_sd must be >= 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DomainDataset d;
    d.domain_id = domain_id;
    d.num_classes = 0;
    d.inputs = Matrix(n, weights.size());
    d.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < weights.size(); ++j) d.inputs(i, j) = gauss(rng);
        d.labels[i] = shifted_linear_response(weights, bias_shift, d.inputs.row(i)) +
                      noise_sd * gauss(rng);
    }
    d.descriptor = {{"generator", "shifted_regression"},
                    {"weights", std::vector<double>(weights.begin(), weights.end())},
                    {"bias_shift", bias_shift},
                    {"n", n},
                    {"noise_sd", noise_sd},
                    {"seed", seed}};
    return d;
}

namespace {

std::size_t next_index(SamplerState& state, const DomainDataset& d, std::size_t want) {
    auto& cur = state.cursors[d.domain_id];
    if (cur.order.size() != d.size() || cur.next + want > cur.order.size()) {
        cur.order.resize(d.size());
        std::iota(cur.order.begin(), cur.order.end(), std::size_t{0});
        std::shuffle(cur.order.begin(), cur.order.end(), state.rng);
        cur.next = 0;
    }
    return cur.next;
}

}  // namespace

Batch sample_batch(SamplerState& state, const DomainDataset& dataset, std::size_t batch_size) {
    if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
    if (batch_size > dataset.size()) {
        throw std::invalid_argument("batch_size " + std::to_string(batch_size) +
                                    " exceeds domain size " + std::to_string(dataset.size()));
    }
    const std::size_t start = next_index(state, dataset, batch_size);
    auto& cur = state.cursors[dataset.domain_id];
    std::span<const std::size_t> rows(cur.order.data() + start, batch_size);
    Batch b = make_batch(dataset, rows);
    cur.next += batch_size;
    return b;
}

MixtureBatch sample_mixture_batch(SamplerState& state, std::span<const DomainDataset> datasets,
                                  std::size_t batch_size) {
    if (datasets.empty()) throw std::invalid_argument("mixture sampling needs at least one domain");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
    const std::size_t dim = datasets.front().dim();
    const bool classification = datasets.front().is_classification();
    MixtureBatch out;
    out.batch.domain_id = -1;
    out.batch.inputs = Matrix(batch_size, dim);
    ClassTargets cls;
    RealTargets real(classification ? 0 : batch_size, 1);
    std::uniform_int_distribution<std::size_t> pick(0, datasets.size() - 1);
    for (std::size_t r = 0; r < batch_size; ++r) {
        const std::size_t which = pick(state.rng);
        const auto& d = datasets[which];
        if (d.dim() != dim || d.is_classification() != classification) {
            throw std::invalid_argument("mixture sampling over incompatible domains");
        }
        const std::size_t start = next_index(state, d, 1);
        auto& cur = state.cursors[d.domain_id];
        const std::size_t row = cur.order[start];
        cur.next += 1;
        const auto src = d.inputs.row(row);
        std::copy(src.begin(), src.end(), out.batch.inputs.data.begin() + r * dim);
        if (classification) {
            cls.push_back(static_cast<std::size_t>(d.labels[row]));
        } else {
            real(r, 0) = d.labels[row];
        }
        out.sample_domains.push_back(d.domain_id);
    }
    if (classification) {
        out.batch.targets = std::move(cls);
    } else {
        out.batch.targets = std::move(real);
    }
    return out;
}

void save_csv(const DomainDataset& dataset, const std::filesystem::path& path) {
    dataset.validate();
    const nlohmann::json meta = {{"domain_id", dataset.domain_id},
                                 {"num_classes", dataset.num_classes},
                                 {"dim", dataset.dim()},
                                 {"descriptor", dataset.descriptor}};
    std::string text = "# " + meta.dump() + "\n";
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (double x : dataset.inputs.row(i)) {
            text += format_double(x);
            text += ',';
        }
        text += format_double(dataset.labels[i]);
        text += '\n';
    }
    write_file_atomic(path, text);
}

DomainDataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const std::string name = path.string();
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
        throw ParseError(name, 1, "expected '# {json metadata}' header line");
    }
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(line.substr(2));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(name, 1, std::string("bad metadata JSON: ") + e.what());
    }
    DomainDataset d;
    std::size_t dim = 0;
    try {
        d.domain_id = meta.at("domain_id").get<int>();
        d.num_classes = meta.at("num_classes").get<std::size_t>();
        dim = meta.at("dim").get<std::size_t>();
        d.descriptor = meta.at("descriptor");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(name, 1, std::string("incomplete metadata: ") + e.what());
    }
    std::vector<double> values;
    std::size_t lineno = 1;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != dim + 1) {
            throw ParseError(name, lineno, "expected " + std::to_string(dim + 1) + " columns, found " +
                                               std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            char* end = nullptr;
            const double v = std::strtod(cells[c].c_str(), &end);
            if (cells[c].empty() || end != cells[c].c_str() + cells[c].size()) {
                throw ParseError(name, lineno, "cannot parse number '" + cells[c] + "'");
            }
            if (c < dim) {
                values.push_back(v);
            } else {
                if (d.num_classes > 0 &&
                    (v < 0.0 || v != std::floor(v) || v >= static_cast<double>(d.num_classes))) {
                    throw ParseError(name, lineno, "label '" + cells[c] + "' is not a valid class");
                }
                d.labels.push_back(v);
            }
        }
        ++rows;
    }
    if (rows == 0) throw ParseError(name, lineno, "no data rows");
    d.inputs = Matrix(rows, dim);
    d.inputs.data = std::move(values);
    return d;
}

}  // namespace arith
