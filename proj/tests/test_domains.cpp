#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"

#include "arith/analysis.hpp"
#include "arith/domains.hpp"
#include "arith/io.hpp"

using namespace arith;
namespace fs = std::filesystem;

TEST_CASE("noise-free moons lie on the two half circles") {
    const DomainDataset d = make_rotated_moons(0.0, 100, 0.0, 5);
    CHECK(d.size() == 100);
    CHECK(d.num_classes == 2);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double x = d.inputs(i, 0);
        const double y = d.inputs(i, 1);
        if (d.labels[i] == 0.0) {
            CHECK(std::hypot(x, y) == doctest::Approx(1.0));
            CHECK(y >= -1e-12);
        } else {
            CHECK(std::hypot(x - 1.0, y - 0.5) == doctest::Approx(1.0));
            CHECK(y <= 0.5 + 1e-12);
        }
    }
}

TEST_CASE("rotation acts about the origin") {
    const DomainDataset a = make_rotated_moons(0.0, 50, 0.1, 9);
    const DomainDataset b = make_rotated_moons(90.0, 50, 0.1, 9);
    CHECK(b.labels == a.labels);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(b.inputs(i, 0) == doctest::Approx(-a.inputs(i, 1)).epsilon(1e-12));
        CHECK(b.inputs(i, 1) == doctest::Approx(a.inputs(i, 0)).epsilon(1e-12));
    }
    CHECK(b.descriptor["angle_deg"] == 90.0);
}

TEST_CASE("shifted regression follows its response") {
    const std::vector<double> w{2.0};
    const DomainDataset d = make_shifted_regression(w, 1.5, 20, 0.0, 3, 4);
    CHECK(d.domain_id == 4);
    CHECK_FALSE(d.is_classification());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(d.labels[i] == doctest::Approx(shifted_linear_response(w, 1.5, d.inputs.row(i))));
    }
}

TEST_CASE("suite splits are disjoint, seeded and sized by the fraction") {
    SuiteSpec spec;
    spec.samples_per_domain = 100;
    const DomainSuite s = build_suite(spec);
    CHECK(s.num_sources() == 3);
    CHECK(s.targets.size() == 1);
    CHECK(s.targets[0].domain_id == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(s.splits[i].val.size() == 20);
        CHECK(s.splits[i].train.size() == 80);
        CHECK(s.splits[i].train.domain_id == static_cast<int>(i));
    }
    CHECK(s.pooled_validation().size() == 60);
    const DomainSuite again = build_suite(spec);
    CHECK(again.splits[1].val == s.splits[1].val);
    CHECK_THROWS_AS(make_suite({s.sources[0], s.sources[0]}, {}, 0.2, 0), std::invalid_argument);
}

TEST_CASE("sampler visits every row once per epoch") {
    const DomainDataset d = make_rotated_moons(0.0, 30, 0.1, 2, 7);
    SamplerState state(11);
    std::multiset<double> seen;
    for (int i = 0; i < 3; ++i) {
        const Batch b = sample_batch(state, d, 10);
        CHECK(b.domain_id == 7);
        for (std::size_t r = 0; r < b.size(); ++r) seen.insert(b.inputs(r, 0));
    }
    std::multiset<double> all;
    for (std::size_t r = 0; r < d.size(); ++r) all.insert(d.inputs(r, 0));
    CHECK(seen == all);
    CHECK_THROWS_AS(sample_batch(state, d, 31), std::invalid_argument);
}

TEST_CASE("sampler state snapshots replay exactly") {
    const DomainDataset d = make_rotated_moons(0.0, 40, 0.1, 2);
    SamplerState state(3);
    (void)sample_batch(state, d, 7);
    SamplerState copy = state;
    const Batch a = sample_batch(state, d, 7);
    const Batch b = sample_batch(copy, d, 7);
    CHECK(a.inputs == b.inputs);
}

TEST_CASE("mixture batches draw every source") {
    SuiteSpec spec;
    const DomainSuite s = build_suite(spec);
    const auto train = s.train_sets();
    SamplerState state(5);
    const MixtureBatch m = sample_mixture_batch(state, train, 300);
    std::set<int> ids(m.sample_domains.begin(), m.sample_domains.end());
    CHECK(ids == std::set<int>{0, 1, 2});
    CHECK(m.batch.domain_id == -1);
}

TEST_CASE("dataset csv round trip and parse errors") {
    const fs::path dir = fs::temp_directory_path() / "arith_domains_test";
    fs::remove_all(dir);
    const DomainDataset d = make_rotated_moons(30.0, 25, 0.1, 4, 2);
    save_csv(d, dir / "d.csv");
    CHECK(load_csv(dir / "d.csv") == d);

    write_file_atomic(dir / "bad.csv", "# {\"domain_id\": 0, \"num_classes\": 2, \"dim\": 2, \"descriptor\": {}}\n1,2,0\n1,x,1\n");
    try {
        (void)load_csv(dir / "bad.csv");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    fs::remove_all(dir);
}
