#include <filesystem>
#include <sstream>

#include "doctest.h"

#include "arith/analysis.hpp"
#include "arith/cli.hpp"
#include "arith/cli_config.hpp"
#include "arith/io.hpp"

using namespace arith;
namespace fs = std::filesystem;

namespace {

const fs::path experiments = ARITH_EXPERIMENTS_DIR;

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args, const cli::VerifyOptions& opts = {}) {
    args.insert(args.begin(), "arith");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err, opts);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("arith_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string last_line(const std::string& text) {
    const std::size_t end = text.find_last_not_of('\n');
    const std::size_t start = text.rfind('\n', end);
    return text.substr(start == std::string::npos ? 0 : start + 1, end - (start == std::string::npos ? 0 : start + 1) + 1);
}

}  // namespace

TEST_CASE("missing and malformed config files exit 1 naming the path") {
    const fs::path dir = scratch("config");
    const std::string missing = (dir / "absent.json").string();
    Outcome o = run_cli({"bench", "--config", missing, "--out", (dir / "out").string()});
    CHECK(o.code == cli::exit_config_error);
    CHECK(o.err.find(missing) != std::string::npos);

    write_file_atomic(dir / "broken.json", "{\"suite\": ");
    o = run_cli({"quadratic", "--config", (dir / "broken.json").string(), "--out", (dir / "out").string()});
    CHECK(o.code == cli::exit_config_error);
    CHECK(o.err.find("broken.json") != std::string::npos);

    write_file_atomic(dir / "typo.json", "{\"learning_rate\": [0.5]}");
    o = run_cli({"quadratic", "--config", (dir / "typo.json").string(), "--out", (dir / "out").string()});
    CHECK(o.code == cli::exit_config_error);
    CHECK(o.err.find("learning_rate") != std::string::npos);

    write_file_atomic(dir / "nested.json", "{\"train\": {\"iterations\": 5, \"inner_steps\": 2}}");
    o = run_cli({"bench", "--config", (dir / "nested.json").string(), "--out", (dir / "out").string()});
    CHECK(o.code == cli::exit_config_error);
    CHECK(o.err.find("inner_steps") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("usage errors") {
    CHECK(run_cli({}).code == cli::exit_config_error);
    CHECK(run_cli({"train"}).code == cli::exit_config_error);
    CHECK(run_cli({"bench", "--bogus"}).code == cli::exit_config_error);
    CHECK(run_cli({"--help"}).code == cli::exit_ok);
    const Outcome o = run_cli({"verify", "--suite", "nonsense"});
    CHECK(o.code == cli::exit_config_error);
    CHECK(o.err.find("nonsense") != std::string::npos);
}

TEST_CASE("every shipped experiment file parses") {
    for (const auto& entry : fs::directory_iterator(experiments)) {
        const std::string name = entry.path().stem().string();
        CAPTURE(name);
        const auto j = cli::load_config_file(entry.path());
        const std::string kind = name.substr(0, name.find('-'));
        if (kind == "bench" || kind == "smoke") CHECK_NOTHROW(cli::bench_from_json(j));
        else if (kind == "plane") CHECK_NOTHROW(cli::plane_from_json(j));
        else if (kind == "adamtrace") CHECK_NOTHROW(cli::adamtrace_from_json(j));
        else if (kind == "quadratic") CHECK_NOTHROW(cli::quadratic_from_json(j));
        else if (kind == "sweep") CHECK_NOTHROW(cli::sweep_from_json(j));
        else if (kind == "ablation") CHECK_NOTHROW(cli::ablation_from_json(j));
        else FAIL("unrecognised experiment file " << name);
    }
}

TEST_CASE("the bench config matches the documented protocol") {
    const cli::BenchJob job = cli::bench_from_json(cli::load_config_file(experiments / "bench.json"));
    CHECK(job.suite.source_angles == std::vector<double>{0.0, 30.0, 60.0});
    CHECK(job.suite.target_angles == std::vector<double>{90.0});
    CHECK(job.bench.seeds.size() == 10);
    CHECK(job.bench.base.iterations == 300);
    CHECK(job.bench.base.swa.has_value());
    CHECK(job.bench.arith == WeightScheme::arith_normalized(3));
    CHECK(job.bench.fish == WeightScheme::fish_normalized(3));
    // Round trip through the sidecar form.
    const cli::BenchJob again = cli::bench_from_json(cli::to_json(job));
    CHECK(cli::to_json(again) == cli::to_json(job));
}

TEST_CASE("bench output is byte-identical across runs") {
    const fs::path dir = scratch("bench");
    const std::string cfg = (experiments / "smoke-bench.json").string();
    const Outcome a = run_cli({"bench", "--config", cfg, "--out", (dir / "a").string()});
    const Outcome b = run_cli({"bench", "--config", cfg, "--out", (dir / "b").string(), "-v"});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(read_file(dir / "a" / "bench.csv") == read_file(dir / "b" / "bench.csv"));
    CHECK(read_file(dir / "a" / "bench_runs.csv") == read_file(dir / "b" / "bench_runs.csv"));
    CHECK(a.out.find("Arith") == std::string::npos);
    CHECK(b.out.find("Arith+SWA") != std::string::npos);
    const auto sidecar = cli::load_config_file(dir / "a" / "bench.json");
    CHECK(sidecar["command"] == "bench");
    CHECK(sidecar["config"]["seeds"].size() == 2);

    const Outcome seeded = run_cli({"bench", "--config", cfg, "--out", (dir / "c").string(), "--seed", "7"});
    REQUIRE(seeded.code == 0);
    const std::string runs = read_file(dir / "c" / "bench_runs.csv");
    CHECK(runs.find("\nERM,7,") != std::string::npos);
    CHECK(runs.find("\nERM,0,") == std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("quadratic command exports the two-point fixed points") {
    const fs::path dir = scratch("quadratic");
    const Outcome o = run_cli({"quadratic", "--config", (experiments / "quadratic.json").string(), "--out",
                               dir.string()});
    REQUIRE(o.code == 0);
    const std::string points = read_file(dir / "quadratic_points.csv");
    const auto find_value = [&](const std::string& prefix) {
        const std::size_t at = points.find("\n" + prefix);
        REQUIRE(at != std::string::npos);
        const std::size_t start = at + 1 + prefix.size();
        return std::stod(points.substr(start, points.find('\n', start) - start));
    };
    CHECK(std::abs(find_value("0,arithmetic,0.5,0,") - 0.2) <= 1e-10);
    CHECK(std::abs(find_value("0,constant,0.5,0,") + 1.0 / 3.0) <= 1e-10);
    CHECK(read_file(dir / "quadratic.csv").rfind("scheme,lr,n,centroid_dist,spread,iters_to_converge\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("adamtrace command writes the per-step shares") {
    const fs::path dir = scratch("adamtrace");
    const Outcome o =
        run_cli({"adamtrace", "--config", (experiments / "adamtrace.json").string(), "--out", dir.string(), "-v"});
    REQUIRE(o.code == 0);
    CHECK(o.out.find("final fractions") != std::string::npos);
    const std::string text = read_file(dir / "adamtrace.csv");
    const auto cells = split_csv_line(last_line(text));
    REQUIRE(cells.size() == 4);
    CHECK(cells[0] == "50");
    const auto want = adam_trace_unit(3, 50, 0.9).back();
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::stod(cells[i + 1]) == want[i]);
    fs::remove_all(dir);
}

TEST_CASE("plane command on the two-parameter regressor") {
    const fs::path dir = scratch("plane");
    const Outcome o =
        run_cli({"plane", "--config", (experiments / "plane-regression.json").string(), "--out", dir.string()});
    REQUIRE(o.code == 0);
    const std::string text = read_file(dir / "plane.csv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 41 * 41);
    CHECK(text.rfind("a,b,loss_domain0,loss_domain1,loss_domain2\n", 0) == 0);
    const auto sidecar = cli::load_config_file(dir / "plane.json");
    CHECK(std::abs(sidecar["u_dot_v"].get<double>()) <= 1e-12);
    CHECK(std::abs(sidecar["u_norm"].get<double>() - 1.0) <= 1e-12);
    fs::remove_all(dir);
}

TEST_CASE("sweep and ablation commands") {
    const fs::path dir = scratch("sweep");
    write_file_atomic(dir / "sweep.json",
                      R"({"suite": {"samples_per_domain": 60}, "train": {"iterations": 5, "batch_size": 16},
                          "k_values": [1, 2], "seeds": [0]})");
    CHECK(run_cli({"sweep", "--config", (dir / "sweep.json").string(), "--out", dir.string()}).code == 0);
    CHECK(fs::exists(dir / "sweep.csv"));
    write_file_atomic(dir / "ablation.json",
                      R"({"suite": {"samples_per_domain": 60}, "train": {"iterations": 5, "batch_size": 16},
                          "axes": {"scheme": ["constant", "arithmetic"], "outer": ["direct"]}})");
    CHECK(run_cli({"ablation", "--config", (dir / "ablation.json").string(), "--out", dir.string()}).code == 0);
    const std::string text = read_file(dir / "ablation.csv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    fs::remove_all(dir);
}

TEST_CASE("verify suites pass and report") {
    const Outcome o = run_cli({"verify", "--suite", "taylor"});
    CHECK(o.code == cli::exit_ok);
    CHECK(o.out.rfind("PASS taylor", 0) == 0);
    for (const auto& name : cli::verify_suite_names()) {
        CAPTURE(name);
        CHECK(cli::run_verify_suite(name, {}).passed());
    }
    cli::VerifyOptions other;
    other.seed = 17;
    CHECK(cli::run_verify_suite("centroid", other).passed());
}

TEST_CASE("verify catches an off-by-one weight rule") {
    cli::VerifyOptions broken;
    broken.weight_fn = [](const WeightScheme& s, std::size_t n) {
        if (s.kind != SchemeKind::arithmetic) return weights(s, n);
        std::vector<double> w(n);
        for (std::size_t i = 1; i <= n; ++i) w[i - 1] = static_cast<double>(n - i) / (static_cast<double>(n) + s.epsilon);
        return w;
    };
    const Outcome o = run_cli({"verify", "--suite", "centroid"}, broken);
    CHECK(o.code == cli::exit_verify_failed);
    CHECK(o.out.rfind("FAIL centroid", 0) == 0);
    CHECK_FALSE(cli::run_verify_suite("identity", broken).passed());
    CHECK(cli::run_verify_suite("ledger", broken).passed());
}
