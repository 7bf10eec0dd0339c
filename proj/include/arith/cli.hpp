#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "arith/metalearn.hpp"

namespace arith::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 1;
inline constexpr int exit_verify_failed = 2;

using WeightFn = std::function<std::vector<double>(const WeightScheme&, std::size_t)>;

struct VerifyOptions {
    /// Weight rule under test; replaced in tests to check that the suites
    /// catch a broken formula.
    WeightFn weight_fn = [](const WeightScheme& s, std::size_t n) { return weights(s, n); };
    std::uint64_t seed = 0;
};

struct SuiteReport {
    std::string name;
    std::size_t checks = 0;
    std::vector<std::string> failures;

    [[nodiscard]] bool passed() const { return failures.empty(); }
};

/// identity, taylor, centroid, ledger, gradcheck.
const std::vector<std::string>& verify_suite_names();

/// Throws std::invalid_argument for an unknown suite name.
SuiteReport run_verify_suite(const std::string& name, const VerifyOptions& options);

/// Full command line (argv[0] is the program name). Returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const VerifyOptions& verify_options = {});

}  // namespace arith::cli
