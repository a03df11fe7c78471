#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "growlat/io.hpp"

namespace growlat {

/// Overrides from command-line flags; applied on top of the config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> n;
    std::optional<std::string> family;
    std::optional<int> q;
};

/// Defaults for `command` (error-map, simulate, oned, order, ground-state,
/// decompose, check) and its target (ex4.., sim1..), merged with the user's
/// JSON document and then the flag overrides. Unknown keys are rejected.
json resolve_config(const std::string& command, const std::string& target, const json& user,
                    const Overrides& overrides);

struct RunResult {
    json summary;
    std::vector<std::string> failures;
    bool ok() const { return failures.empty(); }
};

/// Square lattice of the ex4..ex7 targets (rest 1, 1, sqrt2, sqrt2).
HomogeneousLattice example_lattice(const std::string& name, int q = 2);

/// Dispatches on config["command"]; writes CSV/JSON into `out`.
RunResult run(const json& config, const std::filesystem::path& out);

RunResult run_error_map(const json& config, const std::filesystem::path& out);
RunResult run_simulation(const json& config, const std::filesystem::path& out);
RunResult run_oned(const json& config, const std::filesystem::path& out);
RunResult run_order(const json& config, const std::filesystem::path& out);
RunResult run_ground_state(const json& config, const std::filesystem::path& out);
RunResult run_decompose(const json& config, const std::filesystem::path& out);
RunResult run_checks(const json& config, const std::filesystem::path& out);

}  // namespace growlat
