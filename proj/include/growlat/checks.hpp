#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace growlat {

struct CheckLine {
    std::string name;
    bool passed;
    double worst;      // largest residual observed
    double tolerance;
    std::string detail;
};

struct CheckOptions {
    std::uint64_t seed = 1;
    /// Adds 1e-3 to an off-diagonal entry of G_2 before the decomposition
    /// check (negative control).
    bool perturb = false;
    int decomposition_trials = 1000;
    int admissibility_trials = 10000;
};

/// Analytic identity suites: decomposition exactness, shear-family vanishing,
/// dilation-only admissibility, order-1 witnesses and the order-1 exact
/// multiplicative decomposition.
std::vector<CheckLine> run_identity_checks(const CheckOptions& opts = {});

}  // namespace growlat
