#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "growlat/continuum.hpp"
#include "growlat/execution.hpp"
#include "growlat/lattice.hpp"
#include "growlat/solver.hpp"

namespace growlat {

enum class FamilyKind { horizontal, vertical, dilational, shear, box };

/// h: diag(l, 1), v: diag(1, l), d: l I for l in [1/L, L];
/// s: [[1, l], [0, 1]] for l in [-Ls, Ls]; box: [[l1, l3], [0, l2]] with
/// l1, l2 in [1/Ld, Ld] and l3 in [-Ls, Ls].
struct DeformationFamily {
    FamilyKind kind = FamilyKind::dilational;
    double stretch = 1.25;  // Lambda for h, v, d and the box diagonal
    double shear = 0.5;     // Lambda_s
    int samples = 60;       // per axis for box

    void validate() const;
    /// Parameter interval of the one-parameter families.
    std::pair<double, double> range() const;
};

FamilyKind parse_family(const std::string& s);
std::string family_name(FamilyKind k);

struct FamilySample {
    Matrix f;
    std::vector<double> params;  // l (or l1, l2, l3 for box)
};

std::vector<FamilySample> sample_family(const DeformationFamily& family);

/// Per-cell minimal energies, one discrete solve per F. Samples run in
/// parallel (`exec`); each inner solve uses the serial kernels then.
/// Throws SolveFailure naming the failing sample.
std::vector<SolveReport> solve_targets(const FiniteLatticeSample& s, std::span<const FamilySample> fs,
                                       const SolveOptions& opts, Execution exec = Execution::parallel);

struct SearchOptions {
    double lo = 0.5;
    double hi = 1.5;
    /// Grid steps of the successive levels; level k > 0 scans a window of
    /// +-2 previous steps around the incumbent.
    std::vector<double> steps = {0.01, 0.0025, 0.0005};
    Execution exec = Execution::parallel;
};

struct SearchResult {
    std::vector<double> x;
    double value;
    std::size_t evaluations;
};

/// Deterministic nested grid search. Ties go to the lowest grid index, so the
/// serial and parallel scans return identical results.
SearchResult grid_search(const std::function<double(std::span<const double>)>& objective, int dims,
                         const SearchOptions& opts);

enum class TensorForm { isotropic, diagonal, rotated_diagonal };

/// Form of each Gbar_k; rotated_diagonal is R_{pi/4} diag(a, b) R_{pi/4}^T.
struct GrowthAnsatz {
    std::vector<TensorForm> forms = {TensorForm::isotropic, TensorForm::isotropic};
    SearchOptions search;

    int parameter_count() const;
    std::vector<std::string> parameter_names() const;
    /// Gbar_k from the flat parameter vector.
    std::vector<Matrix> tensors(std::span<const double> params) const;
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> values;
    double relative_mse = 0.0;
    /// (model - target) / target per retained sample.
    std::vector<double> errors;
    double max_abs_error = 0.0;
    std::vector<double> targets;
    std::vector<double> model;
    /// Indices (into the input samples) of retained / zero-target samples.
    std::vector<std::size_t> retained;
    std::vector<std::size_t> excluded;

    double value(const std::string& name) const;
};

struct TargetSample {
    Matrix f;
    double energy;
};

std::vector<TargetSample> make_targets(std::span<const FamilySample> fs, std::span<const SolveReport> reports);

/// Fits Gbar_k so that sum_k W_k(F Gbar_k^{-1}) matches the targets in
/// relative mean square error. W_k come from decompose(initial, labels).
FitResult fit_growth(const HomogeneousLattice& initial, std::span<const TargetSample> targets,
                     const GrowthAnsatz& ansatz, std::vector<int> labels = square_partition(1));

/// Direction groups sharing one fitted rest length (scale of the nominal
/// rest). Directions in no group keep their nominal rest.
struct RestGroups {
    std::vector<std::vector<int>> groups;
    std::vector<std::string> names;

    /// {e1, e2} and {e1+e2, e1-e2} tied.
    static RestGroups square_tied();
};

FitResult fit_rest_lengths(const HomogeneousLattice& nominal, std::span<const TargetSample> targets,
                           const RestGroups& groups, const SearchOptions& search = {});

/// Relative mse and per-sample errors of a model against targets; throws when
/// every target is zero.
FitResult evaluate_fit(std::span<const TargetSample> targets,
                       const std::function<double(const Matrix&)>& model);

struct StudyRow {
    int n;
    FitResult fit;
    std::vector<SolveReport> solves;
};

struct StudyResult {
    std::vector<StudyRow> rows;
    /// Max parameter change between the two largest N.
    double drift = 0.0;
    bool drift_ok = true;
    /// mse increased from one N to the next.
    bool error_increase = false;
};

/// build_sample -> minimize -> fit_growth for each N (increasing).
StudyResult convergence_study(const std::function<FiniteLatticeSample(int)>& build, std::span<const int> ns,
                              const DeformationFamily& family, const HomogeneousLattice& initial,
                              const GrowthAnsatz& ansatz, const SolveOptions& solve, double max_drift = 0.01,
                              Execution exec = Execution::parallel);

}  // namespace growlat
