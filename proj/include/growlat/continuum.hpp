#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "growlat/execution.hpp"
#include "growlat/lattice.hpp"

namespace growlat {

using Matrix = Eigen::MatrixXd;

enum class MatrixForm { general, upper_triangular };

/// Deformation gradient F. The upper-triangular form (strictly positive
/// diagonal, zero below) is the gauge used for ground states and for the
/// sampled deformation domain.
class DeformationGradient {
public:
    explicit DeformationGradient(Matrix m, MatrixForm form = MatrixForm::general);

    /// [[l1, l3], [0, l2]]
    static DeformationGradient upper(double l1, double l3, double l2);

    const Matrix& matrix() const { return m_; }
    MatrixForm form() const { return form_; }
    int dimension() const { return static_cast<int>(m_.rows()); }
    double operator()(int i, int j) const { return m_(i, j); }

private:
    Matrix m_;
    MatrixForm form_;
};

/// sum_v g_v^p W(|F v| / (L_v g_v))
double cauchy_born_energy(const HomogeneousLattice& lattice, const Matrix& f);

/// Derivative of cauchy_born_energy with respect to the entries of F.
Matrix cauchy_born_gradient(const HomogeneousLattice& lattice, const Matrix& f);

/// F preserves the norm of every basis vector (columns of `basis`) and is not
/// a rotation. Throws std::invalid_argument for a degenerate basis.
bool is_shear(const Matrix& f, const Matrix& basis, double tol = 1e-10);

/// Columns: C followed by standard basis vectors added greedily in index
/// order until the set spans R^D.
Matrix extend_to_basis(const Connectivity& c, const std::vector<int>& subset);

/// Shear F_C of an order-1 connectivity: F_C v_1 = v_1, F_C v_i = R v_i on
/// the extended basis. Throws std::invalid_argument when the order exceeds 1
/// or D = 1.
Matrix shear_witness_order1(const Connectivity& c, double angle = 0.7853981633974483);

struct DecompositionPart {
    std::vector<int> directions;  // C_k as indices into the connectivity
    Matrix growth_tensor;         // G_k
};

/// Energy-deformation decomposition W_g(F) = sum_k W_k(F G_k^{-1}) with
/// W_k(F) = sum_{v in C_k} W(|F v| / L_v), independent of growth.
class Decomposition {
public:
    Decomposition(HomogeneousLattice initial, std::vector<DecompositionPart> parts);

    std::size_t size() const { return parts_.size(); }
    const std::vector<DecompositionPart>& parts() const { return parts_; }
    const DecompositionPart& operator[](std::size_t k) const { return parts_[k]; }
    /// Initial (ungrown) lattice supplying the W_k.
    const HomogeneousLattice& initial() const { return initial_; }

    double part_energy(std::size_t k, const Matrix& f) const;
    /// W_i(F) = sum_k W_k(F)
    double initial_energy(const Matrix& f) const;
    /// sum_k W_k(F G_k^{-1})
    double grown_energy(const Matrix& f) const;
    /// sum_k W_k(F Gbar_k^{-1}) for externally supplied tensors.
    double grown_energy(const Matrix& f, const std::vector<Matrix>& inverse_tensors) const;

    /// Labels (part index per direction).
    std::vector<int> labels() const;

private:
    HomogeneousLattice initial_;
    std::vector<DecompositionPart> parts_;
};

/// The three splittings of {e1, e2, e1+e2, e1-e2} into independent pairs:
/// 1 = {e1,e2}{e1±e2}, 2 = {e1,e1+e2}{e2,e1-e2}, 3 = {e1,e1-e2}{e2,e1+e2}.
std::vector<int> square_partition(int choice);

/// Builds G_k from the lattice growth on each class (basis extension as in
/// extend_to_basis). Uses the lattice_order witness when `labels` is empty.
/// Requires recombination (p = 0).
Decomposition decompose(const HomogeneousLattice& lattice, std::vector<int> labels = {});

struct Admissibility {
    bool admissible = false;
    /// Common factor g when admissible (G = g I).
    double factor = 0.0;
    Matrix growth_tensor;
    /// Name of the first violated dilation constraint, empty when admissible.
    std::string violated;
    double lhs = 0.0;
    double rhs = 0.0;
};

/// Tests whether square-lattice growth (g1, g2, g+, g-) admits a single
/// growth tensor, via the three necessary constraints
///   1/g1^2 + 1/g2^2 = 1/g+^2 + 1/g-^2
///   g1^2 + g2^2 = g+^2 + g-^2
///   (g1^2 + g2^2)(1/g+^2 + 1/g-^2) = 4
Admissibility multiplicative_admissible(std::array<double, 4> growth, double tol = 1e-10);

class SolveFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GroundStateOptions {
    int starts = 5;
    int max_iterations = 10000;
    double gradient_tolerance = 1e-10;
    /// Returned minimizers must satisfy this or SolveFailure is thrown.
    double acceptance_tolerance = 1e-8;
    double jitter = 0.05;
    std::uint64_t seed = 0x5eed;
};

struct GroundState {
    DeformationGradient gradient;
    double energy;
    double gradient_norm;
    int iterations;
};

/// Minimizes the Cauchy-Born energy over upper-triangular F with positive
/// diagonal (D = 2).
GroundState ground_state(const HomogeneousLattice& lattice, const GroundStateOptions& options = {});

/// Derivative of the energy in the (G11, G12, G22) chart.
Eigen::Vector3d ground_state_objective_gradient(const HomogeneousLattice& lattice, const Eigen::Vector3d& x);
double ground_state_objective(const HomogeneousLattice& lattice, const Eigen::Vector3d& x);

struct AxisRange {
    double lo;
    double hi;
    int count;

    double at(int i) const { return count == 1 ? lo : lo + (hi - lo) * i / (count - 1); }
};

/// Samples of F = [[l1, l3], [0, l2]].
struct ErrorGrid {
    AxisRange l1{0.8, 1.25, 46};
    AxisRange l2{0.8, 1.25, 46};
    AxisRange l3{-0.5, 0.5, 41};

    std::size_t size() const {
        return static_cast<std::size_t>(l1.count) * static_cast<std::size_t>(l2.count) * static_cast<std::size_t>(l3.count);
    }
};

struct ErrorMap {
    ErrorGrid grid;
    Matrix growth_tensor;             // G used for W_i(F G^{-1})
    std::vector<double> thresholds;
    /// Row-major over (l1, l2, l3), l3 fastest. NaN where W_g(F) = 0 (all
    /// grown springs at rest to 1e-12 in stretch).
    std::vector<double> values;
    /// masks[t][i]: |values[i]| > thresholds[t] (false where undefined).
    std::vector<std::vector<bool>> masks;

    std::array<double, 3> point(std::size_t i) const;
    /// Fraction of defined points whose |error| exceeds thresholds[t].
    double area_fraction(std::size_t t) const;
    std::size_t undefined_count() const;
};

/// W_i(F G^{-1}) / W_g(F) - 1 over the grid with G = ground_state(grown).
ErrorMap fractional_error_map(const HomogeneousLattice& initial, const HomogeneousLattice& grown,
                              const ErrorGrid& grid, std::vector<double> thresholds = {0.10, 0.20},
                              Execution exec = Execution::parallel);

/// Same, with a prescribed G.
ErrorMap fractional_error_map(const HomogeneousLattice& initial, const HomogeneousLattice& grown,
                              const Matrix& growth_tensor, const ErrorGrid& grid,
                              std::vector<double> thresholds, Execution exec);

enum class CorrectionRole {
    /// H = G_2^{-1}, H' = G_2 G_1^{-1}, W'(A, X) = W_1(A X) - W_1(A)
    second,
    /// H = G_1^{-1}, H' = G_1 G_2^{-1}, W'(A, X) = W_2(A X) - W_2(A)
    first,
};

struct Correction {
    Matrix h;
    Matrix h_prime;
    double correction;   // W'(F H, H')
    double initial_part; // W_i(F H)
    double grown;        // W_g(F) from the decomposition
    /// |W_g(F) - (W_i(FH) + W'(FH, H'))|
    double residual;
};

Correction correction_energy(const Decomposition& dec, const Matrix& f,
                             CorrectionRole role = CorrectionRole::second);

}  // namespace growlat
