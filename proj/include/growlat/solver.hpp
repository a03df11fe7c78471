#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "growlat/continuum.hpp"
#include "growlat/execution.hpp"
#include "growlat/lattice.hpp"

namespace growlat {

struct AffineBoundary {
    explicit AffineBoundary(Matrix f);
    Matrix f;
};

/// Node positions, node-major: node i occupies entries [D i, D i + D).
struct DisplacementField {
    int dimension = 0;
    Eigen::VectorXd positions;

    int node_count() const { return dimension == 0 ? 0 : static_cast<int>(positions.size()) / dimension; }
    Eigen::VectorXd point(int node) const { return positions.segment(static_cast<Eigen::Index>(node) * dimension, dimension); }
};

DisplacementField affine_field(const FiniteLatticeSample& s, const Matrix& f);

/// Flattened spring network with the per-node incidence (CSR) needed by the
/// parallel gather. Edge e contributes g^p W(|x_to - x_from| / (L g)).
class SpringSystem {
public:
    explicit SpringSystem(const FiniteLatticeSample& s);

    int dimension() const { return dim_; }
    int node_count() const { return nodes_; }
    std::size_t edge_count() const { return from_.size(); }

    /// Sum over edges, optionally with the boundary-face weights. Writes the
    /// gradient with respect to every node coordinate when `grad` is set.
    double energy(const double* x, double* grad, Execution exec, bool weighted = false) const;

    /// Hessian of the unweighted energy at x applied to v.
    void hessian_vector(const double* x, const double* v, double* out, Execution exec) const;

private:
    double serial(const double* x, double* grad, bool weighted) const;
    double parallel(const double* x, double* grad, bool weighted) const;
    // Per-edge (c, k) with H_e = c I + (k - c) d d^T / |d|^2.
    void edge_curvature(std::size_t e, double len, double& c, double& k) const;
    void gather(double* out) const;

    int dim_;
    int nodes_;
    SpringLaw law_;
    std::vector<int> from_, to_;
    std::vector<double> inv_len_;  // 1 / (L g)
    std::vector<double> scale_;    // g^p
    std::vector<double> weight_;
    // Incidence: for node i, entries [offset_[i], offset_[i+1]) hold signed
    // edge references (edge + 1 when i is `to`, -(edge + 1) when `from`).
    std::vector<int> offset_;
    std::vector<int> incident_;
    mutable std::vector<double> edge_energy_;
    mutable std::vector<double> edge_force_;
};

/// Sum of g^p W(|u(x+v) - u(x)| / (L g)) over all springs of the sample.
double total_energy(const FiniteLatticeSample& s, const DisplacementField& field,
                    Execution exec = Execution::parallel);

/// Weighted sum (boundary-face springs shared with neighbouring cells count
/// with their share) divided by N^D. Equals the Cauchy-Born density for
/// affine fields on homogeneous samples.
double per_cell_energy(const FiniteLatticeSample& s, const DisplacementField& field,
                       Execution exec = Execution::parallel);

struct SolveOptions {
    /// Convergence: |grad|_2 <= gradient_tolerance (1 + |E|).
    double gradient_tolerance = 1e-10;
    int max_iterations = 50000;
    int max_restarts = 4;
    int lbfgs_rank = 20;
    /// Newton-CG steps tried when the line search stalls above the tolerance.
    int newton_steps = 10;
    Execution exec = Execution::parallel;
};

struct SolveReport {
    double per_cell_energy = 0.0;
    double total_energy = 0.0;
    DisplacementField field;
    int iterations = 0;
    int restarts = 0;
    double gradient_norm = 0.0;
    bool converged = false;
    std::string message;
};

/// Minimizes over interior nodes with the boundary pinned to F x. Starts from
/// the affine field unless `start` is given.
SolveReport minimize(const FiniteLatticeSample& s, const AffineBoundary& bc, const SolveOptions& opts = {},
                     const DisplacementField* start = nullptr);

/// Growth profile on [0, 1]: cumulative g (increasing) and its density G = g'.
struct GrowthProfile {
    std::function<double(double)> cumulative;
    std::function<double(double)> density;
};

/// 1-D chain Z_N with rest L and edge growth N (g(j/N) - g((j-1)/N)).
FiniteLatticeSample chain_sample(const GrowthProfile& g, double rest, const SpringLaw& law, int n);

/// Per-cell energy of the chain with u_0 = 0, u_N = F N.
SolveReport minimize_chain(const FiniteLatticeSample& chain, double f, const SolveOptions& opts = {});

/// min over u of int_0^1 G^p W(Du / (L G)) with u(0) = 0, u(1) = F, for
/// power-law profiles (closed form from the Euler-Lagrange equation).
double one_d_continuum_energy(const GrowthProfile& g, double rest, const SpringLaw& law, double f);

}  // namespace growlat
