#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "growlat/spring_law.hpp"

namespace growlat {

using IntVec = std::vector<int>;

/// Finite set of spring directions C in Z^D. No zero vector, no duplicates,
/// and never both v and -v.
class Connectivity {
public:
    Connectivity(int dimension, std::vector<IntVec> directions);

    int dimension() const { return dimension_; }
    std::size_t size() const { return directions_.size(); }
    const std::vector<IntVec>& directions() const { return directions_; }
    const IntVec& operator[](std::size_t k) const { return directions_[k]; }

    Eigen::VectorXd real(std::size_t k) const;
    /// Index of v or -v in the set, or -1.
    int find(const IntVec& v) const;

private:
    int dimension_;
    std::vector<IntVec> directions_;
};

/// {e1, e2, e1+e2, e1-e2}: the square lattice with next-nearest neighbours.
Connectivity square_connectivity();

/// Translation-invariant lattice: one rest length and one growth factor per
/// direction (index-aligned with the connectivity).
struct HomogeneousLattice {
    HomogeneousLattice(Connectivity c, std::vector<double> rest, std::vector<double> growth,
                       SpringLaw law);
    HomogeneousLattice(Connectivity c, std::vector<double> rest, SpringLaw law);

    Connectivity connectivity;
    std::vector<double> rest;
    std::vector<double> growth;
    SpringLaw law;

    std::size_t size() const { return rest.size(); }
};

/// Square lattice with rest lengths (axis, axis, diag, diag) and growth g.
HomogeneousLattice square_lattice(double axis_rest, double diag_rest, std::vector<double> growth,
                                  SpringLaw law = SpringLaw::recombination(2));

/// Returns the lattice with its growth factors multiplied componentwise.
HomogeneousLattice apply_growth(const HomogeneousLattice& lattice, std::span<const double> factors);

/// Minimal number of linearly independent classes partitioning C, with the
/// lexicographically smallest witness (class label per direction, labels in
/// first-occurrence order).
struct LatticeOrder {
    int order = 0;
    std::vector<int> labels;

    std::vector<std::vector<int>> classes() const;
};

LatticeOrder lattice_order(const Connectivity& c);

/// Exact rank of a set of integer vectors (fraction-free elimination).
int integer_rank(std::span<const IntVec> vectors, int dimension);

struct Interval {
    double lo = 1.0;
    double hi = 1.0;
};

struct RestSpec {
    enum class Kind { constant, uniform_random };

    Kind kind = Kind::constant;
    std::vector<double> values;      // constant: one per direction
    std::vector<Interval> intervals;  // uniform_random: one per direction
    std::uint64_t seed = 0;

    static RestSpec constant(std::vector<double> v) { return {Kind::constant, std::move(v), {}, 0}; }
    static RestSpec uniform(std::vector<Interval> iv, std::uint64_t seed) {
        return {Kind::uniform_random, {}, std::move(iv), seed};
    }
};

struct GrowthScenario {
    enum class Kind { homogeneous, checkerboard_diagonal, uniform_random };

    Kind kind = Kind::homogeneous;
    std::vector<double> factors;      // homogeneous: one per direction (empty = all 1)
    double high = 1.2;                // checkerboard: value on even cells
    std::vector<Interval> intervals;  // uniform_random: one per direction
    std::uint64_t seed = 0;

    static GrowthScenario none() { return {}; }
    static GrowthScenario homogeneous(std::vector<double> f) { return {Kind::homogeneous, std::move(f), 1.2, {}, 0}; }
    static GrowthScenario checkerboard(double high) { return {Kind::checkerboard_diagonal, {}, high, {}, 0}; }
    static GrowthScenario uniform(std::vector<Interval> iv, std::uint64_t seed) {
        return {Kind::uniform_random, {}, 1.2, std::move(iv), seed};
    }

    void validate(std::size_t directions) const;
};

struct Edge {
    int from;
    int to;
    int direction;
    double rest;
    double growth;
    /// Share of the spring counted in the per-cell energy (1/2 for each
    /// boundary face the spring lies in).
    double weight;
};

/// Node-spring system on Z^D_N = Z^D ∩ [0, N]^D. Node index is
/// sum_d x_d (N+1)^d.
class FiniteLatticeSample {
public:
    FiniteLatticeSample(Connectivity c, int n, std::vector<Edge> edges, SpringLaw law);

    const Connectivity& connectivity() const { return connectivity_; }
    int dimension() const { return connectivity_.dimension(); }
    int side() const { return n_; }
    int node_count() const { return node_count_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const SpringLaw& law() const { return law_; }

    IntVec node_coords(int node) const;
    int node_index(const IntVec& x) const;  // -1 when outside
    bool is_boundary(int node) const;
    /// N^D, the number of unit cells.
    double cell_count() const;

private:
    Connectivity connectivity_;
    int n_;
    int node_count_;
    std::vector<Edge> edges_;
    SpringLaw law_;
};

FiniteLatticeSample build_sample(const Connectivity& c, int n, const RestSpec& rest,
                                 const GrowthScenario& scenario,
                                 SpringLaw law = SpringLaw::recombination(2));

/// Homogeneous lattice restricted to Z^D_N.
FiniteLatticeSample build_sample(const HomogeneousLattice& lattice, int n);

}  // namespace growlat
