#include "growlat/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "growlat/rng.hpp"

namespace growlat {

Connectivity::Connectivity(int dimension, std::vector<IntVec> directions)
    : dimension_(dimension), directions_(std::move(directions)) {
    if (dimension_ < 1 || dimension_ > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
    if (directions_.empty()) throw std::invalid_argument("connectivity is empty");
    for (std::size_t k = 0; k < directions_.size(); ++k) {
        const IntVec& v = directions_[k];
        if (static_cast<int>(v.size()) != dimension_)
            throw std::invalid_argument("direction has wrong dimension");
        if (std::all_of(v.begin(), v.end(), [](int a) { return a == 0; }))
            throw std::invalid_argument("zero direction in connectivity");
        for (std::size_t j = 0; j < k; ++j) {
            const IntVec& w = directions_[j];
            bool same = true, opposite = true;
            for (int d = 0; d < dimension_; ++d) {
                same = same && v[d] == w[d];
                opposite = opposite && v[d] == -w[d];
            }
            if (same) throw std::invalid_argument("duplicate direction in connectivity");
            if (opposite) throw std::invalid_argument("connectivity contains both v and -v");
        }
    }
}

Eigen::VectorXd Connectivity::real(std::size_t k) const {
    Eigen::VectorXd v(dimension_);
    for (int d = 0; d < dimension_; ++d) v[d] = directions_[k][d];
    return v;
}

int Connectivity::find(const IntVec& v) const {
    for (std::size_t k = 0; k < directions_.size(); ++k) {
        bool same = true, opposite = true;
        for (int d = 0; d < dimension_; ++d) {
            same = same && directions_[k][d] == v[d];
            opposite = opposite && directions_[k][d] == -v[d];
        }
        if (same || opposite) return static_cast<int>(k);
    }
    return -1;
}

Connectivity square_connectivity() { return Connectivity(2, {{1, 0}, {0, 1}, {1, 1}, {1, -1}}); }

namespace {

void require_positive(std::span<const double> values, const char* what) {
    for (double x : values)
        if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument(std::string(what) + " must be positive");
}

}  // namespace

HomogeneousLattice::HomogeneousLattice(Connectivity c, std::vector<double> r, std::vector<double> g,
                                       SpringLaw l)
    : connectivity(std::move(c)), rest(std::move(r)), growth(std::move(g)), law(std::move(l)) {
    if (rest.size() != connectivity.size()) throw std::invalid_argument("one rest length per direction required");
    if (growth.empty()) growth.assign(rest.size(), 1.0);
    if (growth.size() != connectivity.size()) throw std::invalid_argument("one growth factor per direction required");
    require_positive(rest, "rest lengths");
    require_positive(growth, "growth factors");
}

HomogeneousLattice::HomogeneousLattice(Connectivity c, std::vector<double> r, SpringLaw l)
    : HomogeneousLattice(std::move(c), std::move(r), {}, std::move(l)) {}

HomogeneousLattice square_lattice(double axis_rest, double diag_rest, std::vector<double> growth,
                                  SpringLaw law) {
    return HomogeneousLattice(square_connectivity(), {axis_rest, axis_rest, diag_rest, diag_rest},
                              std::move(growth), std::move(law));
}

HomogeneousLattice apply_growth(const HomogeneousLattice& lattice, std::span<const double> factors) {
    if (factors.size() != lattice.size()) throw std::invalid_argument("one factor per direction required");
    require_positive(factors, "growth factors");
    HomogeneousLattice out = lattice;
    for (std::size_t k = 0; k < factors.size(); ++k) out.growth[k] *= factors[k];
    return out;
}

int integer_rank(std::span<const IntVec> vectors, int dimension) {
    std::vector<std::vector<long long>> m;
    m.reserve(vectors.size());
    for (const IntVec& v : vectors) m.emplace_back(v.begin(), v.end());
    const int rows = static_cast<int>(m.size());
    int rank = 0;
    for (int col = 0; col < dimension && rank < rows; ++col) {
        int pivot = -1;
        for (int r = rank; r < rows; ++r)
            if (m[r][col] != 0) {
                pivot = r;
                break;
            }
        if (pivot < 0) continue;
        std::swap(m[rank], m[pivot]);
        for (int r = rank + 1; r < rows; ++r) {
            if (m[r][col] == 0) continue;
            const long long a = m[rank][col], b = m[r][col];
            long long g = 0;
            for (int j = 0; j < dimension; ++j) {
                m[r][j] = a * m[r][j] - b * m[rank][j];
                g = std::gcd(g, std::abs(m[r][j]));
            }
            if (g > 1)
                for (int j = 0; j < dimension; ++j) m[r][j] /= g;
        }
        ++rank;
    }
    return rank;
}

std::vector<std::vector<int>> LatticeOrder::classes() const {
    std::vector<std::vector<int>> out(order);
    for (std::size_t k = 0; k < labels.size(); ++k) out[labels[k]].push_back(static_cast<int>(k));
    return out;
}

namespace {

// Depth-first search over restricted growth strings in lexicographic order;
// a direction may join a class only if the class stays independent.
bool assign(const Connectivity& c, int k, int max_classes, std::vector<int>& labels,
            std::vector<std::vector<IntVec>>& members) {
    const int n = static_cast<int>(c.size());
    if (k == n) return true;
    const int used = static_cast<int>(members.size());
    // Remaining directions must fit into the free slots.
    int free_slots = (max_classes - used) * c.dimension();
    for (const auto& m : members) free_slots += c.dimension() - static_cast<int>(m.size());
    if (free_slots < n - k) return false;

    for (int label = 0; label <= used && label < max_classes; ++label) {
        if (label == used) members.emplace_back();
        members[label].push_back(c[k]);
        if (integer_rank(members[label], c.dimension()) == static_cast<int>(members[label].size())) {
            labels[k] = label;
            if (assign(c, k + 1, max_classes, labels, members)) return true;
        }
        // Recursion may reallocate `members`; index again.
        members[label].pop_back();
        if (label == used) members.pop_back();
    }
    return false;
}

}  // namespace

LatticeOrder lattice_order(const Connectivity& c) {
    const int n = static_cast<int>(c.size());
    const int lower = (n + c.dimension() - 1) / c.dimension();
    for (int k = lower; k <= n; ++k) {
        std::vector<int> labels(n, 0);
        std::vector<std::vector<IntVec>> members;
        if (assign(c, 0, k, labels, members)) return {static_cast<int>(members.size()), labels};
    }
    // Unreachable: singletons are always independent.
    throw std::logic_error("lattice order search failed");
}

void GrowthScenario::validate(std::size_t directions) const {
    switch (kind) {
        case Kind::homogeneous:
            if (!factors.empty() && factors.size() != directions)
                throw std::invalid_argument("homogeneous growth needs one factor per direction");
            require_positive(factors, "growth factors");
            break;
        case Kind::checkerboard_diagonal:
            if (!(high > 0.0) || !(high * high < 2.0))
                throw std::invalid_argument("checkerboard value h must satisfy 0 < h and h^2 < 2");
            break;
        case Kind::uniform_random:
            if (intervals.size() != directions) throw std::invalid_argument("one growth interval per direction required");
            for (const Interval& iv : intervals)
                if (!(iv.lo > 0.0) || !(iv.hi >= iv.lo)) throw std::invalid_argument("growth interval must lie in (0, inf)");
            break;
    }
}

FiniteLatticeSample::FiniteLatticeSample(Connectivity c, int n, std::vector<Edge> edges, SpringLaw law)
    : connectivity_(std::move(c)), n_(n), edges_(std::move(edges)), law_(std::move(law)) {
    if (n_ < 1) throw std::invalid_argument("side count must be positive");
    node_count_ = 1;
    for (int d = 0; d < connectivity_.dimension(); ++d) node_count_ *= n_ + 1;
    for (const Edge& e : edges_) {
        if (!(e.rest > 0.0) || !(e.growth > 0.0)) throw std::invalid_argument("edge rest/growth must be positive");
        if (e.from < 0 || e.to < 0 || e.from >= node_count_ || e.to >= node_count_)
            throw std::invalid_argument("edge endpoint outside sample");
    }
}

IntVec FiniteLatticeSample::node_coords(int node) const {
    IntVec x(dimension());
    for (int d = 0; d < dimension(); ++d) {
        x[d] = node % (n_ + 1);
        node /= n_ + 1;
    }
    return x;
}

int FiniteLatticeSample::node_index(const IntVec& x) const {
    int idx = 0, stride = 1;
    for (int d = 0; d < dimension(); ++d) {
        if (x[d] < 0 || x[d] > n_) return -1;
        idx += x[d] * stride;
        stride *= n_ + 1;
    }
    return idx;
}

bool FiniteLatticeSample::is_boundary(int node) const {
    for (int d = 0; d < dimension(); ++d) {
        const int xd = node % (n_ + 1);
        if (xd == 0 || xd == n_) return true;
        node /= n_ + 1;
    }
    return false;
}

double FiniteLatticeSample::cell_count() const { return std::pow(static_cast<double>(n_), dimension()); }

namespace {

struct DiagonalPair {
    int plus = -1;
    int minus = -1;
};

DiagonalPair find_diagonals(const Connectivity& c) {
    if (c.dimension() != 2) throw std::invalid_argument("checkerboard growth needs a two-dimensional lattice");
    DiagonalPair p{c.find({1, 1}), c.find({1, -1})};
    if (p.plus < 0 || p.minus < 0) throw std::invalid_argument("checkerboard growth needs both diagonals");
    return p;
}

}  // namespace

FiniteLatticeSample build_sample(const Connectivity& c, int n, const RestSpec& rest,
                                 const GrowthScenario& scenario, SpringLaw law) {
    if (n < 2) throw std::invalid_argument("side count N must be >= 2");
    const std::size_t nd = c.size();
    scenario.validate(nd);
    if (rest.kind == RestSpec::Kind::constant) {
        if (rest.values.size() != nd) throw std::invalid_argument("one rest length per direction required");
        require_positive(rest.values, "rest lengths");
    } else {
        if (rest.intervals.size() != nd) throw std::invalid_argument("one rest interval per direction required");
        for (const Interval& iv : rest.intervals)
            if (!(iv.lo > 0.0) || !(iv.hi >= iv.lo)) throw std::invalid_argument("rest interval must lie in (0, inf)");
    }

    std::vector<RandomStream> rest_streams, growth_streams;
    for (std::size_t k = 0; k < nd; ++k) {
        rest_streams.emplace_back(rest.seed, StreamSalt::rest, k);
        growth_streams.emplace_back(scenario.seed, StreamSalt::growth, k);
    }
    DiagonalPair diag;
    double low = 0.0;
    if (scenario.kind == GrowthScenario::Kind::checkerboard_diagonal) {
        diag = find_diagonals(c);
        low = std::sqrt(2.0 - scenario.high * scenario.high);
    }

    const int dim = c.dimension();
    int nodes = 1;
    for (int d = 0; d < dim; ++d) nodes *= n + 1;

    std::vector<Edge> edges;
    IntVec x(dim), y(dim);
    for (int node = 0; node < nodes; ++node) {
        int rem = node;
        for (int d = 0; d < dim; ++d) {
            x[d] = rem % (n + 1);
            rem /= n + 1;
        }
        for (std::size_t k = 0; k < nd; ++k) {
            bool inside = true;
            int to = 0, stride = 1;
            for (int d = 0; d < dim; ++d) {
                y[d] = x[d] + c[k][d];
                inside = inside && y[d] >= 0 && y[d] <= n;
                to += y[d] * stride;
                stride *= n + 1;
            }
            if (!inside) continue;

            Edge e{node, to, static_cast<int>(k), 1.0, 1.0, 1.0};
            for (int d = 0; d < dim; ++d)
                if (c[k][d] == 0 && (x[d] == 0 || x[d] == n)) e.weight *= 0.5;

            e.rest = rest.kind == RestSpec::Kind::constant
                         ? rest.values[k]
                         : rest_streams[k].uniform(rest.intervals[k].lo, rest.intervals[k].hi);

            switch (scenario.kind) {
                case GrowthScenario::Kind::homogeneous:
                    e.growth = scenario.factors.empty() ? 1.0 : scenario.factors[k];
                    break;
                case GrowthScenario::Kind::uniform_random:
                    e.growth = growth_streams[k].uniform(scenario.intervals[k].lo, scenario.intervals[k].hi);
                    break;
                case GrowthScenario::Kind::checkerboard_diagonal: {
                    const int kk = static_cast<int>(k);
                    if (kk != diag.plus && kk != diag.minus) break;
                    // Cell indexed by its lower-left node; even parity carries h
                    // on the (1,1) diagonal and the partner sqrt(2 - h^2) on (1,-1).
                    const int ci = std::min(x[0], y[0]);
                    const int cj = std::min(x[1], y[1]);
                    const double g_plus = (ci + cj) % 2 == 0 ? scenario.high : low;
                    e.growth = kk == diag.plus ? g_plus : std::sqrt(2.0 - g_plus * g_plus);
                    break;
                }
            }
            edges.push_back(e);
        }
    }
    return FiniteLatticeSample(c, n, std::move(edges), std::move(law));
}

FiniteLatticeSample build_sample(const HomogeneousLattice& lattice, int n) {
    return build_sample(lattice.connectivity, n, RestSpec::constant(lattice.rest),
                        GrowthScenario::homogeneous(lattice.growth), lattice.law);
}

}  // namespace growlat
