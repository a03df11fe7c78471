#include "growlat/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include "growlat/rng.hpp"

namespace growlat {

DeformationGradient::DeformationGradient(Matrix m, MatrixForm form) : m_(std::move(m)), form_(form) {
    if (m_.rows() != m_.cols() || m_.rows() < 1 || m_.rows() > 3)
        throw std::invalid_argument("deformation gradient must be square with 1 <= D <= 3");
    if (!m_.allFinite()) throw std::invalid_argument("deformation gradient has non-finite entries");
    if (form_ == MatrixForm::upper_triangular) {
        for (Eigen::Index i = 0; i < m_.rows(); ++i) {
            if (!(m_(i, i) > 0.0)) throw std::invalid_argument("upper-triangular form needs a positive diagonal");
            for (Eigen::Index j = 0; j < i; ++j)
                if (m_(i, j) != 0.0) throw std::invalid_argument("upper-triangular form has entries below the diagonal");
        }
    }
}

DeformationGradient DeformationGradient::upper(double l1, double l3, double l2) {
    Matrix m(2, 2);
    m << l1, l3, 0.0, l2;
    return DeformationGradient(std::move(m), MatrixForm::upper_triangular);
}

namespace {

void check_dims(const HomogeneousLattice& l, const Matrix& f) {
    const int d = l.connectivity.dimension();
    if (f.rows() != d || f.cols() != d) throw std::invalid_argument("F does not match the lattice dimension");
}

// Basis vectors as columns; throws if they do not span.
void require_basis(const Matrix& basis) {
    if (basis.rows() != basis.cols() || basis.rows() == 0) throw std::invalid_argument("basis must be D vectors in R^D");
    Eigen::FullPivLU<Matrix> lu(basis);
    lu.setThreshold(1e-12);
    if (lu.rank() != basis.rows()) throw std::invalid_argument("degenerate basis");
}

Matrix rotation2(double a) {
    Matrix r(2, 2);
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
}

Matrix rotation3(int axis, double a) {
    Matrix r = Matrix::Identity(3, 3);
    const int i = (axis + 1) % 3, j = (axis + 2) % 3;
    r(i, i) = std::cos(a);
    r(i, j) = -std::sin(a);
    r(j, i) = std::sin(a);
    r(j, j) = std::cos(a);
    return r;
}

}  // namespace

double cauchy_born_energy(const HomogeneousLattice& l, const Matrix& f) {
    check_dims(l, f);
    double e = 0.0;
    for (std::size_t k = 0; k < l.size(); ++k) {
        const double len = (f * l.connectivity.real(k)).norm();
        e += GrownDensity(l.law, l.growth[k])(len / l.rest[k]);
    }
    return e;
}

Matrix cauchy_born_gradient(const HomogeneousLattice& l, const Matrix& f) {
    check_dims(l, f);
    Matrix g = Matrix::Zero(f.rows(), f.cols());
    for (std::size_t k = 0; k < l.size(); ++k) {
        const Eigen::VectorXd v = l.connectivity.real(k);
        const Eigen::VectorXd fv = f * v;
        const double len = fv.norm();
        if (len == 0.0) continue;  // subgradient 0 for the symmetric profiles used here
        const double dw = GrownDensity(l.law, l.growth[k]).derivative(len / l.rest[k]) / l.rest[k];
        g += (dw / len) * fv * v.transpose();
    }
    return g;
}

bool is_shear(const Matrix& f, const Matrix& basis, double tol) {
    require_basis(basis);
    if (f.rows() != basis.rows() || f.cols() != basis.rows()) throw std::invalid_argument("F does not match the basis");
    for (Eigen::Index i = 0; i < basis.cols(); ++i) {
        const Eigen::VectorXd v = basis.col(i);
        if (std::abs((f * v).norm() - v.norm()) > tol) return false;
    }
    const Matrix gram = f.transpose() * f - Matrix::Identity(f.rows(), f.cols());
    return gram.norm() > tol || f.determinant() < 0.0;
}

Matrix extend_to_basis(const Connectivity& c, const std::vector<int>& subset) {
    const int d = c.dimension();
    std::vector<IntVec> vs;
    for (int k : subset) {
        if (k < 0 || static_cast<std::size_t>(k) >= c.size()) throw std::invalid_argument("direction index out of range");
        vs.push_back(c[k]);
    }
    if (integer_rank(vs, d) != static_cast<int>(vs.size()))
        throw std::invalid_argument("direction class is not linearly independent");
    for (int i = 0; i < d && static_cast<int>(vs.size()) < d; ++i) {
        IntVec e(d, 0);
        e[i] = 1;
        vs.push_back(e);
        if (integer_rank(vs, d) != static_cast<int>(vs.size())) vs.pop_back();
    }
    Matrix b(d, d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) b(i, j) = vs[j][i];
    return b;
}

Matrix shear_witness_order1(const Connectivity& c, double angle) {
    const int d = c.dimension();
    if (d == 1) throw std::invalid_argument("no shears exist in one dimension");
    if (lattice_order(c).order != 1) throw std::invalid_argument("shear witness requires a lattice of order 1");
    std::vector<int> all(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) all[k] = static_cast<int>(k);
    const Matrix b = extend_to_basis(c, all);
    const Matrix binv = b.inverse();

    std::vector<Matrix> candidates;
    if (d == 2) {
        candidates.push_back(rotation2(angle));
    } else {
        for (int axis = 0; axis < 3; ++axis) candidates.push_back(rotation3(axis, angle));
    }
    for (const Matrix& r : candidates) {
        Matrix img = b;
        for (int j = 1; j < d; ++j) img.col(j) = r * b.col(j);
        Matrix f = img * binv;
        if (is_shear(f, b)) return f;
    }
    throw std::runtime_error("no rotation candidate produced a shear");
}

Decomposition::Decomposition(HomogeneousLattice initial, std::vector<DecompositionPart> parts)
    : initial_(std::move(initial)), parts_(std::move(parts)) {
    std::vector<int> seen(initial_.size(), 0);
    for (const auto& p : parts_) {
        if (p.directions.empty()) throw std::invalid_argument("empty decomposition class");
        for (int k : p.directions) {
            if (k < 0 || static_cast<std::size_t>(k) >= initial_.size()) throw std::invalid_argument("direction index out of range");
            ++seen[k];
        }
        const int d = initial_.connectivity.dimension();
        if (p.growth_tensor.rows() != d || p.growth_tensor.cols() != d) throw std::invalid_argument("growth tensor has wrong shape");
    }
    for (int s : seen)
        if (s != 1) throw std::invalid_argument("classes must partition the connectivity");
}

double Decomposition::part_energy(std::size_t k, const Matrix& f) const {
    check_dims(initial_, f);
    double e = 0.0;
    for (int i : parts_.at(k).directions) {
        const double len = (f * initial_.connectivity.real(i)).norm();
        e += profile_energy(initial_.law, len / initial_.rest[i]);
    }
    return e;
}

double Decomposition::initial_energy(const Matrix& f) const {
    double e = 0.0;
    for (std::size_t k = 0; k < parts_.size(); ++k) e += part_energy(k, f);
    return e;
}

double Decomposition::grown_energy(const Matrix& f) const {
    double e = 0.0;
    for (std::size_t k = 0; k < parts_.size(); ++k) e += part_energy(k, f * parts_[k].growth_tensor.inverse());
    return e;
}

double Decomposition::grown_energy(const Matrix& f, const std::vector<Matrix>& inverse_tensors) const {
    if (inverse_tensors.size() != parts_.size()) throw std::invalid_argument("one tensor per part expected");
    double e = 0.0;
    for (std::size_t k = 0; k < parts_.size(); ++k) e += part_energy(k, f * inverse_tensors[k]);
    return e;
}

std::vector<int> Decomposition::labels() const {
    std::vector<int> out(initial_.size(), -1);
    for (std::size_t k = 0; k < parts_.size(); ++k)
        for (int i : parts_[k].directions) out[i] = static_cast<int>(k);
    return out;
}

std::vector<int> square_partition(int choice) {
    switch (choice) {
        case 1: return {0, 0, 1, 1};
        case 2: return {0, 1, 0, 1};
        case 3: return {0, 1, 1, 0};
        default: throw std::invalid_argument("square partition choice must be 1, 2 or 3");
    }
}

Decomposition decompose(const HomogeneousLattice& lattice, std::vector<int> labels) {
    if (lattice.law.homogeneity != 0.0)
        throw std::domain_error("growth-independent part energies need recombination (p = 0)");
    const Connectivity& c = lattice.connectivity;
    if (labels.empty()) labels = lattice_order(c).labels;
    if (labels.size() != c.size()) throw std::invalid_argument("partition must label every direction");
    const int k_max = *std::max_element(labels.begin(), labels.end());
    if (*std::min_element(labels.begin(), labels.end()) < 0) throw std::invalid_argument("negative class label");
    std::vector<std::vector<int>> classes(k_max + 1);
    for (std::size_t i = 0; i < labels.size(); ++i) classes[labels[i]].push_back(static_cast<int>(i));

    HomogeneousLattice initial(c, lattice.rest, lattice.law);
    std::vector<DecompositionPart> parts;
    for (auto& cls : classes) {
        if (cls.empty()) throw std::invalid_argument("partition labels must be contiguous");
        const Matrix b = extend_to_basis(c, cls);  // throws if dependent
        Eigen::VectorXd diag = Eigen::VectorXd::Ones(c.dimension());
        for (std::size_t j = 0; j < cls.size(); ++j) diag[static_cast<Eigen::Index>(j)] = lattice.growth[cls[j]];
        Matrix g = b * diag.asDiagonal() * b.inverse();
        parts.push_back({cls, std::move(g)});
    }
    return Decomposition(std::move(initial), std::move(parts));
}

Admissibility multiplicative_admissible(std::array<double, 4> g, double tol) {
    for (double x : g)
        if (!(x > 0.0)) throw std::invalid_argument("growth factors must be positive");
    const double g1 = g[0], g2 = g[1], gp = g[2], gm = g[3];
    auto inv2 = [](double x) { return 1.0 / (x * x); };

    Admissibility r;
    struct Check {
        const char* name;
        double lhs, rhs;
    };
    const Check checks[] = {
        {"reciprocal-square sum", inv2(g1) + inv2(g2), inv2(gp) + inv2(gm)},
        {"square sum", g1 * g1 + g2 * g2, gp * gp + gm * gm},
        {"product of sums", (g1 * g1 + g2 * g2) * (inv2(gp) + inv2(gm)), 4.0},
    };
    for (const auto& ch : checks) {
        if (std::abs(ch.lhs - ch.rhs) > tol) {
            r.violated = ch.name;
            r.lhs = ch.lhs;
            r.rhs = ch.rhs;
            return r;
        }
    }
    // The constraints force equality in exact arithmetic; confirm it directly.
    const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
    if (*hi - *lo > tol) {
        r.violated = "equal growth";
        r.lhs = *lo;
        r.rhs = *hi;
        return r;
    }
    r.admissible = true;
    r.factor = g1;
    r.growth_tensor = g1 * Matrix::Identity(2, 2);
    return r;
}

namespace {

Matrix chart(const Eigen::Vector3d& x) {
    Matrix f(2, 2);
    f << x[0], x[1], 0.0, x[2];
    return f;
}

class GroundStateCost : public ceres::FirstOrderFunction {
public:
    explicit GroundStateCost(const HomogeneousLattice& l) : l_(l) {}

    bool Evaluate(const double* p, double* cost, double* grad) const override {
        const Eigen::Vector3d x(p[0], p[1], p[2]);
        *cost = ground_state_objective(l_, x);
        if (!std::isfinite(*cost)) return false;
        if (grad) {
            const Eigen::Vector3d g = ground_state_objective_gradient(l_, x);
            for (int i = 0; i < 3; ++i) grad[i] = g[i];
        }
        return true;
    }

    int NumParameters() const override { return 3; }

private:
    const HomogeneousLattice& l_;
};

}  // namespace

double ground_state_objective(const HomogeneousLattice& l, const Eigen::Vector3d& x) {
    return cauchy_born_energy(l, chart(x));
}

Eigen::Vector3d ground_state_objective_gradient(const HomogeneousLattice& l, const Eigen::Vector3d& x) {
    const Matrix g = cauchy_born_gradient(l, chart(x));
    return {g(0, 0), g(0, 1), g(1, 1)};
}

GroundState ground_state(const HomogeneousLattice& l, const GroundStateOptions& opt) {
    if (l.connectivity.dimension() != 2) throw std::invalid_argument("ground_state is implemented for D = 2");
    if (opt.starts < 1) throw std::invalid_argument("need at least one start");

    ceres::GradientProblemSolver::Options so;
    so.line_search_direction_type = ceres::LBFGS;
    so.max_num_iterations = opt.max_iterations;
    so.gradient_tolerance = opt.gradient_tolerance;
    so.function_tolerance = 0.0;
    so.parameter_tolerance = 0.0;
    so.logging_type = ceres::SILENT;

    ceres::GradientProblem problem(new GroundStateCost(l));
    RandomStream rng(opt.seed, StreamSalt::jitter, 0);

    double best_e = std::numeric_limits<double>::infinity();
    Eigen::Vector3d best = Eigen::Vector3d::Zero();
    int iterations = 0;
    for (int s = 0; s < opt.starts; ++s) {
        double x[3] = {1.0, 0.0, 1.0};
        if (s > 0)
            for (double& xi : x) xi += rng.uniform(-opt.jitter, opt.jitter);
        ceres::GradientProblemSolver::Summary summary;
        ceres::Solve(so, problem, x, &summary);
        iterations += static_cast<int>(summary.iterations.size());
        const Eigen::Vector3d xv(x[0], x[1], x[2]);
        const double e = ground_state_objective(l, xv);
        if (std::isfinite(e) && e < best_e) {
            best_e = e;
            best = xv;
        }
    }
    if (!std::isfinite(best_e)) throw SolveFailure("ground state: every start failed");

    // Newton polish with a finite-difference Hessian of the analytic
    // gradient; L-BFGS alone stalls near 1e-9 on some flat minima.
    for (int it = 0; it < 20; ++it) {
        const Eigen::Vector3d g = ground_state_objective_gradient(l, best);
        if (g.norm() <= opt.gradient_tolerance) break;
        Eigen::Matrix3d h;
        const double step = 1e-6;
        for (int j = 0; j < 3; ++j) {
            Eigen::Vector3d xp = best, xm = best;
            xp[j] += step;
            xm[j] -= step;
            h.col(j) = (ground_state_objective_gradient(l, xp) - ground_state_objective_gradient(l, xm)) / (2 * step);
        }
        h = 0.5 * (h + h.transpose()).eval();
        const Eigen::Vector3d trial = best - h.ldlt().solve(g);
        const double e = ground_state_objective(l, trial);
        if (!trial.allFinite() || !(e <= best_e + 1e-14 * (1.0 + std::abs(best_e))) || !(ground_state_objective_gradient(l, trial).norm() < g.norm())) break;
        best = trial;
        best_e = e;
    }

    // Canonical gauge: the upper Cholesky factor of G^T G has the same
    // energy and a positive diagonal.
    const Matrix f = chart(best);
    Eigen::LLT<Matrix> llt(f.transpose() * f);
    if (llt.info() != Eigen::Success) throw SolveFailure("ground state: degenerate minimizer");
    Matrix u = llt.matrixU();
    const Eigen::Vector3d canon(u(0, 0), u(0, 1), u(1, 1));
    const double e = ground_state_objective(l, canon);
    const double gn = ground_state_objective_gradient(l, canon).norm();
    if (!(gn <= opt.acceptance_tolerance)) {
        throw SolveFailure("ground state: gradient norm " + std::to_string(gn) + " above tolerance after " +
                           std::to_string(iterations) + " iterations (energy " + std::to_string(e) + ")");
    }
    return {DeformationGradient::upper(canon[0], canon[1], canon[2]), e, gn, iterations};
}

std::array<double, 3> ErrorMap::point(std::size_t i) const {
    const std::size_t n3 = static_cast<std::size_t>(grid.l3.count);
    const std::size_t n2 = static_cast<std::size_t>(grid.l2.count);
    const std::size_t c = i % n3;
    const std::size_t b = (i / n3) % n2;
    const std::size_t a = i / (n3 * n2);
    return {grid.l1.at(static_cast<int>(a)), grid.l2.at(static_cast<int>(b)), grid.l3.at(static_cast<int>(c))};
}

double ErrorMap::area_fraction(std::size_t t) const {
    std::size_t defined = 0, over = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::isnan(values[i])) continue;
        ++defined;
        if (masks.at(t)[i]) ++over;
    }
    return defined == 0 ? 0.0 : static_cast<double>(over) / static_cast<double>(defined);
}

std::size_t ErrorMap::undefined_count() const {
    return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }));
}

ErrorMap fractional_error_map(const HomogeneousLattice& initial, const HomogeneousLattice& grown,
                              const ErrorGrid& grid, std::vector<double> thresholds, Execution exec) {
    const GroundState gs = ground_state(grown);
    return fractional_error_map(initial, grown, gs.gradient.matrix(), grid, std::move(thresholds), exec);
}

ErrorMap fractional_error_map(const HomogeneousLattice& initial, const HomogeneousLattice& grown,
                              const Matrix& growth_tensor, const ErrorGrid& grid,
                              std::vector<double> thresholds, Execution exec) {
    if (initial.connectivity.dimension() != 2 || grown.connectivity.dimension() != 2)
        throw std::invalid_argument("error maps are sampled over 2x2 upper-triangular F");
    if (initial.size() != grown.size() || initial.rest != grown.rest)
        throw std::invalid_argument("grown lattice must differ from the initial one only in growth");
    for (const AxisRange* r : {&grid.l1, &grid.l2, &grid.l3})
        if (r->count < 1 || !(r->hi >= r->lo)) throw std::invalid_argument("invalid error-map axis");

    ErrorMap map;
    map.grid = grid;
    map.growth_tensor = growth_tensor;
    map.thresholds = std::move(thresholds);
    const Matrix ginv = growth_tensor.inverse();
    const std::size_t n = grid.size();
    map.values.assign(n, 0.0);

    auto eval = [&](std::size_t i) {
        const auto [l1, l2, l3] = map.point(i);
        Matrix f(2, 2);
        f << l1, l3, 0.0, l2;
        // Zero grown energy up to rounding: every spring sits at its rest length.
        bool at_rest = true;
        for (std::size_t k = 0; k < grown.size() && at_rest; ++k)
            at_rest = std::abs((f * grown.connectivity.real(k)).norm() / (grown.rest[k] * grown.growth[k]) - 1.0) <= 1e-12;
        const double wg = cauchy_born_energy(grown, f);
        map.values[i] = !at_rest && wg > 0.0 ? cauchy_born_energy(initial, f * ginv) / wg - 1.0
                                             : std::numeric_limits<double>::quiet_NaN();
    };
    const auto sn = static_cast<std::ptrdiff_t>(n);
    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < sn; ++i) eval(static_cast<std::size_t>(i));
    } else {
        for (std::ptrdiff_t i = 0; i < sn; ++i) eval(static_cast<std::size_t>(i));
    }

    for (double t : map.thresholds) {
        std::vector<bool> m(n, false);
        for (std::size_t i = 0; i < n; ++i) m[i] = !std::isnan(map.values[i]) && std::abs(map.values[i]) > t;
        map.masks.push_back(std::move(m));
    }
    return map;
}

Correction correction_energy(const Decomposition& dec, const Matrix& f, CorrectionRole role) {
    if (dec.size() != 2) throw std::invalid_argument("correction energy needs exactly two parts");
    const std::size_t keep = role == CorrectionRole::second ? 1 : 0;  // part whose G sets H
    const std::size_t other = 1 - keep;
    const Matrix& gk = dec[keep].growth_tensor;
    const Matrix& go = dec[other].growth_tensor;
    Eigen::FullPivLU<Matrix> lk(gk), lo(go);
    if (!lk.isInvertible() || !lo.isInvertible()) throw std::invalid_argument("singular growth tensor");

    Correction c;
    c.h = lk.inverse();
    c.h_prime = gk * lo.inverse();
    const Matrix fh = f * c.h;
    c.correction = dec.part_energy(other, fh * c.h_prime) - dec.part_energy(other, fh);
    c.initial_part = dec.initial_energy(fh);
    c.grown = dec.grown_energy(f);
    c.residual = std::abs(c.grown - (c.initial_part + c.correction));
    return c;
}

}  // namespace growlat
