#include "growlat/solver.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

namespace growlat {

AffineBoundary::AffineBoundary(Matrix m) : f(std::move(m)) {
    if (f.rows() != f.cols() || f.rows() < 1) throw std::invalid_argument("boundary F must be square");
    if (!f.allFinite()) throw std::invalid_argument("boundary F has non-finite entries");
}

DisplacementField affine_field(const FiniteLatticeSample& s, const Matrix& f) {
    const int d = s.dimension();
    if (f.rows() != d || f.cols() != d) throw std::invalid_argument("F does not match the sample dimension");
    DisplacementField u;
    u.dimension = d;
    u.positions.resize(static_cast<Eigen::Index>(s.node_count()) * d);
    Eigen::VectorXd x(d);
    for (int i = 0; i < s.node_count(); ++i) {
        const IntVec c = s.node_coords(i);
        for (int k = 0; k < d; ++k) x[k] = c[k];
        u.positions.segment(static_cast<Eigen::Index>(i) * d, d) = f * x;
    }
    return u;
}

SpringSystem::SpringSystem(const FiniteLatticeSample& s)
    : dim_(s.dimension()), nodes_(s.node_count()), law_(s.law()) {
    const auto& edges = s.edges();
    const std::size_t m = edges.size();
    from_.reserve(m);
    to_.reserve(m);
    inv_len_.reserve(m);
    scale_.reserve(m);
    weight_.reserve(m);
    std::vector<int> degree(nodes_ + 1, 0);
    for (const Edge& e : edges) {
        from_.push_back(e.from);
        to_.push_back(e.to);
        inv_len_.push_back(1.0 / (e.rest * e.growth));
        scale_.push_back(law_.homogeneity == 0.0 ? 1.0 : std::pow(e.growth, law_.homogeneity));
        weight_.push_back(e.weight);
        ++degree[e.from + 1];
        ++degree[e.to + 1];
    }
    offset_.assign(nodes_ + 1, 0);
    for (int i = 0; i < nodes_; ++i) offset_[i + 1] = offset_[i] + degree[i + 1];
    incident_.assign(offset_[nodes_], 0);
    std::vector<int> fill(offset_.begin(), offset_.end() - 1);
    // Edges in ascending order, so every node gathers in a fixed order.
    for (std::size_t e = 0; e < m; ++e) {
        const int ref = static_cast<int>(e) + 1;
        incident_[fill[from_[e]]++] = -ref;
        incident_[fill[to_[e]]++] = ref;
    }
    edge_energy_.resize(m);
    edge_force_.resize(m * dim_);
}

double SpringSystem::energy(const double* x, double* grad, Execution exec, bool weighted) const {
    return exec == Execution::serial ? serial(x, grad, weighted) : parallel(x, grad, weighted);
}

double SpringSystem::serial(const double* x, double* grad, bool weighted) const {
    const int d = dim_;
    if (grad) std::fill(grad, grad + static_cast<std::size_t>(nodes_) * d, 0.0);
    double total = 0.0;
    double diff[3];
    for (std::size_t e = 0; e < from_.size(); ++e) {
        const double* a = x + static_cast<std::size_t>(from_[e]) * d;
        const double* b = x + static_cast<std::size_t>(to_[e]) * d;
        double len2 = 0.0;
        for (int k = 0; k < d; ++k) {
            diff[k] = b[k] - a[k];
            len2 += diff[k] * diff[k];
        }
        const double len = std::sqrt(len2);
        const double w = weighted ? weight_[e] : 1.0;
        const double s = len * inv_len_[e];
        total += w * scale_[e] * law_.profile.value(s);
        if (grad && len > 0.0) {
            const double c = w * scale_[e] * law_.profile.derivative(s) * inv_len_[e] / len;
            double* ga = grad + static_cast<std::size_t>(from_[e]) * d;
            double* gb = grad + static_cast<std::size_t>(to_[e]) * d;
            for (int k = 0; k < d; ++k) {
                gb[k] += c * diff[k];
                ga[k] -= c * diff[k];
            }
        }
    }
    return total;
}

double SpringSystem::parallel(const double* x, double* grad, bool weighted) const {
    const int d = dim_;
    const auto m = static_cast<std::ptrdiff_t>(from_.size());
    double* ee = edge_energy_.data();
    double* ef = edge_force_.data();
    const bool want_grad = grad != nullptr;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t e = 0; e < m; ++e) {
        const double* a = x + static_cast<std::size_t>(from_[e]) * d;
        const double* b = x + static_cast<std::size_t>(to_[e]) * d;
        double diff[3];
        double len2 = 0.0;
        for (int k = 0; k < d; ++k) {
            diff[k] = b[k] - a[k];
            len2 += diff[k] * diff[k];
        }
        const double len = std::sqrt(len2);
        const double w = weighted ? weight_[e] : 1.0;
        const double s = len * inv_len_[e];
        ee[e] = w * scale_[e] * law_.profile.value(s);
        if (want_grad) {
            const double c = len > 0.0 ? w * scale_[e] * law_.profile.derivative(s) * inv_len_[e] / len : 0.0;
            for (int k = 0; k < d; ++k) ef[e * d + k] = c * diff[k];
        }
    }

    if (want_grad) gather(grad);

    // Fixed-order reduction keeps the result independent of the thread count.
    double total = 0.0;
    for (std::ptrdiff_t e = 0; e < m; ++e) total += ee[e];
    return total;
}

void SpringSystem::edge_curvature(std::size_t e, double len, double& c, double& k) const {
    const double s = len * inv_len_[e];
    c = len > 0.0 ? scale_[e] * law_.profile.derivative(s) * inv_len_[e] / len : 0.0;
    k = scale_[e] * law_.profile.second_derivative(s) * inv_len_[e] * inv_len_[e];
}

void SpringSystem::gather(double* out) const {
    const int d = dim_;
    const double* ef = edge_force_.data();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < nodes_; ++i) {
        double acc[3] = {0.0, 0.0, 0.0};
        for (int j = offset_[i]; j < offset_[i + 1]; ++j) {
            const int ref = incident_[j];
            const std::size_t e = static_cast<std::size_t>(std::abs(ref) - 1);
            const double sign = ref > 0 ? 1.0 : -1.0;
            for (int k = 0; k < d; ++k) acc[k] += sign * ef[e * d + k];
        }
        for (int k = 0; k < d; ++k) out[static_cast<std::size_t>(i) * d + k] = acc[k];
    }
}

void SpringSystem::hessian_vector(const double* x, const double* v, double* out, Execution exec) const {
    const int d = dim_;
    const auto m = static_cast<std::ptrdiff_t>(from_.size());
    auto edge = [&](std::ptrdiff_t e, double* hv) {
        const std::size_t a = static_cast<std::size_t>(from_[e]) * d, b = static_cast<std::size_t>(to_[e]) * d;
        double diff[3], dv[3];
        double len2 = 0.0, dot = 0.0;
        for (int k = 0; k < d; ++k) {
            diff[k] = x[b + k] - x[a + k];
            dv[k] = v[b + k] - v[a + k];
            len2 += diff[k] * diff[k];
            dot += diff[k] * dv[k];
        }
        const double len = std::sqrt(len2);
        double c, kk;
        edge_curvature(static_cast<std::size_t>(e), len, c, kk);
        const double t = len > 0.0 ? (kk - c) * dot / len2 : 0.0;
        for (int k = 0; k < d; ++k) hv[k] = c * dv[k] + t * diff[k];
    };
    if (exec == Execution::serial) {
        std::fill(out, out + static_cast<std::size_t>(nodes_) * d, 0.0);
        double hv[3];
        for (std::ptrdiff_t e = 0; e < m; ++e) {
            edge(e, hv);
            for (int k = 0; k < d; ++k) {
                out[static_cast<std::size_t>(to_[e]) * d + k] += hv[k];
                out[static_cast<std::size_t>(from_[e]) * d + k] -= hv[k];
            }
        }
        return;
    }
    double* ef = edge_force_.data();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t e = 0; e < m; ++e) edge(e, ef + e * d);
    gather(out);
}

namespace {

std::string format_gradient(double g) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", g);
    return buf;
}

void check_field(const FiniteLatticeSample& s, const DisplacementField& u) {
    if (u.dimension != s.dimension() || u.positions.size() != static_cast<Eigen::Index>(s.node_count()) * s.dimension())
        throw std::invalid_argument("displacement field does not cover every node");
}

class InteriorCost : public ceres::FirstOrderFunction {
public:
    InteriorCost(const SpringSystem& sys, Eigen::VectorXd base, std::vector<int> free, Execution exec)
        : sys_(sys), x_(std::move(base)), free_(std::move(free)), exec_(exec), g_(x_.size()) {}

    bool Evaluate(const double* p, double* cost, double* grad) const override {
        const int d = sys_.dimension();
        for (std::size_t i = 0; i < free_.size(); ++i)
            for (int k = 0; k < d; ++k) x_[static_cast<Eigen::Index>(free_[i]) * d + k] = p[i * d + k];
        *cost = sys_.energy(x_.data(), grad ? g_.data() : nullptr, exec_);
        if (!std::isfinite(*cost)) return false;
        if (grad)
            for (std::size_t i = 0; i < free_.size(); ++i)
                for (int k = 0; k < d; ++k) grad[i * d + k] = g_[static_cast<Eigen::Index>(free_[i]) * d + k];
        return true;
    }

    int NumParameters() const override { return static_cast<int>(free_.size()) * sys_.dimension(); }

    const Eigen::VectorXd& positions() const { return x_; }

private:
    const SpringSystem& sys_;
    mutable Eigen::VectorXd x_;
    std::vector<int> free_;
    Execution exec_;
    mutable Eigen::VectorXd g_;
};

}  // namespace

double total_energy(const FiniteLatticeSample& s, const DisplacementField& u, Execution exec) {
    check_field(s, u);
    return SpringSystem(s).energy(u.positions.data(), nullptr, exec);
}

double per_cell_energy(const FiniteLatticeSample& s, const DisplacementField& u, Execution exec) {
    check_field(s, u);
    return SpringSystem(s).energy(u.positions.data(), nullptr, exec, true) / s.cell_count();
}

SolveReport minimize(const FiniteLatticeSample& s, const AffineBoundary& bc, const SolveOptions& opts,
                     const DisplacementField* start) {
    if (s.side() < 2) throw std::invalid_argument("minimize needs N >= 2");
    const int d = s.dimension();
    const DisplacementField affine = affine_field(s, bc.f);
    Eigen::VectorXd x0 = affine.positions;
    std::vector<int> free;
    for (int i = 0; i < s.node_count(); ++i) {
        if (s.is_boundary(i)) continue;
        free.push_back(i);
        if (start) {
            check_field(s, *start);
            x0.segment(static_cast<Eigen::Index>(i) * d, d) = start->point(i);
        }
    }

    SpringSystem sys(s);
    auto* cost = new InteriorCost(sys, x0, free, opts.exec);
    ceres::GradientProblem problem(cost);  // takes ownership

    std::vector<double> p(free.size() * d);
    for (std::size_t i = 0; i < free.size(); ++i)
        for (int k = 0; k < d; ++k) p[i * d + k] = x0[static_cast<Eigen::Index>(free[i]) * d + k];

    const double n_free = std::max<double>(1.0, static_cast<double>(p.size()));
    ceres::GradientProblemSolver::Options so;
    so.line_search_direction_type = ceres::LBFGS;
    so.line_search_type = ceres::WOLFE;
    so.max_lbfgs_rank = opts.lbfgs_rank;
    so.function_tolerance = 0.0;
    so.parameter_tolerance = 0.0;
    so.gradient_tolerance = opts.gradient_tolerance / std::sqrt(n_free);
    so.logging_type = ceres::SILENT;

    SolveReport rep;
    auto measure = [&]() {
        double c = 0.0;
        std::vector<double> g(p.size());
        cost->Evaluate(p.data(), &c, g.data());
        double n2 = 0.0;
        for (double gi : g) n2 += gi * gi;
        rep.total_energy = c;
        rep.gradient_norm = std::sqrt(n2);
        return rep.gradient_norm <= opts.gradient_tolerance * (1.0 + std::abs(c));
    };

    // Truncated Newton on the free coordinates. The line search cannot resolve
    // energy changes below rounding, so steps are judged by |grad| instead.
    auto newton_polish = [&]() {
        const std::size_t m = p.size();
        Eigen::VectorXd xf(x0.size()), vf(x0.size()), hf(x0.size());
        auto scatter = [&](const double* src, Eigen::VectorXd& dst) {
            for (std::size_t i = 0; i < free.size(); ++i)
                for (int k = 0; k < d; ++k) dst[static_cast<Eigen::Index>(free[i]) * d + k] = src[i * d + k];
        };
        auto hv = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
            vf.setZero();
            scatter(v.data(), vf);
            sys.hessian_vector(xf.data(), vf.data(), hf.data(), opts.exec);
            for (std::size_t i = 0; i < free.size(); ++i)
                for (int k = 0; k < d; ++k) out[i * d + k] = hf[static_cast<Eigen::Index>(free[i]) * d + k];
        };
        Eigen::VectorXd g(m), step(m), r(m), dir(m), hd(m);
        bool done = false;
        for (int it = 0; it < opts.newton_steps && !done; ++it) {
            double c = 0.0;
            cost->Evaluate(p.data(), &c, g.data());
            const double gn = g.norm();
            xf = x0;
            scatter(p.data(), xf);
            step.setZero();
            r = -g;
            dir = r;
            double rr = r.squaredNorm();
            const double stop = std::min(1e-4, std::sqrt(gn)) * gn;
            for (std::size_t k = 0; k < 4 * m + 50 && std::sqrt(rr) > stop; ++k) {
                hv(dir, hd);
                const double curv = dir.dot(hd);
                if (!(curv > 0.0)) {
                    if (k == 0) step = -g;
                    break;
                }
                const double a = rr / curv;
                step += a * dir;
                r -= a * hd;
                const double rr2 = r.squaredNorm();
                dir = r + (rr2 / rr) * dir;
                rr = rr2;
            }
            const std::vector<double> keep = p;
            bool moved = false;
            for (double t = 1.0; t > 1e-3 && !moved; t *= 0.5) {
                for (std::size_t i = 0; i < m; ++i) p[i] = keep[i] + t * step[static_cast<Eigen::Index>(i)];
                done = measure();
                moved = done || rep.gradient_norm < gn;
            }
            ++rep.iterations;
            if (!moved) {
                p = keep;
                measure();
                break;
            }
        }
        if (done) rep.message = "Newton polish reached the gradient tolerance";
        return done;
    };

    bool ok = p.empty() || measure();
    while (!ok && rep.iterations < opts.max_iterations && rep.restarts <= opts.max_restarts) {
        so.max_num_iterations = opts.max_iterations - rep.iterations;
        ceres::GradientProblemSolver::Summary summary;
        ceres::Solve(so, problem, p.data(), &summary);
        rep.iterations += std::max<int>(1, static_cast<int>(summary.iterations.size()) - 1);
        rep.message = summary.message;
        ok = measure();
        if (!ok) ok = newton_polish();
        if (!ok) ++rep.restarts;
    }

    Eigen::VectorXd x = x0;
    for (std::size_t i = 0; i < free.size(); ++i)
        for (int k = 0; k < d; ++k) x[static_cast<Eigen::Index>(free[i]) * d + k] = p[i * d + k];
    rep.field.dimension = d;
    rep.field.positions = std::move(x);
    rep.total_energy = sys.energy(rep.field.positions.data(), nullptr, opts.exec);
    rep.per_cell_energy = sys.energy(rep.field.positions.data(), nullptr, opts.exec, true) / s.cell_count();
    rep.converged = ok;
    if (ok && rep.message.empty()) rep.message = "start point already stationary";
    if (!ok)
        rep.message = "no convergence: |grad| = " + format_gradient(rep.gradient_norm) + " after " +
                      std::to_string(rep.iterations) + " iterations (" + rep.message + ")";
    return rep;
}

FiniteLatticeSample chain_sample(const GrowthProfile& g, double rest, const SpringLaw& law, int n) {
    if (n < 2) throw std::invalid_argument("chain needs N >= 2");
    if (!(rest > 0.0)) throw std::invalid_argument("rest length must be positive");
    if (!g.cumulative) throw std::invalid_argument("growth profile needs a cumulative function");
    std::vector<Edge> edges;
    for (int j = 1; j <= n; ++j) {
        const double gj = n * (g.cumulative(static_cast<double>(j) / n) - g.cumulative(static_cast<double>(j - 1) / n));
        if (!(gj > 0.0)) throw std::invalid_argument("growth profile must be strictly increasing");
        edges.push_back({j - 1, j, 0, rest, gj, 1.0});
    }
    return FiniteLatticeSample(Connectivity(1, {{1}}), n, std::move(edges), law);
}

SolveReport minimize_chain(const FiniteLatticeSample& chain, double f, const SolveOptions& opts) {
    if (chain.dimension() != 1) throw std::invalid_argument("chain sample must be one-dimensional");
    Matrix m(1, 1);
    m(0, 0) = f;
    return minimize(chain, AffineBoundary(m), opts);
}

double one_d_continuum_energy(const GrowthProfile& g, double rest, const SpringLaw& law, double f) {
    if (!law.profile.is_power_law()) throw std::invalid_argument("closed form needs a power-law profile");
    if (!g.density) throw std::invalid_argument("growth profile needs a density");
    if (!(f > 0.0)) throw std::invalid_argument("F must be positive");
    if (!(rest > 0.0)) throw std::invalid_argument("rest length must be positive");
    for (int i = 0; i <= 1000; ++i)
        if (!(g.density(i / 1000.0) > 0.0)) throw std::invalid_argument("growth profile must be strictly increasing");

    const double q = law.profile.exponent();
    const double p = law.homogeneity;
    const double a = (1.0 - p) / (q - 1.0);
    using boost::math::quadrature::gauss_kronrod;
    auto integrate = [&](auto fn) { return gauss_kronrod<double, 61>::integrate(fn, 0.0, 1.0, 15, 1e-14); };

    const double int_g = integrate([&](double x) { return g.density(x); });
    const double int_ga = integrate([&](double x) { return std::pow(g.density(x), 1.0 + a); });
    const double m = (f / rest - int_g) / int_ga;
    const double int_e = integrate([&](double x) { return std::pow(g.density(x), p + q * a); });
    return std::pow(std::abs(m), q) * int_e;
}

}  // namespace growlat
