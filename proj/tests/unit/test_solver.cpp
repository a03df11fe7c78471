#include <doctest.h>

#include <cmath>
#include <numbers>

#include "growlat/continuum.hpp"
#include "growlat/rng.hpp"
#include "growlat/solver.hpp"
#include "../support/oracles.hpp"

using namespace growlat;

namespace {

const double s2 = std::numbers::sqrt2;

GrowthProfile linear(double g0, double slope) {
    return {[=](double x) { return g0 * x + 0.5 * slope * x * x; }, [=](double x) { return g0 + slope * x; }};
}

Matrix random_f(RandomStream& r) {
    Matrix f(2, 2);
    f << 1 + r.uniform(-0.2, 0.2), r.uniform(-0.2, 0.2), r.uniform(-0.2, 0.2), 1 + r.uniform(-0.2, 0.2);
    return f;
}

FiniteLatticeSample random_sample(int n, std::uint64_t seed, int q = 2) {
    return build_sample(square_connectivity(), n, RestSpec::uniform({{0.9, 1.1}, {0.9, 1.1}, {1.3, 1.5}, {1.3, 1.5}}, seed),
                        GrowthScenario::uniform(std::vector<Interval>(4, Interval{0.8, 1.2}), seed),
                        SpringLaw::recombination(q));
}

Eigen::VectorXd jiggle(Eigen::VectorXd x, RandomStream& r, double amp) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += r.uniform(-amp, amp);
    return x;
}

}  // namespace

TEST_CASE("chain examples") {
    const GrowthProfile flat = linear(1.0, 0.0);
    const auto chain = chain_sample(flat, 1.0, SpringLaw::recombination(2), 2);
    DisplacementField u{1, Eigen::Vector3d(0, 1.1, 2.2)};
    CHECK(total_energy(chain, u) == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(total_energy(chain, u) == doctest::Approx(oracle::chain_energy({0, 1.1, 2.2}, {1, 1}, {1, 1})));

    u.positions[1] = 0.7;
    const SolveReport r = minimize_chain(chain, 1.1);
    CHECK(r.converged);
    CHECK(r.field.positions[1] == doctest::Approx(1.1).epsilon(1e-10));
    CHECK(r.total_energy == doctest::Approx(0.02).epsilon(1e-10));
    CHECK(r.per_cell_energy == doctest::Approx(0.01).epsilon(1e-10));
}

TEST_CASE("affine fields reproduce Cauchy-Born per cell") {
    RandomStream r(1, StreamSalt::test, 20);
    for (int t = 0; t < 10; ++t) {
        const std::vector<double> g = {r.uniform(0.8, 1.2), r.uniform(0.8, 1.2), r.uniform(0.8, 1.2), r.uniform(0.8, 1.2)};
        const HomogeneousLattice l = square_lattice(r.uniform(0.9, 1.1), r.uniform(1.3, 1.5), g, SpringLaw::recombination(2 + t % 3));
        const Matrix f = random_f(r);
        for (int n : {2, 3, 8}) {
            const auto s = build_sample(l, n);
            CHECK(per_cell_energy(s, affine_field(s, f)) == doctest::Approx(cauchy_born_energy(l, f)).epsilon(1e-12));
        }
    }
}

TEST_CASE("homogeneous minimization") {
    const auto s = build_sample(square_lattice(1.0, s2, {1, 1, 1, 1}), 6);
    const SolveReport r0 = minimize(s, AffineBoundary(Matrix::Identity(2, 2)));
    CHECK(r0.converged);
    CHECK(r0.per_cell_energy == doctest::Approx(0.0));
    CHECK((r0.field.positions - affine_field(s, Matrix::Identity(2, 2)).positions).cwiseAbs().maxCoeff() < 1e-12);

    const HomogeneousLattice ex4 = square_lattice(1.0, s2, {1, 1, 0.9, 0.9});
    const auto s8 = build_sample(ex4, 8);
    const Matrix f = 0.94475 * Matrix::Identity(2, 2);
    const double trial = cauchy_born_energy(ex4, f);
    CHECK(trial == doctest::Approx(0.011052).epsilon(1e-4));
    const SolveReport r = minimize(s8, AffineBoundary(f));
    CHECK(r.converged);
    CHECK(r.per_cell_energy <= trial + 1e-15);
    CHECK(std::abs(r.per_cell_energy - trial) <= 1e-6);
}

TEST_CASE("minimize: bound, pinned boundary, convergence criterion") {
    RandomStream r(2, StreamSalt::test, 21);
    const auto s = random_sample(6, 4);
    for (int t = 0; t < 3; ++t) {
        const Matrix f = random_f(r);
        const DisplacementField aff = affine_field(s, f);
        const SolveReport rep = minimize(s, AffineBoundary(f));
        CHECK(rep.converged);
        CHECK(rep.gradient_norm <= 1e-10 * (1 + std::abs(rep.total_energy)));
        CHECK(rep.total_energy <= total_energy(s, aff) + 1e-14);
        for (int i = 0; i < s.node_count(); ++i)
            if (s.is_boundary(i))
                for (int k = 0; k < 2; ++k) CHECK(rep.field.positions[2 * i + k] == aff.positions[2 * i + k]);

        // Same answer from a perturbed start, and deterministic reruns.
        const SolveReport again = minimize(s, AffineBoundary(f));
        CHECK(again.total_energy == rep.total_energy);
        CHECK(again.field.positions == rep.field.positions);
    }
}

TEST_CASE("energy gradient matches central differences") {
    RandomStream r(3, StreamSalt::test, 22);
    for (int q : {2, 3, 4}) {
        const auto s = random_sample(4, 9, q);
        const SpringSystem sys(s);
        const Eigen::VectorXd x = jiggle(affine_field(s, random_f(r)).positions, r, 0.05);
        Eigen::VectorXd g(x.size());
        sys.energy(x.data(), g.data(), Execution::serial);
        std::vector<double> xv(x.data(), x.data() + x.size());
        const auto fd = oracle::central_difference(
            [&](const std::vector<double>& y) { return sys.energy(y.data(), nullptr, Execution::serial); }, xv);
        for (Eigen::Index i = 0; i < x.size(); ++i) CHECK(g[i] == doctest::Approx(fd[i]).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("Hessian-vector product matches differenced gradients") {
    RandomStream r(4, StreamSalt::test, 23);
    const auto s = random_sample(4, 2);
    const SpringSystem sys(s);
    const Eigen::VectorXd x = jiggle(affine_field(s, random_f(r)).positions, r, 0.05);
    const Eigen::VectorXd v = jiggle(Eigen::VectorXd::Zero(x.size()), r, 1.0);
    Eigen::VectorXd hv(x.size()), hvp(x.size()), gp(x.size()), gm(x.size());
    sys.hessian_vector(x.data(), v.data(), hv.data(), Execution::serial);
    sys.hessian_vector(x.data(), v.data(), hvp.data(), Execution::parallel);
    const double h = 1e-6;
    const Eigen::VectorXd xp = x + h * v, xm = x - h * v;
    sys.energy(xp.data(), gp.data(), Execution::serial);
    sys.energy(xm.data(), gm.data(), Execution::serial);
    const Eigen::VectorXd fd = (gp - gm) / (2 * h);
    CHECK((hv - fd).norm() <= 1e-6 * (1 + fd.norm()));
    CHECK((hv - hvp).norm() <= 1e-12 * (1 + hv.norm()));
}

TEST_CASE("serial and parallel kernels agree") {
    RandomStream r(5, StreamSalt::test, 24);
    const auto s = random_sample(12, 6);
    const SpringSystem sys(s);
    const Eigen::VectorXd x = jiggle(affine_field(s, random_f(r)).positions, r, 0.05);
    Eigen::VectorXd gs(x.size()), gp(x.size()), gp2(x.size());
    const double es = sys.energy(x.data(), gs.data(), Execution::serial);
    const double ep = sys.energy(x.data(), gp.data(), Execution::parallel);
    const double ep2 = sys.energy(x.data(), gp2.data(), Execution::parallel);
    CHECK(ep == doctest::Approx(es).epsilon(1e-13));
    CHECK((gs - gp).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK(ep == ep2);
    CHECK(gp == gp2);
    CHECK(sys.energy(x.data(), nullptr, Execution::serial, true) ==
          doctest::Approx(sys.energy(x.data(), nullptr, Execution::parallel, true)).epsilon(1e-13));
}

TEST_CASE("translation invariance with all nodes free") {
    RandomStream r(6, StreamSalt::test, 25);
    const auto s = random_sample(5, 3);
    const SpringSystem sys(s);
    const Eigen::VectorXd x = jiggle(affine_field(s, random_f(r)).positions, r, 0.05);
    Eigen::VectorXd y = x;
    for (Eigen::Index i = 0; i < y.size(); i += 2) {
        y[i] += 0.37;
        y[i + 1] -= 1.21;
    }
    const double e = sys.energy(x.data(), nullptr, Execution::serial);
    CHECK(sys.energy(y.data(), nullptr, Execution::serial) == doctest::Approx(e).epsilon(1e-12));
}

TEST_CASE("checkerboard affine energy at F = I is positive and matches a direct sum") {
    const auto s = build_sample(square_connectivity(), 4, RestSpec::constant({1, 1, s2, s2}), GrowthScenario::checkerboard(1.2));
    const DisplacementField u = affine_field(s, Matrix::Identity(2, 2));
    double direct = 0.0;
    for (const Edge& e : s.edges()) {
        const Eigen::VectorXd d = u.point(e.to) - u.point(e.from);
        direct += oracle::w(d.norm() / (e.rest * e.growth), 2);
    }
    CHECK(direct > 0.0);
    CHECK(total_energy(s, u) == doctest::Approx(direct).epsilon(1e-13));
}

TEST_CASE("one-dimensional continuum energy") {
    const SpringLaw w2 = SpringLaw::recombination(2);
    CHECK(one_d_continuum_energy(linear(2.0, 0.0), 1.0, w2, 2.0) == doctest::Approx(0.0).scale(1.0));
    CHECK(one_d_continuum_energy(linear(1.0, 1.0), 1.0, w2, 2.0) == doctest::Approx(3.0 / 28.0).epsilon(1e-12));
    CHECK(one_d_continuum_energy(linear(2.0, 0.0), 1.0, SpringLaw::replication(2), 2.0) == doctest::Approx(0.0).scale(1.0));
    // p = 1, constant g: per-cell energy g W(F / (L g)).
    CHECK(one_d_continuum_energy(linear(2.0, 0.0), 1.0, SpringLaw::replication(2), 3.0) == doctest::Approx(2.0 * 0.25));

    double prev = 0.0;
    for (int n : {64, 128, 512}) {
        const auto chain = chain_sample(linear(1.0, 1.0), 1.0, w2, n);
        const SolveReport r = minimize_chain(chain, 2.0);
        CHECK(r.converged);
        const double err = std::abs(r.per_cell_energy - 3.0 / 28.0);
        if (prev > 0.0) CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-3);

    const auto rep = chain_sample(linear(2.0, 0.0), 1.0, SpringLaw::replication(2), 16);
    CHECK(minimize_chain(rep, 3.0).per_cell_energy == doctest::Approx(2.0 * 0.25).epsilon(1e-10));
    CHECK_THROWS_AS(chain_sample(linear(1.0, -2.0), 1.0, w2, 8), std::invalid_argument);
}
