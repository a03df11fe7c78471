#include <doctest.h>

#include <cmath>
#include <numbers>

#include "growlat/continuum.hpp"
#include "growlat/rng.hpp"
#include "../support/oracles.hpp"

using namespace growlat;

namespace {

const double s2 = std::numbers::sqrt2;

Matrix m2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

Matrix random_f(RandomStream& r) {
    return m2(1 + r.uniform(-0.3, 0.3), r.uniform(-0.3, 0.3), r.uniform(-0.3, 0.3), 1 + r.uniform(-0.3, 0.3));
}

double max_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("Cauchy-Born energy examples") {
    const HomogeneousLattice l = square_lattice(1.0, s2, {1, 1, 1, 1});
    CHECK(cauchy_born_energy(l, Matrix::Identity(2, 2)) == doctest::Approx(0.0));
    CHECK(cauchy_born_energy(l, 1.1 * Matrix::Identity(2, 2)) == doctest::Approx(0.04).epsilon(1e-12));
    const HomogeneousLattice g = square_lattice(1.0, s2, {1, 1, 0.9, 0.9});
    CHECK(cauchy_born_energy(g, Matrix::Identity(2, 2)) == doctest::Approx(2 * std::pow(1 / 0.9 - 1, 2)).epsilon(1e-12));
    CHECK(cauchy_born_energy(g, Matrix::Identity(2, 2)) == doctest::Approx(0.024691).epsilon(1e-5));
}

TEST_CASE("Cauchy-Born energy against direct evaluation, frame indifference, gradient") {
    RandomStream r(3, StreamSalt::test, 10);
    for (int t = 0; t < 50; ++t) {
        double rest[4] = {r.uniform(0.5, 2), r.uniform(0.5, 2), r.uniform(0.5, 2), r.uniform(0.5, 2)};
        double growth[4] = {r.uniform(0.5, 1.5), r.uniform(0.5, 1.5), r.uniform(0.5, 1.5), r.uniform(0.5, 1.5)};
        const int q = 2 + t % 3;
        const HomogeneousLattice l(square_connectivity(), {rest, rest + 4}, {growth, growth + 4}, SpringLaw::recombination(q));
        const Matrix f = random_f(r);
        const double e = cauchy_born_energy(l, f);
        CHECK(e == doctest::Approx(oracle::square_cb(rest, growth, f, q)).epsilon(1e-12));

        const double th = r.uniform(0, 2 * std::numbers::pi);
        const Matrix rot = m2(std::cos(th), -std::sin(th), std::sin(th), std::cos(th));
        CHECK(cauchy_born_energy(l, rot * f) == doctest::Approx(e).epsilon(1e-12));

        const Matrix g = cauchy_born_gradient(l, f);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                Matrix fp = f, fm = f;
                fp(i, j) += 1e-6;
                fm(i, j) -= 1e-6;
                const double fd = (cauchy_born_energy(l, fp) - cauchy_born_energy(l, fm)) / 2e-6;
                CHECK(g(i, j) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
            }
    }
}

TEST_CASE("is_shear examples") {
    const Matrix basis = Matrix::Identity(2, 2);
    CHECK_FALSE(is_shear(Matrix::Identity(2, 2), basis));
    CHECK(is_shear(m2(1, 0.5, 0, std::sqrt(3.0) / 2), basis));
    CHECK_FALSE(is_shear(m2(1, 0, 0, 0.9), basis));
    const double th = 0.4;
    CHECK_FALSE(is_shear(m2(std::cos(th), -std::sin(th), std::sin(th), std::cos(th)), basis));
    CHECK_THROWS_AS(is_shear(Matrix::Identity(2, 2), m2(1, 2, 2, 4)), std::invalid_argument);
}

TEST_CASE("order-1 shear witnesses") {
    const Connectivity e1(2, {{1, 0}});
    const Matrix f = shear_witness_order1(e1);
    CHECK(max_diff(f, m2(1, -s2 / 2, 0, s2 / 2)) < 1e-14);
    CHECK(is_shear(f, Matrix::Identity(2, 2)));

    const Connectivity both(2, {{1, 0}, {0, 1}});
    const Matrix g = shear_witness_order1(both);
    CHECK(g.col(0).norm() == doctest::Approx(1.0));
    CHECK(g.col(1).norm() == doctest::Approx(1.0));
    CHECK(is_shear(g, Matrix::Identity(2, 2)));

    CHECK_THROWS_AS(shear_witness_order1(Connectivity(1, {{1}})), std::invalid_argument);
    CHECK_THROWS_AS(shear_witness_order1(square_connectivity()), std::invalid_argument);
}

TEST_CASE("extend_to_basis adds standard vectors greedily") {
    const Connectivity c(3, {{1, 1, 0}, {0, 0, 1}});
    const Matrix b = extend_to_basis(c, {0});
    CHECK(b.cols() == 3);
    CHECK(b.col(0) == Eigen::Vector3d(1, 1, 0));
    CHECK(b.col(1) == Eigen::Vector3d(1, 0, 0));
    CHECK(b.col(2) == Eigen::Vector3d(0, 0, 1));
}

TEST_CASE("decompose: growth tensors") {
    const HomogeneousLattice none = square_lattice(1.0, s2, {1, 1, 1, 1});
    const Decomposition d0 = decompose(none);
    REQUIRE(d0.size() == 2);
    CHECK(max_diff(d0[0].growth_tensor, Matrix::Identity(2, 2)) < 1e-15);
    CHECK(max_diff(d0[1].growth_tensor, Matrix::Identity(2, 2)) < 1e-15);

    const HomogeneousLattice l = square_lattice(1.0, s2, {1.1, 0.95, 1.2, 0.85});
    const Decomposition d = decompose(l, square_partition(1));
    CHECK(max_diff(d[0].growth_tensor, m2(1.1, 0, 0, 0.95)) < 1e-14);
    CHECK(max_diff(d[1].growth_tensor, oracle::rotated_diag(1.2, 0.85)) < 1e-14);

    const Decomposition d7 = decompose(square_lattice(1.0, s2, {1, 1, 0.9, 1.1}), square_partition(1));
    CHECK(max_diff(d7[1].growth_tensor, m2(1.0, -0.1, -0.1, 1.0)) < 1e-14);

    CHECK(square_partition(2) == std::vector<int>{0, 1, 0, 1});
    CHECK(square_partition(3) == std::vector<int>{0, 1, 1, 0});
    CHECK_THROWS_AS(square_partition(4), std::invalid_argument);
    CHECK_THROWS_AS(decompose(square_lattice(1.0, s2, {1, 1, 1, 1}, SpringLaw::replication(2))), std::domain_error);
    CHECK_THROWS(decompose(l, {0, 0, 0, 1}));  // class {e1, e2, e1+e2} is dependent
}

TEST_CASE("decomposition: exactness and part energies sum to the initial energy") {
    RandomStream r(5, StreamSalt::test, 11);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> g(4);
        for (double& x : g) x = r.uniform(0.5, 1.5);
        const HomogeneousLattice l(square_connectivity(), {r.uniform(0.5, 2), r.uniform(0.5, 2), r.uniform(1, 3), r.uniform(1, 3)}, g,
                                   SpringLaw::recombination(2 + t % 3));
        const Matrix f = random_f(r);
        const double wg = cauchy_born_energy(l, f);
        for (int choice = 1; choice <= 3; ++choice) {
            const Decomposition d = decompose(l, square_partition(choice));
            CHECK(std::abs(d.grown_energy(f) - wg) <= 1e-12 * (1 + std::abs(wg)));
            const HomogeneousLattice init(l.connectivity, l.rest, l.law);
            CHECK(d.part_energy(0, f) + d.part_energy(1, f) == doctest::Approx(cauchy_born_energy(init, f)).epsilon(1e-12));
            CHECK(d.initial_energy(f) == doctest::Approx(cauchy_born_energy(init, f)).epsilon(1e-12));
        }
    }
}

TEST_CASE("multiplicative admissibility examples") {
    const Admissibility a = multiplicative_admissible({1.3, 1.3, 1.3, 1.3});
    CHECK(a.admissible);
    CHECK(a.factor == doctest::Approx(1.3));
    CHECK(max_diff(a.growth_tensor, 1.3 * Matrix::Identity(2, 2)) < 1e-15);

    const Admissibility b = multiplicative_admissible({1, 1, 0.9, 0.9});
    CHECK_FALSE(b.admissible);
    CHECK(b.violated == "reciprocal-square sum");
    CHECK(b.lhs == doctest::Approx(2.0));
    CHECK(b.rhs == doctest::Approx(2 / 0.81));

    CHECK(multiplicative_admissible({1, 1, 1, 1}).admissible);
    RandomStream r(9, StreamSalt::test, 12);
    for (int t = 0; t < 200; ++t) {
        const double g = r.uniform(0.2, 4.0);
        std::array<double, 4> v = {g, g, g, g};
        CHECK(multiplicative_admissible(v).admissible);
        v[static_cast<std::size_t>(t % 4)] += (t % 2 ? 1e-6 : -1e-6);
        CHECK_FALSE(multiplicative_admissible(v).admissible);
    }
}

TEST_CASE("ground states") {
    const GroundState g0 = ground_state(square_lattice(1.0, s2, {1, 1, 1, 1}));
    CHECK(max_diff(g0.gradient.matrix(), Matrix::Identity(2, 2)) < 1e-6);
    CHECK(g0.energy == doctest::Approx(0.0));

    const HomogeneousLattice ex4 = square_lattice(1.0, s2, {1, 1, 0.9, 0.9});
    const GroundState g4 = ground_state(ex4);
    CHECK(max_diff(g4.gradient.matrix(), (1.71 / 1.81) * Matrix::Identity(2, 2)) < 1e-7);
    CHECK(max_diff(g4.gradient.matrix(), 0.94475 * Matrix::Identity(2, 2)) < 1e-4);
    CHECK(g4.gradient.form() == MatrixForm::upper_triangular);

    const HomogeneousLattice ex6 = square_lattice(1.0, s2, {1, 1, 0.9, std::sqrt(2 - 0.81)});
    const GroundState g6 = ground_state(ex6);
    CHECK(max_diff(g6.gradient.matrix(), m2(1, -0.19, 0, 0.98178)) < 1e-3);
    CHECK(g6.energy == doctest::Approx(0.0).scale(1.0));  // compatible growth: zero-energy cell
}

TEST_CASE("ground state is optimal against perturbations") {
    const HomogeneousLattice ex7 = square_lattice(1.0, s2, {1, 1, 0.9, 1.1});
    const GroundState g = ground_state(ex7);
    const Matrix gm = g.gradient.matrix();
    RandomStream r(2, StreamSalt::test, 13);
    for (int t = 0; t < 200; ++t) {
        Matrix p = gm;
        p(0, 0) += r.uniform(-0.05, 0.05);
        p(0, 1) += r.uniform(-0.05, 0.05);
        p(1, 1) += r.uniform(-0.05, 0.05);
        CHECK(cauchy_born_energy(ex7, p) >= g.energy - 1e-15);
    }
    const Eigen::Vector3d x(gm(0, 0), gm(0, 1), gm(1, 1));
    const Eigen::Vector3d an = ground_state_objective_gradient(ex7, x);
    for (int i = 0; i < 3; ++i) {
        Eigen::Vector3d xp = x, xm = x;
        xp[i] += 1e-6;
        xm[i] -= 1e-6;
        const double fd = (ground_state_objective(ex7, xp) - ground_state_objective(ex7, xm)) / 2e-6;
        CHECK(std::abs(fd) <= 1e-6);
        CHECK(std::abs(an[i]) <= 1e-8);
    }
}

TEST_CASE("fractional error map") {
    const HomogeneousLattice initial = square_lattice(1.0, s2, {1, 1, 1, 1});
    ErrorGrid small;
    small.l1 = {0.8, 1.25, 7};
    small.l2 = {0.8, 1.25, 7};
    small.l3 = {-0.5, 0.5, 5};

    const ErrorMap dil = fractional_error_map(initial, square_lattice(1.0, s2, {1.1, 1.1, 1.1, 1.1}), small);
    CHECK(dil.values.size() == small.size());
    for (double v : dil.values)
        if (!std::isnan(v)) CHECK(std::abs(v) < 1e-12);
    CHECK(dil.area_fraction(0) == 0.0);

    const HomogeneousLattice ex4 = square_lattice(1.0, s2, {1, 1, 0.9, 0.9});
    const Matrix g = 0.94475 * Matrix::Identity(2, 2);
    ErrorGrid at_g;
    at_g.l1 = {0.94475, 0.94475, 1};
    at_g.l2 = {0.94475, 0.94475, 1};
    at_g.l3 = {0, 0, 1};
    CHECK(fractional_error_map(initial, ex4, g, at_g, {0.1}, Execution::serial).values[0] == doctest::Approx(-1.0));
    ErrorGrid at_i;
    at_i.l1 = {1, 1, 1};
    at_i.l2 = {1, 1, 1};
    at_i.l3 = {0, 0, 1};
    const ErrorMap m = fractional_error_map(initial, ex4, g, at_i, {0.1}, Execution::serial);
    const double wi = cauchy_born_energy(initial, g.inverse());
    CHECK(wi == doctest::Approx(0.013680).epsilon(1e-4));
    CHECK(m.values[0] == doctest::Approx(-0.4459).epsilon(1e-3));
    CHECK(m.masks[0][0]);

    // Undefined where the grown energy vanishes: grid through the grown rest state.
    const HomogeneousLattice grown = square_lattice(1.0, s2, {1.1, 1.1, 1.1, 1.1});
    ErrorGrid at_rest;
    at_rest.l1 = {1.1, 1.1, 1};
    at_rest.l2 = {1.1, 1.1, 1};
    at_rest.l3 = {0, 0, 1};
    const ErrorMap u = fractional_error_map(initial, grown, 1.1 * Matrix::Identity(2, 2), at_rest, {0.1}, Execution::serial);
    CHECK(std::isnan(u.values[0]));
    CHECK(u.undefined_count() == 1);
    CHECK_FALSE(u.masks[0][0]);

    const ErrorMap ser = fractional_error_map(initial, ex4, g, small, {0.1, 0.2}, Execution::serial);
    const ErrorMap par = fractional_error_map(initial, ex4, g, small, {0.1, 0.2}, Execution::parallel);
    CHECK(ser.values == par.values);
    CHECK(ser.point(1)[2] == doctest::Approx(-0.25));
}

TEST_CASE("correction energy") {
    const Decomposition iso = decompose(square_lattice(1.0, s2, {1.2, 1.2, 1.2, 1.2}), square_partition(1));
    const Correction c0 = correction_energy(iso, 1.1 * Matrix::Identity(2, 2));
    CHECK(max_diff(c0.h_prime, Matrix::Identity(2, 2)) < 1e-14);
    CHECK(std::abs(c0.correction) < 1e-14);

    const Decomposition d7 = decompose(square_lattice(1.0, s2, {1, 1, 0.9, 1.1}), square_partition(1));
    const Correction c = correction_energy(d7, Matrix::Identity(2, 2));
    CHECK(max_diff(c.h_prime, d7[1].growth_tensor) < 1e-14);
    CHECK(c.residual < 1e-14);
    CHECK(c.grown == doctest::Approx(c.initial_part + c.correction));

    RandomStream r(4, StreamSalt::test, 14);
    for (int t = 0; t < 50; ++t) {
        const Matrix f = random_f(r);
        CHECK(correction_energy(d7, f, CorrectionRole::second).residual <= 1e-12);
        CHECK(correction_energy(d7, f, CorrectionRole::first).residual <= 1e-12);
    }
}
