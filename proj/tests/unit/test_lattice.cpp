#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "growlat/lattice.hpp"
#include "growlat/rng.hpp"
#include "growlat/spring_law.hpp"
#include "../support/oracles.hpp"

using namespace growlat;

TEST_CASE("power law profile and growable energy") {
    const Profile w2 = Profile::power_law(2), w3 = Profile::power_law(3);
    CHECK(w2.value(1.0) == 0.0);
    CHECK(w2.value(1.1) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(w3.value(0.9) == doctest::Approx(0.001).epsilon(1e-12));  // |x-1|^q, even below 1
    CHECK(w3.derivative(0.9) == doctest::Approx(-0.03).epsilon(1e-12));
    CHECK(w2.second_derivative(0.3) == doctest::Approx(2.0));
    CHECK_THROWS_AS(Profile::power_law(1), std::invalid_argument);

    // l^p W(e / l): replication at rest state is zero, recombination ignores l^p.
    CHECK(growable_energy(SpringLaw::replication(2), 2.0, 2.0) == 0.0);
    CHECK(growable_energy(SpringLaw::replication(2), 2.0, 3.0) == doctest::Approx(2.0 * 0.25));
    CHECK(growable_energy(SpringLaw::recombination(2), 2.0, 3.0) == doctest::Approx(0.25));
    CHECK_THROWS_AS(growable_energy(SpringLaw::recombination(2), 0.0, 1.0), std::domain_error);

    const GrownDensity g(SpringLaw::replication(2), 1.5);
    CHECK(g(1.5) == 0.0);
    CHECK(g(3.0) == doctest::Approx(1.5));
    const double h = 1e-6;
    CHECK(g.derivative(2.0) == doctest::Approx((g(2.0 + h) - g(2.0 - h)) / (2 * h)).epsilon(1e-8));
}

TEST_CASE("custom profile second derivative by differences") {
    const Profile p = Profile::custom("quartic", [](double x) { return std::pow(x - 1, 4); },
                                      [](double x) { return 4 * std::pow(x - 1, 3); });
    CHECK_FALSE(p.is_power_law());
    CHECK(p.second_derivative(1.5) == doctest::Approx(12 * 0.25).epsilon(1e-6));
}

TEST_CASE("connectivity validation") {
    CHECK_THROWS_AS(Connectivity(2, {{0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(Connectivity(2, {{1, 0}, {1, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(Connectivity(2, {{1, 0}, {-1, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(Connectivity(2, {{1, 0, 0}}), std::invalid_argument);
    const Connectivity c = square_connectivity();
    CHECK(c.find({-1, -1}) == 2);
    CHECK(c.find({2, 0}) == -1);
    CHECK(c.real(3).norm() == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("lattice order examples") {
    CHECK(lattice_order(Connectivity(2, {{1, 0}, {0, 1}})).order == 1);
    const LatticeOrder sq = lattice_order(square_connectivity());
    CHECK(sq.order == 2);
    CHECK(sq.labels == std::vector<int>{0, 0, 1, 1});

    const std::vector<IntVec> z3 = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}};
    const LatticeOrder o = lattice_order(Connectivity(3, z3));
    CHECK(o.order == oracle::brute_force_order(z3, 3));
    for (const auto& cls : o.classes()) {
        std::vector<IntVec> vs;
        for (int k : cls) vs.push_back(z3[k]);
        CHECK(oracle::rank_of(vs, 3) == static_cast<int>(vs.size()));
    }
}

TEST_CASE("lattice order properties on random connectivities") {
    RandomStream r(7, StreamSalt::test, 100);
    for (int t = 0; t < 60; ++t) {
        const int d = 2 + static_cast<int>(r.bits() % 2);
        const int count = 1 + static_cast<int>(r.bits() % 6);
        std::vector<IntVec> dirs;
        while (static_cast<int>(dirs.size()) < count) {
            IntVec v(d);
            for (int& x : v) x = static_cast<int>(r.bits() % 5) - 2;
            if (std::all_of(v.begin(), v.end(), [](int x) { return x == 0; })) continue;
            IntVec neg(d);
            std::transform(v.begin(), v.end(), neg.begin(), [](int x) { return -x; });
            if (std::find(dirs.begin(), dirs.end(), v) != dirs.end() || std::find(dirs.begin(), dirs.end(), neg) != dirs.end())
                continue;
            dirs.push_back(v);
        }
        const int k = lattice_order(Connectivity(d, dirs)).order;
        CAPTURE(t);
        CHECK(k == oracle::brute_force_order(dirs, d));
        CHECK(k >= (count + d - 1) / d);

        // Permuting and negating representatives leaves the order unchanged.
        std::vector<IntVec> perm(dirs.rbegin(), dirs.rend());
        for (auto& v : perm)
            if (r.bits() % 2) std::transform(v.begin(), v.end(), v.begin(), [](int x) { return -x; });
        CHECK(lattice_order(Connectivity(d, perm)).order == k);
    }
}

TEST_CASE("integer rank") {
    const std::vector<IntVec> v = {{1, 2, 3}, {2, 4, 6}, {0, 1, 1}};
    CHECK(integer_rank(v, 3) == 2);
    CHECK(integer_rank(std::vector<IntVec>{}, 2) == 0);
}

TEST_CASE("build_sample edge count matches enumeration") {
    for (int n = 2; n <= 6; ++n) {
        const auto s = build_sample(square_lattice(1.0, std::sqrt(2.0), {1, 1, 1, 1}), n);
        CHECK(static_cast<int>(s.edges().size()) == oracle::square_edge_count(n));
        CHECK(static_cast<int>(s.edges().size()) == 2 * n * (n + 1) + 2 * n * n);
        for (const Edge& e : s.edges()) {
            const IntVec a = s.node_coords(e.from), b = s.node_coords(e.to);
            const IntVec& v = s.connectivity()[static_cast<std::size_t>(e.direction)];
            CHECK(b[0] - a[0] == v[0]);
            CHECK(b[1] - a[1] == v[1]);
        }
    }
    CHECK(oracle::square_edge_count(2) == 20);
}

TEST_CASE("build_sample node bookkeeping") {
    const auto s = build_sample(square_lattice(1.0, std::sqrt(2.0), {1, 1, 1, 1}), 4);
    CHECK(s.node_count() == 25);
    CHECK(s.cell_count() == 16.0);
    for (int i = 0; i < s.node_count(); ++i) CHECK(s.node_index(s.node_coords(i)) == i);
    CHECK(s.node_index({5, 0}) == -1);
    CHECK(s.is_boundary(s.node_index({0, 2})));
    CHECK_FALSE(s.is_boundary(s.node_index({2, 2})));
    // Boundary-face weights: an axis spring along a face counts 1/2.
    for (const Edge& e : s.edges()) {
        const IntVec a = s.node_coords(e.from), b = s.node_coords(e.to);
        const bool on_face = (a[1] == b[1] && (a[1] == 0 || a[1] == 4)) || (a[0] == b[0] && (a[0] == 0 || a[0] == 4));
        CHECK(e.weight == (on_face ? 0.5 : 1.0));
    }
}

TEST_CASE("checkerboard growth: zero-energy cells") {
    const double s2 = std::sqrt(2.0);
    const auto s = build_sample(square_connectivity(), 6, RestSpec::constant({1, 1, s2, s2}), GrowthScenario::checkerboard(1.2));
    std::map<std::pair<int, int>, std::pair<double, double>> cells;
    for (const Edge& e : s.edges()) {
        if (e.direction < 2) {
            CHECK(e.growth == 1.0);
            continue;
        }
        const IntVec a = s.node_coords(e.from), b = s.node_coords(e.to);
        const std::pair<int, int> cell{std::min(a[0], b[0]), std::min(a[1], b[1])};
        (e.direction == 2 ? cells[cell].first : cells[cell].second) = e.growth;
    }
    CHECK(cells.size() == 36);
    for (const auto& [cell, g] : cells) {
        CHECK(g.first * g.first + g.second * g.second == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(g.first == doctest::Approx((cell.first + cell.second) % 2 == 0 ? 1.2 : std::sqrt(2 - 1.44)));
    }
    CHECK_THROWS_AS(GrowthScenario::checkerboard(1.5).validate(4), std::invalid_argument);
}

TEST_CASE("random scenarios: degenerate intervals, determinism") {
    const double s2 = std::sqrt(2.0);
    const std::vector<Interval> one(4, Interval{1.0, 1.0});
    const auto flat = build_sample(square_connectivity(), 4, RestSpec::constant({1, 1, s2, s2}), GrowthScenario::uniform(one, 3));
    for (const Edge& e : flat.edges()) CHECK(e.growth == 1.0);

    const std::vector<Interval> iv(4, Interval{0.8, 1.2});
    auto growths = [&](std::uint64_t seed) {
        const auto s = build_sample(square_connectivity(), 5, RestSpec::uniform({{0.8, 1.2}, {0.8, 1.2}, {1, 2}, {1, 2}}, seed),
                                    GrowthScenario::uniform(iv, seed));
        std::vector<double> out;
        for (const Edge& e : s.edges()) {
            out.push_back(e.growth);
            out.push_back(e.rest);
            CHECK(e.growth >= 0.8);
            CHECK(e.growth <= 1.2);
        }
        return out;
    };
    CHECK(growths(11) == growths(11));
    CHECK(growths(11) != growths(12));
}

TEST_CASE("apply_growth") {
    const HomogeneousLattice l = square_lattice(1.0, std::sqrt(2.0), {1, 1, 1, 1});
    const std::vector<double> ones(4, 1.0), a = {1, 1, 0.9, 0.9}, b = {1, 1, 1 / 0.9, 1 / 0.9}, ex7 = {1, 1, 0.9, 1.1};
    CHECK(apply_growth(l, ones).growth == l.growth);
    const auto back = apply_growth(apply_growth(l, a), b);
    for (double g : back.growth) CHECK(g == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(apply_growth(l, ex7).growth == ex7);
    CHECK_THROWS_AS(apply_growth(l, std::vector<double>{1, 1}), std::invalid_argument);
}

TEST_CASE("random streams are portable and independent") {
    RandomStream a(1, StreamSalt::growth, 0), b(1, StreamSalt::growth, 0), c(1, StreamSalt::growth, 1);
    const double x = a.unit();
    CHECK(x == b.unit());
    CHECK(x != c.unit());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    RandomStream d(5, StreamSalt::rest, 2);
    CHECK(d.uniform(0.7, 0.7) == 0.7);
}
