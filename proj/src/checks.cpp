#include "growlat/checks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "growlat/continuum.hpp"
#include "growlat/rng.hpp"

namespace growlat {

namespace {

Matrix random_f(RandomStream& r, int d) {
    Matrix f = Matrix::Identity(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) f(i, j) += r.uniform(-0.5, 0.5);
    return f;
}

Matrix m2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

// Random connectivity in Z^3 with `count` directions (entries in -2..2).
Connectivity random_z3(RandomStream& r, int count) {
    std::vector<IntVec> dirs;
    while (static_cast<int>(dirs.size()) < count) {
        IntVec v(3);
        for (int& x : v) x = static_cast<int>(r.bits() % 5) - 2;
        if (std::all_of(v.begin(), v.end(), [](int x) { return x == 0; })) continue;
        IntVec neg(3);
        for (int k = 0; k < 3; ++k) neg[k] = -v[k];
        if (std::find(dirs.begin(), dirs.end(), v) != dirs.end()) continue;
        if (std::find(dirs.begin(), dirs.end(), neg) != dirs.end()) continue;
        dirs.push_back(v);
    }
    return Connectivity(3, dirs);
}

// Linearly independent random set (order 1) in dimension d.
Connectivity random_order1(RandomStream& r, int d, int count) {
    for (;;) {
        std::vector<IntVec> dirs;
        for (int i = 0; i < count; ++i) {
            IntVec v(d);
            for (int& x : v) x = static_cast<int>(r.bits() % 5) - 2;
            dirs.push_back(v);
        }
        if (integer_rank(dirs, d) == count) return Connectivity(d, dirs);
    }
}

}  // namespace

std::vector<CheckLine> run_identity_checks(const CheckOptions& opts) {
    std::vector<CheckLine> out;
    const double s2 = std::numbers::sqrt2;

    {
        RandomStream r(opts.seed, StreamSalt::test, 1);
        double worst = 0.0;
        for (int t = 0; t < opts.decomposition_trials; ++t) {
            std::vector<double> rest = {r.uniform(0.5, 2.0), r.uniform(0.5, 2.0), r.uniform(0.5, 2.0) * s2,
                                        r.uniform(0.5, 2.0) * s2};
            std::vector<double> g(4);
            for (double& x : g) x = r.uniform(0.5, 1.5);
            const HomogeneousLattice grown = square_lattice(1.0, s2, g);
            const HomogeneousLattice l(grown.connectivity, rest, g, grown.law);
            const Matrix f = random_f(r, 2);
            const double wg = cauchy_born_energy(l, f);
            for (int choice = 1; choice <= 3; ++choice) {
                Decomposition dec = decompose(l, square_partition(choice));
                if (opts.perturb) {
                    auto parts = dec.parts();
                    parts[1].growth_tensor(0, 1) += 1e-3;
                    dec = Decomposition(dec.initial(), parts);
                }
                worst = std::max(worst, std::abs(wg - dec.grown_energy(f)) / (1.0 + std::abs(wg)));
            }
        }
        out.push_back({"decomposition exactness (square, 3 partitions)", worst <= 1e-12, worst, 1e-12,
                       std::to_string(opts.decomposition_trials) + " random (growth, F) pairs"});
    }

    {
        RandomStream r(opts.seed, StreamSalt::test, 2);
        double worst = 0.0;
        for (int t = 0; t < opts.decomposition_trials; ++t) {
            const Connectivity c = random_z3(r, 3 + static_cast<int>(r.bits() % 5));
            std::vector<double> rest(c.size()), g(c.size());
            for (std::size_t k = 0; k < c.size(); ++k) {
                rest[k] = r.uniform(0.5, 2.0) * c.real(k).norm();
                g[k] = r.uniform(0.5, 1.5);
            }
            const HomogeneousLattice l(c, rest, g, SpringLaw::recombination(2));
            const Matrix f = random_f(r, 3);
            const double wg = cauchy_born_energy(l, f);
            worst = std::max(worst, std::abs(wg - decompose(l).grown_energy(f)) / (1.0 + std::abs(wg)));
        }
        out.push_back({"decomposition exactness (random Z^3 connectivities)", worst <= 1e-12, worst, 1e-12,
                       "order-witness partition"});
    }

    {
        const HomogeneousLattice l = square_lattice(1.0, s2, {1, 1, 1, 1});
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const double th = std::numbers::pi * (i + 0.5) / 50.0, c = std::cos(th), s = std::sin(th);
            const Matrix fams[3][2] = {
                {m2(1, c, 0, s), m2((1 - c) / s2, (1 + c) / s2, -s / s2, s / s2)},
                {m2(1, s2 * c - 1, 0, s2 * s), m2(s2 * c + 1, 1, s2 * s, 0)},
                {m2(1, s2 * c + 1, 0, s2 * s), m2(s2 * c - 1, 1, s2 * s, 0)},
            };
            for (int choice = 1; choice <= 3; ++choice) {
                const Decomposition dec = decompose(l, square_partition(choice));
                worst = std::max({worst, dec.part_energy(0, fams[choice - 1][0]), dec.part_energy(1, fams[choice - 1][1])});
            }
        }
        out.push_back({"shear families annihilate W_1 and W_2", worst <= 1e-12, worst, 1e-12, "50 angles, 3 partitions"});
    }

    {
        RandomStream r(opts.seed, StreamSalt::test, 3);
        int wrong = 0;
        for (int t = 0; t < opts.admissibility_trials; ++t) {
            std::array<double, 4> g;
            for (double& x : g) x = r.uniform(0.5, 1.5);
            if (multiplicative_admissible(g).admissible) ++wrong;
            const double e = r.uniform(0.1, 3.0);
            std::array<double, 4> eq = {e, e, e, e};
            const auto a = multiplicative_admissible(eq);
            if (!a.admissible || std::abs(a.growth_tensor(0, 0) - e) > 1e-15) ++wrong;
            eq[t % 4] += 1e-6;
            if (multiplicative_admissible(eq).admissible) ++wrong;
        }
        out.push_back({"admissible exactly on equal growth", wrong == 0, static_cast<double>(wrong), 0.0,
                       "random tuples, equal line, single-factor perturbations"});
    }

    {
        RandomStream r(opts.seed, StreamSalt::test, 4);
        double worst = 0.0;
        bool shear_ok = true;
        std::vector<Connectivity> cs = {Connectivity(2, {{1, 0}}), Connectivity(2, {{1, 0}, {0, 1}})};
        while (cs.size() < 22) {
            const int d = 2 + static_cast<int>(r.bits() % 2);
            cs.push_back(random_order1(r, d, 1 + static_cast<int>(r.bits() % d)));
        }
        for (const auto& c : cs) {
            std::vector<double> rest(c.size()), g(c.size());
            for (std::size_t k = 0; k < c.size(); ++k) {
                rest[k] = r.uniform(0.5, 2.0);
                g[k] = r.uniform(0.5, 1.5);
            }
            const HomogeneousLattice l(c, rest, g, SpringLaw::recombination(2));
            const Matrix f = shear_witness_order1(c);
            std::vector<int> all(c.size());
            for (std::size_t k = 0; k < c.size(); ++k) all[k] = static_cast<int>(k);
            shear_ok = shear_ok && is_shear(f, extend_to_basis(c, all));
            const int d = c.dimension();
            worst = std::max(worst, std::abs(cauchy_born_energy(l, f) - cauchy_born_energy(l, Matrix::Identity(d, d))));
        }
        out.push_back({"order-1 witness is a shear with unchanged energy", shear_ok && worst <= 1e-12, worst, 1e-12,
                       std::to_string(cs.size()) + " order-1 connectivities"});
    }

    {
        RandomStream r(opts.seed, StreamSalt::test, 5);
        const Connectivity c(2, {{1, 0}});
        const double g = 1.3;
        const HomogeneousLattice initial(c, {1.0}, SpringLaw::recombination(2));
        const HomogeneousLattice grown(c, {1.0}, {g}, SpringLaw::recombination(2));
        const Matrix ginv = decompose(grown)[0].growth_tensor.inverse();
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Matrix f = random_f(r, 2);
            const double wg = cauchy_born_energy(grown, f);
            worst = std::max(worst, std::abs(wg - cauchy_born_energy(initial, f * ginv)) / (1.0 + std::abs(wg)));
        }
        out.push_back({"order-1 growth is exactly multiplicative", worst <= 1e-12, worst, 1e-12, "{e1}, 100 F"});
    }
    return out;
}

}  // namespace growlat
