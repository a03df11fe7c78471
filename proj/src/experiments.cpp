#include "growlat/experiments.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

#include "growlat/checks.hpp"
#include "growlat/continuum.hpp"
#include "growlat/homogenize.hpp"
#include "growlat/lattice.hpp"
#include "growlat/rng.hpp"
#include "growlat/solver.hpp"

namespace growlat {

namespace fs = std::filesystem;

namespace {

const double kSqrt2 = std::numbers::sqrt2;

json axis(double lo, double hi, int count) { return {{"lo", lo}, {"hi", hi}, {"count", count}}; }

json family(const std::string& kind, double stretch, double shear, int samples) {
    return {{"kind", kind}, {"stretch", stretch}, {"shear", shear}, {"samples", samples}};
}

json solver_defaults() { return {{"gradient_tolerance", 1e-10}, {"max_iterations", 50000}}; }

json search_defaults() { return {{"lo", 0.5}, {"hi", 1.5}, {"steps", {0.01, 0.0025, 0.0005}}}; }

json example_growth(const std::string& name) {
    if (name == "ex4") return {1.0, 1.0, 0.9, 0.9};
    if (name == "ex5") return {1.0, 1.0, 1.1, 1.1};
    if (name == "ex6") return {1.0, 1.0, 0.9, std::sqrt(2.0 - 0.81)};
    if (name == "ex7") return {1.0, 1.0, 0.9, 1.1};
    throw std::invalid_argument("unknown example '" + name + "' (expected ex4, ex5, ex6 or ex7)");
}

json defaults(const std::string& command, const std::string& target) {
    json c = {{"command", command}, {"target", target}, {"seed", 1}, {"q", 2}};
    if (command == "error-map") {
        example_growth(target);
        c["grid"] = {{"lambda1", axis(0.8, 1.25, 46)}, {"lambda2", axis(0.8, 1.25, 46)}, {"lambda3", axis(-0.5, 0.5, 41)}};
        c["thresholds"] = {0.10, 0.20};
    } else if (command == "simulate") {
        c["solver"] = solver_defaults();
        c["search"] = search_defaults();
        c["tolerance"] = 0.10;
        c["max_drift"] = 0.01;
        c["rest"] = {{"axis", 1.0}, {"diagonal", kSqrt2}};
        if (target == "sim1") {
            c["n_values"] = {8, 16, 32, 64};
            c["checkerboard_high"] = 1.2;
            c["families"] = {family("d", 1.25, 0.25, 60), family("s", 1.25, 0.25, 60)};
        } else if (target == "sim2" || target == "sim3" || target == "sim4") {
            c["n_values"] = {8, 16, 32};
            c["growth"] = {{"axis", {0.8, 1.2}}, {"diagonal", {0.8, 1.2}}};
            c["families"] = {family("d", 1.5, 0.5, 41), family("s", 1.5, 0.5, 41)};
            if (target == "sim3") c["rest"]["diagonal"] = 1.25;
            if (target == "sim4") c["rest"] = {{"axis", {0.8, 1.2}}, {"diagonal", {0.8 * kSqrt2, 1.2 * kSqrt2}}};
        } else if (target == "sim2-sweep") {
            c["n_values"] = {16};
            c["deltas_hv"] = {0.0, 0.05, 0.1, 0.15, 0.2};
            c["deltas_d"] = {0.0, 0.05, 0.1, 0.15, 0.2};
            c["families"] = {family("d", 1.5, 0.5, 21)};
        } else {
            throw std::invalid_argument("unknown simulation '" + target + "' (expected sim1, sim2, sim2-sweep, sim3 or sim4)");
        }
    } else if (command == "oned") {
        c["profile"] = {{"g0", 1.0}, {"slope", 1.0}};
        c["rest"] = 1.0;
        c["p"] = 0.0;
        c["f_values"] = {2.0};
        c["n_values"] = {8, 16, 32, 64, 128, 256, 512};
        c["solver"] = solver_defaults();
    } else if (command == "order") {
        c["dimension"] = 2;
        c["directions"] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    } else if (command == "ground-state") {
        json ls = json::array();
        for (const char* n : {"ex4", "ex5", "ex6", "ex7"})
            ls.push_back({{"name", n}, {"rest", {1.0, 1.0, kSqrt2, kSqrt2}}, {"growth", example_growth(n)}});
        c["lattices"] = ls;
    } else if (command == "decompose") {
        c["rest"] = {1.0, 1.0, kSqrt2, kSqrt2};
        c["growth"] = {1.0, 1.0, 0.9, 1.1};
        c["partitions"] = {1, 2, 3};
        c["samples"] = 100;
    } else if (command == "check") {
        c["perturb"] = false;
        c["decomposition_trials"] = 1000;
        c["admissibility_trials"] = 10000;
    } else {
        throw std::invalid_argument("unknown command '" + command + "'");
    }
    return c;
}

void merge_checked(json& base, const json& user, const std::string& path) {
    if (!user.is_object()) throw std::invalid_argument("config " + (path.empty() ? std::string("root") : path) + " must be an object");
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key())) throw std::invalid_argument("unknown config key '" + key + "'");
        json& slot = base[it.key()];
        if (slot.is_object() && it->is_object()) {
            merge_checked(slot, *it, key);
        } else {
            if (slot.is_number() != it->is_number() && !slot.is_null())
                throw std::invalid_argument("config key '" + key + "' has the wrong type");
            slot = *it;
        }
    }
}

SolveOptions solve_options(const json& c) {
    SolveOptions o;
    o.gradient_tolerance = c.at("solver").at("gradient_tolerance").get<double>();
    o.max_iterations = c.at("solver").at("max_iterations").get<int>();
    return o;
}

SearchOptions search_options(const json& c) {
    SearchOptions s;
    s.lo = c.at("search").at("lo").get<double>();
    s.hi = c.at("search").at("hi").get<double>();
    s.steps = c.at("search").at("steps").get<std::vector<double>>();
    return s;
}

DeformationFamily parse_family_config(const json& j) {
    DeformationFamily f;
    f.kind = parse_family(j.at("kind").get<std::string>());
    f.stretch = j.at("stretch").get<double>();
    f.shear = j.at("shear").get<double>();
    f.samples = j.at("samples").get<int>();
    f.validate();
    return f;
}

Interval interval(const json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 2 || !(v[0] <= v[1])) throw std::invalid_argument("intervals are [lo, hi] with lo <= hi");
    return {v[0], v[1]};
}

SpringLaw law_of(const json& c) { return SpringLaw::recombination(c.at("q").get<int>()); }

void write_curve(const fs::path& path, std::span<const FamilySample> samples, const FitResult& fit) {
    CsvWriter w(path, {"lambda", "target", "model", "fractional_error"});
    for (std::size_t k = 0; k < fit.retained.size(); ++k) {
        w.cell(samples[fit.retained[k]].params.front()).cell(fit.targets[k]).cell(fit.model[k]).cell(fit.errors[k]);
        w.end_row();
    }
    w.close();
}

std::vector<int> n_values(const json& c) { return c.at("n_values").get<std::vector<int>>(); }

}  // namespace

json resolve_config(const std::string& command, const std::string& target, const json& user, const Overrides& ov) {
    json c = defaults(command, target);
    if (!user.is_null()) {
        json u = user;
        for (const char* k : {"command", "target"})
            if (u.contains(k)) {
                if (u[k] != c[k]) throw std::invalid_argument(std::string("config '") + k + "' disagrees with the command line");
                u.erase(k);
            }
        merge_checked(c, u, "");
    }
    if (ov.seed) c["seed"] = *ov.seed;
    if (ov.q) {
        if (*ov.q < 2) throw std::invalid_argument("--q must be at least 2");
        c["q"] = *ov.q;
    }
    if (ov.n) {
        if (!c.contains("n_values")) throw std::invalid_argument("--n does not apply to " + command);
        c["n_values"] = {*ov.n};
    }
    if (ov.family) {
        if (!c.contains("families")) throw std::invalid_argument("--family does not apply to " + command);
        json f = c["families"].front();
        f["kind"] = *ov.family;
        parse_family_config(f);
        c["families"] = {f};
    }
    return c;
}

HomogeneousLattice example_lattice(const std::string& name, int q) {
    return square_lattice(1.0, kSqrt2, example_growth(name).get<std::vector<double>>(), SpringLaw::recombination(q));
}

RunResult run(const json& c, const fs::path& out) {
    const std::string cmd = c.at("command").get<std::string>();
    if (cmd == "error-map") return run_error_map(c, out);
    if (cmd == "simulate") return run_simulation(c, out);
    if (cmd == "oned") return run_oned(c, out);
    if (cmd == "order") return run_order(c, out);
    if (cmd == "ground-state") return run_ground_state(c, out);
    if (cmd == "decompose") return run_decompose(c, out);
    if (cmd == "check") return run_checks(c, out);
    throw std::invalid_argument("unknown command '" + cmd + "'");
}

RunResult run_error_map(const json& c, const fs::path& out) {
    const std::string name = c.at("target");
    const int q = c.at("q");
    const HomogeneousLattice grown = example_lattice(name, q);
    const HomogeneousLattice initial = square_lattice(1.0, kSqrt2, {1, 1, 1, 1}, SpringLaw::recombination(q));
    ErrorGrid grid;
    auto ax = [&](const char* k) {
        const json& a = c.at("grid").at(k);
        return AxisRange{a.at("lo").get<double>(), a.at("hi").get<double>(), a.at("count").get<int>()};
    };
    grid.l1 = ax("lambda1");
    grid.l2 = ax("lambda2");
    grid.l3 = ax("lambda3");
    GroundStateOptions gopt;
    gopt.seed = c.at("seed");
    const GroundState gs = ground_state(grown, gopt);
    const auto thresholds = c.at("thresholds").get<std::vector<double>>();
    const ErrorMap map = fractional_error_map(initial, grown, gs.gradient.matrix(), grid, thresholds, Execution::parallel);
    write_error_map_csv(map, out / (name + "_error_map.csv"));

    RunResult r;
    json areas = json::object();
    for (std::size_t t = 0; t < thresholds.size(); ++t)
        areas["above_" + format_double(thresholds[t])] = map.area_fraction(t);
    r.summary = {{"config", c}, {"ground_state", to_json(gs)}, {"area_fraction", areas},
                 {"undefined_points", map.undefined_count()}, {"points", map.values.size()}};
    return r;
}

namespace {

FiniteLatticeSample sim_sample(const json& c, int n, bool with_growth) {
    const std::string t = c.at("target");
    const std::uint64_t seed = c.at("seed");
    const SpringLaw law = law_of(c);
    RestSpec rest;
    if (t == "sim4") {
        const Interval a = interval(c["rest"]["axis"]), d = interval(c["rest"]["diagonal"]);
        rest = RestSpec::uniform({a, a, d, d}, seed);
    } else {
        const double a = c["rest"]["axis"], d = c["rest"]["diagonal"];
        rest = RestSpec::constant({a, a, d, d});
    }
    GrowthScenario g = GrowthScenario::none();
    if (with_growth) {
        if (t == "sim1") {
            g = GrowthScenario::checkerboard(c.at("checkerboard_high"));
        } else {
            const Interval a = interval(c["growth"]["axis"]), d = interval(c["growth"]["diagonal"]);
            g = GrowthScenario::uniform({a, a, d, d}, seed);
        }
    }
    return build_sample(square_connectivity(), n, rest, g, law);
}

HomogeneousLattice sim_initial(const json& c) {
    if (c.at("target") == "sim4") return square_lattice(1.0, kSqrt2, {1, 1, 1, 1}, law_of(c));
    const double a = c["rest"]["axis"], d = c["rest"]["diagonal"];
    return square_lattice(a, d, {1, 1, 1, 1}, law_of(c));
}

json run_growth_family(const json& c, const DeformationFamily& fam, const fs::path& out) {
    const std::string t = c.at("target");
    const std::string fname = family_name(fam.kind);
    const auto samples = sample_family(fam);
    const SolveOptions sopt = solve_options(c);
    GrowthAnsatz ansatz;
    ansatz.search = search_options(c);
    const auto ns = n_values(c);
    const double tol = c.at("tolerance");

    std::vector<std::string> header = {"n"};
    const bool sim4 = t == "sim4";
    if (sim4) header.insert(header.end(), {"L1", "Lpm", "rest_mse", "rest_max_fractional_error"});
    for (auto& nm : ansatz.parameter_names()) header.push_back(nm);
    header.insert(header.end(), {"relative_mse", "max_fractional_error"});
    CsvWriter table(out / (t + "_" + fname + "_table.csv"), header);

    json rows = json::array();
    std::vector<std::vector<double>> params;
    double worst = 0.0;
    for (int n : ns) {
        json row = {{"n", n}};
        HomogeneousLattice initial = sim_initial(c);
        table.cell(n);
        if (sim4) {
            const auto plain = sim_sample(c, n, false);
            const auto reps = solve_targets(plain, samples, sopt);
            const auto targets = make_targets(samples, reps);
            const FitResult rest = fit_rest_lengths(initial, targets, RestGroups::square_tied(), ansatz.search);
            const double l1 = rest.values[0], lpm = rest.values[1];
            initial = square_lattice(l1, lpm, {1, 1, 1, 1}, law_of(c));
            row["rest_fit"] = to_json(rest);
            write_curve(out / (t + "_" + fname + "_N" + std::to_string(n) + "_rest.csv"), samples, rest);
            table.cell(l1).cell(lpm).cell(rest.relative_mse).cell(rest.max_abs_error);
            worst = std::max(worst, rest.max_abs_error);
        }
        const auto s = sim_sample(c, n, true);
        const auto reps = solve_targets(s, samples, sopt);
        const auto targets = make_targets(samples, reps);
        const FitResult fit = fit_growth(initial, targets, ansatz);
        for (double v : fit.values) table.cell(v);
        table.cell(fit.relative_mse).cell(fit.max_abs_error);
        table.end_row();
        write_curve(out / (t + "_" + fname + "_N" + std::to_string(n) + ".csv"), samples, fit);
        row["growth_fit"] = to_json(fit);
        int iters = 0;
        for (const auto& rep : reps) iters += rep.iterations;
        row["solver_iterations"] = iters;
        params.push_back(fit.values);
        worst = std::max(worst, fit.max_abs_error);

        if (t == "sim1" && n == ns.back()) {
            // Untied diagonal growth: the two diagonal factors may differ.
            GrowthAnsatz untied = ansatz;
            untied.forms = {TensorForm::isotropic, TensorForm::rotated_diagonal};
            row["untied_fit"] = to_json(fit_growth(initial, targets, untied));
        }
        rows.push_back(row);
        std::cerr << t << " family " << fname << " N=" << n << " done\n";
    }
    table.close();

    double drift = 0.0;
    if (params.size() >= 2)
        for (std::size_t i = 0; i < params.back().size(); ++i)
            drift = std::max(drift, std::abs(params.back()[i] - params[params.size() - 2][i]));
    const double max_drift = c.at("max_drift");
    return {{"family", fname},
            {"rows", rows},
            {"drift", drift},
            {"drift_ok", drift <= max_drift},
            {"max_fractional_error", worst},
            {"within_tolerance", worst <= tol}};
}

RunResult run_sweep(const json& c, const fs::path& out) {
    RunResult r;
    const auto fam = parse_family_config(c.at("families").front());
    const auto samples = sample_family(fam);
    const SolveOptions sopt = solve_options(c);
    GrowthAnsatz ansatz;
    ansatz.search = search_options(c);
    const HomogeneousLattice initial = sim_initial(c);
    const int n = n_values(c).back();
    const auto dhv = c.at("deltas_hv").get<std::vector<double>>();
    const auto dd = c.at("deltas_d").get<std::vector<double>>();
    const std::uint64_t seed = c.at("seed");
    const double a = c["rest"]["axis"], d = c["rest"]["diagonal"];

    CsvWriter w(out / "sim2-sweep_surface.csv", {"delta_hv", "delta_d", "gamma1", "gamma2", "relative_mse", "max_fractional_error"});
    std::vector<std::vector<double>> g2(dhv.size(), std::vector<double>(dd.size()));
    double g1_dev = 0.0;
    for (std::size_t i = 0; i < dhv.size(); ++i) {
        for (std::size_t j = 0; j < dd.size(); ++j) {
            const Interval ia{1 - dhv[i], 1 + dhv[i]}, id{1 - dd[j], 1 + dd[j]};
            const auto s = build_sample(square_connectivity(), n, RestSpec::constant({a, a, d, d}),
                                        GrowthScenario::uniform({ia, ia, id, id}, seed), law_of(c));
            const auto targets = make_targets(samples, solve_targets(s, samples, sopt));
            const FitResult fit = fit_growth(initial, targets, ansatz);
            w.cell(dhv[i]).cell(dd[j]).cell(fit.values[0]).cell(fit.values[1]).cell(fit.relative_mse).cell(fit.max_abs_error);
            w.end_row();
            g2[i][j] = fit.values[1];
            g1_dev = std::max(g1_dev, std::abs(fit.values[0] - 1.0));
        }
    }
    w.close();
    bool decreasing = true;
    for (const auto& rowv : g2)
        for (std::size_t j = 1; j < rowv.size(); ++j)
            if (rowv[j] > rowv[j - 1] + 1e-3) decreasing = false;
    r.summary = {{"config", c},
                 {"n", n},
                 {"max_abs_gamma1_minus_1", g1_dev},
                 {"gamma2_nonincreasing_in_delta_d", decreasing}};
    return r;
}

}  // namespace

RunResult run_simulation(const json& c, const fs::path& out) {
    const std::string t = c.at("target");
    if (t == "sim2-sweep") return run_sweep(c, out);
    RunResult r;
    json fams = json::array();
    for (const auto& fj : c.at("families")) {
        const DeformationFamily fam = parse_family_config(fj);
        if (fam.kind == FamilyKind::box) throw std::invalid_argument("simulations use one-parameter families");
        try {
            fams.push_back(run_growth_family(c, fam, out));
        } catch (const std::exception& e) {
            r.failures.push_back(t + " family " + family_name(fam.kind) + ": " + e.what());
        }
    }
    r.summary = {{"config", c}, {"families", fams}};
    return r;
}

RunResult run_oned(const json& c, const fs::path& out) {
    RunResult r;
    const double g0 = c.at("profile").at("g0"), slope = c.at("profile").at("slope");
    const GrowthProfile prof{[=](double x) { return g0 * x + 0.5 * slope * x * x; },
                             [=](double x) { return g0 + slope * x; }};
    SpringLaw law = SpringLaw::recombination(c.at("q"));
    law.homogeneity = c.at("p");
    const double rest = c.at("rest");
    const SolveOptions sopt = solve_options(c);
    CsvWriter w(out / "oned.csv", {"F", "n", "chain_energy", "continuum_energy", "abs_error"});
    json series = json::array();
    for (double f : c.at("f_values").get<std::vector<double>>()) {
        const double cont = one_d_continuum_energy(prof, rest, law, f);
        json pts = json::array();
        double prev_err = -1.0;
        std::vector<double> rates;
        for (int n : n_values(c)) {
            const SolveReport rep = minimize_chain(chain_sample(prof, rest, law, n), f, sopt);
            if (!rep.converged) r.failures.push_back("chain N=" + std::to_string(n) + ": " + rep.message);
            const double err = std::abs(rep.per_cell_energy - cont);
            w.cell(f).cell(n).cell(rep.per_cell_energy).cell(cont).cell(err);
            w.end_row();
            if (prev_err > 0.0 && err > 0.0) rates.push_back(std::log2(prev_err / err));
            prev_err = err;
            pts.push_back({{"n", n}, {"chain_energy", rep.per_cell_energy}, {"abs_error", err}});
        }
        double rate = 0.0;
        for (double x : rates) rate += x;
        series.push_back({{"F", f},
                          {"continuum_energy", cont},
                          {"points", pts},
                          {"mean_convergence_order", rates.empty() ? 0.0 : rate / static_cast<double>(rates.size())}});
    }
    w.close();
    r.summary = {{"config", c}, {"series", series}};
    return r;
}

RunResult run_order(const json& c, const fs::path&) {
    RunResult r;
    const auto dirs = c.at("directions").get<std::vector<IntVec>>();
    const Connectivity con(c.at("dimension").get<int>(), dirs);
    const LatticeOrder lo = lattice_order(con);
    r.summary = {{"config", c}, {"order", lo.order}, {"labels", lo.labels}, {"classes", lo.classes()}};
    if (lo.order == 1 && con.dimension() > 1) {
        const Matrix f = shear_witness_order1(con);
        r.summary["shear_witness"] = to_json(f);
    }
    return r;
}

RunResult run_ground_state(const json& c, const fs::path& out) {
    RunResult r;
    CsvWriter w(out / "ground_states.csv", {"name", "G11", "G12", "G22", "energy", "gradient_norm"});
    json res = json::array();
    GroundStateOptions gopt;
    gopt.seed = c.at("seed");
    for (const auto& lj : c.at("lattices")) {
        const std::string name = lj.at("name");
        const auto rest = lj.at("rest").get<std::vector<double>>();
        const auto growth = lj.at("growth").get<std::vector<double>>();
        try {
            const HomogeneousLattice l(square_connectivity(), rest, growth, law_of(c));
            const GroundState gs = ground_state(l, gopt);
            const Matrix& g = gs.gradient.matrix();
            w.cell(name).cell(g(0, 0)).cell(g(0, 1)).cell(g(1, 1)).cell(gs.energy).cell(gs.gradient_norm);
            w.end_row();
            json j = to_json(gs);
            j["name"] = name;
            res.push_back(j);
        } catch (const std::exception& e) {
            r.failures.push_back(name + ": " + e.what());
        }
    }
    w.close();
    r.summary = {{"config", c}, {"ground_states", res}};
    return r;
}

RunResult run_decompose(const json& c, const fs::path&) {
    RunResult r;
    const HomogeneousLattice l(square_connectivity(), c.at("rest").get<std::vector<double>>(),
                               c.at("growth").get<std::vector<double>>(), law_of(c));
    RandomStream rng(c.at("seed"), StreamSalt::test, 0);
    const int samples = c.at("samples");
    json out = json::array();
    for (int choice : c.at("partitions").get<std::vector<int>>()) {
        const Decomposition dec = choice == 0 ? decompose(l) : decompose(l, square_partition(choice));
        double worst = 0.0;
        for (int i = 0; i < samples; ++i) {
            Matrix f = Matrix::Identity(2, 2);
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) f(a, b) += rng.uniform(-0.5, 0.5);
            const double wg = cauchy_born_energy(l, f);
            worst = std::max(worst, std::abs(wg - dec.grown_energy(f)) / (1.0 + std::abs(wg)));
        }
        json j = to_json(dec);
        j["partition"] = choice;
        j["max_relative_residual"] = worst;
        if (worst > 1e-12) r.failures.push_back("partition " + std::to_string(choice) + " residual " + format_double(worst));
        out.push_back(j);
    }
    const auto adm = multiplicative_admissible({l.growth[0], l.growth[1], l.growth[2], l.growth[3]});
    r.summary = {{"config", c},
                 {"decompositions", out},
                 {"multiplicative", {{"admissible", adm.admissible}, {"violated", adm.violated}, {"lhs", adm.lhs}, {"rhs", adm.rhs}}}};
    return r;
}

RunResult run_checks(const json& c, const fs::path&) {
    RunResult r;
    CheckOptions o;
    o.seed = c.at("seed");
    o.perturb = c.at("perturb");
    o.decomposition_trials = c.at("decomposition_trials");
    o.admissibility_trials = c.at("admissibility_trials");
    json lines = json::array();
    for (const auto& l : run_identity_checks(o)) {
        lines.push_back({{"name", l.name}, {"passed", l.passed}, {"worst", l.worst}, {"tolerance", l.tolerance}, {"detail", l.detail}});
        if (!l.passed) r.failures.push_back(l.name + ": worst " + format_double(l.worst));
    }
    r.summary = {{"config", c}, {"checks", lines}};
    return r;
}

}  // namespace growlat
