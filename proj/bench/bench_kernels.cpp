#include <benchmark/benchmark.h>

#include <cmath>

#include "growlat/continuum.hpp"
#include "growlat/rng.hpp"
#include "growlat/solver.hpp"

using namespace growlat;

namespace {

struct Setup {
    FiniteLatticeSample sample;
    SpringSystem system;
    Eigen::VectorXd x;
    Eigen::VectorXd grad;

    explicit Setup(int n)
        : sample(build_sample(square_connectivity(), n,
                              RestSpec::constant({1.0, 1.0, std::sqrt(2.0), std::sqrt(2.0)}),
                              GrowthScenario::uniform(std::vector<Interval>(4, Interval{0.8, 1.2}), 1))),
          system(sample) {
        Matrix f(2, 2);
        f << 1.05, 0.1, 0.0, 0.97;
        x = affine_field(sample, f).positions;
        RandomStream r(1, StreamSalt::test, 0);
        for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += r.uniform(-0.01, 0.01);
        grad.resize(x.size());
    }
};

void energy_gradient(benchmark::State& state, Execution exec) {
    Setup s(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(s.system.energy(s.x.data(), s.grad.data(), exec));
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(s.system.edge_count()));
}

void error_map(benchmark::State& state, Execution exec) {
    const HomogeneousLattice initial = square_lattice(1.0, std::sqrt(2.0), {1, 1, 1, 1});
    const HomogeneousLattice grown = square_lattice(1.0, std::sqrt(2.0), {1, 1, 0.9, 1.1});
    const Matrix g = Matrix::Identity(2, 2);
    for (auto _ : state) benchmark::DoNotOptimize(fractional_error_map(initial, grown, g, ErrorGrid{}, {0.1, 0.2}, exec));
}

void solve(benchmark::State& state, Execution exec) {
    Setup s(static_cast<int>(state.range(0)));
    Matrix f(2, 2);
    f << 1.05, 0.1, 0.0, 0.97;
    SolveOptions o;
    o.exec = exec;
    for (auto _ : state) benchmark::DoNotOptimize(minimize(s.sample, AffineBoundary(f), o));
}

}  // namespace

BENCHMARK_CAPTURE(energy_gradient, serial, Execution::serial)->RangeMultiplier(4)->Range(16, 256);
BENCHMARK_CAPTURE(energy_gradient, parallel, Execution::parallel)->RangeMultiplier(4)->Range(16, 256);
BENCHMARK_CAPTURE(error_map, serial, Execution::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(error_map, parallel, Execution::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(solve, serial, Execution::serial)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(solve, parallel, Execution::parallel)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
