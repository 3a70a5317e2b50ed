#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <qmd/dynamics.hpp>

using namespace qmd;

namespace {

PulseSequence idle_sequence(double duration) {
    PulseSequence seq;
    seq.total_duration = duration;
    seq.markers = {{"step1_start", 0.0}, {"step3_end", duration}};
    return seq;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
    return v;
}

DensityMatrix random_state(Dims dims, std::mt19937& rng) {
    std::normal_distribution<double> g;
    const int d = dims.total();
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = Complex(g(rng), g(rng));
    Matrix rho = m * m.adjoint();
    rho /= rho.trace();
    return DensityMatrix(dims, std::move(rho));
}

}  // namespace

TEST_CASE("amplitude damping of |e,0> follows the exponential law") {
    DeviceParams p;
    p.n_trunc = 3;
    p.p_e0 = 0.0;  // pure decay
    p.gamma_phi = 0.0;
    DensityMatrix rho0 = tensor_states(qubit_mixed(1.0), fock_state(0, p.n_trunc));
    const auto grid = linspace(0.0, 4e-6, 41);
    Trajectory traj = evolve(rho0, p, idle_sequence(4e-6), grid);
    REQUIRE(traj.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double expect = 2.0 * std::exp(-p.gamma_1 * grid[i]) - 1.0;
        CHECK(std::abs(traj.sz[i] - expect) < 1e-6);
        CHECK(traj.trace_err[i] <= 1e-9);
    }
}

TEST_CASE("detailed balance relaxes the qubit to p_e0") {
    DeviceParams p;
    p.n_trunc = 2;
    DensityMatrix rho0 = tensor_states(qubit_pure(1.0, 0.0), fock_state(0, p.n_trunc));
    const auto grid = linspace(0.0, 30e-6, 31);  // ~14 T1
    Trajectory traj = evolve(rho0, p, idle_sequence(30e-6), grid);
    CHECK(std::abs(traj.p_e.back() - p.p_e0) < 1e-4);
    CHECK(steady_state_population(p) == doctest::Approx(p.p_e0).epsilon(1e-12));
}

TEST_CASE("cavity decay empties a coherent state at kappa") {
    DeviceParams p;
    p.n_trunc = 12;
    p.kerr_K = 0.0;  // keep the state coherent so nbar(t) is exactly exponential
    p.chi2 = 0.0;
    DensityMatrix rho0 =
        tensor_states(qubit_pure(1.0, 0.0), coherent_state(Complex(1.2, 0.0), p.n_trunc));
    const auto grid = linspace(0.0, 1.5e-6, 16);
    Trajectory traj = evolve(rho0, p, idle_sequence(1.5e-6), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double expect = 1.44 * std::exp(-p.kappa_rate() * grid[i]);
        CHECK(traj.nbar[i] == doctest::Approx(expect).epsilon(1e-5));
    }
}

TEST_CASE("purity never exceeds one and trace stays pinned") {
    DeviceParams p;
    p.n_trunc = 8;
    PulseSequence seq = make_continuous_sequence(300e-9, 0.8, p);
    DensityMatrix rho0 = thermal_joint_state(p);
    auto grid = linspace(0.0, seq.total_duration, 40);
    EvolveOptions opts;
    opts.snapshot_times = {grid[15], grid.back()};
    Trajectory traj = evolve(rho0, p, seq, grid, opts);
    for (double e : traj.trace_err) CHECK(e <= 1e-9);
    for (const auto& [t, rho] : traj.snapshots) {
        CHECK(rho.purity() <= 1.0 + 1e-9);
        CHECK_NOTHROW(rho.validate());
    }
    CHECK(traj.snapshot_at(grid.back()).dims() == rho0.dims());
    CHECK_THROWS_AS(traj.snapshot_at(1.234e-5), std::exception);
}

TEST_CASE("adaptive and fixed-step integrators agree") {
    DeviceParams p;
    p.n_trunc = 5;
    PulseSequence seq = make_continuous_sequence(200e-9, 0.5, p);
    DensityMatrix rho0 = thermal_joint_state(p);
    auto grid = linspace(0.0, seq.total_duration, 20);
    EvolveOptions tight;
    tight.rtol = 1e-10;
    EvolveOptions fixed;
    fixed.fixed_dt = 5e-11;
    Trajectory a = evolve(rho0, p, seq, grid, tight);
    Trajectory b = evolve(rho0, p, seq, grid, fixed);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(std::abs(a.sz[i] - b.sz[i]) < 1e-6);
        CHECK(std::abs(a.nbar[i] - b.nbar[i]) < 1e-6);
    }
}

TEST_CASE("tightening tolerances converges the adaptive answer") {
    DeviceParams p;
    p.n_trunc = 5;
    PulseSequence seq = make_continuous_sequence(200e-9, 1.0, p);
    DensityMatrix rho0 = thermal_joint_state(p);
    auto grid = linspace(0.0, seq.total_duration, 8);
    EvolveOptions loose, tight, tighter;
    loose.rtol = 1e-6;
    tight.rtol = 1e-8;
    tighter.rtol = 1e-10;
    const double szl = evolve(rho0, p, seq, grid, loose).sz.back();
    const double szt = evolve(rho0, p, seq, grid, tight).sz.back();
    const double szT = evolve(rho0, p, seq, grid, tighter).sz.back();
    CHECK(std::abs(szt - szT) < std::abs(szl - szT) + 1e-12);
    CHECK(std::abs(szt - szT) < 1e-7);
}

TEST_CASE("adjoint duality: Tr[rho(T) E_T] = Tr[rho(0) E(0)]") {
    DeviceParams p;
    p.n_trunc = 3;
    PulseSequence seq = make_continuous_sequence(200e-9, 0.6, p);
    std::mt19937 rng(123);
    std::normal_distribution<double> g;
    const int d = 2 * (p.n_trunc + 1);
    auto grid = linspace(0.0, seq.total_duration, 5);

    AdjointOptions aopt;
    aopt.include_excitation = true;  // must mirror the forward channel set
    aopt.validate = false;           // random effects are not POVM elements
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        DensityMatrix rho0 = random_state({2, p.n_trunc + 1}, rng);
        Matrix e = Matrix::Zero(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) e(i, j) = Complex(g(rng), g(rng));
        e = 0.5 * (e + Matrix(e.adjoint()));

        EvolveOptions fopt;
        fopt.snapshot_times = {seq.total_duration};
        Trajectory traj = evolve(rho0, p, seq, grid, fopt);
        const DensityMatrix& rhoT = traj.snapshot_at(seq.total_duration);

        EffectOperator eff;
        eff.op = Operator({2, p.n_trunc + 1}, e);
        EffectOperator e0 = evolve_adjoint(eff, p, seq, aopt);

        const double lhs = (rhoT.mat() * e).trace().real();
        const double rhs = (rho0.mat() * e0.op.mat()).trace().real();
        CHECK(std::abs(lhs - rhs) <= 1e-7 * std::max(1.0, std::abs(lhs)));
        ++checked;
    }
    CHECK(checked == 20);
}

TEST_CASE("adjoint of the identity stays the identity") {
    DeviceParams p;
    p.n_trunc = 4;
    PulseSequence seq = make_continuous_sequence(300e-9, 1.0, p);
    const int d = 2 * (p.n_trunc + 1);
    EffectOperator eff;
    eff.op = Operator::identity({2, p.n_trunc + 1});
    AdjointOptions aopt;
    aopt.include_excitation = true;
    EffectOperator e0 = evolve_adjoint(eff, p, seq, aopt);
    CHECK((e0.op.mat() - Matrix::Identity(d, d)).norm() < 1e-7 * d);
}

TEST_CASE("effect validation rejects out-of-range spectra") {
    EffectOperator eff;
    Matrix m = Matrix::Identity(2, 2);
    m(0, 0) = 1.5;
    eff.op = Operator({2, 1}, m);
    CHECK_THROWS_AS(eff.validate(), ValidationError);
    m(0, 0) = 0.5;
    eff.op = Operator({2, 1}, m);
    CHECK_NOTHROW(eff.validate());
}

TEST_CASE("an unphysical initial state is rejected up front") {
    DeviceParams p;
    p.n_trunc = 2;
    Matrix bad = Matrix::Zero(6, 6);
    bad(0, 0) = 2.0;  // trace 2
    DensityMatrix rho0(Dims{2, 3}, std::move(bad));
    auto grid = linspace(0.0, 1e-7, 3);
    CHECK_THROWS_AS(evolve(rho0, p, idle_sequence(1e-7), grid), ValidationError);

    // Mismatched truncation is a dimension error.
    DensityMatrix ok = tensor_states(qubit_pure(1.0, 0.0), fock_state(0, 5));
    CHECK_THROWS_AS(evolve(ok, p, idle_sequence(1e-7), grid), DimensionError);
}
