#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <qmd/tomography.hpp>

using namespace qmd;

namespace {

double factorial(int n) { return std::tgamma(double(n) + 1.0); }

DeviceParams fast_params(int n_trunc) {
    DeviceParams p;
    p.n_trunc = n_trunc;
    return p;
}

}  // namespace

TEST_CASE("Husimi function of vacuum and coherent states") {
    const int nt = 30;
    const DensityMatrix vac(Dims{1, nt + 1},
                            fock_state(0, nt).mat());
    CHECK(husimi_q(vac, 0, Complex(0.0, 0.0)) == doctest::Approx(1.0 / M_PI).epsilon(1e-10));
    const Complex beta(1.3, -0.4);
    CHECK(husimi_q(vac, 0, beta) ==
          doctest::Approx(std::exp(-std::norm(beta)) / M_PI).epsilon(1e-8));

    // coherent state: Q_n(beta) is a Poissonian in |alpha - beta|^2
    const Complex alpha(0.9, 0.5);
    const DensityMatrix rho = coherent_state(alpha, nt);
    for (int n = 0; n < 4; ++n) {
        const double x = std::norm(alpha - beta);
        const double expect = std::exp(-x) * std::pow(x, n) / (M_PI * factorial(n));
        CHECK(husimi_q(rho, n, beta) == doctest::Approx(expect).epsilon(1e-6));
    }

    // completeness: pi sum_n Q_n(beta) = Tr rho = 1 inside the truncation
    double total = 0.0;
    for (int n = 0; n <= nt; ++n) total += M_PI * husimi_q(rho, n, Complex(0.4, 0.2));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_AS(husimi_q(rho, -1, beta), DimensionError);
    CHECK_THROWS_AS(husimi_q(rho, nt + 1, beta), DimensionError);
    CHECK_THROWS_AS(husimi_q(qubit_mixed(0.1), 0, beta), DimensionError);
}

TEST_CASE("square tomography grid layout and JSON round trip") {
    TomographyGrid g = TomographyGrid::make_square(5, 2.0, 3);
    REQUIRE(g.beta.size() == 25);
    REQUIRE(g.fock_indices.size() == 4);
    // row-major: first point is the bottom-left corner, rows advance in Im
    CHECK(g.beta.front() == Complex(-2.0, -2.0));
    CHECK(g.beta.back() == Complex(2.0, 2.0));
    CHECK(g.beta[1] == Complex(-1.0, -2.0));
    CHECK(g.beta[5] == Complex(-2.0, -1.0));

    for (std::size_t k = 0; k < g.fock_indices.size(); ++k)
        for (std::size_t b = 0; b < g.n_beta(); ++b)
            g.at(k, b) = 0.01 * double(k * 100 + b);

    const TomographyGrid back = TomographyGrid::from_json(g.to_json());
    REQUIRE(back.beta.size() == g.beta.size());
    REQUIRE(back.fock_indices == g.fock_indices);
    for (std::size_t b = 0; b < g.n_beta(); ++b)
        CHECK(std::abs(back.beta[b] - g.beta[b]) < 1e-12);
    for (std::size_t k = 0; k < g.fock_indices.size(); ++k)
        for (std::size_t b = 0; b < g.n_beta(); ++b)
            CHECK(back.at(k, b) == doctest::Approx(g.at(k, b)).epsilon(1e-10));

    CHECK_THROWS_AS(TomographyGrid::make_square(0, 2.0, 3), ValidationError);
    CHECK_THROWS_AS(TomographyGrid::make_square(5, -1.0, 3), ValidationError);
}

TEST_CASE("backpropagated effects are valid POVM elements") {
    const DeviceParams p = fast_params(10);
    TomographyGrid grid = TomographyGrid::make_square(2, 1.0, 1);
    const EffectSet effects = build_effects(grid, p);
    REQUIRE(effects.effect_post_disp.size() == 2);
    for (std::size_t k = 0; k < effects.fock_indices.size(); ++k)
        for (std::size_t b = 0; b < effects.beta.size(); ++b) {
            const EffectOperator e = effects.effect_at_zero(k, b);
            e.validate(1e-7);  // spectrum within [0,1]
            CHECK(e.fock_label == effects.fock_indices[k]);
        }
}

TEST_CASE("adjoint effects agree with forward propagation") {
    const DeviceParams p = fast_params(10);
    TomographyGrid grid = TomographyGrid::make_square(1, 1e-9, 1);
    grid.beta = {Complex(0.45, -0.3)};
    grid.p_e.assign(grid.beta.size() * grid.fock_indices.size(), 0.0);

    TomographyPulseConfig cfg;
    cfg.include_excitation = true;  // match the forward channel set exactly
    cfg.rtol = 1e-10;
    const EffectSet effects = build_effects(grid, p, cfg);

    const DensityMatrix rho_joint =
        tensor_states(qubit_mixed(0.03), coherent_state(Complex(0.6, 0.2), p.n_trunc));
    const TomographyGrid data = simulate_tomography(rho_joint, effects);

    // forward oracle: instantaneous displacement, then the selective pulse
    for (std::size_t k = 0; k < grid.fock_indices.size(); ++k) {
        const int n = grid.fock_indices[k];
        const Operator d =
            tensor(Operator::identity({2, 1}), displacement(grid.beta[0], p.n_trunc));
        const Matrix m = d.mat().adjoint() * rho_joint.mat() * d.mat();
        const DensityMatrix displaced(rho_joint.dims(), m);

        const PulseShape shape{ShapeKind::Gaussian, 50e-9, 200e-9};
        PulseSequence seq;
        seq.total_duration = 400e-9;
        PulseSegment pulse;
        pulse.target = Port::QubitB;
        pulse.shape = shape;
        pulse.start = 0.0;
        pulse.duration = 400e-9;
        pulse.amplitude =
            area_theorem_pi_amplitude(shape, 400e-9) * std::polar(1.0, M_PI / 2.0);
        pulse.carrier_detuning = -double(n) * p.chi + double(n) * n * p.chi2;
        seq.segments.push_back(pulse);

        EvolveOptions opts;
        opts.rtol = 1e-10;
        const Trajectory traj = evolve(displaced, p, seq, {0.0, 400e-9}, opts);
        CHECK(std::abs(data.at(k, 0) - traj.p_e.back()) < 1e-7);
    }
    // the n-selective pulse flips on its own peak once the photon cannot
    // decay away during the 400 ns pulse
    DeviceParams ideal = p;
    ideal.kappa_D = 0.0;
    ideal.gamma_1 = 0.0;
    ideal.gamma_b = 0.0;
    ideal.gamma_phi = 0.0;
    ideal.p_e0 = 0.0;
    const DensityMatrix one =
        tensor_states(qubit_mixed(0.0), DensityMatrix(Dims{1, 11}, fock_state(1, 10).mat()));
    TomographyGrid origin = TomographyGrid::make_square(1, 1e-9, 1);
    const EffectSet e0 = build_effects(origin, ideal, cfg);
    const TomographyGrid resp = simulate_tomography(one, e0);
    CHECK(resp.at(1, 0) > 0.95);   // resonant with one photon
    CHECK(resp.at(0, 0) < 0.05);   // 32.9 MHz off the zero-photon line
}

TEST_CASE("noiseless tomography round trip recovers the state") {
    const DeviceParams p = fast_params(30);
    TomographyGrid grid = TomographyGrid::make_square(7, 2.0, 2);
    const EffectSet effects = build_effects(grid, p);

    ReconstructionConfig cfg;
    cfg.n_trunc_recon = 10;
    cfg.p_g = 0.97;

    // forward data generated with the same readout infidelity the
    // reconstruction assumes
    const Complex alpha(1.2, 0.0);
    const DensityMatrix rho_joint =
        tensor_states(qubit_mixed(1.0 - cfg.p_g), coherent_state(alpha, p.n_trunc));
    const TomographyGrid data = simulate_tomography(rho_joint, effects);

    const ReconstructionResult res = maxlike_reconstruct(data, effects, cfg);
    CHECK(res.converged);
    CHECK(res.rms_residual < 1e-4);
    const Vector target = displacement(alpha, cfg.n_trunc_recon).mat().col(0);
    CHECK(fidelity_with_pure(res.rho_D, target) > 0.99);
    CHECK(res.S_D < 0.1);

    // accepted iterates never decrease the likelihood surrogate
    for (std::size_t i = 1; i < res.log_likelihood.size(); ++i)
        CHECK(res.log_likelihood[i] >= res.log_likelihood[i - 1] - 1e-15);

    // vacuum input reconstructs to a near-pure state
    const DensityMatrix vac_joint = tensor_states(
        qubit_mixed(1.0 - cfg.p_g),
        DensityMatrix(Dims{1, p.n_trunc + 1}, fock_state(0, p.n_trunc).mat()));
    const ReconstructionResult vac_res =
        maxlike_reconstruct(simulate_tomography(vac_joint, effects), effects, cfg);
    CHECK(vac_res.S_D < 0.02);
    Vector vac_vec = Vector::Zero(cfg.n_trunc_recon + 1);
    vac_vec(0) = 1.0;
    CHECK(fidelity_with_pure(vac_res.rho_D, vac_vec) > 0.995);
}

TEST_CASE("reconstruction rejects inconsistent inputs") {
    const DeviceParams p = fast_params(8);
    TomographyGrid grid = TomographyGrid::make_square(2, 1.0, 1);
    const EffectSet effects = build_effects(grid, p);

    ReconstructionConfig bad;
    bad.p_g = 1.5;
    CHECK_THROWS_AS(maxlike_reconstruct(grid, effects, bad), ValidationError);

    ReconstructionConfig deep;
    deep.n_trunc_recon = 40;  // beyond the simulation truncation
    CHECK_THROWS_AS(maxlike_reconstruct(grid, effects, deep), DimensionError);

    TomographyGrid mismatched = TomographyGrid::make_square(3, 1.0, 1);
    ReconstructionConfig cfg;
    cfg.n_trunc_recon = 6;
    CHECK_THROWS_AS(maxlike_reconstruct(mismatched, effects, cfg), DimensionError);

    const DensityMatrix wrong =
        tensor_states(qubit_mixed(0.0), DensityMatrix(Dims{1, 5}, fock_state(0, 4).mat()));
    CHECK_THROWS_AS(simulate_tomography(wrong, effects), DimensionError);
}

TEST_CASE("entropy sensitivity sweep touches every requested parameter") {
    const DeviceParams p = fast_params(12);
    TomographyGrid grid = TomographyGrid::make_square(3, 1.2, 1);
    const EffectSet effects = build_effects(grid, p);
    const DensityMatrix rho_joint =
        tensor_states(qubit_mixed(0.03), coherent_state(Complex(0.5, 0.0), p.n_trunc));
    const TomographyGrid data = simulate_tomography(rho_joint, effects);

    ReconstructionConfig base;
    base.n_trunc_recon = 6;
    const auto rows =
        entropy_sensitivity_sweep(data, effects, base, {5, 6}, {1.2}, {0.95, 0.97});
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].parameter == "n_trunc_recon");
    CHECK(rows[2].parameter == "beta_max");
    CHECK(rows[3].parameter == "p_g");
    for (const auto& r : rows) {
        CHECK(std::isfinite(r.S_D));
        CHECK(r.S_D >= -1e-9);
    }
}
