#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include <qmd/device.hpp>

using namespace qmd;

TEST_CASE("static Hamiltonian diagonal encodes Kerr and dispersive shifts") {
    DeviceParams p;
    p.n_trunc = 10;
    Eigen::VectorXd diag = hamiltonian_static_diag(p);
    const int nc = p.n_trunc + 1;
    REQUIRE(diag.size() == 2 * nc);

    // <g,0| and <e,0| see no shift.
    CHECK(diag(0) == 0.0);
    CHECK(diag(nc) == 0.0);
    // <g,1|: -K only.
    CHECK(diag(1) == doctest::Approx(-kTwoPi * p.kerr_K).epsilon(1e-12));
    // <e,1|: -(chi - chi2) - K = -33.6 MHz total shift minus Kerr.
    const double e1 = -kTwoPi * (p.chi - p.chi2 + p.kerr_K);
    CHECK(diag(nc + 1) == doctest::Approx(e1).epsilon(1e-12));
    CHECK((p.chi - p.chi2) == doctest::Approx(32.9e6));
    // <g,n|: -K n^2 scaling.
    CHECK(diag(3) == doctest::Approx(-kTwoPi * p.kerr_K * 9.0).epsilon(1e-12));
    // <e,2|: -2 chi + 4 chi2 - 4K.
    CHECK(diag(nc + 2) ==
          doctest::Approx(kTwoPi * (-2 * p.chi + 4 * p.chi2 - 4 * p.kerr_K)).epsilon(1e-12));
}

TEST_CASE("build_hamiltonian is Hermitian and adds the drive terms") {
    DeviceParams p;
    p.n_trunc = 6;
    DriveEnvelope d;
    d.qubit_amp = [](double) { return 2.0e7; };
    d.qubit_phase = 0.7;
    d.cavity_amp = [](double) { return Complex(1.5e6, -4.0e5); };
    Operator H = build_hamiltonian(p, d, 1.0e-7);
    CHECK((H.mat() - H.mat().adjoint()).norm() < 1e-6 * H.mat().norm());

    // Removing the drives leaves the static diagonal.
    DriveEnvelope off;
    Operator H0 = build_hamiltonian(p, off, 0.0);
    Eigen::VectorXd diag = hamiltonian_static_diag(p);
    CHECK((H0.mat().diagonal().real() - diag).norm() < 1e-9);
    CHECK(H0.mat().cwiseAbs().sum() == doctest::Approx(diag.cwiseAbs().sum()).epsilon(1e-12));
}

TEST_CASE("collapse channels carry the documented rates") {
    DeviceParams p;
    p.n_trunc = 5;
    auto chans = collapse_operators(p);
    REQUIRE(chans.size() == 4);
    CHECK(chans[0].rate == doctest::Approx(kTwoPi * 0.77e6));
    CHECK(chans[1].rate == doctest::Approx((1 - 0.036) / 2.2e-6));
    CHECK(chans[2].rate == doctest::Approx(0.036 / 2.2e-6));
    CHECK(chans[3].rate == doctest::Approx(85e3 / 2.0));
    // The jump operators live on the joint space.
    for (const auto& c : chans) {
        CHECK(c.jump.dims().qubit == 2);
        CHECK(c.jump.dims().cavity == 6);
    }
    // Rates satisfy detailed balance at the equilibrium population.
    const double r = chans[2].rate / (chans[1].rate + chans[2].rate);
    CHECK(r == doctest::Approx(p.p_e0).epsilon(1e-12));
}

TEST_CASE("JSON round trip and partial configs") {
    DeviceParams p;
    p.chi = 30.0e6;
    p.n_trunc = 12;
    DeviceParams q = DeviceParams::from_json(p.to_json());
    CHECK(q.chi == p.chi);
    CHECK(q.n_trunc == 12);
    CHECK(q.gamma_1 == p.gamma_1);

    // Partial JSON fills the rest with defaults.
    DeviceParams r = DeviceParams::from_json(R"({"p_e0": 0.05})");
    CHECK(r.p_e0 == 0.05);
    CHECK(r.chi == doctest::Approx(33.8e6));

    CHECK_THROWS_AS(DeviceParams::from_json(R"({"not_a_key": 1})"), ParameterError);
    CHECK_THROWS_AS(DeviceParams::from_json(R"({"p_e0": -0.1})"), ParameterError);
    CHECK_THROWS_AS(DeviceParams::from_json(R"({"n_trunc": 0})"), ParameterError);
    CHECK_THROWS_AS(DeviceParams::from_json("{"), ParameterError);
}

TEST_CASE("pointer states settle at the driven-cavity steady state") {
    DeviceParams p;
    // Kill Kerr and chi2 so the g-branch steady state has the textbook form
    // alpha_g = eps / (i 2 pi delta + kappa/2) with delta = 0 here.
    p.kerr_K = 0.0;
    p.chi2 = 0.0;
    const double kappa = p.kappa_rate();
    const Complex eps(0.25 * kappa * 0.5, 0.0);  // target |alpha_g| = 0.25
    std::vector<double> t;
    for (int i = 0; i <= 600; ++i) t.push_back(i * 10e-9);  // 6 us >> 1/kappa
    StarkResponse resp = stark_dephasing_response(p, 0.0, eps, t);
    REQUIRE(resp.alpha_g.size() == t.size());

    const Complex ag = resp.alpha_g.back();
    CHECK(std::abs(ag - eps / (kappa / 2.0)) < 1e-3 * std::abs(eps / (kappa / 2.0)));

    // The e-branch sits at detuning chi, suppressing and rotating alpha_e.
    const Complex ae = resp.alpha_e.back();
    const Complex expect_e = eps / (kappa / 2.0 - Complex(0, 1) * kTwoPi * p.chi);
    CHECK(std::abs(ae - expect_e) < 1e-3 * std::abs(expect_e));

    // Stark shift and measurement dephasing match the closed-form steady
    // state chi Re/Im overlap expressions.
    const Complex ov = std::conj(eps / (kappa / 2.0)) * expect_e;
    CHECK(resp.f_stark.back() == doctest::Approx(p.chi * ov.real()).epsilon(1e-3));
    CHECK(resp.gamma_d.back() == doctest::Approx(kTwoPi * p.chi * ov.imag()).epsilon(1e-3));
    CHECK(resp.gamma_d.back() > 0.0);
}

TEST_CASE("weak-drive guard trips on strong drives") {
    DeviceParams p;
    const double kappa = p.kappa_rate();
    const Complex eps(5.0 * kappa, 0.0);  // |alpha| ~ 10 at steady state
    std::vector<double> t;
    for (int i = 0; i <= 400; ++i) t.push_back(i * 10e-9);
    CHECK_THROWS_AS(stark_dephasing_response(p, 0.0, eps, t), WeakDriveViolated);
}

TEST_CASE("parameter validation") {
    DeviceParams p;
    CHECK_NOTHROW(p.validate());
    p.F_pi = 1.5;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p = DeviceParams{};
    p.kappa_D = -1.0;
    CHECK_THROWS_AS(p.validate(), ParameterError);
}
