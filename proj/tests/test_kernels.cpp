#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include <qmd/kernels.hpp>

using namespace qmd;

namespace {

Matrix random_hermitian(int dim, std::mt19937& rng) {
    std::normal_distribution<double> g;
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = Complex(g(rng), g(rng));
    return 0.5 * (m + Matrix(m.adjoint()));
}

Matrix random_matrix(int dim, std::mt19937& rng) {
    std::normal_distribution<double> g;
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = Complex(g(rng), g(rng));
    return m;
}

}  // namespace

TEST_CASE("fast rhs matches the dense reference over random inputs") {
    DeviceParams p;
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int nt : {3, 7}) {
        p.n_trunc = nt;
        const int dim = 2 * (nt + 1);
        for (Direction dir : {Direction::Forward, Direction::Adjoint}) {
            const auto chans = dir == Direction::Forward
                                   ? forward_channels(p)
                                   : adjoint_channels(p, false);
            LindbladKernel k(p, chans, dir);
            Matrix fast(dim, dim), ref(dim, dim);
            for (int trial = 0; trial < 5; ++trial) {
                // Adjoint effects are Hermitian but not trace-one; exercise a
                // general Hermitian input plus a fully general one.
                Matrix state = trial % 2 == 0 ? random_hermitian(dim, rng)
                                              : random_matrix(dim, rng);
                DriveSample d;
                d.qubit = 3e7 * Complex(u(rng), u(rng));
                d.cavity = 5e7 * Complex(u(rng), u(rng));
                k.rhs(state, d, fast);
                k.rhs_reference(state, d, ref);
                const double scale = ref.norm();
                REQUIRE(scale > 0);
                CHECK((fast - ref).norm() / scale < 1e-12);
            }
        }
    }
}

TEST_CASE("forward generator is trace-free and preserves Hermiticity") {
    DeviceParams p;
    p.n_trunc = 6;
    const int dim = 2 * (p.n_trunc + 1);
    LindbladKernel k(p, forward_channels(p), Direction::Forward);
    std::mt19937 rng(7);
    Matrix out(dim, dim);
    for (int trial = 0; trial < 5; ++trial) {
        Matrix rho = random_hermitian(dim, rng);
        DriveSample d{Complex(2e7, 1e7), Complex(-3e7, 4e6)};
        k.rhs(rho, d, out);
        CHECK(std::abs(out.trace()) < 1e-6 * out.norm());
        CHECK((out - Matrix(out.adjoint())).norm() < 1e-12 * out.norm());
    }
}

TEST_CASE("drive-free rhs reproduces analytic damping of a simple state") {
    // |e,1><e,1| loses population at gamma_down + kappa; the diagonal rhs
    // entries are exactly the rate balance.
    DeviceParams p;
    p.n_trunc = 4;
    p.gamma_phi = 0.0;
    const int nc = p.n_trunc + 1;
    const int i_e1 = nc + 1, i_e0 = nc + 0, i_g1 = 1;
    Matrix rho = Matrix::Zero(2 * nc, 2 * nc);
    rho(i_e1, i_e1) = 1.0;
    LindbladKernel k(p, forward_channels(p), Direction::Forward);
    Matrix out(2 * nc, 2 * nc);
    k.rhs(rho, {}, out);
    CHECK(out(i_e1, i_e1).real() ==
          doctest::Approx(-(p.gamma_down() + p.kappa_rate())).epsilon(1e-12));
    CHECK(out(i_e0, i_e0).real() == doctest::Approx(p.kappa_rate()).epsilon(1e-12));
    CHECK(out(i_g1, i_g1).real() == doctest::Approx(p.gamma_down()).epsilon(1e-12));
}

TEST_CASE("adjoint of the identity is the zero generator without excitation") {
    // With the (kappa, gamma_1, gamma_phi) channel set and no drives, E = I is
    // not stationary (gamma_1 pumps it); with detailed-balance channels the
    // identity is exactly stationary. Check the algebraic statement
    // L^dag(I) = sum_c r (L^dag L - L^dag L) = 0 for unital parts only.
    DeviceParams p;
    p.n_trunc = 3;
    const int dim = 2 * (p.n_trunc + 1);
    LindbladKernel k(p, adjoint_channels(p, true), Direction::Adjoint);
    Matrix out(dim, dim);
    Matrix id = Matrix::Identity(dim, dim);
    k.rhs(id, {}, out);
    // r(L^dag I L - {L^dag L, I}/2) = r(L^dag L - L^dag L) = 0 per channel,
    // and +i[H, I] = 0, so the identity is exactly preserved.
    CHECK(out.norm() < 1e-9 * double(dim));
}

TEST_CASE("spectral radius tracks the truncation") {
    DeviceParams p;
    p.n_trunc = 10;
    LindbladKernel k10(p, forward_channels(p), Direction::Forward);
    p.n_trunc = 20;
    LindbladKernel k20(p, forward_channels(p), Direction::Forward);
    CHECK(k20.spectral_radius() > 1.5 * k10.spectral_radius());
    // The e-branch shift -chi n + (chi2 - K) n^2 dominates; check the scale.
    DeviceParams q = p;
    const double e20 = kTwoPi * std::abs(-q.chi * 20 + (q.chi2 - q.kerr_K) * 400);
    CHECK(k20.spectral_radius() >= e20 * (1.0 - 1e-12));
}
