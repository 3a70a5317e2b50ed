#include "qmd/operators.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace qmd {

Operator::Operator(Dims dims, Matrix m) : dims_(dims), mat_(std::move(m)) {
    if (mat_.rows() != dims_.total() || mat_.cols() != dims_.total())
        throw DimensionError("operator matrix does not match declared dimension");
}

Operator Operator::zero(Dims dims) {
    return Operator(dims, Matrix::Zero(dims.total(), dims.total()));
}

Operator Operator::identity(Dims dims) {
    return Operator(dims, Matrix::Identity(dims.total(), dims.total()));
}

void require_same_dims(const Operator& a, const Operator& b) {
    if (!(a.dims() == b.dims()))
        throw DimensionError("operators combined across mismatched spaces");
}

Operator Operator::operator+(const Operator& o) const {
    require_same_dims(*this, o);
    return Operator(dims_, mat_ + o.mat_);
}

Operator Operator::operator-(const Operator& o) const {
    require_same_dims(*this, o);
    return Operator(dims_, mat_ - o.mat_);
}

Operator Operator::operator*(const Operator& o) const {
    require_same_dims(*this, o);
    return Operator(dims_, mat_ * o.mat_);
}

DensityMatrix::DensityMatrix(Dims dims, Matrix m, double trace_tol_, double psd_tol_)
    : Operator(dims, std::move(m)), trace_tol(trace_tol_), psd_tol(psd_tol_) {}

void DensityMatrix::validate(double scale) const {
    const double ttol = trace_tol * scale;
    const double ptol = psd_tol * scale;
    if (std::abs(trace() - 1.0) > ttol)
        throw ValidationError("density matrix trace deviates from 1 by " +
                              std::to_string(std::abs(trace() - 1.0)));
    const double herm = (mat() - mat().adjoint()).cwiseAbs().maxCoeff();
    if (herm > ptol)
        throw ValidationError("density matrix not Hermitian, max deviation " +
                              std::to_string(herm));
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (mat() + mat().adjoint()),
                                             Eigen::EigenvaluesOnly);
    const double min_ev = es.eigenvalues().minCoeff();
    if (min_ev < -ptol)
        throw ValidationError("density matrix has negative eigenvalue " +
                              std::to_string(min_ev));
}

Operator fock_annihilation(int n_trunc) {
    if (n_trunc < 1) throw DimensionError("fock_annihilation requires n_trunc >= 1");
    const int dim = n_trunc + 1;
    Matrix d = Matrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) d(n - 1, n) = std::sqrt(double(n));
    return Operator({1, dim}, std::move(d));
}

Operator fock_number(int n_trunc) {
    const int dim = n_trunc + 1;
    Matrix m = Matrix::Zero(dim, dim);
    for (int n = 0; n < dim; ++n) m(n, n) = double(n);
    return Operator({1, dim}, std::move(m));
}

namespace {
Operator qubit_op(Complex gg, Complex ge, Complex eg, Complex ee) {
    Matrix m(2, 2);
    m << gg, ge, eg, ee;
    return Operator({2, 1}, std::move(m));
}
}  // namespace

Operator sigma_minus() { return qubit_op(0, 1, 0, 0); }
Operator sigma_plus() { return qubit_op(0, 0, 1, 0); }
Operator sigma_x() { return qubit_op(0, 1, 1, 0); }
Operator sigma_y() { return qubit_op(0, Complex(0, -1), Complex(0, 1), 0); }
Operator sigma_z() { return qubit_op(-1, 0, 0, 1); }
Operator excited_projector() { return qubit_op(0, 0, 0, 1); }

Operator displacement(Complex beta, int n_trunc) {
    const Operator d = fock_annihilation(n_trunc);
    Matrix gen = beta * d.mat().adjoint() - std::conj(beta) * d.mat();
    return Operator(d.dims(), gen.exp());
}

DensityMatrix coherent_state(Complex alpha, int n_trunc) {
    const int dim = n_trunc + 1;
    Vector psi(dim);
    // <n|alpha> = e^{-|a|^2/2} a^n / sqrt(n!), built recursively.
    psi(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n < dim; ++n) psi(n) = psi(n - 1) * alpha / std::sqrt(double(n));
    psi.normalize();
    return DensityMatrix({1, dim}, psi * psi.adjoint());
}

DensityMatrix fock_state(int n, int n_trunc) {
    if (n < 0 || n > n_trunc) throw DimensionError("fock_state index outside truncation");
    const int dim = n_trunc + 1;
    Matrix m = Matrix::Zero(dim, dim);
    m(n, n) = 1.0;
    return DensityMatrix({1, dim}, std::move(m));
}

DensityMatrix qubit_pure(Complex cg, Complex ce) {
    Vector psi(2);
    psi << cg, ce;
    if (psi.norm() == 0.0) throw ValidationError("qubit_pure: zero amplitude");
    psi.normalize();
    return DensityMatrix({2, 1}, psi * psi.adjoint());
}

DensityMatrix qubit_mixed(double p_excited) {
    if (p_excited < 0.0 || p_excited > 1.0)
        throw ValidationError("qubit_mixed: population outside [0,1]");
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 1.0 - p_excited;
    m(1, 1) = p_excited;
    return DensityMatrix({2, 1}, std::move(m));
}

DensityMatrix thermal_cavity_state(double temperature, double frequency, int n_trunc) {
    const int dim = n_trunc + 1;
    Matrix m = Matrix::Zero(dim, dim);
    if (temperature <= 0.0) {
        m(0, 0) = 1.0;
        return DensityMatrix({1, dim}, std::move(m));
    }
    constexpr double h = 6.62607015e-34, kb = 1.380649e-23;
    const double x = h * frequency / (kb * temperature);
    double z = 0.0;
    for (int n = 0; n < dim; ++n) z += std::exp(-x * n);
    for (int n = 0; n < dim; ++n) m(n, n) = std::exp(-x * n) / z;
    return DensityMatrix({1, dim}, std::move(m));
}

Operator tensor(const Operator& a, const Operator& b) {
    Dims dims{a.dims().qubit * b.dims().qubit, a.dims().cavity * b.dims().cavity};
    const int na = a.size(), nb = b.size();
    Matrix m(na * nb, na * nb);
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < na; ++j)
            m.block(i * nb, j * nb, nb, nb) = a.mat()(i, j) * b.mat();
    return Operator(dims, std::move(m));
}

DensityMatrix tensor_states(const DensityMatrix& a, const DensityMatrix& b) {
    Operator t = tensor(a, b);
    return DensityMatrix(t.dims(), t.mat(), std::min(a.trace_tol, b.trace_tol),
                         std::min(a.psd_tol, b.psd_tol));
}

Matrix partial_trace(const Matrix& m, Dims dims, Subsystem keep) {
    const int nq = dims.qubit, nc = dims.cavity;
    if (m.rows() != dims.total() || m.cols() != dims.total())
        throw DimensionError("partial_trace: matrix does not match dims");
    if (keep == Subsystem::Qubit) {
        Matrix r = Matrix::Zero(nq, nq);
        for (int q = 0; q < nq; ++q)
            for (int p = 0; p < nq; ++p)
                r(q, p) = m.block(q * nc, p * nc, nc, nc).trace();
        return r;
    }
    Matrix r = Matrix::Zero(nc, nc);
    for (int q = 0; q < nq; ++q) r += m.block(q * nc, q * nc, nc, nc);
    return r;
}

DensityMatrix partial_trace(const DensityMatrix& rho, Subsystem keep) {
    Matrix r = partial_trace(rho.mat(), rho.dims(), keep);
    Dims d = keep == Subsystem::Qubit ? Dims{rho.dims().qubit, 1}
                                      : Dims{1, rho.dims().cavity};
    return DensityMatrix(d, std::move(r), rho.trace_tol, rho.psd_tol);
}

double von_neumann_entropy(const Matrix& rho, double psd_tol) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()),
                                             Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (double ev : es.eigenvalues()) {
        if (ev < -psd_tol)
            throw ValidationError("entropy of matrix with eigenvalue " + std::to_string(ev));
        if (ev > psd_tol) s -= ev * std::log(ev);
    }
    return s;
}

double von_neumann_entropy(const DensityMatrix& rho) {
    return von_neumann_entropy(rho.mat(), rho.psd_tol);
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
    const int n = int(v.size());
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0, theta = 0.0;
    int k = 0;
    for (int i = 0; i < n; ++i) {
        cumsum += u[i];
        const double t = (cumsum - 1.0) / (i + 1);
        if (u[i] - t > 0) {
            theta = t;
            k = i + 1;
        }
    }
    (void)k;
    return (v.array() - theta).max(0.0);
}

DensityMatrix project_to_density_matrix(const Operator& m) {
    Matrix h = 0.5 * (m.mat() + m.mat().adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    Eigen::VectorXd lam = project_to_simplex(es.eigenvalues());
    Matrix out = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
    return DensityMatrix(m.dims(), std::move(out));
}

double fidelity_with_pure(const DensityMatrix& rho, const Vector& psi) {
    if (psi.size() != rho.size()) throw DimensionError("fidelity: size mismatch");
    return (psi.adjoint() * rho.mat() * psi)(0).real() / psi.squaredNorm();
}

}  // namespace qmd
