#ifndef QMD_OPERATORS_HPP
#define QMD_OPERATORS_HPP

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qmd {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Hilbert-space layout. Joint operators are qubit-major: the flat index is
// q*dim_cavity + n, so joint = kron(qubit_op, cavity_op).
struct Dims {
    int qubit = 1;   // 2 for a joint/qubit operator, 1 for cavity-only
    int cavity = 1;  // n_trunc + 1, or 1 for qubit-only

    int total() const { return qubit * cavity; }
    bool operator==(const Dims&) const = default;
};

// Dense operator on a truncated qubit (x) cavity space.
class Operator {
public:
    Operator() = default;
    Operator(Dims dims, Matrix m);

    static Operator zero(Dims dims);
    static Operator identity(Dims dims);

    const Dims& dims() const { return dims_; }
    int size() const { return dims_.total(); }
    const Matrix& mat() const { return mat_; }
    Matrix& mat() { return mat_; }

    Operator adjoint() const { return Operator(dims_, mat_.adjoint()); }
    Complex trace() const { return mat_.trace(); }

    Operator operator+(const Operator& o) const;
    Operator operator-(const Operator& o) const;
    Operator operator*(const Operator& o) const;
    Operator operator*(Complex s) const { return Operator(dims_, mat_ * s); }

private:
    Dims dims_;
    Matrix mat_;
};

void require_same_dims(const Operator& a, const Operator& b);

inline constexpr double kDefaultTraceTol = 1e-9;
inline constexpr double kDefaultPsdTol = 1e-10;

// Hermitian, unit-trace, PSD operator. validate() enforces the invariants at
// the stored tolerances; construction does not (integrators produce small
// transient violations that are checked at output points).
class DensityMatrix : public Operator {
public:
    DensityMatrix() = default;
    DensityMatrix(Dims dims, Matrix m, double trace_tol = kDefaultTraceTol,
                  double psd_tol = kDefaultPsdTol);

    double trace_tol = kDefaultTraceTol;
    double psd_tol = kDefaultPsdTol;

    // Throws ValidationError when any invariant fails at tolerance `scale`
    // times the stored one.
    void validate(double scale = 1.0) const;
    double purity() const { return mat().cwiseProduct(mat().transpose()).sum().real(); }
};

// --- constructors on subspaces ---------------------------------------------

// Truncated annihilation operator: <n-1|d|n> = sqrt(n). Cavity-only dims.
Operator fock_annihilation(int n_trunc);
Operator fock_number(int n_trunc);

// Qubit-only operators, basis order {|g>, |e>}.
Operator sigma_minus();  // |g><e|
Operator sigma_plus();
Operator sigma_x();
Operator sigma_y();
Operator sigma_z();          // |e><e| - |g><g|
Operator excited_projector();

// exp(beta d^dag - conj(beta) d) by dense scaling-and-squaring.
Operator displacement(Complex beta, int n_trunc);

// Pure coherent state, normalized on the truncated space.
DensityMatrix coherent_state(Complex alpha, int n_trunc);
DensityMatrix fock_state(int n, int n_trunc);

// Pure qubit state cg|g> + ce|e> (normalized internally).
DensityMatrix qubit_pure(Complex cg, Complex ce);
DensityMatrix qubit_mixed(double p_excited);

// Thermal cavity state at temperature T (K) for mode frequency f (Hz).
DensityMatrix thermal_cavity_state(double temperature, double frequency, int n_trunc);

Operator tensor(const Operator& a, const Operator& b);
DensityMatrix tensor_states(const DensityMatrix& a, const DensityMatrix& b);

enum class Subsystem { Qubit, Cavity };
DensityMatrix partial_trace(const DensityMatrix& rho, Subsystem keep);
Matrix partial_trace(const Matrix& m, Dims dims, Subsystem keep);

// -sum lambda_i ln lambda_i in nats; eigenvalues below psd_tol clamp to zero,
// below -psd_tol raise ValidationError.
double von_neumann_entropy(const DensityMatrix& rho);
double von_neumann_entropy(const Matrix& rho, double psd_tol = kDefaultPsdTol);

// Euclidean projection of the eigenvalue vector onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

// Frobenius-nearest density matrix: hermitize, eigendecompose, simplex-project
// the spectrum, reassemble.
DensityMatrix project_to_density_matrix(const Operator& m);

double fidelity_with_pure(const DensityMatrix& rho, const Vector& psi);

}  // namespace qmd

#endif
