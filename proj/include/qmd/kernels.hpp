#ifndef QMD_KERNELS_HPP
#define QMD_KERNELS_HPP

#include <vector>

#include "qmd/device.hpp"
#include "qmd/operators.hpp"

namespace qmd {

// Instantaneous drive coefficients in the rotating frame: H_drive =
// qubit*sigma_+ + conj(qubit)*sigma_- + cavity*d^dag + conj(cavity)*d.
// Carrier detunings enter as phase ramps folded into these coefficients.
struct DriveSample {
    Complex qubit{0.0, 0.0};
    Complex cavity{0.0, 0.0};
};

enum class ChannelKind { CavityDecay, QubitDecay, QubitExcite, QubitDephase };

struct RateChannel {
    double rate;  // 1/s
    ChannelKind kind;
};

enum class Direction { Forward, Adjoint };
enum class RhsBackend { Fast, Reference };

// Lindblad generator specialized to the dispersive-model structure: static
// diagonal Hamiltonian, qubit/cavity ladder drives, and the four jump
// channels. The fast path applies each term with O(dim^2) elementwise loops
// (OpenMP across rows); the reference path builds dense operators and uses
// plain matrix products. Both sides are kept and cross-checked in tests.
//
// Forward:  drho = -i[H,rho] + sum_c r (L rho L^dag - {L^dag L, rho}/2)
// Adjoint:  integrated in s = T - t, dE/ds = +i[H(T-s),E]
//           + sum_c r (L^dag E L - {L^dag L, E}/2)
class LindbladKernel {
public:
    LindbladKernel(const DeviceParams& params, std::vector<RateChannel> channels,
                   Direction direction);

    int dim() const { return 2 * nc_; }
    int n_cavity() const { return nc_; }
    Direction direction() const { return direction_; }

    void rhs(const Matrix& state, const DriveSample& drive, Matrix& out) const;
    void rhs_reference(const Matrix& state, const DriveSample& drive,
                       Matrix& out) const;
    void rhs(const Matrix& state, const DriveSample& drive, Matrix& out,
             RhsBackend backend) const {
        backend == RhsBackend::Fast ? rhs(state, drive, out)
                                    : rhs_reference(state, drive, out);
    }

    // Largest Bohr frequency of the static diagonal, rad/s. The explicit
    // integrator's stability step bound is ~3/spectral_radius.
    double spectral_radius() const { return spectral_radius_; }

private:
    int nc_;
    Direction direction_;
    std::vector<RateChannel> channels_;
    double r_cavity_ = 0, r_down_ = 0, r_up_ = 0;
    Eigen::VectorXd sqrt_n_;  // sqrt(n), length nc
    Matrix linear_weight_;    // elementwise: phase + damping + dephasing
    double spectral_radius_;
    // Dense mirrors for the reference path.
    Matrix h_static_dense_;
    std::vector<std::pair<double, Matrix>> jumps_dense_;
};

std::vector<RateChannel> forward_channels(const DeviceParams& params);
// SI-printed adjoint set (kappa_D, gamma_1, gamma_phi/2); with
// include_excitation the forward set (gamma_down/gamma_up split) is used.
std::vector<RateChannel> adjoint_channels(const DeviceParams& params,
                                          bool include_excitation);

}  // namespace qmd

#endif
