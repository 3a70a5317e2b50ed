#ifndef QMD_DYNAMICS_HPP
#define QMD_DYNAMICS_HPP

#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "qmd/device.hpp"
#include "qmd/kernels.hpp"
#include "qmd/operators.hpp"
#include "qmd/sequences.hpp"

namespace qmd {

struct IntegratorAccuracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Trajectory {
    Dims dims;
    std::vector<double> t;         // s
    std::vector<double> sx, sy, sz;
    std::vector<double> p_e;       // (1+sz)/2
    std::vector<double> nbar;
    std::vector<double> p0_cavity;
    std::vector<double> trace_err; // |Tr rho - 1|
    std::vector<std::pair<double, DensityMatrix>> snapshots;

    std::size_t size() const { return t.size(); }
    // Columns: t_s, sx, sy, sz, nbar, p0_cavity, trace_err
    void write_csv(std::ostream& os) const;
    const DensityMatrix& snapshot_at(double time, double tol = 1e-12) const;
};

struct EvolveOptions {
    double rtol = 1e-8;
    double atol = 1e-12;
    // > 0 selects deterministic fixed-step RK4 with this step, instead of the
    // adaptive embedded pair.
    double fixed_dt = 0;
    RhsBackend backend = RhsBackend::Fast;
    // Times (must lie on t_grid) at which full density matrices are stored.
    std::vector<double> snapshot_times;
    bool keep_final_state = true;
    // Snapshots are validated (trace / positivity); a violation beyond
    // validation_tol raises IntegratorAccuracyError.
    double validation_tol = 1e-6;
};

Trajectory evolve(const DensityMatrix& rho0, const DeviceParams& params,
                  const PulseSequence& seq, const std::vector<double>& t_grid,
                  const EvolveOptions& options = {});

struct EffectOperator {
    Operator op;
    int fock_label = -1;           // photon-number projector index, if any
    Complex beta_label{0.0, 0.0};  // tomography displacement, if any

    // Effect eigenvalues must stay within [0,1] up to tol.
    void validate(double tol = 1e-8) const;
};

struct AdjointOptions {
    double rtol = 1e-8;
    double atol = 1e-12;
    double fixed_dt = 0;
    RhsBackend backend = RhsBackend::Fast;
    // Include the thermal-excitation channel in the adjoint channel set.
    bool include_excitation = false;
    bool validate = true;
    double validation_tol = 1e-6;
};

// Propagates a measurement effect backwards from t = total_duration to t = 0
// (integrated forward in s = T - t), so that Tr[rho(T) E_T] = Tr[rho(0) E(0)].
EffectOperator evolve_adjoint(const EffectOperator& effect_final,
                              const DeviceParams& params,
                              const PulseSequence& seq,
                              const AdjointOptions& options = {});

// Equilibrium qubit excited-state population implied by the gamma_up /
// gamma_down rates (equals p_e0 by construction).
double steady_state_population(const DeviceParams& params);

// diag(1-p_e0, p_e0) x thermal cavity state at demon temperature T_D.
DensityMatrix thermal_joint_state(const DeviceParams& params, double T_D = 0.072);

}  // namespace qmd

#endif
