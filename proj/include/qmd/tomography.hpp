#ifndef QMD_TOMOGRAPHY_HPP
#define QMD_TOMOGRAPHY_HPP

#include <string>
#include <vector>

#include "qmd/device.hpp"
#include "qmd/dynamics.hpp"
#include "qmd/operators.hpp"
#include "qmd/sequences.hpp"

namespace qmd {

// Generalized Husimi function Q_n(beta) = (1/pi) <n| D(beta)^dag rho D(beta) |n>.
double husimi_q(const DensityMatrix& rho_D, int n, Complex beta);

struct TomographyGrid {
    std::vector<Complex> beta;      // flattened square grid, row-major
    std::vector<int> fock_indices;  // e.g. 0..5
    std::vector<double> p_e;        // [n_idx * beta.size() + b]

    // side x side square, Re/Im in [-beta_max, beta_max], n = 0..n_max.
    static TomographyGrid make_square(int side, double beta_max, int n_max);

    std::size_t n_beta() const { return beta.size(); }
    double& at(std::size_t n_idx, std::size_t b) { return p_e[n_idx * beta.size() + b]; }
    double at(std::size_t n_idx, std::size_t b) const { return p_e[n_idx * beta.size() + b]; }

    std::string to_json() const;  // record list {beta_re, beta_im, n, p_e}
    static TomographyGrid from_json(const std::string& text);
};

struct ReconstructionConfig {
    int n_trunc_recon = 15;  // plateau band 13..21
    double beta_max = 5.95;
    double p_g = 0.97;
    double step_size = 0;  // 0 = automatic from the effect Gram matrix
    int max_iters = 4000;
    double convergence_tol = 1e-12;
};

struct TomographyPulseConfig {
    // Number-selective pi pulse: long weak Gaussian, bandwidth << chi.
    double duration = 400e-9;
    double sigma = 50e-9;
    bool include_excitation = false;  // adjoint channel set
    double rtol = 1e-8;
    double fixed_dt = 0;
    RhsBackend backend = RhsBackend::Fast;
};

// Backward-propagated measurement effects. The tomography displacement is
// modeled as an instantaneous unitary, so only one adjoint propagation per
// Fock index is needed; displacement conjugation supplies the beta dependence.
struct EffectSet {
    Dims dims;  // simulation joint dims
    std::vector<int> fock_indices;
    std::vector<Complex> beta;
    // Per fock index: E_n at t = 0+, i.e. just after the (instantaneous)
    // displacement, before which E_{n,beta}(0) = (I (x) D(b)) E_n (I (x) D(b))^dag.
    std::vector<Matrix> effect_post_disp;

    EffectOperator effect_at_zero(std::size_t n_idx, std::size_t b) const;
    // Cavity-space measurement operators F = p_g E_gg + (1-p_g) E_ee,
    // displaced and truncated to the reconstruction space, grid-ordered.
    std::vector<Matrix> cavity_effects(double p_g, int n_trunc_recon) const;
};

// Builds the number-selective pi-pulse sequence for Fock index n (carrier at
// -n chi + n^2 chi2 relative to f_S) and backpropagates I_D (x) |e><e|
// through it.
EffectSet build_effects(const TomographyGrid& grid, const DeviceParams& params,
                        const TomographyPulseConfig& cfg = {});

// p_e[n, beta] = Tr(rho_joint E_{n,beta}(0)); parallel over beta.
TomographyGrid simulate_tomography(const DensityMatrix& rho_joint,
                                   const EffectSet& effects);

struct ReconstructionResult {
    DensityMatrix rho_D;
    std::vector<double> log_likelihood;  // accepted iterates
    double S_D = 0;
    double rms_residual = 0;
    bool converged = false;

    std::string to_json() const;  // real/imag matrices plus S_D
};

// Projected-gradient ascent of f = -sum (p - Tr(rho F))^2 over density
// matrices, with backtracking so accepted steps never decrease f.
ReconstructionResult maxlike_reconstruct(const TomographyGrid& grid,
                                         const EffectSet& effects,
                                         const ReconstructionConfig& config);

struct SweepRow {
    std::string parameter;
    double value;
    double S_D;
};

// S_D as a function of each swept parameter, others held at `base`.
std::vector<SweepRow> entropy_sensitivity_sweep(
    const TomographyGrid& grid, const EffectSet& effects,
    const ReconstructionConfig& base, const std::vector<int>& n_trunc_values,
    const std::vector<double>& beta_max_values, const std::vector<double>& p_g_values);

}  // namespace qmd

#endif
