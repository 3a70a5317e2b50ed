#ifndef QMD_THERMO_HPP
#define QMD_THERMO_HPP

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "qmd/device.hpp"
#include "qmd/dynamics.hpp"

namespace qmd {

struct NegativeTemperatureError : std::domain_error {
    using std::domain_error::domain_error;
};
struct InconsistentContrast : std::domain_error {
    using std::domain_error::domain_error;
};
struct GainDomainError : std::domain_error {
    using std::domain_error::domain_error;
};
struct InsufficientData : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Emitted power split into its two channels, all in units of the system
// photon energy (so "photons/s"):
//   P/hf_S = gamma_b (1+<sz>)/2  +  (Omega/2) <sx>
// The first term is spontaneous emission through port b (heat), the second
// the stimulated exchange with the drive (work).
struct PowerSeries {
    std::vector<double> total, work_term, heat_term;
};

PowerSeries extracted_power(const Trajectory& traj, const std::vector<double>& omega,
                            double gamma_b);

struct WorkRecord {
    std::vector<double> t;
    std::vector<double> p_total, p_work, p_heat;  // P/hf_S
    // Integrals over the work-extraction window (step 3), in hf_S units.
    double work_over_hfs = 0;     // stimulated term
    double heat_over_hfs = 0;     // net dissipative qubit flow
                                  // int (gamma_down p_e - gamma_up p_g) dt
    double q_spont_over_hfs = 0;  // gamma_b channel alone, int gamma_b p_e dt
    double delta_u_over_hfs = 0;  // p_e(end) - p_e(start) of the window
    double work_joules = 0;
    std::string init_label;
    double nbar = 0;
    double T_K = std::numeric_limits<double>::quiet_NaN();

    // |W + dU + Q_net| -- exact bookkeeping residual, should be ~integration
    // error only.
    double residual_over_hfs() const {
        return std::abs(work_over_hfs + delta_u_over_hfs + heat_over_hfs);
    }

    void write_csv(std::ostream& os) const;  // t_s, p_total, p_work, p_heat
    std::string summary_json() const;
};

// Integrates the power over the step3 window given by the sequence markers;
// the trajectory grid must contain the marker times.
WorkRecord work(const Trajectory& traj, const PulseSequence& seq,
                const DeviceParams& params, const std::string& init_label = "",
                double nbar = 0,
                double T_K = std::numeric_limits<double>::quiet_NaN());

// hf_S <e|rho_S|e> for a qubit-space density matrix, joules.
double internal_energy(const DensityMatrix& rho_S, double f_S);

double boltzmann_population(double T, double f);
double temperature_from_population(double p_e, double f);

// Demon temperature from the one-photon peak weight, two-level truncation:
// T = (h f_D / k_B) / ln((1-p1)/p1).
double demon_temperature_from_P1(double p1, double f_D);

// Qubit temperature from the Ramsey contrast ratio
// c_pi/c_eq = 1 + F_pi (e^{hf_S/k_B T} - 1).
double temperature_from_contrast(double c_eq, double c_pi, double F_pi, double f_S);

// w / (k_B T ln 2).
double landauer_ratio(double w, double T);

struct GainModel {
    double g0 = 1.0;          // power gain at zero input
    double omega_inf = 1e12;  // rad/s
    double offset = 0.0;      // additive on I^2+Q^2
    double residual_rms = 0.0;

    // sqrt(G)(Omega) = sqrt(G0) (1 - Omega/Omega_inf); Omega >= Omega_inf is
    // outside the model's domain.
    double amplitude_gain(double omega) const;
};

struct HeterodyneRecord {
    std::vector<double> I, Q, power;  // power = offset + I^2 + Q^2
};

// Applies b_out = beta_in - sqrt(gamma_b) <sigma_->, I = sqrt(G) Re<b_out>,
// Q = sqrt(G) Im<b_out>.
HeterodyneRecord synthesize_heterodyne(const Trajectory& traj, const GainModel& gain,
                                       const std::vector<double>& omega,
                                       const std::vector<Complex>& beta_in,
                                       double gamma_b);

struct GainSample {
    double omega;   // rad/s
    double a_i;     // Rabi-oscillation amplitude on I
    double a_i2q2;  // amplitude on I^2+Q^2
};

// Least-squares fit of (G0, Omega_inf) to the linear model
// A^I(Omega) = sqrt(G0)(1 - Omega/Omega_inf) sqrt(gamma_p) |sz0|.
GainModel calibrate_gain(const std::vector<GainSample>& samples, double sz0,
                         double gamma_p = 1.0 / 2.2e-6);

}  // namespace qmd

#endif
