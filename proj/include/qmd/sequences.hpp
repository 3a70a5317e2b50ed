#ifndef QMD_SEQUENCES_HPP
#define QMD_SEQUENCES_HPP

#include <map>
#include <string>
#include <vector>

#include "qmd/device.hpp"
#include "qmd/kernels.hpp"

namespace qmd {

struct CalibrationRequired : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CalibrationFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Port { QubitB, CavityA };
enum class ShapeKind { Gaussian, Square };

struct PulseShape {
    ShapeKind kind = ShapeKind::Gaussian;
    double sigma = 12.5e-9;       // s, Gaussian only
    double truncation = 25e-9;    // s, half-width of the support (= 2 sigma)
};

// Integral of the unit-peak envelope over its support.
double envelope_area(const PulseShape& shape, double duration);

struct PulseSegment {
    Port target = Port::QubitB;
    PulseShape shape;
    double start = 0;      // s
    double duration = 0;   // s
    // Qubit: |amplitude| is the peak Rabi rate Omega (rad/s), arg is the drive
    // phase (pi/2 rotates about +y). Cavity: complex peak eps_d in
    // sqrt(photons)/s, phase fixed real-positive by the builders.
    Complex amplitude{0.0, 0.0};
    double carrier_detuning = 0;  // Hz, applied as a phase ramp from `start`

    double envelope(double t) const;  // unit peak, 0 outside the support
};

struct PulseSequence {
    std::vector<PulseSegment> segments;
    double total_duration = 0;
    std::map<std::string, double> markers;  // step(1..3)_start/_end time points

    // Drive coefficients for the Lindblad kernel at time t.
    DriveSample sample(double t) const;
    // Instantaneous qubit Rabi rate Omega(t) (rad/s), for the power formula.
    double qubit_omega(double t) const;
    // Envelope discontinuity points the integrator must not step across.
    std::vector<double> breakpoints() const;

    double marker(const std::string& name) const;

    std::string to_json() const;
    static PulseSequence from_json(const std::string& text);
};

enum class PrepKind { None, Pi, PiHalf, ThreePiHalf };
PrepKind prep_from_string(const std::string& s);
std::string to_string(PrepKind prep);

struct PiCalibration {
    double amplitude = 0;  // peak Omega, rad/s
    double final_population = 0;
    bool valid = false;
};

// Area-theorem amplitude for the standard sequential Gaussian pulse; the
// starting point for calibrate_pi_amplitude.
double area_theorem_pi_amplitude(const PulseShape& shape, double duration);

// Three back-to-back 50 ns windows: prep pulse, cavity displacement scaled by
// alpha_in, work-extraction pi pulse (Fig-style "sequential" protocol).
PulseSequence make_sequential_sequence(PrepKind prep, double alpha_in,
                                       const DeviceParams& params,
                                       const PiCalibration& cal);

// Long square qubit pulse at Omega = 2pi/416 ns with a 10 ns-sigma cavity
// Gaussian riding on it at start_time in {200, 300, 400} ns; step 3 is the
// pi/Omega window from the start of the displacement.
PulseSequence make_continuous_sequence(double start_time, double alpha_in,
                                       const DeviceParams& params);

struct UnreachableTemperature : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Fraction of sequences that receive the prep pi-pulse so that the mixture
// reproduces the Boltzmann weight at T_target, given equilibrium T0 and pulse
// fidelity F_pi. T_target may be infinite.
double thermal_prep_probability(double T_target, double T0, double F_pi, double f_S);

// Sweeps the pulse amplitude, simulating evolution from |g,0>, and returns the
// amplitude maximizing the final excited population.
PiCalibration calibrate_pi_amplitude(const DeviceParams& params,
                                     const PulseShape& shape, double duration);

struct TruncationUnsafe : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mean photon number after the encoding displacement from |g> x thermal
// cavity (bath temperature T_D0).
double alpha_to_nbar(double alpha_in, const DeviceParams& params,
                     const PulseShape& shape = PulseShape{},
                     double T_D0 = 0.072);

}  // namespace qmd

#endif
