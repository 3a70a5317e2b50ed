#ifndef QMD_PRESETS_HPP
#define QMD_PRESETS_HPP

#include <string>
#include <vector>

#include "qmd/device.hpp"
#include "qmd/dynamics.hpp"
#include "qmd/sequences.hpp"
#include "qmd/thermo.hpp"

namespace qmd {

std::string version_string();

struct PresetOptions {
    DeviceParams params{};
    std::string out_dir = ".";
    bool fast = false;      // shrink truncation, grids, sweeps for desk scale
    double fixed_dt = 0;    // > 0: deterministic fixed-step integration
    unsigned seed = 0;
    int jobs = 0;           // 0 = library default thread count
};

std::vector<std::string> preset_names();
// Writes the artifact files of the named figure preset into out_dir.
void run_preset(const std::string& name, const PresetOptions& opts);

// ---- scenario helpers shared by presets, the CLI and integration tests ----

// Output grid covering [0, total] at ~dt spacing, containing `extra` exactly.
std::vector<double> make_time_grid(double total, double dt,
                                   const std::vector<double>& extra = {});

// Secant solve of alpha_to_nbar for a target mean photon number.
double find_alpha_for_nbar(double nbar_target, const DeviceParams& params,
                           const PulseShape& shape = PulseShape{});

struct PrepBranch {
    PrepKind prep;
    double weight;
};

// Probabilistic pi-pulse mixture realizing an effective thermal preparation at
// T_K (may be +inf) given the equilibrium population p_e0.
std::vector<PrepBranch> thermal_branches(double T_K, const DeviceParams& params);

struct ProtocolRun {
    PulseSequence seq;
    Trajectory traj;
    WorkRecord rec;
};

ProtocolRun run_sequential(PrepKind prep, double alpha_in, const DeviceParams& params,
                           const PiCalibration& cal, const DensityMatrix& rho0,
                           const EvolveOptions& opts = {}, double dt_out = 0.5e-9,
                           const std::vector<double>& snapshot_times = {});

// Continuous protocol; prep is selected by start_time (200 ns ~ pi,
// 300 ns ~ 3pi/2, 400 ns ~ 2pi).
ProtocolRun run_continuous(double start_time, double alpha_in,
                           const DeviceParams& params, const DensityMatrix& rho0,
                           const EvolveOptions& opts = {}, double dt_out = 0.5e-9,
                           const std::vector<double>& snapshot_times = {});

}  // namespace qmd

#endif
