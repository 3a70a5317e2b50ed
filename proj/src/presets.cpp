#include "qmd/presets.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qmd/tomography.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qmd {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string version_string() { return "qmd 1.0.0"; }

std::vector<std::string> preset_names() {
    return {"fig2", "fig3", "fig4", "figS1", "figS3", "figS4"};
}

std::vector<double> make_time_grid(double total, double dt,
                                   const std::vector<double>& extra) {
    std::vector<double> grid;
    const long n = std::max(1L, std::lround(std::ceil(total / dt - 1e-9)));
    for (long i = 0; i <= n; ++i) grid.push_back(total * double(i) / double(n));
    for (double e : extra)
        if (e > 1e-15 && e < total - 1e-15) grid.push_back(e);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-13; }),
               grid.end());
    return grid;
}

double find_alpha_for_nbar(double nbar_target, const DeviceParams& params,
                           const PulseShape& shape) {
    if (nbar_target <= 0) return 0.0;
    double a0 = std::sqrt(nbar_target);  // linear-cavity guess
    double f0 = alpha_to_nbar(a0, params, shape) - nbar_target;
    double a1 = a0 * 1.1;
    double f1 = alpha_to_nbar(a1, params, shape) - nbar_target;
    for (int it = 0; it < 25 && std::abs(f1) > 1e-3 * nbar_target; ++it) {
        const double a2 = a1 - f1 * (a1 - a0) / (f1 - f0);
        a0 = a1;
        f0 = f1;
        a1 = std::max(a2, 1e-6);
        f1 = alpha_to_nbar(a1, params, shape) - nbar_target;
    }
    return a1;
}

std::vector<PrepBranch> thermal_branches(double T_K, const DeviceParams& params) {
    const double t0 = temperature_from_population(params.p_e0, params.f_S);
    const double p = thermal_prep_probability(T_K, t0, params.F_pi, params.f_S);
    return {{PrepKind::Pi, p}, {PrepKind::None, 1.0 - p}};
}

namespace {

EvolveOptions with_snapshots(EvolveOptions opts, std::vector<double> snaps,
                             double end_time) {
    snaps.push_back(end_time);
    opts.snapshot_times = std::move(snaps);
    return opts;
}

}  // namespace

ProtocolRun run_sequential(PrepKind prep, double alpha_in, const DeviceParams& params,
                           const PiCalibration& cal, const DensityMatrix& rho0,
                           const EvolveOptions& opts, double dt_out,
                           const std::vector<double>& snapshot_times) {
    ProtocolRun run;
    run.seq = make_sequential_sequence(prep, alpha_in, params, cal);
    std::vector<double> extra = snapshot_times;
    for (const auto& [k, v] : run.seq.markers) extra.push_back(v);
    const auto grid = make_time_grid(run.seq.total_duration, dt_out, extra);
    run.traj = evolve(rho0, params, run.seq, grid,
                      with_snapshots(opts, snapshot_times, run.seq.total_duration));
    run.rec = work(run.traj, run.seq, params, to_string(prep));
    return run;
}

ProtocolRun run_continuous(double start_time, double alpha_in,
                           const DeviceParams& params, const DensityMatrix& rho0,
                           const EvolveOptions& opts, double dt_out,
                           const std::vector<double>& snapshot_times) {
    ProtocolRun run;
    run.seq = make_continuous_sequence(start_time, alpha_in, params);
    std::vector<double> extra = snapshot_times;
    for (const auto& [k, v] : run.seq.markers) extra.push_back(v);
    const auto grid = make_time_grid(run.seq.total_duration, dt_out, extra);
    run.traj = evolve(rho0, params, run.seq, grid,
                      with_snapshots(opts, snapshot_times, run.seq.total_duration));
    run.rec = work(run.traj, run.seq, params, "start" + std::to_string(int(start_time * 1e9)));
    return run;
}

// ---------------------------------------------------------------------------
// Preset implementations
// ---------------------------------------------------------------------------

namespace {

struct PresetCtx {
    PresetOptions opts;
    DeviceParams params;
    PiCalibration cal;

    std::ofstream open_csv(const std::string& file, const std::string& preset,
                           const std::string& columns) const {
        fs::create_directories(opts.out_dir);
        std::ofstream os(fs::path(opts.out_dir) / file);
        os << "# " << version_string() << "\n# preset: " << preset
           << "\n# fast: " << (opts.fast ? 1 : 0) << " seed: " << opts.seed
           << " fixed_dt: " << opts.fixed_dt << "\n";
        std::istringstream cfg(params.to_json());
        for (std::string line; std::getline(cfg, line);) os << "# " << line << "\n";
        os << columns << "\n" << std::setprecision(12);
        return os;
    }

    void write_json(const std::string& file, const std::string& preset,
                    json data) const {
        fs::create_directories(opts.out_dir);
        json j;
        j["meta"] = {{"version", version_string()},
                     {"preset", preset},
                     {"fast", opts.fast},
                     {"seed", opts.seed},
                     {"fixed_dt", opts.fixed_dt},
                     {"params", json::parse(params.to_json())}};
        j["data"] = std::move(data);
        std::ofstream os(fs::path(opts.out_dir) / file);
        os << j.dump(2) << "\n";
    }

    EvolveOptions evolve_opts() const {
        EvolveOptions e;
        e.fixed_dt = opts.fixed_dt;
        return e;
    }

    DensityMatrix thermal_start() const { return thermal_joint_state(params); }
};

PresetCtx make_ctx(const PresetOptions& opts, bool needs_pi_cal) {
    PresetCtx ctx{opts, opts.params, {}};
    if (opts.fast && ctx.params.n_trunc > 20) ctx.params.n_trunc = 20;
#ifdef _OPENMP
    if (opts.jobs > 0) omp_set_num_threads(opts.jobs);
#endif
    if (needs_pi_cal)
        ctx.cal = calibrate_pi_amplitude(ctx.params, PulseShape{}, 50e-9);
    return ctx;
}

// Weighted mixture of work records over prep branches with possibly different
// absolute timing; power is merged on a grid relative to step3_start.
struct MixedWork {
    std::vector<double> t_rel, p_total, p_work, p_heat;
    double work_hfs = 0, delta_u_hfs = 0, heat_hfs = 0, q_spont_hfs = 0;
};

MixedWork mix_runs(const std::vector<std::pair<double, ProtocolRun>>& branches) {
    MixedWork mix;
    const auto& first = branches.front().second;
    const double w0 = first.seq.marker("step3_start");
    for (std::size_t i = 0; i < first.traj.size(); ++i) {
        const double tr = first.traj.t[i] - w0;
        if (tr < -1e-15) continue;
        mix.t_rel.push_back(tr);
        mix.p_total.push_back(0);
        mix.p_work.push_back(0);
        mix.p_heat.push_back(0);
    }
    for (const auto& [w, run] : branches) {
        const double s0 = run.seq.marker("step3_start");
        std::size_t j = 0;
        while (j < run.traj.size() && run.traj.t[j] < s0 - 1e-15) ++j;
        for (std::size_t i = 0; i < mix.t_rel.size() && j + i < run.traj.size(); ++i) {
            mix.p_total[i] += w * run.rec.p_total[j + i];
            mix.p_work[i] += w * run.rec.p_work[j + i];
            mix.p_heat[i] += w * run.rec.p_heat[j + i];
        }
        mix.work_hfs += w * run.rec.work_over_hfs;
        mix.delta_u_hfs += w * run.rec.delta_u_over_hfs;
        mix.heat_hfs += w * run.rec.heat_over_hfs;
        mix.q_spont_hfs += w * run.rec.q_spont_over_hfs;
    }
    return mix;
}

double start_time_for_prep(PrepKind prep) {
    switch (prep) {
        case PrepKind::Pi: return 200e-9;
        case PrepKind::ThreePiHalf: return 300e-9;
        case PrepKind::None: return 400e-9;
        default: throw ValidationError("continuous protocol has no pi/2 start time");
    }
}

void preset_fig2(const PresetCtx& ctx) {
    auto csv = ctx.open_csv("fig2_power.csv", "fig2",
                            "prep,nbar_label,t_rel_s,p_total,p_work,p_heat");
    json summary = json::array();
    const double alpha9 = find_alpha_for_nbar(9.0, ctx.params,
                                              PulseShape{ShapeKind::Gaussian, 10e-9, 20e-9});

    // Thermalized starts ride the full 2pi square pulse (displacement at
    // 400 ns) with their Boltzmann populations pre-mixed into the initial
    // state; the superposition start uses the ~3pi/2 timing from T_S^0.
    struct Scen {
        std::string label;
        double p_excited;
        double start_time;
    };
    const std::vector<Scen> scens = {
        {"0.17K", boltzmann_population(0.17, ctx.params.f_S), 400e-9},
        {"0.40K", boltzmann_population(0.40, ctx.params.f_S), 400e-9},
        {"inf", 0.5, 400e-9},
        {"superposition", ctx.params.p_e0, 300e-9},
    };
    const DensityMatrix cav =
        thermal_cavity_state(0.072, ctx.params.f_D, ctx.params.n_trunc);

    for (double alpha : {0.0, alpha9}) {
        const std::string nlabel = alpha == 0.0 ? "0" : "9";
        for (const auto& scen : scens) {
            const DensityMatrix rho0 =
                tensor_states(qubit_mixed(scen.p_excited), cav);
            const ProtocolRun run = run_continuous(
                scen.start_time, alpha, ctx.params, rho0, ctx.evolve_opts(), 1e-9);
            const double w0 = run.seq.marker("step3_start");
            for (std::size_t i = 0; i < run.traj.size(); ++i) {
                if (run.traj.t[i] < w0 - 1e-15) continue;
                csv << scen.label << ',' << nlabel << ','
                    << run.traj.t[i] - w0 << ',' << run.rec.p_total[i] << ','
                    << run.rec.p_work[i] << ',' << run.rec.p_heat[i] << '\n';
            }
            summary.push_back({{"prep", scen.label},
                               {"nbar_label", nlabel},
                               {"alpha_in", alpha},
                               {"work_hfs", run.rec.work_over_hfs},
                               {"delta_u_hfs", run.rec.delta_u_over_hfs},
                               {"heat_hfs", run.rec.heat_over_hfs},
                               {"q_spont_hfs", run.rec.q_spont_over_hfs}});
        }
    }
    ctx.write_json("fig2_summary.json", "fig2", std::move(summary));
}

void preset_fig3(const PresetCtx& ctx) {
    auto wcsv = ctx.open_csv("fig3_work.csv", "fig3",
                             "prep,alpha_in,sqrt_nbar,work_hfs");
    auto ecsv = ctx.open_csv("fig3_energy.csv", "fig3",
                             "prep,alpha_in,p_e_final,U_S_J");
    const DensityMatrix rho0 = ctx.thermal_start();

    std::vector<double> alphas;
    const int count = ctx.opts.fast ? 7 : 13;
    for (int i = 0; i < count; ++i) alphas.push_back(3.0 * i / double(count - 1));

    struct Scen {
        std::string label;
        std::vector<PrepBranch> branches;
    };
    std::vector<Scen> scens{
        {"T_S0", {{PrepKind::None, 1.0}}},
        {"0.17K", thermal_branches(0.17, ctx.params)},
        {"0.40K", thermal_branches(0.40, ctx.params)},
        {"inf", thermal_branches(std::numeric_limits<double>::infinity(), ctx.params)},
        {"superposition", {{PrepKind::PiHalf, 1.0}}}};

    for (double alpha : alphas) {
        const double nbar = alpha_to_nbar(alpha, ctx.params);
        for (const auto& scen : scens) {
            double w_mix = 0, pe_mix = 0;
            for (const auto& b : scen.branches) {
                const ProtocolRun run = run_sequential(
                    b.prep, alpha, ctx.params, ctx.cal, rho0, ctx.evolve_opts());
                w_mix += b.weight * run.rec.work_over_hfs;
                pe_mix += b.weight * run.traj.p_e.back();
            }
            wcsv << scen.label << ',' << alpha << ',' << std::sqrt(nbar) << ','
                 << w_mix << '\n';
            ecsv << scen.label << ',' << alpha << ',' << pe_mix << ','
                 << pe_mix * ctx.params.hf_S() << '\n';
        }
    }
}

double h2_nats(double p) {
    double s = 0;
    if (p > 0) s -= p * std::log(p);
    if (p < 1) s -= (1 - p) * std::log(1 - p);
    return s;
}

void preset_figS1(const PresetCtx& ctx) {
    auto csv = ctx.open_csv("figS1_entropy.csv", "figS1",
                            "prep,alpha_in,S_S_nats,p0_demon,h2_ref_nats");
    const DensityMatrix cold =
        tensor_states(qubit_pure(1.0, 0.0), fock_state(0, ctx.params.n_trunc));
    const DensityMatrix thermal = ctx.thermal_start();

    std::vector<double> alphas;
    const int count = ctx.opts.fast ? 9 : 17;
    for (int i = 0; i < count; ++i) alphas.push_back(3.0 * i / double(count - 1));

    for (double alpha : alphas) {
        // Cold start: ideal ground state, no prep pulse.
        {
            const ProtocolRun run = run_sequential(PrepKind::None, alpha, ctx.params,
                                                   ctx.cal, cold, ctx.evolve_opts());
            const auto& rho_end = run.traj.snapshot_at(run.seq.total_duration);
            const double ss = von_neumann_entropy(partial_trace(rho_end, Subsystem::Qubit));
            // Demon vacuum weight at the end of the encoding step.
            std::size_t i2 = 0;
            const double t2 = run.seq.marker("step2_end");
            while (i2 + 1 < run.traj.size() && run.traj.t[i2] < t2 - 1e-15) ++i2;
            const double p0 = run.traj.p0_cavity[i2];
            csv << "cold," << alpha << ',' << ss << ',' << p0 << ','
                << h2_nats(p0) << '\n';
        }
        // Infinite-temperature start: probabilistic pi-pulse mixture.
        {
            Matrix mixed;
            bool init = false;
            for (const auto& b : thermal_branches(
                     std::numeric_limits<double>::infinity(), ctx.params)) {
                const ProtocolRun run = run_sequential(
                    b.prep, alpha, ctx.params, ctx.cal, thermal, ctx.evolve_opts());
                const Matrix& m = run.traj.snapshot_at(run.seq.total_duration).mat();
                if (!init) {
                    mixed = b.weight * m;
                    init = true;
                } else {
                    mixed += b.weight * m;
                }
            }
            const double ss = von_neumann_entropy(
                partial_trace(mixed, {2, ctx.params.n_trunc + 1}, Subsystem::Qubit));
            csv << "inf," << alpha << ',' << ss << ",," << '\n';
        }
    }
}

void preset_figS3(const PresetCtx& ctx) {
    auto csv = ctx.open_csv("figS3_stark.csv", "figS3",
                            "delta_hz,f_stark_hz,gamma_d_per_s");
    const double eps = 0.25 * ctx.params.kappa_rate();  // |alpha_g| = 0.5 on resonance
    const int count = ctx.opts.fast ? 36 : 141;
    std::vector<double> t_grid;
    for (int i = 0; i <= 600; ++i) t_grid.push_back(i * 5e-9);  // 3 us, steady state
    for (int i = 0; i < count; ++i) {
        const double delta = -50e6 + 70e6 * i / double(count - 1);
        const StarkResponse r =
            stark_dephasing_response(ctx.params, delta, Complex(eps, 0.0), t_grid);
        csv << delta << ',' << r.f_stark.back() << ',' << r.gamma_d.back() << '\n';
    }
}

void preset_figS4(const PresetCtx& ctx) {
    auto csv = ctx.open_csv("figS4_kerr.csv", "figS4", "alpha_in,p0_demon");
    const DensityMatrix rho0 =
        tensor_states(qubit_pure(1.0, 0.0), fock_state(0, ctx.params.n_trunc));
    const int count = ctx.opts.fast ? 17 : 41;
    const double duration = 100e-9;
    for (int i = 0; i < count; ++i) {
        const double alpha = 4.0 * i / double(count - 1);
        PulseSequence seq;
        seq.total_duration = duration;
        PulseSegment drive;
        drive.target = Port::CavityA;
        drive.shape = PulseShape{ShapeKind::Square, 0.0, 0.0};
        drive.start = 0.0;
        drive.duration = duration;
        drive.amplitude = alpha / duration;
        seq.segments.push_back(drive);
        const auto grid = make_time_grid(duration, 1e-9);
        const Trajectory traj =
            evolve(rho0, ctx.params, seq, grid, ctx.evolve_opts());
        csv << alpha << ',' << traj.p0_cavity.back() << '\n';
    }
}

void preset_fig4(const PresetCtx& ctx) {
    const DensityMatrix rho0 = ctx.thermal_start();
    const double alpha = 2.8;  // ~nbar 6 after encoding
    const double t_end = 150e-9;

    struct Scen {
        std::string label;
        std::vector<PrepBranch> branches;
    };
    std::vector<Scen> scens{
        {"a_thermal", {{PrepKind::None, 1.0}}},
        {"b_excited", {{PrepKind::Pi, 1.0}}},
        {"c_superposition", {{PrepKind::PiHalf, 1.0}}},
        {"d_mixed", thermal_branches(std::numeric_limits<double>::infinity(), ctx.params)}};

    const TomographyGrid grid = TomographyGrid::make_square(
        ctx.opts.fast ? 15 : 31, 5.95, ctx.opts.fast ? 3 : 5);
    TomographyPulseConfig pcfg;
    pcfg.fixed_dt = ctx.opts.fixed_dt;
    const EffectSet effects = build_effects(grid, ctx.params, pcfg);

    ReconstructionConfig rcfg;
    rcfg.n_trunc_recon = ctx.opts.fast ? 10 : 15;

    auto csv = ctx.open_csv("fig4_entropy.csv", "fig4",
                            "scenario,S_D_recon,S_D_direct,rms_residual,converged");
    json sens = json::array();
    for (const auto& scen : scens) {
        Matrix mixed = Matrix::Zero(2 * (ctx.params.n_trunc + 1),
                                    2 * (ctx.params.n_trunc + 1));
        for (const auto& b : scen.branches) {
            const ProtocolRun run =
                run_sequential(b.prep, alpha, ctx.params, ctx.cal, rho0,
                               ctx.evolve_opts(), 1e-9, {t_end});
            mixed += b.weight * run.traj.snapshot_at(t_end).mat();
        }
        const DensityMatrix rho_joint({2, ctx.params.n_trunc + 1}, mixed);
        const double sd_direct =
            von_neumann_entropy(partial_trace(rho_joint, Subsystem::Cavity));

        const TomographyGrid data = simulate_tomography(rho_joint, effects);
        const ReconstructionResult rec = maxlike_reconstruct(data, effects, rcfg);
        csv << scen.label << ',' << rec.S_D << ',' << sd_direct << ','
            << rec.rms_residual << ',' << (rec.converged ? 1 : 0) << '\n';

        std::ofstream gs(fs::path(ctx.opts.out_dir) / ("fig4_grid_" + scen.label + ".json"));
        gs << data.to_json() << "\n";
        std::ofstream rs(fs::path(ctx.opts.out_dir) /
                         ("fig4_recon_" + scen.label + ".json"));
        rs << rec.to_json() << "\n";

        if (scen.label == "c_superposition" || scen.label == "d_mixed") {
            const std::vector<int> nts =
                ctx.opts.fast ? std::vector<int>{9, 10, 11}
                              : std::vector<int>{13, 15, 17};
            for (const auto& row : entropy_sensitivity_sweep(
                     data, effects, rcfg, nts, {}, {0.95, 0.97, 0.99}))
                sens.push_back({{"scenario", scen.label},
                                {"parameter", row.parameter},
                                {"value", row.value},
                                {"S_D", row.S_D}});
        }
    }
    ctx.write_json("fig4_sensitivity.json", "fig4", std::move(sens));
}

}  // namespace

void run_preset(const std::string& name, const PresetOptions& opts) {
    const bool needs_cal = name == "fig3" || name == "fig4" || name == "figS1";
    PresetCtx ctx = make_ctx(opts, needs_cal);
    if (name == "fig2") preset_fig2(ctx);
    else if (name == "fig3") preset_fig3(ctx);
    else if (name == "fig4") preset_fig4(ctx);
    else if (name == "figS1") preset_figS1(ctx);
    else if (name == "figS3") preset_figS3(ctx);
    else if (name == "figS4") preset_figS4(ctx);
    else throw ValidationError("unknown preset: " + name);
}

}  // namespace qmd
