#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qmd/presets.hpp"
#include "qmd/tomography.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace qmd;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir = ".";
    bool fast = false;
    int jobs = 0;
    unsigned seed = 0;
    double fixed_step = 0;  // seconds
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_config) {
    auto* opt = cmd->add_option("--config", f.config_path, "JSON configuration file");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", f.out_dir, "output directory");
    cmd->add_flag("--fast", f.fast, "desk-scale grids and truncation");
    cmd->add_option("--jobs", f.jobs, "worker thread count");
    cmd->add_option("--seed", f.seed, "seed for synthetic noise");
    cmd->add_option("--fixed-step", f.fixed_step,
                    "fixed integrator step in seconds (deterministic output)");
}

json load_config(const CommonFlags& f) {
    if (f.config_path.empty()) return json::object();
    std::ifstream is(f.config_path);
    return json::parse(is);  // parse_error propagates -> exit 2
}

DeviceParams device_from_config(const json& cfg, const CommonFlags& f) {
    DeviceParams p;
    if (cfg.contains("device")) p = DeviceParams::from_json(cfg.at("device").dump());
    if (f.fast && p.n_trunc > 20) p.n_trunc = 20;
    return p;
}

std::vector<double> sweep_values(const json& v) {
    std::vector<double> out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
    } else if (v.is_array()) {
        for (const auto& x : v) out.push_back(x.get<double>());
    } else if (v.is_object()) {
        const double start = v.at("start").get<double>();
        const double stop = v.at("stop").get<double>();
        const int count = v.at("count").get<int>();
        if (count < 0) throw ParameterError("sweep count must be >= 0");
        for (int i = 0; i < count; ++i)
            out.push_back(count == 1 ? start
                                     : start + (stop - start) * i / double(count - 1));
    } else {
        throw ParameterError("alpha_in must be a number, list or {start,stop,count}");
    }
    return out;
}

std::ofstream open_artifact(const CommonFlags& f, const std::string& name,
                            const DeviceParams& params) {
    fs::create_directories(f.out_dir);
    std::ofstream os(fs::path(f.out_dir) / name);
    os << "# " << version_string() << "\n# fast: " << (f.fast ? 1 : 0)
       << " seed: " << f.seed << " fixed_dt: " << f.fixed_step << "\n";
    std::istringstream cfg(params.to_json());
    for (std::string line; std::getline(cfg, line);) os << "# " << line << "\n";
    os << std::setprecision(12);
    return os;
}

struct Scenario {
    std::string label;
    std::vector<PrepBranch> branches;
    double T_K = std::numeric_limits<double>::quiet_NaN();
};

Scenario scenario_from_config(const json& cfg, const DeviceParams& params) {
    if (cfg.contains("T_target")) {
        const double T = cfg.at("T_target").is_string()
                             ? std::numeric_limits<double>::infinity()
                             : cfg.at("T_target").get<double>();
        Scenario s{"T" + std::to_string(T), thermal_branches(T, params), T};
        return s;
    }
    const std::string prep = cfg.value("prep", "none");
    return Scenario{prep, {{prep_from_string(prep), 1.0}}};
}

EvolveOptions evolve_options(const CommonFlags& f) {
    EvolveOptions o;
    o.fixed_dt = f.fixed_step;
    return o;
}

int cmd_simulate(const CommonFlags& f) {
    const json cfg = load_config(f);
    const DeviceParams params = device_from_config(cfg, f);
    const std::string kind = cfg.value("sequence_kind", "sequential");
    const Scenario scen = scenario_from_config(cfg, params);
    const std::vector<double> alphas =
        sweep_values(cfg.contains("alpha_in") ? cfg.at("alpha_in") : json(0.0));
    if (alphas.empty()) {
        std::cerr << "warning: empty alpha_in sweep, nothing to do\n";
        return 0;
    }
    const double dt_out = cfg.value("dt_out_ns", 0.5) * 1e-9;
    const double start_time = cfg.value("start_time_ns", 200.0) * 1e-9;

    const DensityMatrix rho0 =
        cfg.value("initial", "thermal") == "ground"
            ? tensor_states(qubit_pure(1.0, 0.0), fock_state(0, params.n_trunc))
            : thermal_joint_state(params);

    PiCalibration cal;
    if (kind == "sequential") cal = calibrate_pi_amplitude(params, PulseShape{}, 50e-9);

    json summary = json::array();
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        double w_mix = 0, du_mix = 0, q_mix = 0;
        for (const auto& b : scen.branches) {
            ProtocolRun run =
                kind == "sequential"
                    ? run_sequential(b.prep, alphas[i], params, cal, rho0,
                                     evolve_options(f), dt_out)
                    : run_continuous(b.prep == PrepKind::None ? 400e-9
                                     : b.prep == PrepKind::Pi ? 200e-9
                                                              : start_time,
                                     alphas[i], params, rho0, evolve_options(f), dt_out);
            w_mix += b.weight * run.rec.work_over_hfs;
            du_mix += b.weight * run.rec.delta_u_over_hfs;
            q_mix += b.weight * run.rec.heat_over_hfs;
            if (b.weight == 1.0 || b.prep == PrepKind::Pi) {
                auto os = open_artifact(
                    f, "trajectory_" + std::to_string(i) + "_" + to_string(b.prep) + ".csv",
                    params);
                run.traj.write_csv(os);
            }
        }
        summary.push_back({{"alpha_in", alphas[i]},
                           {"prep", scen.label},
                           {"work_hfs", w_mix},
                           {"delta_u_hfs", du_mix},
                           {"heat_hfs", q_mix}});
    }
    auto os = open_artifact(f, "simulate_summary.json", params);
    os << summary.dump(2) << "\n";
    return 0;
}

int cmd_tomography(const CommonFlags& f) {
    const json cfg = load_config(f);
    if (cfg.contains("preset")) {
        PresetOptions po;
        po.params = device_from_config(cfg, f);
        po.out_dir = f.out_dir;
        po.fast = f.fast;
        po.fixed_dt = f.fixed_step;
        po.seed = f.seed;
        po.jobs = f.jobs;
        run_preset(cfg.at("preset").get<std::string>(), po);
        return 0;
    }
    const DeviceParams params = device_from_config(cfg, f);
    const Scenario scen = scenario_from_config(cfg, params);
    const double alpha = cfg.value("alpha_in", 1.9);

    const int side = f.fast ? 15 : cfg.value("grid_side", 31);
    const int n_max = f.fast ? 3 : cfg.value("n_max", 5);
    const double beta_max = cfg.value("beta_max", 5.95);
    ReconstructionConfig rcfg;
    rcfg.n_trunc_recon = f.fast ? 10 : cfg.value("n_trunc_recon", 15);
    rcfg.p_g = cfg.value("p_g", 0.97);

    const PiCalibration cal = calibrate_pi_amplitude(params, PulseShape{}, 50e-9);
    const DensityMatrix rho0 = thermal_joint_state(params);
    Matrix mixed = Matrix::Zero(2 * (params.n_trunc + 1), 2 * (params.n_trunc + 1));
    double t_end = 0;
    for (const auto& b : scen.branches) {
        const ProtocolRun run = run_sequential(b.prep, alpha, params, cal, rho0,
                                               evolve_options(f), 1e-9);
        t_end = run.seq.total_duration;
        mixed += b.weight * run.traj.snapshot_at(t_end).mat();
    }
    const DensityMatrix rho_joint({2, params.n_trunc + 1}, mixed);

    const TomographyGrid grid = TomographyGrid::make_square(side, beta_max, n_max);
    TomographyPulseConfig pcfg;
    pcfg.fixed_dt = f.fixed_step;
    const EffectSet effects = build_effects(grid, params, pcfg);
    const TomographyGrid data = simulate_tomography(rho_joint, effects);
    const ReconstructionResult rec = maxlike_reconstruct(data, effects, rcfg);

    fs::create_directories(f.out_dir);
    std::ofstream(fs::path(f.out_dir) / "tomography_grid.json") << data.to_json() << "\n";
    std::ofstream(fs::path(f.out_dir) / "tomography_recon.json") << rec.to_json() << "\n";

    json report;
    report["S_D"] = rec.S_D;
    report["S_D_direct"] =
        von_neumann_entropy(partial_trace(rho_joint, Subsystem::Cavity));
    report["rms_residual"] = rec.rms_residual;
    report["converged"] = rec.converged;
    if (cfg.value("sweep", false)) {
        json rows = json::array();
        for (const auto& row : entropy_sensitivity_sweep(
                 data, effects, rcfg,
                 f.fast ? std::vector<int>{9, 10, 11} : std::vector<int>{13, 15, 17},
                 {}, {0.95, 0.97, 0.99}))
            rows.push_back(
                {{"parameter", row.parameter}, {"value", row.value}, {"S_D", row.S_D}});
        report["sensitivity"] = std::move(rows);
    }
    std::ofstream(fs::path(f.out_dir) / "tomography_report.json")
        << report.dump(2) << "\n";
    return 0;
}

int cmd_calibrate(const CommonFlags& f) {
    const json cfg = load_config(f);
    const DeviceParams params = device_from_config(cfg, f);

    const PiCalibration cal = calibrate_pi_amplitude(params, PulseShape{}, 50e-9);

    json table = json::array();
    std::vector<double> alphas;
    if (cfg.contains("alpha_values"))
        alphas = sweep_values(cfg.at("alpha_values"));
    else
        for (int i = 0; i <= (f.fast ? 6 : 12); ++i)
            alphas.push_back(3.0 * i / double(f.fast ? 6 : 12));
    for (double a : alphas) {
        const double nbar = alpha_to_nbar(a, params);
        table.push_back({{"alpha_in", a}, {"sqrt_nbar", std::sqrt(nbar)}, {"nbar", nbar}});
    }

    // Gain fit from synthetic damped-Rabi amplitudes at a known model.
    GainModel truth;
    truth.g0 = cfg.value("gain_g0", 25.1);
    truth.omega_inf = cfg.value("gain_omega_inf", 2.0e8);
    const double sz0 = 1.0 - 2.0 * params.p_e0;
    std::vector<GainSample> samples;
    for (double om : {5e6, 1e7, 2e7, 4e7, 8e7}) {
        GainSample s;
        s.omega = om;
        s.a_i = truth.amplitude_gain(om) * std::sqrt(params.gamma_b) * std::abs(sz0);
        s.a_i2q2 = truth.amplitude_gain(om) * truth.amplitude_gain(om) *
                   std::abs(sz0) *
                   std::sqrt(params.gamma_b * params.gamma_b + om * om) / 2.0;
        samples.push_back(s);
    }
    const GainModel fit = calibrate_gain(samples, sz0, params.gamma_b);

    json out;
    out["pi_amplitude_rad_per_s"] = cal.amplitude;
    out["pi_final_population"] = cal.final_population;
    out["pi_area_theorem_rad_per_s"] = area_theorem_pi_amplitude(PulseShape{}, 50e-9);
    out["alpha_nbar_table"] = std::move(table);
    out["gain_model"] = {{"g0", fit.g0},
                         {"omega_inf", fit.omega_inf},
                         {"offset", fit.offset},
                         {"residual_rms", fit.residual_rms}};
    auto os = open_artifact(f, "calibration.json", params);
    os << out.dump(2) << "\n";
    return 0;
}

int cmd_presets(const CommonFlags& f, const std::vector<std::string>& names,
                bool list_only) {
    if (list_only) {
        for (const auto& n : preset_names()) std::cout << n << "\n";
        return 0;
    }
    const json cfg = load_config(f);
    PresetOptions po;
    po.params = device_from_config(cfg, f);
    po.out_dir = f.out_dir;
    po.fast = f.fast;
    po.fixed_dt = f.fixed_step;
    po.seed = f.seed;
    po.jobs = f.jobs;
    for (const auto& n : names) run_preset(n, po);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maxwell-demon circuit-QED simulator"};
    app.require_subcommand(1);

    CommonFlags fs_sim, fs_tomo, fs_cal, fs_pre;
    auto* sim = app.add_subcommand("simulate", "run a demon sequence / sweep");
    add_common(sim, fs_sim, true);
    auto* tomo = app.add_subcommand("tomography", "tomography pipeline");
    add_common(tomo, fs_tomo, true);
    auto* cal = app.add_subcommand("calibrate", "pulse / photon-number / gain calibration");
    add_common(cal, fs_cal, false);
    auto* pre = app.add_subcommand("presets", "run named figure presets");
    add_common(pre, fs_pre, false);
    std::vector<std::string> preset_args;
    bool list_only = false;
    pre->add_option("names", preset_args, "preset names (fig2, fig3, ...)");
    pre->add_flag("--list", list_only, "list available presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(fs_sim);
        if (tomo->parsed()) return cmd_tomography(fs_tomo);
        if (cal->parsed()) return cmd_calibrate(fs_cal);
        if (pre->parsed()) {
            if (!list_only && preset_args.empty()) {
                std::cerr << "error: no preset names given (try --list)\n";
                return 2;
            }
            return cmd_presets(fs_pre, preset_args, list_only);
        }
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "physics error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
