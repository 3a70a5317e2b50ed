#include "qmd/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace qmd {

PowerSeries extracted_power(const Trajectory& traj, const std::vector<double>& omega,
                            double gamma_b) {
    if (omega.size() != traj.size())
        throw DimensionError("extracted_power: omega series does not match trajectory");
    PowerSeries ps;
    const std::size_t n = traj.size();
    ps.total.resize(n);
    ps.work_term.resize(n);
    ps.heat_term.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ps.heat_term[i] = gamma_b * 0.5 * (1.0 + traj.sz[i]);
        ps.work_term[i] = 0.5 * omega[i] * traj.sx[i];
        ps.total[i] = ps.heat_term[i] + ps.work_term[i];
    }
    return ps;
}

namespace {

std::size_t grid_index(const std::vector<double>& t, double value) {
    for (std::size_t i = 0; i < t.size(); ++i)
        if (std::abs(t[i] - value) <= 1e-12) return i;
    throw ValidationError("trajectory grid does not contain required time " +
                          std::to_string(value));
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& y,
                 std::size_t i0, std::size_t i1) {
    double acc = 0.0;
    for (std::size_t i = i0; i < i1; ++i)
        acc += 0.5 * (y[i] + y[i + 1]) * (t[i + 1] - t[i]);
    return acc;
}

}  // namespace

WorkRecord work(const Trajectory& traj, const PulseSequence& seq,
                const DeviceParams& params, const std::string& init_label,
                double nbar, double T_K) {
    std::vector<double> omega(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) omega[i] = seq.qubit_omega(traj.t[i]);
    const PowerSeries ps = extracted_power(traj, omega, params.gamma_b);

    WorkRecord rec;
    rec.t = traj.t;
    rec.p_total = ps.total;
    rec.p_work = ps.work_term;
    rec.p_heat = ps.heat_term;
    rec.init_label = init_label;
    rec.nbar = nbar;
    rec.T_K = T_K;

    const std::size_t i0 = grid_index(traj.t, seq.marker("step3_start"));
    const std::size_t i1 = grid_index(traj.t, seq.marker("step3_end"));
    if (i1 <= i0) throw ValidationError("work: empty step3 window");

    rec.work_over_hfs = trapezoid(traj.t, ps.work_term, i0, i1);
    rec.q_spont_over_hfs = trapezoid(traj.t, ps.heat_term, i0, i1);
    std::vector<double> net_flow(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i)
        net_flow[i] = params.gamma_down() * traj.p_e[i] -
                      params.gamma_up() * (1.0 - traj.p_e[i]);
    rec.heat_over_hfs = trapezoid(traj.t, net_flow, i0, i1);
    rec.delta_u_over_hfs = traj.p_e[i1] - traj.p_e[i0];
    rec.work_joules = rec.work_over_hfs * params.hf_S();
    return rec;
}

void WorkRecord::write_csv(std::ostream& os) const {
    os << "t_s,p_total,p_work,p_heat\n" << std::setprecision(12);
    for (std::size_t i = 0; i < t.size(); ++i)
        os << t[i] << ',' << p_total[i] << ',' << p_work[i] << ',' << p_heat[i] << '\n';
}

std::string WorkRecord::summary_json() const {
    nlohmann::ordered_json j;
    j["work_hfs"] = work_over_hfs;
    j["heat_hfs"] = heat_over_hfs;
    j["q_spont_hfs"] = q_spont_over_hfs;
    j["delta_u_hfs"] = delta_u_over_hfs;
    j["work_J"] = work_joules;
    j["nbar"] = nbar;
    j["prep"] = init_label;
    if (std::isfinite(T_K))
        j["T_K"] = T_K;
    else
        j["T_K"] = nullptr;
    return j.dump(2);
}

double internal_energy(const DensityMatrix& rho_S, double f_S) {
    if (!(rho_S.dims() == Dims{2, 1}))
        throw DimensionError("internal_energy expects a qubit density matrix");
    return kPlanck * f_S * rho_S.mat()(1, 1).real();
}

double boltzmann_population(double T, double f) {
    if (T <= 0) throw std::domain_error("boltzmann_population: T must be positive");
    return 1.0 / (1.0 + std::exp(kPlanck * f / (kBoltzmann * T)));
}

double temperature_from_population(double p_e, double f) {
    if (p_e <= 0) throw std::domain_error("temperature_from_population: p_e must be > 0");
    if (p_e >= 0.5)
        throw NegativeTemperatureError(
            "population >= 1/2 has no positive-temperature equivalent");
    return kPlanck * f / (kBoltzmann * std::log(1.0 / p_e - 1.0));
}

double demon_temperature_from_P1(double p1, double f_D) {
    if (p1 <= 0 || p1 >= 1.0 / M_E)
        throw std::domain_error("demon_temperature_from_P1: p1 outside (0, 1/e)");
    return kPlanck * f_D / (kBoltzmann * std::log((1.0 - p1) / p1));
}

double temperature_from_contrast(double c_eq, double c_pi, double F_pi, double f_S) {
    if (!(c_eq > 0) || !(c_pi > c_eq))
        throw InconsistentContrast("contrast ratio must exceed 1");
    const double ratio = c_pi / c_eq;
    const double x = std::log1p((ratio - 1.0) / F_pi);
    return kPlanck * f_S / (kBoltzmann * x);
}

double landauer_ratio(double w, double T) {
    if (T <= 0) throw std::domain_error("landauer_ratio: T must be positive");
    return w / (kBoltzmann * T * std::log(2.0));
}

double GainModel::amplitude_gain(double omega) const {
    if (omega >= omega_inf)
        throw GainDomainError("Rabi rate at or beyond the gain-model pole");
    return std::sqrt(g0) * (1.0 - omega / omega_inf);
}

HeterodyneRecord synthesize_heterodyne(const Trajectory& traj, const GainModel& gain,
                                       const std::vector<double>& omega,
                                       const std::vector<Complex>& beta_in,
                                       double gamma_b) {
    if (omega.size() != traj.size() || beta_in.size() != traj.size())
        throw DimensionError("synthesize_heterodyne: series sizes mismatch");
    HeterodyneRecord rec;
    const std::size_t n = traj.size();
    rec.I.resize(n);
    rec.Q.resize(n);
    rec.power.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double sg = gain.amplitude_gain(omega[i]);
        const Complex sminus(0.5 * traj.sx[i], -0.5 * traj.sy[i]);
        const Complex b_out = beta_in[i] - std::sqrt(gamma_b) * sminus;
        rec.I[i] = sg * b_out.real();
        rec.Q[i] = sg * b_out.imag();
        rec.power[i] = gain.offset + rec.I[i] * rec.I[i] + rec.Q[i] * rec.Q[i];
    }
    return rec;
}

GainModel calibrate_gain(const std::vector<GainSample>& samples, double sz0,
                         double gamma_p) {
    if (sz0 == 0.0) throw InsufficientData("calibrate_gain: sz0 must be nonzero");
    std::vector<double> omegas;
    for (const auto& s : samples) omegas.push_back(s.omega);
    std::sort(omegas.begin(), omegas.end());
    omegas.erase(std::unique(omegas.begin(), omegas.end()), omegas.end());
    if (omegas.size() < 3)
        throw InsufficientData("calibrate_gain needs >= 3 distinct Rabi rates");

    // Ordinary least squares on A^I = c0 + c1 Omega.
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& s : samples) {
        sw += 1;
        sx += s.omega;
        sy += s.a_i;
        sxx += s.omega * s.omega;
        sxy += s.omega * s.a_i;
    }
    const double det = sw * sxx - sx * sx;
    if (std::abs(det) < 1e-30 * sw * sxx)
        throw InsufficientData("calibrate_gain: singular design matrix");
    const double c0 = (sxx * sy - sx * sxy) / det;
    const double c1 = (sw * sxy - sx * sy) / det;
    if (c0 <= 0) throw InsufficientData("calibrate_gain: non-positive fitted gain");

    GainModel model;
    const double sqrt_g0 = c0 / (std::sqrt(gamma_p) * std::abs(sz0));
    model.g0 = sqrt_g0 * sqrt_g0;
    model.omega_inf = c1 < 0 ? -c0 / c1 : std::numeric_limits<double>::infinity();
    double ss = 0;
    for (const auto& s : samples) {
        const double r = s.a_i - (c0 + c1 * s.omega);
        ss += r * r;
    }
    model.residual_rms = std::sqrt(ss / double(samples.size()));
    return model;
}

}  // namespace qmd
