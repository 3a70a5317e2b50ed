#include "qmd/device.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace qmd {

void DeviceParams::validate() const {
    auto nonneg = [](double v, const char* name) {
        if (v < 0) throw ParameterError(std::string("negative rate: ") + name);
    };
    nonneg(chi, "chi");
    nonneg(kappa_D, "kappa_D");
    nonneg(gamma_1, "gamma_1");
    nonneg(gamma_phi, "gamma_phi");
    nonneg(gamma_b, "gamma_b");
    if (p_e0 < 0 || p_e0 > 1) throw ParameterError("p_e0 outside [0,1]");
    if (F_pi <= 0 || F_pi > 1) throw ParameterError("F_pi outside (0,1]");
    if (gamma_b > gamma_1 * (1 + 1e-12))
        throw ParameterError("gamma_b exceeds gamma_1");
    if (n_trunc < 1) throw ParameterError("n_trunc < 1");
}

std::string DeviceParams::to_json() const {
    nlohmann::ordered_json j;
    j["f_S"] = f_S;
    j["f_D"] = f_D;
    j["chi"] = chi;
    j["chi2"] = chi2;
    j["kerr_K"] = kerr_K;
    j["kappa_D"] = kappa_D;
    j["gamma_1"] = gamma_1;
    j["gamma_phi"] = gamma_phi;
    j["p_e0"] = p_e0;
    j["gamma_b"] = gamma_b;
    j["F_pi"] = F_pi;
    j["n_trunc"] = n_trunc;
    return j.dump(2);
}

DeviceParams DeviceParams::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("malformed device JSON: ") + e.what());
    }
    static const std::vector<std::string> known = {
        "f_S", "f_D", "chi", "chi2", "kerr_K", "kappa_D", "gamma_1",
        "gamma_phi", "p_e0", "gamma_b", "F_pi", "n_trunc"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw ParameterError("unknown DeviceParams key: " + it.key());
    }
    DeviceParams p;
    auto get = [&](const char* k, auto& field) {
        if (j.contains(k)) field = j.at(k).get<std::decay_t<decltype(field)>>();
    };
    get("f_S", p.f_S);
    get("f_D", p.f_D);
    get("chi", p.chi);
    get("chi2", p.chi2);
    get("kerr_K", p.kerr_K);
    get("kappa_D", p.kappa_D);
    get("gamma_1", p.gamma_1);
    get("gamma_phi", p.gamma_phi);
    get("p_e0", p.p_e0);
    get("gamma_b", p.gamma_b);
    get("F_pi", p.F_pi);
    get("n_trunc", p.n_trunc);
    p.validate();
    return p;
}

Eigen::VectorXd hamiltonian_static_diag(const DeviceParams& params) {
    const int nc = params.n_trunc + 1;
    Eigen::VectorXd h(2 * nc);
    for (int q = 0; q < 2; ++q) {
        for (int n = 0; n < nc; ++n) {
            const double n2 = double(n) * double(n);
            double f = -params.kerr_K * n2;  // self-Kerr acts regardless of qubit state
            if (q == 1) f += -params.chi * n + params.chi2 * n2;
            h(q * nc + n) = kTwoPi * f;
        }
    }
    return h;
}

Operator build_hamiltonian(const DeviceParams& params, const DriveEnvelope& drive,
                           double t) {
    params.validate();
    const int nc = params.n_trunc + 1;
    const Dims dims{2, nc};
    Matrix h = hamiltonian_static_diag(params).cast<Complex>().asDiagonal();

    // Detuning knobs of the doubly rotating frame.
    for (int n = 0; n < nc; ++n) {
        h(nc + n, nc + n) += Complex(-kTwoPi * drive.detuning_S, 0);
        for (int q = 0; q < 2; ++q)
            h(q * nc + n, q * nc + n) += Complex(-kTwoPi * drive.detuning_D * n, 0);
    }

    if (drive.qubit_amp) {
        const double omega = drive.qubit_amp(t);
        const double c = 0.5 * omega * std::cos(drive.qubit_phase);
        const double s = 0.5 * omega * std::sin(drive.qubit_phase);
        const Matrix hq = c * sigma_x().mat() + s * sigma_y().mat();
        h += tensor(Operator({2, 1}, hq), Operator::identity({1, nc})).mat();
    }
    if (drive.cavity_amp) {
        const Complex eps = drive.cavity_amp(t);
        const Matrix d = fock_annihilation(params.n_trunc).mat();
        const Matrix hc = eps * d.adjoint() + std::conj(eps) * d;
        h += tensor(Operator::identity({2, 1}), Operator({1, nc}, hc)).mat();
    }
    return Operator(dims, std::move(h));
}

std::vector<CollapseChannel> collapse_operators(const DeviceParams& params) {
    params.validate();
    const int nc = params.n_trunc + 1;
    const Operator iq = Operator::identity({2, 1});
    const Operator ic = Operator::identity({1, nc});
    std::vector<CollapseChannel> ops;
    ops.push_back({params.kappa_rate(), tensor(iq, fock_annihilation(params.n_trunc))});
    ops.push_back({params.gamma_down(), tensor(sigma_minus(), ic)});
    ops.push_back({params.gamma_up(), tensor(sigma_plus(), ic)});
    ops.push_back({params.gamma_phi / 2.0, tensor(sigma_z(), ic)});
    return ops;
}

StarkResponse stark_dephasing_response(const DeviceParams& params, double delta,
                                       Complex eps_d, const std::vector<double>& t_grid) {
    StarkResponse out;
    out.t = t_grid;
    const double kappa = params.kappa_rate();
    const double dchi = params.chi - params.chi2;
    const Complex i2pi(0, kTwoPi);

    auto rhs_g = [&](Complex a) { return i2pi * delta * a - 0.5 * kappa * a + eps_d; };
    auto rhs_e = [&](Complex a) {
        return i2pi * (delta + dchi) * a - 0.5 * kappa * a + eps_d;
    };

    Complex ag = 0, ae = 0;
    double t = t_grid.empty() ? 0.0 : t_grid.front();
    auto record = [&]() {
        if (std::abs(ag) > 2.0 || std::abs(ae) > 2.0)
            throw WeakDriveViolated("pointer-state amplitude exceeded 2; reduce eps_d");
        out.alpha_g.push_back(ag);
        out.alpha_e.push_back(ae);
        out.f_stark.push_back(dchi * std::real(std::conj(ag) * ae));
        out.gamma_d.push_back(kTwoPi * dchi * std::imag(std::conj(ag) * ae));
    };
    if (!t_grid.empty()) record();

    // RK4 on the two scalar ODEs; substep so that the fast phase is resolved.
    const double wmax = std::max({std::abs(kTwoPi * delta),
                                  std::abs(kTwoPi * (delta + dchi)), kappa, 1.0});
    for (size_t k = 1; k < t_grid.size(); ++k) {
        const double span = t_grid[k] - t;
        const int nsub = std::max(1, int(std::ceil(span * wmax / 0.05)));
        const double h = span / nsub;
        for (int s = 0; s < nsub; ++s) {
            auto step = [&](Complex& a, auto&& rhs) {
                const Complex k1 = rhs(a);
                const Complex k2 = rhs(a + 0.5 * h * k1);
                const Complex k3 = rhs(a + 0.5 * h * k2);
                const Complex k4 = rhs(a + h * k3);
                a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            };
            step(ag, rhs_g);
            step(ae, rhs_e);
        }
        t = t_grid[k];
        record();
    }
    return out;
}

}  // namespace qmd
