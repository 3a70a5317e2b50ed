#include "qmd/tomography.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qmd {

using json = nlohmann::ordered_json;

double husimi_q(const DensityMatrix& rho_D, int n, Complex beta) {
    if (rho_D.dims().qubit != 1)
        throw DimensionError("husimi_q expects a cavity-only density matrix");
    const int n_trunc = rho_D.dims().cavity - 1;
    if (n < 0 || n > n_trunc) throw DimensionError("husimi_q: n outside truncation");
    const Operator d = displacement(beta, n_trunc);
    const Vector psi = d.mat().col(n);  // D(beta)|n>
    return (psi.adjoint() * rho_D.mat() * psi)(0).real() / M_PI;
}

TomographyGrid TomographyGrid::make_square(int side, double beta_max, int n_max) {
    if (side < 1 || beta_max <= 0 || n_max < 0)
        throw ValidationError("make_square: invalid grid parameters");
    TomographyGrid g;
    auto coord = [&](int i) {
        return side == 1 ? 0.0 : -beta_max + 2.0 * beta_max * i / double(side - 1);
    };
    for (int iy = 0; iy < side; ++iy)
        for (int ix = 0; ix < side; ++ix)
            g.beta.emplace_back(coord(ix), coord(iy));
    for (int n = 0; n <= n_max; ++n) g.fock_indices.push_back(n);
    g.p_e.assign(g.beta.size() * g.fock_indices.size(), 0.0);
    return g;
}

std::string TomographyGrid::to_json() const {
    json records = json::array();
    for (std::size_t k = 0; k < fock_indices.size(); ++k)
        for (std::size_t b = 0; b < beta.size(); ++b)
            records.push_back({{"beta_re", beta[b].real()},
                               {"beta_im", beta[b].imag()},
                               {"n", fock_indices[k]},
                               {"p_e", at(k, b)}});
    return records.dump(2);
}

TomographyGrid TomographyGrid::from_json(const std::string& text) {
    const json records = json::parse(text);
    TomographyGrid g;
    for (const auto& r : records) {
        const int n = r.at("n").get<int>();
        if (std::find(g.fock_indices.begin(), g.fock_indices.end(), n) ==
            g.fock_indices.end())
            g.fock_indices.push_back(n);
        if (n == g.fock_indices.front())
            g.beta.emplace_back(r.at("beta_re").get<double>(),
                                r.at("beta_im").get<double>());
    }
    g.p_e.assign(g.beta.size() * g.fock_indices.size(), 0.0);
    std::size_t idx = 0;
    for (const auto& r : records) {
        if (idx >= g.p_e.size())
            throw ValidationError("tomography grid JSON: inconsistent record count");
        g.p_e[idx++] = r.at("p_e").get<double>();
    }
    if (idx != g.p_e.size())
        throw ValidationError("tomography grid JSON: inconsistent record count");
    return g;
}

namespace {

// (I (x) D) E (I (x) D^dag), blockwise over the qubit index.
Matrix conjugate_cavity(const Matrix& e, const Matrix& d, bool dag_right) {
    const int nc = int(d.rows());
    Matrix out(2 * nc, 2 * nc);
    const Matrix dd = d.adjoint();
    for (int q = 0; q < 2; ++q)
        for (int p = 0; p < 2; ++p) {
            if (dag_right)
                out.block(q * nc, p * nc, nc, nc) =
                    d * e.block(q * nc, p * nc, nc, nc) * dd;
            else
                out.block(q * nc, p * nc, nc, nc) =
                    dd * e.block(q * nc, p * nc, nc, nc) * d;
        }
    return out;
}

}  // namespace

EffectOperator EffectSet::effect_at_zero(std::size_t n_idx, std::size_t b) const {
    const int nc = dims.cavity;
    const Matrix d = displacement(beta[b], nc - 1).mat();
    Matrix e = conjugate_cavity(effect_post_disp[n_idx], d, /*dag_right=*/true);
    return EffectOperator{Operator(dims, std::move(e)), fock_indices[n_idx], beta[b]};
}

std::vector<Matrix> EffectSet::cavity_effects(double p_g, int n_trunc_recon) const {
    const int nc = dims.cavity;
    const int nr = n_trunc_recon + 1;
    if (nr > nc)
        throw DimensionError("reconstruction truncation exceeds simulation truncation");
    std::vector<Matrix> base;
    for (const Matrix& e : effect_post_disp)
        base.push_back(p_g * e.topLeftCorner(nc, nc) +
                       (1.0 - p_g) * e.bottomRightCorner(nc, nc));
    std::vector<Matrix> out(fock_indices.size() * beta.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t b = 0; b < std::ptrdiff_t(beta.size()); ++b) {
        const Matrix d = displacement(beta[b], nc - 1).mat();
        for (std::size_t k = 0; k < fock_indices.size(); ++k)
            out[k * beta.size() + b] =
                (d * base[k] * d.adjoint()).topLeftCorner(nr, nr);
    }
    return out;
}

EffectSet build_effects(const TomographyGrid& grid, const DeviceParams& params,
                        const TomographyPulseConfig& cfg) {
    params.validate();
    EffectSet set;
    set.dims = Dims{2, params.n_trunc + 1};
    set.fock_indices = grid.fock_indices;
    set.beta = grid.beta;

    const Operator e_final =
        tensor(excited_projector(), Operator::identity({1, params.n_trunc + 1}));
    const PulseShape shape{ShapeKind::Gaussian, cfg.sigma, cfg.duration / 2.0};

    AdjointOptions opts;
    opts.rtol = cfg.rtol;
    opts.fixed_dt = cfg.fixed_dt;
    opts.backend = cfg.backend;
    opts.include_excitation = cfg.include_excitation;

    for (int n : grid.fock_indices) {
        PulseSequence seq;
        seq.total_duration = cfg.duration;
        PulseSegment pulse;
        pulse.target = Port::QubitB;
        pulse.shape = shape;
        pulse.start = 0.0;
        pulse.duration = cfg.duration;
        pulse.amplitude =
            area_theorem_pi_amplitude(shape, cfg.duration) * std::polar(1.0, M_PI / 2.0);
        // Number-selective carrier: resonant with the n-photon-shifted qubit.
        pulse.carrier_detuning = -double(n) * params.chi + double(n) * n * params.chi2;
        seq.segments.push_back(pulse);

        const EffectOperator e0 =
            evolve_adjoint(EffectOperator{e_final, n}, params, seq, opts);
        set.effect_post_disp.push_back(e0.op.mat());
    }
    return set;
}

TomographyGrid simulate_tomography(const DensityMatrix& rho_joint,
                                   const EffectSet& effects) {
    if (!(rho_joint.dims() == effects.dims))
        throw DimensionError("simulate_tomography: state/effect dimension mismatch");
    TomographyGrid grid;
    grid.beta = effects.beta;
    grid.fock_indices = effects.fock_indices;
    grid.p_e.assign(grid.beta.size() * grid.fock_indices.size(), 0.0);
    const int nc = effects.dims.cavity;

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t b = 0; b < std::ptrdiff_t(grid.beta.size()); ++b) {
        const Matrix d = displacement(grid.beta[b], nc - 1).mat();
        // Tr(rho (I(x)D) E (I(x)D)^dag) = Tr((I(x)D)^dag rho (I(x)D) E)
        const Matrix rho_b = conjugate_cavity(rho_joint.mat(), d, /*dag_right=*/false);
        for (std::size_t k = 0; k < grid.fock_indices.size(); ++k) {
            const double p =
                rho_b.cwiseProduct(effects.effect_post_disp[k].transpose()).sum().real();
            grid.p_e[k * grid.beta.size() + b] = std::clamp(p, 0.0, 1.0);
        }
    }
    return grid;
}

std::string ReconstructionResult::to_json() const {
    json j;
    const Matrix& m = rho_D.mat();
    json re = json::array(), im = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json rrow = json::array(), irow = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            rrow.push_back(m(i, c).real());
            irow.push_back(m(i, c).imag());
        }
        re.push_back(std::move(rrow));
        im.push_back(std::move(irow));
    }
    j["rho_re"] = std::move(re);
    j["rho_im"] = std::move(im);
    j["S_D"] = S_D;
    j["rms_residual"] = rms_residual;
    j["converged"] = converged;
    j["iterations"] = log_likelihood.size();
    return j.dump(2);
}

ReconstructionResult maxlike_reconstruct(const TomographyGrid& grid,
                                         const EffectSet& effects,
                                         const ReconstructionConfig& config) {
    if (grid.p_e.size() != effects.beta.size() * effects.fock_indices.size())
        throw DimensionError("maxlike_reconstruct: grid/effect mismatch");
    if (config.p_g < 0 || config.p_g > 1)
        throw ValidationError("maxlike_reconstruct: p_g outside [0,1]");

    const std::vector<Matrix> f_ops =
        effects.cavity_effects(config.p_g, config.n_trunc_recon);
    const int nr = config.n_trunc_recon + 1;
    const std::size_t n_data = f_ops.size();

    auto objective = [&](const Matrix& rho, std::vector<double>& resid) {
        double f = 0.0;
#pragma omp parallel for reduction(-:f)
        for (std::ptrdiff_t k = 0; k < std::ptrdiff_t(n_data); ++k) {
            const double pred =
                rho.cwiseProduct(f_ops[k].transpose()).sum().real();
            resid[k] = grid.p_e[k] - pred;
            f -= resid[k] * resid[k];
        }
        return f;
    };

    double lipschitz = 0.0;
    for (const Matrix& f : f_ops) lipschitz += 2.0 * f.squaredNorm();
    double step = config.step_size > 0 ? config.step_size : 1.0 / lipschitz;

    Matrix rho = Matrix::Identity(nr, nr) / double(nr);
    std::vector<double> resid(n_data);
    double f = objective(rho, resid);

    ReconstructionResult result;
    result.log_likelihood.push_back(f);
    result.converged = false;

    std::vector<double> resid_new(n_data);
    for (int it = 0; it < config.max_iters; ++it) {
        Matrix grad = Matrix::Zero(nr, nr);
        for (std::size_t k = 0; k < n_data; ++k) grad += (2.0 * resid[k]) * f_ops[k];
        grad = 0.5 * (grad + Matrix(grad.adjoint()));

        double f_new = f;
        Matrix rho_new;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            rho_new = project_to_density_matrix(
                          Operator({1, nr}, rho + step * grad))
                          .mat();
            f_new = objective(rho_new, resid_new);
            if (f_new >= f) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        const double gain = f_new - f;
        rho.swap(rho_new);
        resid.swap(resid_new);
        f = f_new;
        result.log_likelihood.push_back(f);
        step = std::min(step * 1.6, 100.0 / lipschitz);
        if (gain < config.convergence_tol) {
            result.converged = true;
            break;
        }
    }

    result.rho_D = DensityMatrix({1, nr}, rho);
    result.S_D = von_neumann_entropy(result.rho_D);
    double ss = 0.0;
    for (double r : resid) ss += r * r;
    result.rms_residual = std::sqrt(ss / double(n_data));
    return result;
}

namespace {

// Restricts grid and effect set to |Re beta|, |Im beta| <= bmax.
void filter_beta(const TomographyGrid& grid, const EffectSet& effects, double bmax,
                 TomographyGrid& g_out, EffectSet& e_out) {
    g_out.fock_indices = grid.fock_indices;
    e_out = effects;
    e_out.beta.clear();
    g_out.beta.clear();
    std::vector<std::size_t> keep;
    for (std::size_t b = 0; b < grid.beta.size(); ++b)
        if (std::abs(grid.beta[b].real()) <= bmax + 1e-12 &&
            std::abs(grid.beta[b].imag()) <= bmax + 1e-12) {
            keep.push_back(b);
            g_out.beta.push_back(grid.beta[b]);
            e_out.beta.push_back(grid.beta[b]);
        }
    g_out.p_e.resize(keep.size() * grid.fock_indices.size());
    for (std::size_t k = 0; k < grid.fock_indices.size(); ++k)
        for (std::size_t j = 0; j < keep.size(); ++j)
            g_out.p_e[k * keep.size() + j] = grid.at(k, keep[j]);
}

}  // namespace

std::vector<SweepRow> entropy_sensitivity_sweep(
    const TomographyGrid& grid, const EffectSet& effects,
    const ReconstructionConfig& base, const std::vector<int>& n_trunc_values,
    const std::vector<double>& beta_max_values,
    const std::vector<double>& p_g_values) {
    std::vector<SweepRow> rows;
    for (int nt : n_trunc_values) {
        ReconstructionConfig c = base;
        c.n_trunc_recon = nt;
        rows.push_back({"n_trunc_recon", double(nt),
                        maxlike_reconstruct(grid, effects, c).S_D});
    }
    for (double bm : beta_max_values) {
        TomographyGrid g;
        EffectSet e;
        filter_beta(grid, effects, bm, g, e);
        ReconstructionConfig c = base;
        c.beta_max = bm;
        rows.push_back({"beta_max", bm, maxlike_reconstruct(g, e, c).S_D});
    }
    for (double pg : p_g_values) {
        ReconstructionConfig c = base;
        c.p_g = pg;
        rows.push_back({"p_g", pg, maxlike_reconstruct(grid, effects, c).S_D});
    }
    return rows;
}

}  // namespace qmd
