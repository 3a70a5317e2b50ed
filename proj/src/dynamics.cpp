#include "qmd/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

namespace qmd {

namespace {

// Dormand-Prince 5(4) embedded pair.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
// 5th-order weights are row kA[6]; kE is (b5 - b4), the error estimator.
constexpr double kE[7] = {71.0 / 57600,       0.0,        -71.0 / 16695,
                          71.0 / 1920,        -17253.0 / 339200,
                          22.0 / 525,         -1.0 / 40};

class Integrator {
public:
    Integrator(const LindbladKernel& kernel, RhsBackend backend,
               std::function<DriveSample(double)> drive, double rtol, double atol,
               double fixed_dt)
        : kernel_(kernel),
          backend_(backend),
          drive_(std::move(drive)),
          rtol_(rtol),
          atol_(atol),
          fixed_dt_(fixed_dt),
          h_max_(3.0 / std::max(kernel.spectral_radius(), 1.0)) {
        const int d = kernel.dim();
        for (auto& k : k_) k.resize(d, d);
        tmp_.resize(d, d);
        ynew_.resize(d, d);
    }

    // Advances y from ta to tb, landing exactly on tb.
    void advance(Matrix& y, double ta, double tb) {
        if (tb <= ta) return;
        if (fixed_dt_ > 0) {
            advance_fixed(y, ta, tb);
            return;
        }
        double t = ta;
        double h = std::min({h_max_, tb - ta, h_last_ > 0 ? h_last_ : h_max_});
        bool fresh = true;
        while (t < tb - 1e-18) {
            h = std::min(h, tb - t);
            if (fresh) {
                kernel_.rhs(y, drive_(stage_time(t, ta, tb)), k_[0], backend_);
                fresh = false;
            }
            for (int s = 1; s < 7; ++s) {
                tmp_ = y;
                for (int j = 0; j < s; ++j) tmp_ += (h * kA[s][j]) * k_[j];
                kernel_.rhs(tmp_, drive_(stage_time(t + kC[s] * h, ta, tb)),
                            k_[s], backend_);
            }
            ynew_ = y;
            for (int j = 0; j < 6; ++j) ynew_ += (h * kA[6][j]) * k_[j];
            // Scaled RMS of the embedded error estimate.
            tmp_.setZero();
            for (int j = 0; j < 7; ++j) tmp_ += (h * kE[j]) * k_[j];
            const double err = error_norm(y, ynew_, tmp_);
            if (err <= 1.0) {
                t += h;
                y.swap(ynew_);
                k_[0].swap(k_[6]);  // FSAL: stage 7 was evaluated at (t, y)
                h_last_ = h;
                h = std::min(h_max_,
                             h * std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0));
            } else {
                h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
                if (h < 1e-18)
                    throw IntegratorAccuracyError(
                        "adaptive step underflow; the tolerance cannot be met");
            }
        }
    }

private:
    // Segment envelopes are inclusive at both edges, so the drive is
    // two-valued exactly at an edge. Targets are aligned with segment edges;
    // biasing every stage time strictly into the open interval (ta, tb)
    // samples the one-sided limit that belongs to this interval, and also
    // guards against floating-point overshoot of t + c*h past tb.
    static double stage_time(double s, double ta, double tb) {
        if (s <= ta) return std::nextafter(ta, tb);
        if (s >= tb) return std::nextafter(tb, ta);
        return s;
    }

    void advance_fixed(Matrix& y, double ta, double tb) {
        const long n = std::max(1L, std::lround(std::ceil((tb - ta) / fixed_dt_ - 1e-9)));
        const double h = (tb - ta) / double(n);
        for (long i = 0; i < n; ++i) {
            const double t = ta + i * h;
            const double tm = stage_time(t + 0.5 * h, ta, tb);
            const double te = stage_time(t + h, ta, tb);
            kernel_.rhs(y, drive_(stage_time(t, ta, tb)), k_[0], backend_);
            tmp_ = y + (0.5 * h) * k_[0];
            kernel_.rhs(tmp_, drive_(tm), k_[1], backend_);
            tmp_ = y + (0.5 * h) * k_[1];
            kernel_.rhs(tmp_, drive_(tm), k_[2], backend_);
            tmp_ = y + h * k_[2];
            kernel_.rhs(tmp_, drive_(te), k_[3], backend_);
            y += (h / 6.0) * (k_[0] + 2.0 * k_[1] + 2.0 * k_[2] + k_[3]);
        }
    }

    double error_norm(const Matrix& y0, const Matrix& y1, const Matrix& e) const {
        const double* a = reinterpret_cast<const double*>(y0.data());
        const double* b = reinterpret_cast<const double*>(y1.data());
        const double* c = reinterpret_cast<const double*>(e.data());
        const Eigen::Index n = 2 * y0.size();
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sc = atol_ + rtol_ * std::max(std::abs(a[i]), std::abs(b[i]));
            const double r = c[i] / sc;
            acc += r * r;
        }
        return std::sqrt(acc / double(n));
    }

    const LindbladKernel& kernel_;
    RhsBackend backend_;
    std::function<DriveSample(double)> drive_;
    double rtol_, atol_, fixed_dt_;
    double h_max_;
    double h_last_ = -1;
    Matrix k_[7], tmp_, ynew_;
};

std::vector<double> merge_targets(const std::vector<double>& grid,
                                  const std::vector<double>& breaks) {
    std::vector<double> all = grid;
    const double t0 = grid.front(), t1 = grid.back();
    for (double b : breaks)
        if (b > t0 + 1e-15 && b < t1 - 1e-15) all.push_back(b);
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-15; }),
              all.end());
    return all;
}

struct ObservableSet {
    Matrix sx, sy, sz, num;
    explicit ObservableSet(int n_trunc) {
        const Operator idc = Operator::identity({1, n_trunc + 1});
        const Operator idq = Operator::identity({2, 1});
        sx = tensor(sigma_x(), idc).mat();
        sy = tensor(sigma_y(), idc).mat();
        sz = tensor(sigma_z(), idc).mat();
        num = tensor(idq, fock_number(n_trunc)).mat();
    }
    static double expval(const Matrix& rho, const Matrix& op) {
        return rho.cwiseProduct(op.transpose()).sum().real();
    }
};

}  // namespace

void Trajectory::write_csv(std::ostream& os) const {
    os << "t_s,sx,sy,sz,nbar,p0_cavity,trace_err\n";
    os << std::setprecision(12);
    for (std::size_t i = 0; i < t.size(); ++i)
        os << t[i] << ',' << sx[i] << ',' << sy[i] << ',' << sz[i] << ','
           << nbar[i] << ',' << p0_cavity[i] << ',' << trace_err[i] << '\n';
}

const DensityMatrix& Trajectory::snapshot_at(double time, double tol) const {
    for (const auto& [ts, rho] : snapshots)
        if (std::abs(ts - time) <= tol) return rho;
    throw std::out_of_range("no snapshot stored at t = " + std::to_string(time));
}

Trajectory evolve(const DensityMatrix& rho0, const DeviceParams& params,
                  const PulseSequence& seq, const std::vector<double>& t_grid,
                  const EvolveOptions& options) {
    params.validate();
    if (t_grid.size() < 2 || !std::is_sorted(t_grid.begin(), t_grid.end()))
        throw ValidationError("evolve: t_grid must be sorted with >= 2 points");
    const Dims dims{2, params.n_trunc + 1};
    if (!(rho0.dims() == dims))
        throw DimensionError("evolve: initial state does not match n_trunc");
    rho0.validate();

    const LindbladKernel kernel(params, forward_channels(params), Direction::Forward);
    Integrator integ(
        kernel, options.backend, [&seq](double t) { return seq.sample(t); },
        options.rtol, options.atol, options.fixed_dt);

    const ObservableSet obs(params.n_trunc);
    const std::vector<double> targets = merge_targets(t_grid, seq.breakpoints());

    Trajectory traj;
    traj.dims = dims;
    Matrix y = rho0.mat();

    auto is_output = [&](double tt, std::size_t& idx) {
        while (idx < t_grid.size() && t_grid[idx] < tt - 1e-15) ++idx;
        return idx < t_grid.size() && std::abs(t_grid[idx] - tt) <= 1e-15;
    };
    auto wants_snapshot = [&](double tt) {
        for (double s : options.snapshot_times)
            if (std::abs(s - tt) <= 1e-15) return true;
        return false;
    };

    std::size_t out_idx = 0;
    double prev = t_grid.front();
    for (std::size_t k = 0; k < targets.size(); ++k) {
        const double tt = targets[k];
        integ.advance(y, prev, tt);
        prev = tt;
        if (!is_output(tt, out_idx)) continue;
        traj.t.push_back(tt);
        traj.sx.push_back(ObservableSet::expval(y, obs.sx));
        traj.sy.push_back(ObservableSet::expval(y, obs.sy));
        traj.sz.push_back(ObservableSet::expval(y, obs.sz));
        traj.p_e.push_back(0.5 * (1.0 + traj.sz.back()));
        traj.nbar.push_back(ObservableSet::expval(y, obs.num));
        traj.p0_cavity.push_back(y(0, 0).real() + y(params.n_trunc + 1, params.n_trunc + 1).real());
        traj.trace_err.push_back(std::abs(y.trace() - 1.0));
        const bool final_point = (k + 1 == targets.size());
        if (wants_snapshot(tt) || (final_point && options.keep_final_state)) {
            DensityMatrix snap(dims, y, options.validation_tol, options.validation_tol);
            try {
                snap.validate();
            } catch (const ValidationError& e) {
                throw IntegratorAccuracyError(
                    std::string("state invalid at output point: ") + e.what());
            }
            traj.snapshots.emplace_back(tt, std::move(snap));
        }
    }
    return traj;
}

void EffectOperator::validate(double tol) const {
    const double herm = (op.mat() - op.mat().adjoint()).cwiseAbs().maxCoeff();
    if (herm > tol)
        throw ValidationError("effect operator not Hermitian, deviation " +
                              std::to_string(herm));
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (op.mat() + op.mat().adjoint()),
                                             Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo < -tol || hi > 1.0 + tol)
        throw ValidationError("effect spectrum [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "] escapes [0,1]");
}

EffectOperator evolve_adjoint(const EffectOperator& effect_final,
                              const DeviceParams& params, const PulseSequence& seq,
                              const AdjointOptions& options) {
    params.validate();
    const Dims dims{2, params.n_trunc + 1};
    if (!(effect_final.op.dims() == dims))
        throw DimensionError("evolve_adjoint: effect does not match n_trunc");

    const double T = seq.total_duration;
    const LindbladKernel kernel(
        params, adjoint_channels(params, options.include_excitation),
        Direction::Adjoint);
    Integrator integ(
        kernel, options.backend, [&seq, T](double s) { return seq.sample(T - s); },
        options.rtol, options.atol, options.fixed_dt);

    // Breakpoints of the time-reversed drive.
    std::vector<double> s_breaks;
    for (double b : seq.breakpoints()) s_breaks.push_back(T - b);
    const std::vector<double> targets = merge_targets({0.0, T}, s_breaks);

    Matrix e = effect_final.op.mat();
    double prev = 0.0;
    for (double s : targets) {
        integ.advance(e, prev, s);
        prev = s;
    }

    EffectOperator out{Operator(dims, std::move(e)), effect_final.fock_label,
                       effect_final.beta_label};
    if (options.validate) {
        try {
            out.validate(options.validation_tol);
        } catch (const ValidationError& err) {
            throw IntegratorAccuracyError(
                std::string("backpropagated effect invalid: ") + err.what());
        }
    }
    return out;
}

double steady_state_population(const DeviceParams& params) {
    return params.gamma_up() / (params.gamma_up() + params.gamma_down());
}

DensityMatrix thermal_joint_state(const DeviceParams& params, double T_D) {
    return tensor_states(qubit_mixed(params.p_e0),
                         thermal_cavity_state(T_D, params.f_D, params.n_trunc));
}

}  // namespace qmd
