#include "qmd/kernels.hpp"

#include <cmath>

namespace qmd {

std::vector<RateChannel> forward_channels(const DeviceParams& params) {
    return {{params.kappa_rate(), ChannelKind::CavityDecay},
            {params.gamma_down(), ChannelKind::QubitDecay},
            {params.gamma_up(), ChannelKind::QubitExcite},
            {params.gamma_phi / 2.0, ChannelKind::QubitDephase}};
}

std::vector<RateChannel> adjoint_channels(const DeviceParams& params,
                                          bool include_excitation) {
    if (include_excitation) return forward_channels(params);
    return {{params.kappa_rate(), ChannelKind::CavityDecay},
            {params.gamma_1, ChannelKind::QubitDecay},
            {params.gamma_phi / 2.0, ChannelKind::QubitDephase}};
}

namespace {
Matrix jump_matrix(ChannelKind kind, const DeviceParams& params) {
    const int nc = params.n_trunc + 1;
    switch (kind) {
        case ChannelKind::CavityDecay:
            return tensor(Operator::identity({2, 1}), fock_annihilation(params.n_trunc)).mat();
        case ChannelKind::QubitDecay:
            return tensor(sigma_minus(), Operator::identity({1, nc})).mat();
        case ChannelKind::QubitExcite:
            return tensor(sigma_plus(), Operator::identity({1, nc})).mat();
        case ChannelKind::QubitDephase:
            return tensor(sigma_z(), Operator::identity({1, nc})).mat();
    }
    throw std::logic_error("unreachable");
}
}  // namespace

LindbladKernel::LindbladKernel(const DeviceParams& params,
                               std::vector<RateChannel> channels, Direction direction)
    : nc_(params.n_trunc + 1), direction_(direction), channels_(std::move(channels)) {
    const int dim = 2 * nc_;
    sqrt_n_.resize(nc_);
    for (int n = 0; n < nc_; ++n) sqrt_n_(n) = std::sqrt(double(n));

    const Eigen::VectorXd h = hamiltonian_static_diag(params);
    spectral_radius_ = h.maxCoeff() - h.minCoeff();

    // nu_i = (1/2) sum_c r_c (L^dag L)_ii; all our L^dag L are diagonal.
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(dim);
    double r_dephase = 0;
    for (const auto& ch : channels_) {
        switch (ch.kind) {
            case ChannelKind::CavityDecay:
                r_cavity_ = ch.rate;
                for (int q = 0; q < 2; ++q)
                    for (int n = 0; n < nc_; ++n) nu(q * nc_ + n) += 0.5 * ch.rate * n;
                break;
            case ChannelKind::QubitDecay:
                r_down_ = ch.rate;
                for (int n = 0; n < nc_; ++n) nu(nc_ + n) += 0.5 * ch.rate;
                break;
            case ChannelKind::QubitExcite:
                r_up_ = ch.rate;
                for (int n = 0; n < nc_; ++n) nu(n) += 0.5 * ch.rate;
                break;
            case ChannelKind::QubitDephase:
                r_dephase = ch.rate;
                nu.array() += 0.5 * ch.rate;
                break;
        }
    }

    const double phase_sign = direction == Direction::Forward ? -1.0 : 1.0;
    linear_weight_.resize(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const double si = i < nc_ ? -1.0 : 1.0;
        for (int j = 0; j < dim; ++j) {
            const double sj = j < nc_ ? -1.0 : 1.0;
            linear_weight_(i, j) = Complex(-nu(i) - nu(j) + r_dephase * si * sj,
                                           phase_sign * (h(i) - h(j)));
        }
    }

    h_static_dense_ = h.cast<Complex>().asDiagonal();
    for (const auto& ch : channels_)
        jumps_dense_.emplace_back(ch.rate, jump_matrix(ch.kind, params));
}

void LindbladKernel::rhs(const Matrix& state, const DriveSample& drive,
                         Matrix& out) const {
    const int dim = 2 * nc_;
    out.resize(dim, dim);
    const bool fwd = direction_ == Direction::Forward;

    // Linear elementwise part plus the cavity jump (a shifted scaled copy),
    // both row-parallel.
#pragma omp parallel for schedule(static)
    for (int i = 0; i < dim; ++i) {
        out.row(i) = linear_weight_.row(i).cwiseProduct(state.row(i));
        const int n_i = i % nc_;
        if (r_cavity_ == 0.0) continue;
        if (fwd) {
            if (n_i >= nc_ - 1) continue;
            const double ri = r_cavity_ * sqrt_n_(n_i + 1);
            for (int qb = 0; qb < 2; ++qb) {
                const int o = qb * nc_;
                for (int m = 0; m < nc_ - 1; ++m)
                    out(i, o + m) += ri * sqrt_n_(m + 1) * state(i + 1, o + m + 1);
            }
        } else {
            if (n_i == 0) continue;
            const double ri = r_cavity_ * sqrt_n_(n_i);
            for (int qb = 0; qb < 2; ++qb) {
                const int o = qb * nc_;
                for (int m = 1; m < nc_; ++m)
                    out(i, o + m) += ri * sqrt_n_(m) * state(i - 1, o + m - 1);
            }
        }
    }

    // Drive commutator. Forward adds -i(H_d s - s H_d); adjoint the opposite.
    const Complex pre(0, fwd ? -1 : 1);
    const Complex miq = pre * drive.qubit;
    const Complex miq_c = pre * std::conj(drive.qubit);
    const Complex mic = pre * drive.cavity;
    const Complex mic_c = pre * std::conj(drive.cavity);
    if (drive.qubit != 0.0) {
        out.bottomRows(nc_) += miq * state.topRows(nc_);
        out.topRows(nc_) += miq_c * state.bottomRows(nc_);
        out.leftCols(nc_) -= miq * state.rightCols(nc_);
        out.rightCols(nc_) -= miq_c * state.leftCols(nc_);
    }
    if (drive.cavity != 0.0) {
        for (int qb = 0; qb < 2; ++qb) {
            const int o = qb * nc_;
            for (int n = 1; n < nc_; ++n) {
                out.row(o + n) += (mic * sqrt_n_(n)) * state.row(o + n - 1);
                out.col(o + n) -= (mic_c * sqrt_n_(n)) * state.col(o + n - 1);
            }
            for (int n = 0; n < nc_ - 1; ++n) {
                out.row(o + n) += (mic_c * sqrt_n_(n + 1)) * state.row(o + n + 1);
                out.col(o + n) -= (mic * sqrt_n_(n + 1)) * state.col(o + n + 1);
            }
        }
    }

    // Qubit jump channels are block copies between the gg and ee quadrants.
    const auto gg = [&](const Matrix& m) { return m.topLeftCorner(nc_, nc_); };
    const auto ee = [&](const Matrix& m) { return m.bottomRightCorner(nc_, nc_); };
    if (fwd) {
        if (r_down_ != 0.0) out.topLeftCorner(nc_, nc_) += r_down_ * ee(state);
        if (r_up_ != 0.0) out.bottomRightCorner(nc_, nc_) += r_up_ * gg(state);
    } else {
        if (r_down_ != 0.0) out.bottomRightCorner(nc_, nc_) += r_down_ * gg(state);
        if (r_up_ != 0.0) out.topLeftCorner(nc_, nc_) += r_up_ * ee(state);
    }
}

void LindbladKernel::rhs_reference(const Matrix& state, const DriveSample& drive,
                                   Matrix& out) const {
    const int dim = 2 * nc_;
    Matrix h = h_static_dense_;
    // H_drive from the sampled coefficients
    for (int n = 0; n < nc_; ++n) {
        h(nc_ + n, n) += drive.qubit;
        h(n, nc_ + n) += std::conj(drive.qubit);
    }
    for (int qb = 0; qb < 2; ++qb) {
        const int o = qb * nc_;
        for (int n = 1; n < nc_; ++n) {
            h(o + n, o + n - 1) += drive.cavity * sqrt_n_(n);
            h(o + n - 1, o + n) += std::conj(drive.cavity) * sqrt_n_(n);
        }
    }
    const Complex ii(0, 1);
    if (direction_ == Direction::Forward) {
        out = -ii * (h * state - state * h);
        for (const auto& [rate, L] : jumps_dense_) {
            if (rate == 0.0) continue;
            const Matrix LdL = L.adjoint() * L;
            out += rate * (L * state * L.adjoint() -
                           0.5 * (LdL * state + state * LdL));
        }
    } else {
        out = ii * (h * state - state * h);
        for (const auto& [rate, L] : jumps_dense_) {
            if (rate == 0.0) continue;
            const Matrix LdL = L.adjoint() * L;
            out += rate * (L.adjoint() * state * L -
                           0.5 * (LdL * state + state * LdL));
        }
    }
}

}  // namespace qmd
