// Timing comparison of the structured OpenMP Lindblad kernel against the
// dense reference implementation, at test and production truncations.
#include <chrono>
#include <cstdio>
#include <random>

#include "qmd/kernels.hpp"

using namespace qmd;

namespace {

double time_rhs(const LindbladKernel& kernel, RhsBackend backend, int reps) {
    const int dim = kernel.dim();
    std::mt19937_64 rng(42);
    std::normal_distribution<double> dist;
    Matrix state(dim, dim), out(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) state(i, j) = Complex(dist(rng), dist(rng));
    state = 0.5 * (state + Matrix(state.adjoint()));
    DriveSample drive{Complex(1e7, 3e6), Complex(2e7, -1e7)};

    kernel.rhs(state, drive, out, backend);  // warm-up
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) kernel.rhs(state, drive, out, backend);
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / reps;
}

}  // namespace

int main() {
    std::printf("%-8s %-10s %-12s %-12s %-8s\n", "n_trunc", "direction", "fast[s]",
                "reference[s]", "speedup");
    for (int n_trunc : {20, 45}) {
        DeviceParams params;
        params.n_trunc = n_trunc;
        const int reps = n_trunc <= 20 ? 200 : 50;
        for (Direction dir : {Direction::Forward, Direction::Adjoint}) {
            const auto channels = dir == Direction::Forward
                                      ? forward_channels(params)
                                      : adjoint_channels(params, false);
            const LindbladKernel kernel(params, channels, dir);
            const double tf = time_rhs(kernel, RhsBackend::Fast, reps);
            const double tr = time_rhs(kernel, RhsBackend::Reference, reps / 5 + 1);
            std::printf("%-8d %-10s %-12.3e %-12.3e %-8.1f\n", n_trunc,
                        dir == Direction::Forward ? "forward" : "adjoint", tf, tr,
                        tr / tf);
        }
    }
    return 0;
}
