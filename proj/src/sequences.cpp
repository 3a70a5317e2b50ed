#include "qmd/sequences.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "qmd/dynamics.hpp"

namespace qmd {

using json = nlohmann::ordered_json;

double envelope_area(const PulseShape& shape, double duration) {
    if (shape.kind == ShapeKind::Square) return duration;
    const double half = duration / 2.0;
    return shape.sigma * std::sqrt(2.0 * M_PI) *
           std::erf(half / (std::sqrt(2.0) * shape.sigma));
}

double PulseSegment::envelope(double t) const {
    if (t < start || t > start + duration) return 0.0;
    if (shape.kind == ShapeKind::Square) return 1.0;
    const double tc = start + duration / 2.0;
    const double x = (t - tc) / shape.sigma;
    return std::exp(-0.5 * x * x);
}

DriveSample PulseSequence::sample(double t) const {
    DriveSample ds;
    for (const auto& seg : segments) {
        const double env = seg.envelope(t);
        if (env == 0.0) continue;
        const double ramp = kTwoPi * seg.carrier_detuning * (t - seg.start);
        const Complex phase = std::polar(1.0, -ramp);
        if (seg.target == Port::QubitB) {
            // H_drive = q sigma_+ + conj(q) sigma_-, q = (Omega/2) e^{-i phi}
            ds.qubit += 0.5 * env * std::conj(seg.amplitude) * phase;
        } else {
            ds.cavity += env * seg.amplitude * phase;
        }
    }
    return ds;
}

double PulseSequence::qubit_omega(double t) const {
    return 2.0 * std::abs(sample(t).qubit);
}

std::vector<double> PulseSequence::breakpoints() const {
    std::vector<double> pts{0.0, total_duration};
    for (const auto& seg : segments) {
        pts.push_back(seg.start);
        pts.push_back(seg.start + seg.duration);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-15; }),
              pts.end());
    pts.erase(std::remove_if(pts.begin(), pts.end(),
                             [this](double p) { return p < -1e-15 || p > total_duration + 1e-15; }),
              pts.end());
    return pts;
}

double PulseSequence::marker(const std::string& name) const {
    auto it = markers.find(name);
    if (it == markers.end()) throw std::out_of_range("unknown marker: " + name);
    return it->second;
}

namespace {

const char* port_name(Port p) { return p == Port::QubitB ? "qubit_b" : "cavity_a"; }
const char* shape_name(ShapeKind k) { return k == ShapeKind::Gaussian ? "gaussian" : "square"; }

Port port_from(const std::string& s) {
    if (s == "qubit_b") return Port::QubitB;
    if (s == "cavity_a") return Port::CavityA;
    throw ValidationError("unknown pulse target: " + s);
}

ShapeKind shape_from(const std::string& s) {
    if (s == "gaussian") return ShapeKind::Gaussian;
    if (s == "square") return ShapeKind::Square;
    throw ValidationError("unknown pulse shape: " + s);
}

}  // namespace

std::string PulseSequence::to_json() const {
    json j;
    j["total_duration"] = total_duration;
    j["segments"] = json::array();
    for (const auto& seg : segments) {
        json s;
        s["target"] = port_name(seg.target);
        s["shape"] = {{"kind", shape_name(seg.shape.kind)},
                      {"sigma", seg.shape.sigma},
                      {"truncation", seg.shape.truncation}};
        s["start"] = seg.start;
        s["duration"] = seg.duration;
        s["amplitude"] = {{"re", seg.amplitude.real()}, {"im", seg.amplitude.imag()}};
        s["carrier_detuning"] = seg.carrier_detuning;
        j["segments"].push_back(std::move(s));
    }
    j["markers"] = markers;
    return j.dump(2);
}

PulseSequence PulseSequence::from_json(const std::string& text) {
    const json j = json::parse(text);
    PulseSequence seq;
    seq.total_duration = j.at("total_duration").get<double>();
    for (const auto& s : j.at("segments")) {
        PulseSegment seg;
        seg.target = port_from(s.at("target").get<std::string>());
        const auto& sh = s.at("shape");
        seg.shape.kind = shape_from(sh.at("kind").get<std::string>());
        seg.shape.sigma = sh.at("sigma").get<double>();
        seg.shape.truncation = sh.at("truncation").get<double>();
        seg.start = s.at("start").get<double>();
        seg.duration = s.at("duration").get<double>();
        seg.amplitude = Complex(s.at("amplitude").at("re").get<double>(),
                                s.at("amplitude").at("im").get<double>());
        seg.carrier_detuning = s.at("carrier_detuning").get<double>();
        seq.segments.push_back(seg);
    }
    if (j.contains("markers")) {
        for (auto it = j.at("markers").begin(); it != j.at("markers").end(); ++it)
            seq.markers[it.key()] = it.value().get<double>();
    }
    return seq;
}

PrepKind prep_from_string(const std::string& s) {
    if (s == "none") return PrepKind::None;
    if (s == "pi") return PrepKind::Pi;
    if (s == "pi_half") return PrepKind::PiHalf;
    if (s == "three_pi_half") return PrepKind::ThreePiHalf;
    throw ValidationError("unknown prep pulse: " + s);
}

std::string to_string(PrepKind prep) {
    switch (prep) {
        case PrepKind::None: return "none";
        case PrepKind::Pi: return "pi";
        case PrepKind::PiHalf: return "pi_half";
        case PrepKind::ThreePiHalf: return "three_pi_half";
    }
    return "none";
}

double area_theorem_pi_amplitude(const PulseShape& shape, double duration) {
    return M_PI / envelope_area(shape, duration);
}

PulseSequence make_sequential_sequence(PrepKind prep, double alpha_in,
                                       const DeviceParams& params,
                                       const PiCalibration& cal) {
    (void)params;
    if (!cal.valid)
        throw CalibrationRequired(
            "sequential sequence needs a valid pi-pulse calibration; run "
            "calibrate_pi_amplitude first");
    if (alpha_in < 0) throw ValidationError("alpha_in must be non-negative");

    constexpr double window = 50e-9;
    const PulseShape gauss{ShapeKind::Gaussian, 12.5e-9, 25e-9};
    const Complex phase = std::polar(1.0, M_PI / 2.0);  // +y rotation axis

    double prep_scale = 0.0;
    switch (prep) {
        case PrepKind::None: prep_scale = 0.0; break;
        case PrepKind::Pi: prep_scale = 1.0; break;
        case PrepKind::PiHalf: prep_scale = 0.5; break;
        case PrepKind::ThreePiHalf: prep_scale = 1.5; break;
    }

    PulseSequence seq;
    seq.total_duration = 3 * window;

    PulseSegment prep_seg;
    prep_seg.target = Port::QubitB;
    prep_seg.shape = gauss;
    prep_seg.start = 0.0;
    prep_seg.duration = window;
    prep_seg.amplitude = prep_scale * cal.amplitude * phase;
    seq.segments.push_back(prep_seg);

    PulseSegment disp;
    disp.target = Port::CavityA;
    disp.shape = gauss;
    disp.start = window;
    disp.duration = window;
    disp.amplitude = alpha_in / envelope_area(gauss, window);
    seq.segments.push_back(disp);

    PulseSegment work;
    work.target = Port::QubitB;
    work.shape = gauss;
    work.start = 2 * window;
    work.duration = window;
    work.amplitude = cal.amplitude * phase;
    seq.segments.push_back(work);

    seq.markers = {{"step1_start", 0.0},        {"step1_end", window},
                   {"step2_start", window},     {"step2_end", 2 * window},
                   {"step3_start", 2 * window}, {"step3_end", 3 * window}};
    return seq;
}

PulseSequence make_continuous_sequence(double start_time, double alpha_in,
                                       const DeviceParams& params) {
    (void)params;
    constexpr double allowed[] = {200e-9, 300e-9, 400e-9};
    const bool ok = std::any_of(std::begin(allowed), std::end(allowed),
                                [&](double v) { return std::abs(start_time - v) < 1e-12; });
    if (!ok)
        throw ParameterError("continuous-protocol start_time must be 200, 300 or 400 ns");
    if (alpha_in < 0) throw ValidationError("alpha_in must be non-negative");

    const double omega = kTwoPi / 416e-9;          // rad/s
    const double step3_len = M_PI / omega;         // 208 ns: one pi rotation
    const PulseShape gauss{ShapeKind::Gaussian, 10e-9, 20e-9};
    const double disp_start = start_time - gauss.truncation;
    // Step (3) is the pi rotation's worth of square pulse after the nominal
    // prep angle (pi, 3pi/2 or 2pi), i.e. it starts at the half-period
    // multiple nearest the displacement: 208, 312 or 416 ns.
    const double half_period = 0.5 * step3_len;    // 104 ns
    const double step3_start = std::round(start_time / half_period) * half_period;
    const double step3_end = step3_start + step3_len;

    PulseSequence seq;
    seq.total_duration = step3_end;

    PulseSegment rabi;
    rabi.target = Port::QubitB;
    rabi.shape = PulseShape{ShapeKind::Square, 0.0, 0.0};
    rabi.start = 0.0;
    rabi.duration = step3_end;
    rabi.amplitude = omega * std::polar(1.0, M_PI / 2.0);
    seq.segments.push_back(rabi);

    PulseSegment disp;
    disp.target = Port::CavityA;
    disp.shape = gauss;
    disp.start = disp_start;
    disp.duration = 2 * gauss.truncation;
    disp.amplitude = alpha_in / envelope_area(gauss, disp.duration);
    seq.segments.push_back(disp);

    seq.markers = {{"step1_start", 0.0},
                   {"step1_end", disp_start},
                   {"step2_start", disp_start},
                   {"step2_end", start_time + gauss.truncation},
                   {"step3_start", step3_start},
                   {"step3_end", step3_end}};
    return seq;
}

double thermal_prep_probability(double T_target, double T0, double F_pi, double f_S) {
    if (T0 <= 0 || F_pi <= 0 || F_pi > 1 || f_S <= 0)
        throw ValidationError("thermal_prep_probability: invalid T0/F_pi/f_S");
    if (T_target < T0)
        throw UnreachableTemperature(
            "target temperature below the equilibrium temperature cannot be "
            "reached by pi-pulse mixing");
    const double a0 = kPlanck * f_S / (kBoltzmann * T0);
    const double a = std::isinf(T_target) ? 0.0
                                          : kPlanck * f_S / (kBoltzmann * T_target);
    const double p = ((1.0 + std::exp(a0)) / (1.0 + std::exp(a)) - 1.0) /
                     (std::exp(a0) - 1.0) / F_pi;
    if (p < -1e-12 || p > 1.0 + 1e-12)
        throw UnreachableTemperature("pi-pulse probability outside [0,1]");
    return std::clamp(p, 0.0, 1.0);
}

PiCalibration calibrate_pi_amplitude(const DeviceParams& params,
                                     const PulseShape& shape, double duration) {
    DeviceParams small = params;
    small.n_trunc = std::min(params.n_trunc, 5);

    const DensityMatrix rho0 =
        tensor_states(qubit_pure(1.0, 0.0), fock_state(0, small.n_trunc));

    auto final_pe = [&](double amp) {
        PulseSequence seq;
        seq.total_duration = duration;
        PulseSegment seg;
        seg.target = Port::QubitB;
        seg.shape = shape;
        seg.start = 0.0;
        seg.duration = duration;
        seg.amplitude = amp * std::polar(1.0, M_PI / 2.0);
        seq.segments.push_back(seg);
        EvolveOptions opts;
        opts.rtol = 1e-9;
        Trajectory traj = evolve(rho0, small, seq, {0.0, duration}, opts);
        return traj.p_e.back();
    };

    const double a0 = area_theorem_pi_amplitude(shape, duration);
    // Golden-section maximization of the final excited population.
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.85 * a0, hi = 1.25 * a0;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = final_pe(x1), f2 = final_pe(x2);
    while (hi - lo > 1e-4 * a0) {
        if (f1 < f2) {
            lo = x1; x1 = x2; f1 = f2;
            x2 = lo + gr * (hi - lo); f2 = final_pe(x2);
        } else {
            hi = x2; x2 = x1; f2 = f1;
            x1 = hi - gr * (hi - lo); f1 = final_pe(x1);
        }
    }
    PiCalibration cal;
    cal.amplitude = 0.5 * (lo + hi);
    cal.final_population = final_pe(cal.amplitude);
    if (cal.final_population < 0.9)
        throw CalibrationFailed("pi-pulse calibration reached population " +
                                std::to_string(cal.final_population) + " < 0.9");
    cal.valid = true;
    return cal;
}

double alpha_to_nbar(double alpha_in, const DeviceParams& params,
                     const PulseShape& shape, double T_D0) {
    const double duration = 2 * shape.truncation;
    PulseSequence seq;
    seq.total_duration = duration;
    PulseSegment disp;
    disp.target = Port::CavityA;
    disp.shape = shape;
    disp.start = 0.0;
    disp.duration = duration;
    disp.amplitude = alpha_in / envelope_area(shape, duration);
    seq.segments.push_back(disp);

    const DensityMatrix rho0 = tensor_states(
        qubit_pure(1.0, 0.0),
        thermal_cavity_state(T_D0, params.f_D, params.n_trunc));

    Trajectory traj = evolve(rho0, params, seq, {0.0, duration / 2.0, duration});
    const double nbar = traj.nbar.back();
    if (nbar > params.n_trunc / 2.0)
        throw TruncationUnsafe(
            "displacement drives nbar = " + std::to_string(nbar) +
            " beyond half the Fock truncation " + std::to_string(params.n_trunc));
    return nbar;
}

}  // namespace qmd
