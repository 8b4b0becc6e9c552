// qsd.cpp: Euler-Maruyama integration of the coherent-state label SDE

#include "spinqsd/qsd.hpp"

#include "spinqsd/errors.hpp"
#include "spinqsd/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>

namespace spinqsd {

namespace {

constexpr cplx kI{0.0, 1.0};

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

} // namespace

NoiseIncrement draw_noise(PhiloxStream& rng, double dt) {
    const auto z = rng.normals4();
    const double s = std::sqrt(0.5 * dt);
    return {cplx(s * z[0], s * z[1]), cplx(s * z[2], s * z[3])};
}

cplx drift(cplx mu, const ModelParams& p) {
    return -kI * (0.5 * p.omega) * (1.0 - mu * mu) - p.kappa_tilde() * mu + kI * p.omega_z * mu;
}

cplx drift_south(cplx nu, const ModelParams& p) {
    return kI * (0.5 * p.omega) * (nu * nu - 1.0) + p.kappa_tilde() * nu - kI * p.omega_z * nu;
}

double max_time_step(const ModelParams& p) {
    double m = std::min(1.0 / p.kappa_tilde(), p.j() / p.kappa);
    if (p.omega > 0.0) m = std::min(m, 1.0 / p.omega);
    return 0.1 * m;
}

LangevinStepper::LangevinStepper(const ModelParams& params, double dt, double noise_scale)
    : omega_(params.omega), kt_(params.kappa_tilde()), omega_z_(params.omega_z),
      sigma_(noise_scale * params.noise_amplitude()), dt_(dt) {
    params.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("LangevinStepper: dt must be > 0");
    if (dt > max_time_step(params) * (1.0 + 1e-12)) {
        throw std::invalid_argument("LangevinStepper: dt = " + std::to_string(dt) + " exceeds dt_max = " +
                                    std::to_string(max_time_step(params)));
    }
}

CoherentLabel LangevinStepper::advance_in_chart(const CoherentLabel& label, const NoiseIncrement& dxi) const {
    const cplx z = label.value();
    if (label.chart() == Chart::North) {
        const cplx a = -kI * (0.5 * omega_) * (1.0 - z * z) - kt_ * z + kI * omega_z_ * z;
        return CoherentLabel::north(z + a * dt_ + sigma_ * (z * z * dxi.dxi_plus - z * dxi.dxi_z));
    }
    const cplx a = kI * (0.5 * omega_) * (z * z - 1.0) + kt_ * z - kI * omega_z_ * z;
    return CoherentLabel::south(z + a * dt_ + sigma_ * (z * dxi.dxi_z - dxi.dxi_plus));
}

CoherentLabel LangevinStepper::advance(const CoherentLabel& label, const NoiseIncrement& dxi) const {
    CoherentLabel next = advance_in_chart(label, dxi);
    if (std::abs(next.value()) > kChartRadius) {
        next = next.chart() == Chart::North ? next.to_south() : next.to_north();
    }
    return next;
}

void LangevinStepper::step(TrajectoryState& state, std::size_t trajectory) const {
    const NoiseIncrement dxi = draw_noise(state.rng, dt_);
    state.label = advance(state.label, dxi);
    state.time += dt_;
    if (!state.label.finite()) throw Blowup(trajectory, state.time);
}

void LangevinStepper::advance_to(TrajectoryState& state, double t, std::size_t trajectory) const {
    // Whole steps are counted from the current time so that the sample grid
    // does not accumulate rounding in `time`.
    const double span = t - state.time;
    if (span <= 0.0) return;
    const auto whole = static_cast<long long>(std::floor(span / dt_ * (1.0 + 1e-12)));
    const double t0 = state.time;
    for (long long n = 0; n < whole; ++n) {
        step(state, trajectory);
    }
    state.time = t0 + static_cast<double>(whole) * dt_;
    const double rest = t - state.time;
    if (rest > 1e-9 * dt_) {
        const double s = std::sqrt(rest / dt_);
        NoiseIncrement dxi = draw_noise(state.rng, dt_);
        dxi.dxi_plus *= s;
        dxi.dxi_z *= s;
        LangevinStepper partial = *this;
        partial.dt_ = rest;
        state.label = partial.advance(state.label, dxi);
        if (!state.label.finite()) throw Blowup(trajectory, t);
    }
    state.time = t;
}

TrajectoryState step(TrajectoryState state, const ModelParams& params, double dt) {
    LangevinStepper(params, dt).step(state);
    return state;
}

// ---------------------------------------------------------------------------

unsigned resolve_threads(unsigned requested) {
    if (const char* env = std::getenv("SPINQSD_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

PhiloxStream trajectory_stream(std::uint64_t base_seed, std::size_t index) {
    return PhiloxStream(base_seed, static_cast<std::uint64_t>(index));
}

EnsembleResult simulate_ensemble(const ModelParams& params, const EnsembleSpec& spec, const CoherentLabel& initial) {
    return simulate_ensemble(params, spec, [initial](std::size_t, PhiloxStream&) { return initial; });
}

EnsembleResult simulate_ensemble(const ModelParams& params, const EnsembleSpec& spec, const InitialSampler& initial) {
    if (spec.n_traj < 1) throw std::invalid_argument("simulate_ensemble: n_traj must be >= 1");
    if (!std::is_sorted(spec.sample_times.begin(), spec.sample_times.end()) ||
        (!spec.sample_times.empty() && spec.sample_times.front() < 0.0)) {
        throw std::invalid_argument("simulate_ensemble: sample times must be sorted and non-negative");
    }
    const LangevinStepper stepper(params, spec.dt, spec.noise_scale);

    EnsembleResult out;
    out.times = spec.sample_times;
    out.labels.assign(spec.sample_times.size(), std::vector<CoherentLabel>(spec.n_traj));

    parallel_for(spec.n_traj, resolve_threads(spec.threads), [&](std::size_t i) {
        TrajectoryState st{CoherentLabel{}, 0.0, trajectory_stream(spec.base_seed, i)};
        st.label = initial(i, st.rng);
        if (std::abs(st.label.value()) > kChartRadius) st.label = st.label.canonical();
        for (std::size_t s = 0; s < spec.sample_times.size(); ++s) {
            stepper.advance_to(st, spec.sample_times[s], i);
            out.labels[s][i] = st.label;
        }
    });
    return out;
}

DensityMatrix ensemble_density(std::span<const CoherentLabel> labels, SpinQuantum spin) {
    if (labels.empty()) throw std::invalid_argument("ensemble_density: no labels");
    const int d = spin.dim();
    Matrix acc = Matrix::Zero(d, d);
    for (const auto& l : labels) {
        const Vector psi = coherent_state(spin, l);
        acc.noalias() += psi * psi.adjoint();
    }
    acc /= static_cast<double>(labels.size());
    return 0.5 * (acc + acc.adjoint());
}

double coherent_jz(const CoherentLabel& label) { return bloch_vector(label)[2]; }

double coherent_jz2(const CoherentLabel& label, SpinQuantum spin) {
    // <Jz^2> = j^2 nz^2 + (j/2)(1 - nz^2) on a coherent state.
    const double nz = bloch_vector(label)[2];
    return nz * nz + (1.0 - nz * nz) / (2.0 * spin.j());
}

// ---------------------------------------------------------------------------

ConsistencyResult generator_consistency_check(const ModelParams& params, const CoherentLabel& mu0, const Matrix& observable,
                                              double dt, std::size_t n_traj, std::uint64_t seed) {
    params.validate();
    if (!mu0.finite()) throw std::invalid_argument("generator_consistency_check: mu0 must be finite");
    if (n_traj < 2) throw std::invalid_argument("generator_consistency_check: need at least 2 samples");
    const SpinQuantum spin = params.spin;
    const cplx m0 = mu0.mu();
    if (!finite(m0)) throw std::invalid_argument("generator_consistency_check: mu0 at the south pole");

    auto f = [&](cplx mu) {
        const Vector psi = coherent_state(spin, CoherentLabel::north(mu));
        return psi.dot(observable * psi).real();
    };

    // Wirtinger derivative df/dmu = (f_x - i f_y)/2 by central differences.
    const double h = 1e-6 * std::max(1.0, std::abs(m0));
    const double fx = (f(m0 + h) - f(m0 - h)) / (2.0 * h);
    const double fy = (f(m0 + kI * h) - f(m0 - kI * h)) / (2.0 * h);
    const cplx dfdmu = 0.5 * cplx(fx, -fy);

    const double f0 = f(m0);
    const cplx a = drift(m0, params);
    const double s = params.noise_amplitude();
    const cplx b_plus = s * m0 * m0;
    const cplx b_z = -s * m0;

    PhiloxStream rng(seed, 0);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n_traj; ++i) {
        const NoiseIncrement dxi = draw_noise(rng, dt);
        const cplx noise = b_plus * dxi.dxi_plus + b_z * dxi.dxi_z;
        const cplx m1 = m0 + a * dt + noise;
        const double y = (f(m1) - f0 - 2.0 * (dfdmu * noise).real()) / dt;
        sum += y;
        sum2 += y * y;
    }
    const double n = static_cast<double>(n_traj);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));

    const Liouvillian L(params);
    const DensityMatrix p0 = coherent_projector(spin, CoherentLabel::north(m0));
    const double exact = expectation(observable, L.apply(p0)).real();

    ConsistencyResult r{};
    r.sde_rate = mean;
    r.exact_rate = exact;
    r.standard_error = std::sqrt(var / n);
    const double diff = std::abs(mean - exact);
    if (r.standard_error > 0.0) {
        r.discrepancy = diff / r.standard_error;
    } else {
        r.discrepancy = diff <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return r;
}

} // namespace spinqsd
