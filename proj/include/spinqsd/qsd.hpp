// qsd.hpp: Quantum state diffusion on spin coherent states
//
// The label of a coherent state obeys the Ito equation
//
//   dmu = [-i (omega/2)(1 - mu^2) - kt mu + i omega_z mu] dt
//         + s mu^2 dxi_+ - s mu dxi_z,          s = sqrt(kappa/j),
//
// with independent complex increments E[dxi dxi*] = dt, E[dxi dxi] = 0, and
// kt = ModelParams::kappa_tilde(). Averaging |mu><mu| over trajectories
// reproduces the master equation. Near mu = infinity the label is carried in
// nu = 1/mu, for which
//
//   dnu = [i (omega/2)(nu^2 - 1) + kt nu - i omega_z nu] dt - s dxi_+ + s nu dxi_z.
//
// (1/mu is holomorphic and the increments are isotropic, so there is no Ito
// correction.)

#pragma once

#include "spinqsd/liouvillian.hpp"
#include "spinqsd/model.hpp"
#include "spinqsd/random.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace spinqsd {

struct NoiseIncrement {
    cplx dxi_plus;
    cplx dxi_z;
};

// Gaussian increments (dW1 + i dW2)/sqrt(2) with Var(dW) = dt.
NoiseIncrement draw_noise(PhiloxStream& rng, double dt);

struct TrajectoryState {
    CoherentLabel label;
    double time = 0.0;
    PhiloxStream rng;
};

// Deterministic part of dmu/dt in the North chart.
cplx drift(cplx mu, const ModelParams& params);
// Deterministic part of dnu/dt in the South chart.
cplx drift_south(cplx nu, const ModelParams& params);

// Largest admissible step: 0.1 min(1/kt, 1/omega, j/kappa).
double max_time_step(const ModelParams& params);

// Euler-Maruyama integrator for a fixed (params, dt).
class LangevinStepper {
public:
    LangevinStepper(const ModelParams& params, double dt, double noise_scale = 1.0);

    double dt() const { return dt_; }

    // One step with the given increments, then a chart switch if needed.
    CoherentLabel advance(const CoherentLabel& label, const NoiseIncrement& dxi) const;
    // Same step without the chart switch (used to test the switch itself).
    CoherentLabel advance_in_chart(const CoherentLabel& label, const NoiseIncrement& dxi) const;

    // Draws fresh noise from state.rng. Throws Blowup(trajectory, time) on a non-finite label.
    void step(TrajectoryState& state, std::size_t trajectory = 0) const;

    // Steps until state.time reaches t (the last step is shortened to land exactly).
    void advance_to(TrajectoryState& state, double t, std::size_t trajectory = 0) const;

private:
    double omega_, kt_, omega_z_, sigma_, dt_;
};

// Value-semantics wrapper: one Euler-Maruyama step of `state`.
TrajectoryState step(TrajectoryState state, const ModelParams& params, double dt);

// ---------------------------------------------------------------------------
// Ensembles

// Starting label of trajectory i; may draw from the supplied stream.
using InitialSampler = std::function<CoherentLabel(std::size_t, PhiloxStream&)>;

struct EnsembleSpec {
    std::size_t n_traj = 1;
    double dt = 1e-3;
    std::vector<double> sample_times;  // sorted, >= 0
    std::uint64_t base_seed = 0;
    unsigned threads = 0;              // 0: SPINQSD_THREADS or hardware concurrency
    double noise_scale = 1.0;          // 0 turns the stochastic terms off (test hook)
};

struct EnsembleResult {
    std::vector<double> times;
    // labels[s][i]: trajectory i at sample time s.
    std::vector<std::vector<CoherentLabel>> labels;
};

// Stream for trajectory i: Philox keyed by base_seed, stream index i.
PhiloxStream trajectory_stream(std::uint64_t base_seed, std::size_t index);

EnsembleResult simulate_ensemble(const ModelParams& params, const EnsembleSpec& spec, const CoherentLabel& initial);
EnsembleResult simulate_ensemble(const ModelParams& params, const EnsembleSpec& spec, const InitialSampler& initial);

// Mean of coherent-state projectors.
DensityMatrix ensemble_density(std::span<const CoherentLabel> labels, SpinQuantum spin);

// <Jz>/j and <Jz^2>/j^2 of a coherent state, from its Bloch vector.
double coherent_jz(const CoherentLabel& label);
double coherent_jz2(const CoherentLabel& label, SpinQuantum spin);

// ---------------------------------------------------------------------------

struct ConsistencyResult {
    double sde_rate;       // estimate of d/dt E<A> at t = 0 from the label SDE
    double exact_rate;     // Tr(A L(|mu0><mu0|))
    double standard_error;
    double discrepancy;    // |sde - exact| / standard_error
};

// Compares the one-step drift of E<A> under the SDE with the master equation.
// The martingale (linear-in-noise) part of each increment is subtracted as a
// zero-mean control variate, so the estimator is unbiased up to O(dt).
// A must be Hermitian.
ConsistencyResult generator_consistency_check(const ModelParams& params, const CoherentLabel& mu0, const Matrix& observable,
                                              double dt, std::size_t n_traj, std::uint64_t seed = 1);

unsigned resolve_threads(unsigned requested);

} // namespace spinqsd
