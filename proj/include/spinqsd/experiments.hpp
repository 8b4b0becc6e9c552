// experiments.hpp: Data pipelines for the order parameter, variance, flow
// portraits, single trajectories, beta "exponents" and finite-size scaling

#pragma once

#include "spinqsd/analytic.hpp"
#include "spinqsd/liouvillian.hpp"
#include "spinqsd/qsd.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace spinqsd {

enum class SweepObservable { MeanJz, VarJz };
enum class Method { ExactSteadyState, QsdTimeAverage };

const char* to_string(SweepObservable o);
const char* to_string(Method m);

// Long-time average of one observable over independent QSD trajectories.
struct QsdAverageOptions {
    std::size_t n_traj = 8;
    double dt = 1e-3;
    double t_average = 2000.0;     // averaging window per trajectory (units of 1/kappa)
    double burn_in = -1.0;         // < 0: 10 max(xi_eff, 0.1 j/kappa)
    double block_length = -1.0;    // < 0: max(10 T, 10 xi_eff, 1)
    std::uint64_t seed = 1;
    unsigned threads = 0;
    CoherentLabel start = CoherentLabel::north({0.0, 0.0});
};

struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t blocks = 0;
};

// Relaxation scale used for burn-in: min(|1 - l^2|^{-1/2}, j^{1/3}) / kappa.
double effective_relaxation_time(const ModelParams& params);
double default_burn_in(const ModelParams& params);

// <Jz>/j (MeanJz) or Delta Jz^2 / j^2 (VarJz) from time-averaged coherent-state
// moments; the standard error comes from block averages.
Estimate qsd_time_average(const ModelParams& params, SweepObservable observable, const QsdAverageOptions& opts);

// Same quantity from the exact steady state.
double exact_steady_value(const ModelParams& params, SweepObservable observable, const SteadyStateOptions& opts = {});

struct SweepSpec {
    std::vector<SpinQuantum> j_list;
    std::vector<double> lambda_grid;
    SweepObservable observable = SweepObservable::MeanJz;
    Method method = Method::ExactSteadyState;
    double kappa = 1.0;
    double omega_z = 0.0;
    QsdAverageOptions qsd;     // QsdTimeAverage only; qsd.seed is the base seed
    SteadyStateOptions steady; // ExactSteadyState only
    unsigned threads = 0;

    // Non-empty, strictly increasing grids; throws std::invalid_argument.
    void validate() const;
};

struct SweepRow {
    SpinQuantum spin;
    double lambda = 0.0;
    double value = 0.0;
    double stderr_ = 0.0;
    double asymptote = 0.0;
    Method method = Method::ExactSteadyState;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
};

// Asymptotic value of the observable for j -> infinity.
double sweep_asymptote(SweepObservable observable, double lambda);

// Rows ordered by (j, lambda). Failures are recorded in the row and do not stop the sweep.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

// ---------------------------------------------------------------------------

struct TrackPoint {
    double t;
    std::array<double, 3> n;
    double m = 0.0; // torus label where defined, NaN otherwise
};

struct Track {
    int id = 0;
    std::vector<TrackPoint> points;
};

// Noiseless tracks from n_init equally spaced equator labels.
std::vector<Track> flow_portrait(const Flow& flow, int n_init, double t_final, double dt = 1e-3, int sample_every = 10);

// Chordal distance between the start and the RK4 solution after one period.
double closure_defect(const CoherentLabel& start, const Flow& flow, double dt = 1e-3);

enum class StartPoint { MuPlus, MuMinus, Custom };

struct SampleTrajectoryOptions {
    StartPoint start = StartPoint::MuPlus;
    CoherentLabel custom;
    double t_final = 100.0;
    double dt = 1e-3;
    double sample_dt = 0.1;
    std::uint64_t seed = 1;
};

// One QSD trajectory with its Bloch track and, for omega > kappa_tilde, the torus label m(t).
Track sample_trajectory(const ModelParams& params, const SampleTrajectoryOptions& opts);

// ---------------------------------------------------------------------------

struct BetaRow {
    double epsilon;
    double beta;
    double beta_model; // 1 + 1/ln(epsilon)
};

// eps_k = lo * 10^(k/per_decade), k = 0..., up to hi.
std::vector<double> log_uniform_grid(double lo, double hi, int per_decade);

// beta(eps) = d ln f / d ln eps by central differences with step h in ln eps
// (default 1e-3). Non-positive f throws std::domain_error.
std::vector<BetaRow> beta_estimate(const std::function<double(double)>& curve, const std::vector<double>& eps_grid,
                                   double log_step = 0.0);

// Sampled version: interior points of (eps, f) data, central differences in log-log.
std::vector<BetaRow> beta_estimate(const std::vector<double>& eps, const std::vector<double>& values);

// ---------------------------------------------------------------------------

struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<std::pair<double, double>> points; // (ln j, ln value)
};

// Least squares in log-log; needs >= 4 positive points.
ScalingFit fit_log_log(const std::vector<double>& j, const std::vector<double>& values);

struct ScalingPoint {
    double j;
    double value;
    double stderr_;
    Method method;
};

struct ScalingOptions {
    double lambda = 1.0;
    std::vector<SpinQuantum> exact_j;
    std::vector<SpinQuantum> qsd_j;
    QsdAverageOptions qsd;
    SteadyStateOptions steady;
    double overlap_sigmas = 3.0;
    int min_overlap = 2;
    unsigned threads = 0;
};

struct OverlapCheck {
    double j;
    double exact;
    double qsd;
    double stderr_;
    double sigmas;
};

struct ScalingResult {
    ScalingFit fit;
    std::vector<ScalingPoint> points;     // every computed estimate
    std::vector<ScalingPoint> fit_points; // one per j; exact preferred
    std::vector<OverlapCheck> overlap;
    bool overlap_ok = false;
};

// All estimates, overlap checks and (given >= 4 points) the fit, without throwing on a mismatch.
ScalingResult scaling_estimates(const ScalingOptions& opts);

// <Jz>/j at lambda over j, exact for small j and QSD time averages for large j.
// Throws MethodMismatch if fewer than min_overlap shared j values exist or any
// shared value disagrees by more than overlap_sigmas standard errors.
ScalingResult finite_size_scaling(const ScalingOptions& opts);

} // namespace spinqsd
