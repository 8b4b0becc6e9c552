// experiments.cpp: Sweeps, time averages, portraits, beta estimates, scaling fits

#include "spinqsd/experiments.hpp"

#include "spinqsd/errors.hpp"
#include "spinqsd/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace spinqsd {

const char* to_string(SweepObservable o) {
    return o == SweepObservable::MeanJz ? "mean_jz" : "var_jz";
}

const char* to_string(Method m) {
    return m == Method::ExactSteadyState ? "exact" : "qsd";
}

double effective_relaxation_time(const ModelParams& params) {
    const double l = params.omega / params.kappa_tilde();
    const double finite_size = std::cbrt(params.j()) / params.kappa;
    const double gap = std::abs(1.0 - l * l);
    if (gap == 0.0) return finite_size;
    return std::min(1.0 / (std::sqrt(gap) * params.kappa), finite_size);
}

double default_burn_in(const ModelParams& params) {
    return 10.0 * std::max(effective_relaxation_time(params), 0.1 * params.j() / params.kappa);
}

namespace {

struct BlockSums {
    std::vector<double> nz;  // block means of <Jz>/j
    std::vector<double> nz2; // block means of <Jz^2>/j^2
};

// Runs one trajectory: burn-in, then block means over the averaging window.
BlockSums run_averaging_trajectory(const LangevinStepper& stepper, const ModelParams& params,
                                   const QsdAverageOptions& opts, double burn_in, std::size_t steps_per_block,
                                   std::size_t n_blocks, std::size_t index) {
    TrajectoryState state{opts.start, 0.0, trajectory_stream(opts.seed, index)};
    stepper.advance_to(state, burn_in, index);
    BlockSums out;
    out.nz.reserve(n_blocks);
    out.nz2.reserve(n_blocks);
    const double corr = 1.0 / params.spin.two_j();
    for (std::size_t b = 0; b < n_blocks; ++b) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t k = 0; k < steps_per_block; ++k) {
            stepper.step(state, index);
            const double nz = bloch_vector(state.label)[2];
            s1 += nz;
            s2 += nz * nz + (1.0 - nz * nz) * corr;
        }
        out.nz.push_back(s1 / static_cast<double>(steps_per_block));
        out.nz2.push_back(s2 / static_cast<double>(steps_per_block));
    }
    return out;
}

} // namespace

Estimate qsd_time_average(const ModelParams& params, SweepObservable observable, const QsdAverageOptions& opts) {
    params.validate();
    if (opts.n_traj == 0) throw std::invalid_argument("qsd_time_average: n_traj must be positive");
    if (!(opts.t_average > 0.0)) throw std::invalid_argument("qsd_time_average: t_average must be positive");
    const LangevinStepper stepper(params, opts.dt);
    const double burn_in = opts.burn_in >= 0.0 ? opts.burn_in : default_burn_in(params);

    double block = opts.block_length;
    if (block <= 0.0) {
        block = std::max(1.0, 10.0 * effective_relaxation_time(params));
        const double l = params.omega / params.kappa_tilde();
        if (l > 1.0) block = std::max(block, 10.0 * torus_period(Flow::from_params(params)));
    }
    block = std::min(block, opts.t_average);
    const auto steps_per_block = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(block / opts.dt)));
    const auto n_blocks = std::max<std::size_t>(
        1, static_cast<std::size_t>(opts.t_average / (static_cast<double>(steps_per_block) * opts.dt)));

    std::vector<BlockSums> runs(opts.n_traj);
    parallel_for(opts.n_traj, resolve_threads(opts.threads), [&](std::size_t i) {
        runs[i] = run_averaging_trajectory(stepper, params, opts, burn_in, steps_per_block, n_blocks, i);
    });

    std::vector<double> b1, b2;
    for (const auto& r : runs) {
        b1.insert(b1.end(), r.nz.begin(), r.nz.end());
        b2.insert(b2.end(), r.nz2.begin(), r.nz2.end());
    }
    const auto n = static_cast<double>(b1.size());
    const double m1 = std::accumulate(b1.begin(), b1.end(), 0.0) / n;
    const double m2 = std::accumulate(b2.begin(), b2.end(), 0.0) / n;
    double c11 = 0.0, c22 = 0.0, c12 = 0.0;
    for (std::size_t k = 0; k < b1.size(); ++k) {
        const double d1 = b1[k] - m1, d2 = b2[k] - m2;
        c11 += d1 * d1;
        c22 += d2 * d2;
        c12 += d1 * d2;
    }
    const double denom = n > 1.0 ? (n - 1.0) * n : std::numeric_limits<double>::infinity();
    c11 /= denom;
    c22 /= denom;
    c12 /= denom;

    Estimate e;
    e.blocks = b1.size();
    if (observable == SweepObservable::MeanJz) {
        e.value = m1;
        e.stderr_ = std::sqrt(c11);
    } else {
        // Delta method for m2 - m1^2.
        e.value = m2 - m1 * m1;
        const double g1 = -2.0 * m1;
        e.stderr_ = std::sqrt(std::max(0.0, g1 * g1 * c11 + c22 + 2.0 * g1 * c12));
    }
    return e;
}

double exact_steady_value(const ModelParams& params, SweepObservable observable, const SteadyStateOptions& opts) {
    const Liouvillian L(params);
    const SteadyStateResult ss = steady_state(L, opts);
    const Observables o = observables(ss.rho, params.spin);
    const double j = params.j();
    return observable == SweepObservable::MeanJz ? o.mean_jz / j : o.var_jz / (j * j);
}

void SweepSpec::validate() const {
    if (j_list.empty()) throw std::invalid_argument("sweep: j_list is empty");
    if (lambda_grid.empty()) throw std::invalid_argument("sweep: lambda_grid is empty");
    for (std::size_t i = 1; i < j_list.size(); ++i) {
        if (j_list[i].two_j() <= j_list[i - 1].two_j()) throw std::invalid_argument("sweep: j_list must be strictly increasing");
    }
    for (std::size_t i = 1; i < lambda_grid.size(); ++i) {
        if (!(lambda_grid[i] > lambda_grid[i - 1])) throw std::invalid_argument("sweep: lambda_grid must be strictly increasing");
    }
    for (double l : lambda_grid) {
        if (!std::isfinite(l) || l < 0.0) throw std::invalid_argument("sweep: lambda must be finite and >= 0");
    }
    for (auto s : j_list) {
        if (s.two_j() < 1) throw std::invalid_argument("sweep: j must be >= 1/2");
    }
}

double sweep_asymptote(SweepObservable observable, double lambda) {
    if (observable == SweepObservable::MeanJz) return jz_asymptote(lambda);
    return lambda > 1.0 ? variance_asymptote(lambda) : 0.0;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    spec.validate();
    const std::size_t nl = spec.lambda_grid.size();
    const std::size_t n = spec.j_list.size() * nl;
    std::vector<SweepRow> rows(n);
    const unsigned threads = resolve_threads(spec.threads);
    parallel_for(n, threads, [&](std::size_t idx) {
        SweepRow& row = rows[idx];
        row.spin = spec.j_list[idx / nl];
        row.lambda = spec.lambda_grid[idx % nl];
        row.method = spec.method;
        row.asymptote = sweep_asymptote(spec.observable, row.lambda);
        const auto params = ModelParams::from_lambda(row.spin, row.lambda, spec.kappa, spec.omega_z);
        try {
            if (spec.method == Method::ExactSteadyState) {
                row.value = exact_steady_value(params, spec.observable, spec.steady);
            } else {
                QsdAverageOptions q = spec.qsd;
                q.seed = derive_seed(spec.qsd.seed, idx);
                if (threads > 1) q.threads = 1;
                row.seed = q.seed;
                const Estimate e = qsd_time_average(params, spec.observable, q);
                row.value = e.value;
                row.stderr_ = e.stderr_;
            }
        } catch (const std::exception& ex) {
            row.ok = false;
            row.value = std::numeric_limits<double>::quiet_NaN();
            row.error = ex.what();
        }
    });
    return rows;
}

// ---------------------------------------------------------------------------

namespace {

double torus_m_or_nan(const CoherentLabel& label, const Flow& flow) {
    if (!(flow.ratio() > 1.0)) return std::numeric_limits<double>::quiet_NaN();
    return to_torus_coords(label, flow).m;
}

} // namespace

std::vector<Track> flow_portrait(const Flow& flow, int n_init, double t_final, double dt, int sample_every) {
    if (n_init < 1) throw std::invalid_argument("flow_portrait: n_init must be >= 1");
    if (sample_every < 1) throw std::invalid_argument("flow_portrait: sample_every must be >= 1");
    std::vector<Track> tracks(static_cast<std::size_t>(n_init));
    for (int k = 0; k < n_init; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / n_init;
        const CoherentLabel start = CoherentLabel::north(std::polar(1.0, theta));
        Track& tr = tracks[static_cast<std::size_t>(k)];
        tr.id = k;
        tr.points.push_back({0.0, bloch_vector(start), torus_m_or_nan(start, flow)});
        long long step = 0;
        integrate_flow_rk4(start, flow, t_final, dt, [&](double t, const CoherentLabel& x) {
            if (++step % sample_every == 0) tr.points.push_back({t, bloch_vector(x), torus_m_or_nan(x, flow)});
        });
    }
    return tracks;
}

double closure_defect(const CoherentLabel& start, const Flow& flow, double dt) {
    const double period = torus_period(flow);
    const CoherentLabel end = integrate_flow_rk4(start, flow, period, dt);
    return chordal_distance(start, end);
}

Track sample_trajectory(const ModelParams& params, const SampleTrajectoryOptions& opts) {
    params.validate();
    if (!(opts.sample_dt > 0.0)) throw std::invalid_argument("sample_trajectory: sample_dt must be positive");
    const Flow flow = Flow::from_params(params);
    CoherentLabel start = opts.custom;
    if (opts.start != StartPoint::Custom) {
        const FixedPoints fp = fixed_points(flow);
        start = CoherentLabel::north(opts.start == StartPoint::MuPlus ? fp.mu_plus : fp.mu_minus).canonical();
    }
    const LangevinStepper stepper(params, opts.dt);
    TrajectoryState state{start, 0.0, trajectory_stream(opts.seed, 0)};
    Track tr;
    tr.points.push_back({0.0, bloch_vector(start), torus_m_or_nan(start, flow)});
    const auto n_samples = static_cast<long long>(std::floor(opts.t_final / opts.sample_dt + 1e-9));
    for (long long s = 1; s <= n_samples; ++s) {
        const double t = static_cast<double>(s) * opts.sample_dt;
        stepper.advance_to(state, t);
        tr.points.push_back({t, bloch_vector(state.label), torus_m_or_nan(state.label, flow)});
    }
    return tr;
}

// ---------------------------------------------------------------------------

std::vector<double> log_uniform_grid(double lo, double hi, int per_decade) {
    if (!(lo > 0.0) || !(hi >= lo) || per_decade < 1) throw std::invalid_argument("log_uniform_grid: need 0 < lo <= hi");
    std::vector<double> grid;
    const double step = 1.0 / per_decade;
    const double decades = std::log10(hi / lo);
    for (int k = 0; k * step <= decades + 1e-12; ++k) grid.push_back(lo * std::pow(10.0, k * step));
    return grid;
}

namespace {

double beta_model(double eps) { return 1.0 + 1.0 / std::log(eps); }

double checked_log(double f) {
    if (!(f > 0.0)) throw std::domain_error("beta_estimate: curve must be positive");
    return std::log(f);
}

} // namespace

std::vector<BetaRow> beta_estimate(const std::function<double(double)>& curve, const std::vector<double>& eps_grid,
                                   double log_step) {
    const double h = log_step > 0.0 ? log_step : 1e-3;
    std::vector<BetaRow> rows;
    rows.reserve(eps_grid.size());
    for (double eps : eps_grid) {
        if (!(eps > 0.0)) throw std::domain_error("beta_estimate: epsilon must be positive");
        const double fp = checked_log(curve(eps * std::exp(h)));
        const double fm = checked_log(curve(eps * std::exp(-h)));
        rows.push_back({eps, (fp - fm) / (2.0 * h), beta_model(eps)});
    }
    return rows;
}

std::vector<BetaRow> beta_estimate(const std::vector<double>& eps, const std::vector<double>& values) {
    if (eps.size() != values.size()) throw std::invalid_argument("beta_estimate: size mismatch");
    std::vector<BetaRow> rows;
    for (std::size_t k = 1; k + 1 < eps.size(); ++k) {
        if (!(eps[k - 1] > 0.0) || !(eps[k + 1] > 0.0)) throw std::domain_error("beta_estimate: epsilon must be positive");
        const double dl = std::log(eps[k + 1]) - std::log(eps[k - 1]);
        const double df = checked_log(values[k + 1]) - checked_log(values[k - 1]);
        rows.push_back({eps[k], df / dl, beta_model(eps[k])});
    }
    return rows;
}

// ---------------------------------------------------------------------------

ScalingFit fit_log_log(const std::vector<double>& j, const std::vector<double>& values) {
    if (j.size() != values.size()) throw std::invalid_argument("fit_log_log: size mismatch");
    if (j.size() < 4) throw std::invalid_argument("fit_log_log: need at least 4 points");
    ScalingFit fit;
    double sx = 0.0, sy = 0.0;
    for (std::size_t k = 0; k < j.size(); ++k) {
        if (!(j[k] > 0.0) || !(values[k] > 0.0)) throw std::domain_error("fit_log_log: values must be positive");
        fit.points.emplace_back(std::log(j[k]), std::log(values[k]));
        sx += fit.points.back().first;
        sy += fit.points.back().second;
    }
    const auto n = static_cast<double>(j.size());
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : fit.points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return fit;
}

ScalingResult scaling_estimates(const ScalingOptions& opts) {
    ScalingResult res;
    const unsigned threads = resolve_threads(opts.threads);

    std::vector<ScalingPoint> exact(opts.exact_j.size());
    parallel_for(exact.size(), threads, [&](std::size_t i) {
        const auto params = ModelParams::from_lambda(opts.exact_j[i], opts.lambda);
        exact[i] = {opts.exact_j[i].j(), exact_steady_value(params, SweepObservable::MeanJz, opts.steady), 0.0,
                    Method::ExactSteadyState};
    });
    // Trajectories are parallel inside each point.
    std::vector<ScalingPoint> qsd;
    for (std::size_t i = 0; i < opts.qsd_j.size(); ++i) {
        const auto params = ModelParams::from_lambda(opts.qsd_j[i], opts.lambda);
        QsdAverageOptions q = opts.qsd;
        q.seed = derive_seed(opts.qsd.seed, i);
        q.threads = threads;
        const Estimate e = qsd_time_average(params, SweepObservable::MeanJz, q);
        qsd.push_back({opts.qsd_j[i].j(), e.value, e.stderr_, Method::QsdTimeAverage});
    }

    res.points = exact;
    res.points.insert(res.points.end(), qsd.begin(), qsd.end());

    for (const auto& q : qsd) {
        const auto it = std::find_if(exact.begin(), exact.end(), [&](const ScalingPoint& e) { return e.j == q.j; });
        if (it == exact.end()) continue;
        const double sig = q.stderr_ > 0.0 ? std::abs(q.value - it->value) / q.stderr_
                                           : (q.value == it->value ? 0.0 : std::numeric_limits<double>::infinity());
        res.overlap.push_back({q.j, it->value, q.value, q.stderr_, sig});
    }
    res.overlap_ok = static_cast<int>(res.overlap.size()) >= opts.min_overlap &&
                     std::all_of(res.overlap.begin(), res.overlap.end(),
                                 [&](const OverlapCheck& o) { return o.sigmas <= opts.overlap_sigmas; });

    res.fit_points = exact;
    for (const auto& q : qsd) {
        const bool shared = std::any_of(exact.begin(), exact.end(), [&](const ScalingPoint& e) { return e.j == q.j; });
        if (!shared) res.fit_points.push_back(q);
    }
    std::sort(res.fit_points.begin(), res.fit_points.end(),
              [](const ScalingPoint& a, const ScalingPoint& b) { return a.j < b.j; });
    std::vector<double> js, vs;
    for (const auto& p : res.fit_points) {
        js.push_back(p.j);
        vs.push_back(p.value);
    }
    if (js.size() >= 4) res.fit = fit_log_log(js, vs);
    return res;
}

ScalingResult finite_size_scaling(const ScalingOptions& opts) {
    ScalingResult res = scaling_estimates(opts);
    if (static_cast<int>(res.overlap.size()) < opts.min_overlap) {
        throw MethodMismatch("finite_size_scaling: only " + std::to_string(res.overlap.size()) +
                             " j values computed by both methods");
    }
    for (const auto& o : res.overlap) {
        if (o.sigmas > opts.overlap_sigmas) {
            throw MethodMismatch("finite_size_scaling: exact and QSD disagree at j = " + std::to_string(o.j) + " (" +
                                 std::to_string(o.sigmas) + " standard errors)");
        }
    }

    if (res.fit_points.size() < 4) throw std::invalid_argument("finite_size_scaling: need at least 4 distinct j values");
    return res;
}

} // namespace spinqsd
