// figures.cpp: One CSV per figure, at quick or full budget

#include "spinqsd/figures.hpp"

#include "spinqsd/io.hpp"

#include <cmath>
#include <stdexcept>

namespace spinqsd {

namespace {

std::vector<double> linear_grid(double lo, double hi, double step) {
    std::vector<double> g;
    const auto n = static_cast<long long>(std::llround((hi - lo) / step));
    for (long long k = 0; k <= n; ++k) g.push_back(lo + static_cast<double>(k) * step);
    return g;
}

std::vector<SpinQuantum> spins(std::initializer_list<double> js) {
    std::vector<SpinQuantum> out;
    for (double j : js) out.push_back(SpinQuantum::from_j(j));
    return out;
}

const char* status(bool ok) { return ok ? "ok" : "failed"; }

FigureReport sweep_figure(const FigureOptions& opts, const std::string& file, SweepObservable observable,
                          std::vector<SpinQuantum> js, std::vector<double> grid) {
    SweepSpec spec;
    spec.j_list = std::move(js);
    spec.lambda_grid = std::move(grid);
    spec.observable = observable;
    spec.method = Method::ExactSteadyState;
    spec.threads = opts.threads;
    const auto rows = run_sweep(spec);

    FigureReport rep;
    rep.csv = opts.out_dir / file;
    const std::string value_col = observable == SweepObservable::MeanJz ? "mean_jz_over_j" : "var_jz_over_j2";
    CsvWriter csv(rep.csv, {"j", "lambda", value_col, "asymptote", "status"});
    for (const auto& r : rows) {
        csv.row({r.spin.j(), r.lambda, r.value, r.asymptote, std::string(status(r.ok))});
        ++rep.rows;
        if (!r.ok) {
            ++rep.failures;
            rep.summary["errors"].push_back(r.error);
        }
    }
    return rep;
}

FigureReport figure1(const FigureOptions& opts) {
    const bool full = opts.budget == Budget::Full;
    return sweep_figure(opts, "fig1.csv", SweepObservable::MeanJz, full ? spins({10, 30, 100}) : spins({10, 30}),
                        linear_grid(0.0, 2.0, full ? 0.02 : 0.1));
}

FigureReport figure4a(const FigureOptions& opts) {
    const bool full = opts.budget == Budget::Full;
    return sweep_figure(opts, "fig4a.csv", SweepObservable::VarJz, full ? spins({25, 50, 100}) : spins({10, 25}),
                        linear_grid(0.0, 2.5, full ? 0.02 : 0.1));
}

FigureReport figure2(const FigureOptions& opts) {
    const bool full = opts.budget == Budget::Full;
    FigureReport rep;
    rep.csv = opts.out_dir / "fig2.csv";
    CsvWriter csv(rep.csv, {"lambda", "track_id", "t", "nx", "ny", "nz"});
    for (double lambda : {0.95, 1.05}) {
        const auto tracks = flow_portrait(Flow::thermodynamic(lambda), full ? 16 : 8, full ? 60.0 : 30.0, 1e-3,
                                          full ? 10 : 50);
        for (const auto& tr : tracks) {
            for (const auto& p : tr.points) {
                csv.row({lambda, static_cast<long long>(tr.id), p.t, p.n[0], p.n[1], p.n[2]});
                ++rep.rows;
            }
        }
    }
    return rep;
}

FigureReport figure3(const FigureOptions& opts) {
    const bool full = opts.budget == Budget::Full;
    FigureReport rep;
    rep.csv = opts.out_dir / "fig3.csv";
    CsvWriter csv(rep.csv, {"lambda", "t", "nx", "ny", "nz", "m"});
    const auto spin = SpinQuantum::from_j(500);
    for (double lambda : {0.95, 1.05}) {
        SampleTrajectoryOptions so;
        so.start = StartPoint::MuPlus;
        so.seed = opts.seed;
        so.t_final = lambda < 1.0 ? 100.0 : (full ? 50.0 * spin.j() : 2000.0);
        so.sample_dt = lambda < 1.0 ? 0.1 : (full ? 5.0 : 1.0);
        const auto tr = sample_trajectory(ModelParams::from_lambda(spin, lambda), so);
        double m_lo = 1.0, m_hi = -1.0;
        for (const auto& p : tr.points) {
            csv.row({lambda, p.t, p.n[0], p.n[1], p.n[2], p.m});
            ++rep.rows;
            if (std::isfinite(p.m)) {
                m_lo = std::min(m_lo, p.m);
                m_hi = std::max(m_hi, p.m);
            }
        }
        if (lambda > 1.0) rep.summary["m_range"] = {m_lo, m_hi};
    }
    return rep;
}

FigureReport figure4b(const FigureOptions& opts) {
    FigureReport rep;
    rep.csv = opts.out_dir / "fig4b.csv";
    CsvWriter csv(rep.csv, {"epsilon", "beta", "beta_model"});
    const auto grid = log_uniform_grid(1e-5, 1e-1, 8);
    const auto rows = beta_estimate([](double eps) { return variance_asymptote(1.0 + eps); }, grid);
    for (const auto& r : rows) {
        csv.row({r.epsilon, r.beta, r.beta_model});
        ++rep.rows;
    }
    return rep;
}

ScalingOptions scaling_budget(Budget budget, std::uint64_t seed, unsigned threads) {
    ScalingOptions so;
    so.lambda = 1.0;
    so.qsd.seed = seed;
    so.threads = threads;
    so.qsd.dt = 2e-3;
    if (budget == Budget::Full) {
        so.exact_j = spins({10, 20, 40, 80, 160});
        so.qsd_j = spins({80, 160, 320, 640, 1280});
        so.qsd.n_traj = 8;
        so.qsd.t_average = 10000.0;
    } else {
        so.exact_j = spins({5, 10, 20, 40});
        so.qsd_j = spins({20, 40, 80});
        so.qsd.n_traj = 4;
        so.qsd.t_average = 1000.0;
    }
    return so;
}

FigureReport figure5(const FigureOptions& opts) {
    FigureReport rep;
    rep.csv = opts.out_dir / "fig5.csv";
    const ScalingResult res = scaling_estimates(scaling_budget(opts.budget, opts.seed, opts.threads));
    CsvWriter csv(rep.csv, {"j", "mean_jz_over_j", "method", "stderr"});
    for (const auto& p : res.points) {
        csv.row({p.j, p.value, std::string(to_string(p.method)), p.stderr_});
        ++rep.rows;
    }
    rep.summary["slope"] = res.fit.slope;
    rep.summary["intercept"] = res.fit.intercept;
    rep.summary["r_squared"] = res.fit.r_squared;
    rep.summary["overlap_ok"] = res.overlap_ok;
    for (const auto& o : res.overlap) {
        rep.summary["overlap"].push_back({{"j", o.j}, {"exact", o.exact}, {"qsd", o.qsd}, {"stderr", o.stderr_},
                                          {"sigmas", o.sigmas}});
    }
    if (!res.overlap_ok) rep.failures = 1;
    return rep;
}

} // namespace

const std::vector<std::string>& figure_names() {
    static const std::vector<std::string> names{"1", "2", "3", "4a", "4b", "5"};
    return names;
}

FigureReport run_figure(const FigureOptions& opts) {
    std::filesystem::create_directories(opts.out_dir);
    if (opts.which == "1") return figure1(opts);
    if (opts.which == "2") return figure2(opts);
    if (opts.which == "3") return figure3(opts);
    if (opts.which == "4a") return figure4a(opts);
    if (opts.which == "4b") return figure4b(opts);
    if (opts.which == "5") return figure5(opts);
    throw std::invalid_argument("unknown figure '" + opts.which + "'");
}

} // namespace spinqsd
