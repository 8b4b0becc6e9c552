// spinqsd: command-line driver for the steady-state, trajectory and figure pipelines
//
// Exit codes: 0 ok, 2 usage or invalid parameters, 3 solver failure,
// 4 integration failure, 1 anything else.

#include "spinqsd/errors.hpp"
#include "spinqsd/experiments.hpp"
#include "spinqsd/figures.hpp"
#include "spinqsd/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace spinqsd;
using nlohmann::json;

namespace {

constexpr int kOk = 0, kUsage = 2, kSolver = 3, kIntegration = 4;

struct Common {
    unsigned threads = 0;
    std::uint64_t seed = 1;
    std::string out;
};

void add_common(CLI::App* sub, Common& c, bool needs_out) {
    sub->add_option("--threads", c.threads, "Worker threads (0: auto; SPINQSD_THREADS overrides)");
    sub->add_option("--seed", c.seed, "Base seed of the random streams");
    auto* o = sub->add_option("--out", c.out, "Output directory");
    if (needs_out) o->default_str(".");
}

SpinQuantum parse_spin(double j) {
    const double twice = 2.0 * j;
    if (!std::isfinite(j) || j < 0.5 || std::abs(twice - std::round(twice)) > 1e-9) {
        throw std::invalid_argument("--j must be a positive multiple of 1/2");
    }
    return SpinQuantum(static_cast<int>(std::lround(twice)));
}

json base_manifest(const std::string& command, const std::vector<std::string>& argv, const Common& c) {
    return json{{"command", command}, {"argv", argv}, {"seed", c.seed}, {"threads", resolve_threads(c.threads)}};
}

// ---------------------------------------------------------------------------

struct SteadyArgs {
    double j = 0.0, lambda = 0.0, omega_z = 0.0, kappa = 1.0;
    std::string observable = "all";
};

int cmd_steady(const SteadyArgs& a, const Common& c, const std::vector<std::string>& argv) {
    const ModelParams params = ModelParams::from_lambda(parse_spin(a.j), a.lambda, a.kappa, a.omega_z);
    params.validate();
    const Liouvillian L(params);
    const SteadyStateResult ss = steady_state(L);
    const Observables o = observables(ss.rho, params.spin);
    const double j = params.j();

    std::vector<std::string> header{"j", "lambda", "omega_z"};
    std::vector<CsvCell> row{j, a.lambda, a.omega_z};
    if (a.observable != "var_jz") {
        header.push_back("mean_jz_over_j");
        row.emplace_back(o.mean_jz / j);
    }
    if (a.observable != "mean_jz") {
        header.push_back("var_jz_over_j2");
        row.emplace_back(o.var_jz / (j * j));
    }
    header.insert(header.end(), {"purity", "spectral_gap"});
    row.emplace_back(o.purity);
    row.emplace_back(ss.spectral_gap);

    for (std::size_t k = 0; k < header.size(); ++k) std::cout << (k ? "," : "") << header[k];
    std::cout << '\n';
    for (std::size_t k = 0; k < row.size(); ++k) {
        std::cout << (k ? "," : "");
        std::visit([](const auto& v) {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, double>) std::cout << format_double(v);
            else std::cout << v;
        }, row[k]);
    }
    std::cout << '\n';

    if (!c.out.empty()) {
        CsvWriter csv(fs::path(c.out) / "steady.csv", header);
        csv.row(row);
        json m = base_manifest("steady", argv, c);
        m["parameters"] = {{"j", j}, {"lambda", a.lambda}, {"omega_z", a.omega_z}, {"kappa", a.kappa},
                           {"observable", a.observable}};
        write_manifest(c.out, m);
    }
    return kOk;
}

// ---------------------------------------------------------------------------

struct TrajArgs {
    double j = 0.0, lambda = 0.0, omega_z = 0.0, kappa = 1.0;
    std::size_t n_traj = 1;
    double t_final = 10.0, dt = 1e-3, sample_dt = 0.0;
    std::string start = "custom";
    double mu_re = 0.3, mu_im = 0.1;
    bool compare_exact = false;
};

CoherentLabel start_label(const TrajArgs& a, const ModelParams& params) {
    if (a.start == "north") return CoherentLabel::north({0.0, 0.0});
    if (a.start == "south") return CoherentLabel::south({0.0, 0.0});
    if (a.start == "custom") return CoherentLabel::north({a.mu_re, a.mu_im});
    const FixedPoints fp = fixed_points(Flow::from_params(params));
    return CoherentLabel::north(a.start == "mu_plus" ? fp.mu_plus : fp.mu_minus).canonical();
}

int cmd_traj(const TrajArgs& a, const Common& c, const std::vector<std::string>& argv) {
    const ModelParams params = ModelParams::from_lambda(parse_spin(a.j), a.lambda, a.kappa, a.omega_z);
    params.validate();
    if (a.n_traj == 0) throw std::invalid_argument("--n-traj must be positive");
    if (!(a.t_final > 0.0)) throw std::invalid_argument("--t-final must be positive");
    const double sample_dt = a.sample_dt > 0.0 ? a.sample_dt : a.t_final / 100.0;
    const CoherentLabel start = start_label(a, params);

    EnsembleSpec spec;
    spec.n_traj = a.n_traj;
    spec.dt = a.dt;
    spec.base_seed = c.seed;
    spec.threads = c.threads;
    const auto n_samples = static_cast<long long>(std::floor(a.t_final / sample_dt + 1e-9));
    for (long long s = 0; s <= n_samples; ++s) spec.sample_times.push_back(static_cast<double>(s) * sample_dt);
    if (spec.sample_times.back() < a.t_final * (1.0 - 1e-12)) spec.sample_times.push_back(a.t_final);

    const EnsembleResult res = simulate_ensemble(params, spec, start);

    const Flow flow = Flow::from_params(params);
    const bool has_torus = params.omega > 0.0 && flow.ratio() > 1.0;
    const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
    fs::create_directories(dir);
    {
        CsvWriter csv(dir / "traj.csv", {"trajectory", "t", "nx", "ny", "nz", "m"});
        for (std::size_t i = 0; i < a.n_traj; ++i) {
            for (std::size_t s = 0; s < res.times.size(); ++s) {
                const CoherentLabel& x = res.labels[s][i];
                const auto n = bloch_vector(x);
                const double m = has_torus ? to_torus_coords(x, flow).m : std::nan("");
                csv.row({static_cast<long long>(i), res.times[s], n[0], n[1], n[2], m});
            }
        }
    }

    json m = base_manifest("traj", argv, c);
    m["parameters"] = {{"j", params.j()},    {"lambda", a.lambda}, {"omega_z", a.omega_z}, {"kappa", a.kappa},
                       {"n_traj", a.n_traj}, {"t_final", a.t_final}, {"dt", a.dt},        {"sample_dt", sample_dt},
                       {"start", a.start},   {"mu0", {start.mu().real(), start.mu().imag()}}};

    if (a.compare_exact) {
        const Liouvillian L(params);
        const double t = res.times.back();
        const auto rho = evolve(L, coherent_projector(params.spin, start), std::vector<double>{t});
        const auto& last = res.labels.back();
        const double d = trace_distance(rho.front(), ensemble_density(last, params.spin));
        std::cout << "trace_distance," << format_double(d) << '\n';
        m["trace_distance"] = d;
    }
    write_manifest(dir, m);
    return kOk;
}

// ---------------------------------------------------------------------------

struct FigureArgs {
    std::string which;
    std::string budget = "quick";
};

int cmd_figure(const FigureArgs& a, const Common& c, const std::vector<std::string>& argv) {
    FigureOptions fo;
    fo.which = a.which;
    fo.budget = a.budget == "full" ? Budget::Full : Budget::Quick;
    fo.seed = c.seed;
    fo.threads = c.threads;
    fo.out_dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
    const FigureReport rep = run_figure(fo);

    json m = base_manifest("figure", argv, c);
    m["parameters"] = {{"which", a.which}, {"budget", a.budget}};
    m["summary"] = rep.summary;
    m["failures"] = rep.failures;
    write_manifest(fo.out_dir, m);
    std::cout << rep.csv.string() << ": " << rep.rows << " rows";
    if (!rep.summary.is_null()) std::cout << ' ' << rep.summary.dump();
    std::cout << '\n';
    if (rep.failures > 0) {
        std::cerr << "error: " << rep.failures << " failed item(s); partial results written\n";
        return kSolver;
    }
    return kOk;
}

// ---------------------------------------------------------------------------

struct FlowArgs {
    double lambda = 0.0;
    double j = 0.0; // 0: large-j flow
    int n_init = 8;
    double t_final = 20.0, dt = 1e-3;
    int every = 10;
};

int cmd_flow(const FlowArgs& a, const Common& c, const std::vector<std::string>& argv) {
    if (!(a.lambda >= 0.0) || !std::isfinite(a.lambda)) throw std::invalid_argument("--lambda must be >= 0");
    if (!(a.t_final > 0.0) || !(a.dt > 0.0)) throw std::invalid_argument("--t-final and --dt must be positive");
    Flow flow = Flow::thermodynamic(a.lambda);
    if (a.j > 0.0) flow = Flow::from_params(ModelParams::from_lambda(parse_spin(a.j), a.lambda));
    const auto tracks = flow_portrait(flow, a.n_init, a.t_final, a.dt, a.every);
    const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
    fs::create_directories(dir);
    {
        CsvWriter csv(dir / "flow.csv", {"lambda", "track_id", "t", "nx", "ny", "nz", "m"});
        for (const auto& tr : tracks) {
            for (const auto& p : tr.points) csv.row({a.lambda, static_cast<long long>(tr.id), p.t, p.n[0], p.n[1], p.n[2], p.m});
        }
    }
    json m = base_manifest("flow", argv, c);
    m["parameters"] = {{"lambda", a.lambda}, {"j", a.j},          {"n_init", a.n_init},
                       {"t_final", a.t_final}, {"dt", a.dt},      {"every", a.every}};
    write_manifest(dir, m);
    return kOk;
}

// ---------------------------------------------------------------------------

struct ScalingArgs {
    double lambda = 1.0;
    std::vector<double> exact_j{10, 20, 40, 80};
    std::vector<double> qsd_j{40, 80, 160, 320};
    std::size_t n_traj = 8;
    double t_average = 2000.0, dt = 2e-3;
};

int cmd_scaling(const ScalingArgs& a, const Common& c, const std::vector<std::string>& argv) {
    ScalingOptions so;
    so.lambda = a.lambda;
    for (double j : a.exact_j) so.exact_j.push_back(parse_spin(j));
    for (double j : a.qsd_j) so.qsd_j.push_back(parse_spin(j));
    so.qsd.n_traj = a.n_traj;
    so.qsd.t_average = a.t_average;
    so.qsd.dt = a.dt;
    so.qsd.seed = c.seed;
    so.threads = c.threads;
    if (!(a.lambda > 0.0)) throw std::invalid_argument("--lambda must be positive");
    for (auto s : so.qsd_j) ModelParams::from_lambda(s, a.lambda).validate();

    const ScalingResult res = scaling_estimates(so);
    const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
    fs::create_directories(dir);
    {
        CsvWriter csv(dir / "scaling.csv", {"j", "mean_jz_over_j", "method", "stderr"});
        for (const auto& p : res.points) csv.row({p.j, p.value, std::string(to_string(p.method)), p.stderr_});
    }
    json m = base_manifest("scaling", argv, c);
    m["parameters"] = {{"lambda", a.lambda}, {"exact_j", a.exact_j}, {"qsd_j", a.qsd_j},
                       {"n_traj", a.n_traj}, {"t_average", a.t_average}, {"dt", a.dt}};
    m["slope"] = res.fit.slope;
    m["r_squared"] = res.fit.r_squared;
    m["overlap_ok"] = res.overlap_ok;
    write_manifest(dir, m);

    std::cout << "slope," << format_double(res.fit.slope) << "\nr_squared," << format_double(res.fit.r_squared) << '\n';
    for (const auto& o : res.overlap) {
        std::cout << "overlap j=" << o.j << " exact=" << format_double(o.exact) << " qsd=" << format_double(o.qsd)
                  << " sigmas=" << format_double(o.sigmas) << '\n';
    }
    if (!res.overlap_ok) throw MethodMismatch("exact and QSD estimates disagree on the shared j values");
    if (res.fit_points.size() < 4) throw std::invalid_argument("need at least 4 distinct j values for the fit");
    return kOk;
}

// ---------------------------------------------------------------------------

int run(std::vector<std::string> args);

// Re-runs the command recorded in a manifest, writing into a new directory.
int cmd_replay(const std::string& manifest, const std::string& out, unsigned threads) {
    const json m = read_manifest(manifest);
    std::vector<std::string> args;
    const auto recorded = m.at("argv").get<std::vector<std::string>>();
    for (std::size_t k = 0; k < recorded.size(); ++k) {
        if (recorded[k] == "--out" || recorded[k] == "--threads") {
            ++k;
            continue;
        }
        if (recorded[k].starts_with("--out=") || recorded[k].starts_with("--threads=")) continue;
        args.push_back(recorded[k]);
    }
    args.insert(args.end(), {"--out", out});
    if (threads > 0) args.insert(args.end(), {"--threads", std::to_string(threads)});
    return run(args);
}

int run(std::vector<std::string> args) {
    const std::vector<std::string> argv = args;
    CLI::App app{"Driven collective spin: exact steady states, QSD trajectories and figure data", "spinqsd"};
    app.require_subcommand(1);

    Common common;

    SteadyArgs sa;
    auto* steady = app.add_subcommand("steady", "Exact steady state: <Jz>/j, var Jz/j^2, purity, spectral gap");
    steady->add_option("--j", sa.j, "Spin j (integer or half-integer)")->required();
    steady->add_option("--lambda", sa.lambda, "omega / kappa")->required();
    steady->add_option("--omega-z", sa.omega_z, "Longitudinal field (units of kappa)");
    steady->add_option("--kappa", sa.kappa, "Dissipation rate");
    steady->add_option("--observable", sa.observable, "Columns to print")
        ->check(CLI::IsMember({"mean_jz", "var_jz", "all"}));
    add_common(steady, common, false);

    TrajArgs ta;
    auto* traj = app.add_subcommand("traj", "QSD trajectories sampled on a uniform time grid");
    traj->add_option("--j", ta.j, "Spin j")->required();
    traj->add_option("--lambda", ta.lambda, "omega / kappa")->required();
    traj->add_option("--omega-z", ta.omega_z, "Longitudinal field");
    traj->add_option("--kappa", ta.kappa, "Dissipation rate");
    traj->add_option("--n-traj", ta.n_traj, "Number of trajectories");
    traj->add_option("--t-final", ta.t_final, "Final time");
    traj->add_option("--dt", ta.dt, "Euler-Maruyama step");
    traj->add_option("--sample-dt", ta.sample_dt, "Output interval (default t_final/100)");
    traj->add_option("--start", ta.start, "Initial label")
        ->check(CLI::IsMember({"mu_plus", "mu_minus", "north", "south", "custom"}));
    traj->add_option("--mu-re", ta.mu_re, "Re mu0 for --start custom");
    traj->add_option("--mu-im", ta.mu_im, "Im mu0 for --start custom");
    traj->add_flag("--compare-exact", ta.compare_exact, "Print the trace distance to the master-equation state");
    add_common(traj, common, true);

    FigureArgs fa;
    auto* figure = app.add_subcommand("figure", "Write the data of one figure as CSV");
    figure->add_option("--which", fa.which, "Figure")->required()->check(CLI::IsMember(figure_names()));
    figure->add_option("--budget", fa.budget, "Problem sizes")->check(CLI::IsMember({"quick", "full"}));
    add_common(figure, common, true);

    FlowArgs fl;
    auto* flow = app.add_subcommand("flow", "Noiseless flow from equator labels");
    flow->add_option("--lambda", fl.lambda, "omega / kappa")->required();
    flow->add_option("--j", fl.j, "Use the finite-j damping (default: large-j flow)");
    flow->add_option("--n-init", fl.n_init, "Number of initial labels");
    flow->add_option("--t-final", fl.t_final, "Final time");
    flow->add_option("--dt", fl.dt, "RK4 step");
    flow->add_option("--every", fl.every, "Output every n-th step");
    add_common(flow, common, true);

    ScalingArgs sc;
    auto* scaling = app.add_subcommand("scaling", "Finite-size scaling of <Jz>/j");
    scaling->add_option("--lambda", sc.lambda, "omega / kappa");
    scaling->add_option("--exact-j", sc.exact_j, "j values for the exact solver")->delimiter(',');
    scaling->add_option("--qsd-j", sc.qsd_j, "j values for QSD time averages")->delimiter(',');
    scaling->add_option("--n-traj", sc.n_traj, "Trajectories per j");
    scaling->add_option("--t-average", sc.t_average, "Averaging window per trajectory");
    scaling->add_option("--dt", sc.dt, "Euler-Maruyama step");
    add_common(scaling, common, true);

    std::string manifest;
    auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    replay->add_option("manifest", manifest, "manifest.json")->required()->check(CLI::ExistingFile);
    add_common(replay, common, true);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    if (steady->parsed()) return cmd_steady(sa, common, argv);
    if (traj->parsed()) return cmd_traj(ta, common, argv);
    if (figure->parsed()) return cmd_figure(fa, common, argv);
    if (flow->parsed()) return cmd_flow(fl, common, argv);
    if (scaling->parsed()) return cmd_scaling(sc, common, argv);
    if (replay->parsed()) return cmd_replay(manifest, common.out.empty() ? "." : common.out, common.threads);
    return kUsage;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(std::vector<std::string>(argv + 1, argv + argc));
    } catch (const Blowup& e) {
        std::cerr << "integration failure: " << e.what() << '\n';
        return kIntegration;
    } catch (const NonConvergence& e) {
        std::cerr << "solver failure (" << e.stage() << "): " << e.what() << '\n';
        return kSolver;
    } catch (const AmbiguousNull& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolver;
    } catch (const MethodMismatch& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolver;
    } catch (const DimensionOverflow& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << '\n';
        return 1;
    }
}
