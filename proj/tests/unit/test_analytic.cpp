#include "oracles.hpp"

#include "spinqsd/analytic.hpp"
#include "spinqsd/errors.hpp"
#include "spinqsd/qsd.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace spinqsd;

namespace {

constexpr cplx kI{0.0, 1.0};
constexpr double kPi = std::numbers::pi;

cplx f_north(cplx mu, double w, double kt) { return -kI * (w / 2.0) * (1.0 - mu * mu) - kt * mu; }

// Hand-rolled RK4 of the Riccati flow: integrates mu while |mu| <= 1 and nu = 1/mu
// otherwise, using dnu/dt = -nu^2 f(1/nu).
struct Rk4Oracle {
    double w, kt;

    cplx rhs(cplx x, bool south) const {
        if (!south) return f_north(x, w, kt);
        // -nu^2 f(1/nu), expanded to stay finite at nu = 0
        return kI * (w / 2.0) * (x * x - 1.0) + kt * x;
    }

    // Returns (value, south) after time t with step h.
    std::pair<cplx, bool> run(cplx mu0, double t, double h) const {
        cplx x = mu0;
        bool south = false;
        if (std::abs(x) > 1.0) {
            x = 1.0 / x;
            south = true;
        }
        const auto n = static_cast<long long>(std::llround(t / h));
        for (long long k = 0; k < n; ++k) {
            const cplx k1 = rhs(x, south);
            const cplx k2 = rhs(x + 0.5 * h * k1, south);
            const cplx k3 = rhs(x + 0.5 * h * k2, south);
            const cplx k4 = rhs(x + h * k3, south);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (std::abs(x) > 1.0) {
                x = 1.0 / x;
                south = !south;
            }
        }
        return {x, south};
    }
};

CoherentLabel as_label(std::pair<cplx, bool> s) {
    return s.second ? CoherentLabel::south(s.first) : CoherentLabel::north(s.first);
}

double matrix_max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

double trace_norm(const Matrix& a) {
    const Matrix h = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    return es.eigenvalues().cwiseAbs().sum();
}

} // namespace

TEST_CASE("fixed points of the noiseless flow") {
    SUBCASE("closed form at lambda = 0.6 with kappa_tilde = 1") {
        const auto fp = fixed_points(Flow{0.6, 1.0});
        CHECK(std::abs(fp.mu_minus - (-kI / 3.0)) < 1e-14);
        CHECK(std::abs(fp.mu_plus - (-3.0 * kI)) < 1e-14);
    }
    SUBCASE("weak drive sends mu_minus to the north pole") {
        const auto fp = fixed_points(Flow{1e-6, 1.0});
        CHECK(std::abs(fp.mu_minus) < 1e-6);
    }
    SUBCASE("degenerate at the critical ratio") {
        const auto fp = fixed_points(Flow{1.3, 1.3});
        CHECK(std::abs(fp.mu_plus - fp.mu_minus) < 1e-14);
        CHECK(std::abs(fp.mu_minus - (-kI)) < 1e-14);
    }
    SUBCASE("zeros of the drift for several ratios") {
        for (double l : {0.1, 0.5, 0.95, 1.0, 1.05, 2.0, 10.0}) {
            const Flow flow{l * 0.8, 0.8};
            const auto fp = fixed_points(flow);
            CHECK(std::abs(deterministic_rhs(fp.mu_plus, flow)) < 1e-12);
            CHECK(std::abs(deterministic_rhs(fp.mu_minus, flow)) < 1e-12);
            if (l <= 1.0) {
                CHECK(std::abs(fp.mu_plus.real()) < 1e-15);
                CHECK(fp.mu_minus.imag() <= 0.0);
            } else {
                // Above threshold both lie on the equator, mirror images of each other.
                CHECK(std::abs(std::abs(fp.mu_plus) - 1.0) < 1e-12);
                CHECK(std::abs(fp.mu_plus + std::conj(fp.mu_minus)) < 1e-12);
            }
        }
    }
    CHECK_THROWS_AS(fixed_points(Flow{0.0, 1.0}), DegenerateDrive);
}

TEST_CASE("deterministic_rhs matches the QSD drift without a field") {
    const auto p = ModelParams::from_lambda(SpinQuantum(7), 0.9, 1.3);
    const auto flow = Flow::from_params(p);
    CHECK(std::abs(deterministic_rhs(0.0, flow) - (-kI * p.omega / 2.0)) < 1e-15);
    std::mt19937_64 rng(3);
    for (int k = 0; k < 20; ++k) {
        const cplx mu = oracle::random_label(rng);
        CHECK(std::abs(deterministic_rhs(mu, flow) - drift(mu, p)) < 1e-13);
        if (std::abs(mu) > 0.1) {
            const cplx nu = 1.0 / mu;
            CHECK(std::abs(deterministic_rhs_south(nu, flow) - (-nu * nu * deterministic_rhs(mu, flow))) < 1e-11);
        }
    }
}

TEST_CASE("linearization assigns stability for lambda < 1") {
    for (double l : {0.2, 0.6, 0.95}) {
        const Flow flow{l, 1.0};
        const auto fp = fixed_points(flow);
        const double rate = std::sqrt(1.0 - l * l);
        CHECK(std::abs(linearized_rate(fp.mu_minus, flow) - (-rate)) < 1e-12);
        CHECK(std::abs(linearized_rate(fp.mu_plus, flow) - rate) < 1e-12);
        // Independent check: finite-difference derivative of the drift.
        const double h = 1e-6;
        const cplx fd = (deterministic_rhs(fp.mu_minus + h, flow) - deterministic_rhs(fp.mu_minus - h, flow)) / (2 * h);
        CHECK(std::abs(fd - linearized_rate(fp.mu_minus, flow)) < 1e-8);
        CHECK(moebius_rate(flow).real() > 0.0);
    }
    CHECK(std::abs(moebius_rate(Flow{2.0, 1.0}) - kI * std::sqrt(3.0)) < 1e-14);
}

TEST_CASE("torus period") {
    CHECK(torus_period(Flow{std::sqrt(2.0), 1.0}) == doctest::Approx(2.0 * kPi).epsilon(1e-14));
    CHECK(torus_period(Flow{2.0, 1.0}) == doctest::Approx(2.0 * kPi / std::sqrt(3.0)).epsilon(1e-14));
    CHECK(torus_period(Flow{4.0, 2.0}) == doctest::Approx(kPi / std::sqrt(3.0)).epsilon(1e-14));
    double prev = 0.0;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const double t = torus_period(Flow{1.0 + eps, 1.0});
        CHECK(t > prev);
        prev = t;
    }
    CHECK(prev > 400.0);
    CHECK_THROWS_AS(torus_period(Flow{1.0, 1.0}), NotCyclic);
    CHECK_THROWS_AS(torus_period(Flow{0.5, 1.0}), NotCyclic);
}

TEST_CASE("analytic trajectory at the fixed tori") {
    for (double l : {0.5, 2.0}) {
        const Flow flow{l, 1.0};
        const auto fp = fixed_points(flow);
        for (double t : {0.0, 0.7, 5.0}) {
            CHECK(std::abs(analytic_trajectory({1.0, 0.4}, flow, t).mu() - fp.mu_minus) < 1e-12);
            CHECK(std::abs(analytic_trajectory({-1.0, 2.1}, flow, t).mu() - fp.mu_plus) < 1e-12);
        }
    }
    CHECK_THROWS_AS(analytic_trajectory({0.0, 0.0}, Flow{1.0, 1.0}, 1.0), Critical);
}

TEST_CASE("analytic trajectory is periodic above threshold") {
    const Flow flow{2.0, 1.0};
    const double period = 2.0 * kPi / std::sqrt(3.0);
    for (double t : {0.0, 0.3, 1.9}) {
        const auto a = analytic_trajectory({0.3, 0.0}, flow, t);
        const auto b = analytic_trajectory({0.3, 0.0}, flow, t + period);
        CHECK(chordal_distance(a, b) < 1e-12);
    }
}

TEST_CASE("analytic trajectory agrees with an independent RK4 integration") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> um(-0.95, 0.95), uphi(0.0, 2.0 * kPi);
    for (double l : {0.5, 0.95, 1.05, 2.0}) {
        const Flow flow{l, 1.0};
        const Rk4Oracle rk{l, 1.0};
        double worst = 0.0;
        for (int k = 0; k < 20; ++k) {
            const TorusCoords c0{um(rng), uphi(rng)};
            const CoherentLabel start = analytic_trajectory(c0, flow, 0.0);
            for (double t : {2.5, 5.0, 10.0}) {
                const auto ref = as_label(rk.run(start.mu(), t, 2e-4));
                worst = std::max(worst, chordal_distance(ref, analytic_trajectory(c0, flow, t)));
            }
        }
        INFO("lambda = " << l);
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("library RK4 crosses the poles and matches the oracle") {
    const Flow flow{2.0, 1.0};
    const Rk4Oracle rk{2.0, 1.0};
    // m = -0.9 orbits pass close to the south pole.
    const CoherentLabel start = analytic_trajectory({-0.9, 0.0}, flow, 0.0);
    const auto lib = integrate_flow_rk4(start, flow, 10.0, 1e-3);
    CHECK(chordal_distance(lib, as_label(rk.run(start.mu(), 10.0, 2e-4))) < 1e-8);
}

TEST_CASE("torus coordinates round-trip") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> um(-0.99, 0.99), uphi(-kPi + 1e-3, kPi - 1e-3);
    const Flow flow{1.7, 1.0};
    for (int k = 0; k < 100; ++k) {
        const TorusCoords c{um(rng), uphi(rng)};
        const TorusCoords back = to_torus_coords(analytic_trajectory(c, flow, 0.0), flow);
        CHECK(std::abs(back.m - c.m) < 1e-10);
        CHECK(std::abs(std::remainder(back.phi - c.phi, 2.0 * kPi)) < 1e-10);
    }
}

TEST_CASE("torus coordinates at special points") {
    const Flow flow{1.5, 1.0};
    const auto fp = fixed_points(flow);
    CHECK(to_torus_coords(CoherentLabel::north(fp.mu_minus), flow).m == doctest::Approx(1.0));
    CHECK(to_torus_coords(CoherentLabel::north(fp.mu_plus), flow).m == doctest::Approx(-1.0));
    // |w| = 1 on the central torus: a point equidistant from both fixed points.
    const CoherentLabel c = analytic_trajectory({0.0, 1.0}, flow, 0.0);
    const cplx w = (c.mu() - fp.mu_plus) / (c.mu() - fp.mu_minus);
    CHECK(std::abs(w) == doctest::Approx(1.0));
    CHECK(std::abs(to_torus_coords(c, flow).m) < 1e-12);
    CHECK_THROWS_AS(to_torus_coords(CoherentLabel::north(0.1), Flow{1.0, 1.0}), Critical);
}

TEST_CASE("torus label is conserved along the noiseless flow") {
    std::mt19937_64 rng(9);
    for (double l : {1.05, 1.5, 3.0}) {
        const Flow flow{l, 1.0};
        for (int k = 0; k < 5; ++k) {
            const CoherentLabel start = CoherentLabel::north(oracle::random_label(rng)).canonical();
            const double m0 = to_torus_coords(start, flow).m;
            double worst = 0.0;
            integrate_flow_rk4(start, flow, 10.0, 1e-3, [&](double, const CoherentLabel& x) {
                worst = std::max(worst, std::abs(to_torus_coords(x, flow).m - m0));
            });
            CHECK(worst < 1e-8);
        }
    }
}

TEST_CASE("torus states") {
    const auto spin = SpinQuantum::from_j(8);
    const Flow flow = Flow::thermodynamic(1.5);
    const auto fp = fixed_points(flow);
    const auto ops = build_operators(spin);

    SUBCASE("fixed tori are pure coherent states") {
        const Matrix rp = torus_state(-1.0, flow, spin);
        const Matrix rm = torus_state(1.0, flow, spin);
        const Vector vp = oracle::coherent_by_series(spin, fp.mu_plus);
        const Vector vm = oracle::coherent_by_series(spin, fp.mu_minus);
        CHECK(matrix_max_abs(rp - vp * vp.adjoint()) < 1e-12);
        CHECK(matrix_max_abs(rm - vm * vm.adjoint()) < 1e-12);
    }
    SUBCASE("vanishing Jz, unit trace, Hermitian, mirror pairs") {
        for (double m : {-0.7, -0.2, 0.0, 0.4, 0.9}) {
            const Matrix rho = torus_state(m, flow, spin);
            CHECK(std::abs(rho.trace() - 1.0) < 1e-12);
            CHECK(matrix_max_abs(rho - rho.adjoint()) < 1e-14);
            CHECK(std::abs(expectation(ops.jz, rho)) < 1e-10);
            CHECK(matrix_max_abs(mirror_rho(rho) - torus_state(-m, flow, spin)) < 1e-10);
        }
    }
    SUBCASE("quadrature has converged at the default node count") {
        CHECK(matrix_max_abs(torus_state(0.3, flow, spin) - torus_state(0.3, flow, spin, 1024)) < 1e-12);
    }
    CHECK_THROWS_AS(torus_state(0.0, Flow{0.9, 1.0}, spin), NotCyclic);
}

TEST_CASE("torus states become stationary relative to the generator scale") {
    // ||L rho_m||_1 stays O(kappa): diffusion across the orbit acts on a width
    // 1/sqrt(j). Against the O(kappa j) scale of L the residual falls as 1/j.
    std::vector<double> scaled;
    for (double j : {10.0, 20.0, 40.0, 80.0}) {
        const auto spin = SpinQuantum::from_j(j);
        const auto p = ModelParams::from_lambda(spin, 1.5);
        const Liouvillian L(p);
        const Matrix rho = torus_state(0.4, Flow::from_params(p), spin);
        const double rel = trace_norm(L.apply(rho)) / (p.kappa * j);
        scaled.push_back(rel * j);
        CHECK(rel < 2.0 / j);
    }
    // A coherent state off the fixed points is not stationary at any scale.
    const auto spin = SpinQuantum::from_j(40);
    const auto p = ModelParams::from_lambda(spin, 1.5);
    const Liouvillian L(p);
    CHECK(trace_norm(L.apply(coherent_projector(spin, CoherentLabel::north(0.0)))) / (p.kappa * 40.0) > 0.05);
    CHECK(*std::max_element(scaled.begin(), scaled.end()) < 1.5 * *std::min_element(scaled.begin(), scaled.end()));
}

TEST_CASE("order parameter asymptote") {
    CHECK(jz_asymptote(0.0) == 1.0);
    CHECK(jz_asymptote(0.6) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(jz_asymptote(1.0) == 0.0);
    CHECK(jz_asymptote(1.7) == 0.0);
}

TEST_CASE("torus distribution") {
    const auto gl = gauss_legendre(128);
    for (double lambda : {1.01, 1.5, 3.0, 20.0}) {
        double norm = 0.0;
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) norm += gl.weights[i] * torus_distribution_pdf(gl.nodes[i], lambda);
        CHECK(std::abs(norm - 1.0) < 1e-10);
        for (double m : {0.0, 0.3, 0.77, 1.0}) {
            CHECK(torus_distribution_pdf(m, lambda) == torus_distribution_pdf(-m, lambda));
        }
        CHECK(torus_distribution_cdf(-1.0, lambda) == doctest::Approx(0.0));
        CHECK(torus_distribution_cdf(0.0, lambda) == doctest::Approx(0.5));
        CHECK(torus_distribution_cdf(1.0, lambda) == doctest::Approx(1.0));
        // CDF is the integral of the pdf.
        for (double m : {-0.6, 0.1, 0.85}) {
            const double h = 1e-5;
            const double d = (torus_distribution_cdf(m + h, lambda) - torus_distribution_cdf(m - h, lambda)) / (2 * h);
            CHECK(d == doctest::Approx(torus_distribution_pdf(m, lambda)).epsilon(1e-7));
        }
    }
}

TEST_CASE("torus distribution sampler passes a Kolmogorov-Smirnov check") {
    const double lambda = 1.2;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> xs(1'000'000);
    for (auto& x : xs) x = torus_distribution_sample(u(rng), lambda);
    std::sort(xs.begin(), xs.end());
    double ks = 0.0;
    const auto n = static_cast<double>(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double c = torus_distribution_cdf(xs[k], lambda);
        ks = std::max({ks, std::abs(c - k / n), std::abs(c - (k + 1) / n)});
    }
    INFO("KS distance " << ks);
    CHECK(ks <= 2e-3);
    CHECK(xs.front() >= -1.0);
    CHECK(xs.back() <= 1.0);
}

TEST_CASE("mixed steady state") {
    const auto spin = SpinQuantum::from_j(10);
    const Matrix rho = mixed_steady_state(1.5, spin);
    const auto ops = build_operators(spin);
    CHECK(std::abs(rho.trace() - 1.0) < 1e-12);
    CHECK(matrix_max_abs(rho - rho.adjoint()) < 1e-14);
    CHECK(std::abs(expectation(ops.jz, rho)) < 1e-10);
    CHECK(matrix_max_abs(mirror_rho(rho) - rho) < 1e-10);
    CHECK_THROWS_AS(mixed_steady_state(1.0, spin), NotCyclic);
}

TEST_CASE("mixed steady state approaches the exact steady state") {
    std::vector<double> dist;
    for (double j : {25.0, 50.0, 100.0}) {
        const auto spin = SpinQuantum::from_j(j);
        const Liouvillian L(ModelParams::from_lambda(spin, 1.5));
        dist.push_back(trace_distance(steady_state(L).rho, mixed_steady_state(1.5, spin)));
    }
    CHECK(dist[1] < dist[0]);
    CHECK(dist[2] < dist[1]);
    CHECK(dist[2] < 0.02);
}

TEST_CASE("variance asymptote") {
    SUBCASE("label quadrature reproduces the closed form") {
        for (double lambda : {1.1, 1.5, 2.5}) {
            const double q = mixed_jz2_label_quadrature(lambda);
            CHECK(std::abs(q / variance_asymptote(lambda) - 1.0) < 1e-3);
        }
    }
    SUBCASE("finite-j second moment carries a 1/j correction") {
        double prev = 1.0;
        for (double j : {25.0, 50.0, 100.0, 400.0}) {
            const double gap = std::abs(mixed_jz2_at_spin(1.5, SpinQuantum::from_j(j)) - variance_asymptote(1.5));
            CHECK(gap < prev);
            CHECK(gap * j < 0.5);
            prev = gap;
        }
    }
    SUBCASE("agrees with the density-matrix construction") {
        const auto spin = SpinQuantum::from_j(12);
        const auto ops = build_operators(spin);
        const Matrix rho = mixed_steady_state(1.5, spin);
        const double jz2 = expectation(ops.jz * ops.jz, rho).real() / (12.0 * 12.0);
        CHECK(jz2 == doctest::Approx(mixed_jz2_at_spin(1.5, spin)).epsilon(1e-9));
    }
    SUBCASE("limits") {
        CHECK(std::abs(variance_asymptote(1e3) * 3.0 - 1.0) < 1e-3);
        double prev = 1.0;
        for (double eps : {1e-2, 1e-4, 1e-6, 1e-8}) {
            const double v = variance_asymptote(1.0 + eps);
            CHECK(v < prev);
            prev = v;
        }
        CHECK(prev < 1e-6);
        // Leading behaviour -eps ln eps: the ratio settles to a constant.
        const auto ratio = [](double eps) { return variance_asymptote(1.0 + eps) / (-eps * std::log(eps)); };
        CHECK(std::abs(ratio(1e-7) / ratio(1e-8) - 1.0) < 0.1);
    }
    CHECK_THROWS_AS(variance_asymptote(1.0), std::domain_error);
    CHECK_THROWS_AS(variance_asymptote(0.5), std::domain_error);
}

TEST_CASE("relaxation time") {
    CHECK(relaxation_time(0.0) == doctest::Approx(1.0));
    CHECK(relaxation_time(0.0, 2.0) == doctest::Approx(0.5));
    CHECK(relaxation_time(std::sqrt(2.0)) == doctest::Approx(1.0));
    // |1 - (1 +- 1e-6)^2|^{-1/2} = (2e-6)^{-1/2} ~ 707.1
    CHECK(relaxation_time(1.0 + 1e-6) == doctest::Approx(1.0 / std::sqrt(2e-6 + 1e-12)).epsilon(1e-9));
    CHECK(relaxation_time(1.0 - 1e-6) == doctest::Approx(1.0 / std::sqrt(2e-6 - 1e-12)).epsilon(1e-9));
    // Divergence exponent 1/2.
    const double slope = std::log(relaxation_time(1.0 + 1e-5) / relaxation_time(1.0 + 1e-3)) / std::log(1e-2);
    CHECK(slope == doctest::Approx(-0.5).epsilon(1e-3));
    CHECK_THROWS_AS(relaxation_time(1.0), Critical);
}

TEST_CASE("Gauss-Legendre rule") {
    for (int n : {1, 2, 5, 16, 128}) {
        const auto gl = gauss_legendre(n);
        REQUIRE(gl.nodes.size() == static_cast<std::size_t>(n));
        for (int deg = 0; deg <= std::min(2 * n - 1, 40); ++deg) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += gl.weights[i] * std::pow(gl.nodes[i], deg);
            const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
            CHECK(std::abs(s - exact) < 1e-13);
        }
    }
}
