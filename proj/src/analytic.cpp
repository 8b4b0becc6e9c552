// analytic.cpp: Exact noiseless flow, torus states and large-j formulas

#include "spinqsd/analytic.hpp"

#include "spinqsd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace spinqsd {

namespace {

constexpr cplx kI{0.0, 1.0};
constexpr double kPi = std::numbers::pi;

void require_not_critical(const Flow& flow, const char* who) {
    if (flow.ratio() == 1.0) throw Critical(std::string(who) + ": flow is critical (omega = kappa_tilde)");
}

void require_cyclic(const Flow& flow, const char* who) {
    if (!(flow.ratio() > 1.0)) throw NotCyclic(std::string(who) + ": no closed orbits for omega <= kappa_tilde");
}

// Homogeneous coordinates (A, B) of the Moebius parameter w = A/B, scaled so
// that max(|A|, |B|) = 1.
std::pair<cplx, double> torus_homogeneous(const TorusCoords& c, cplx rate, double t) {
    const double m = std::clamp(c.m, -1.0, 1.0);
    const double log_a = 0.5 * std::log1p(m) + rate.real() * t;
    const double log_b = 0.5 * std::log1p(-m);
    const double top = std::max(log_a, log_b);
    const double mag_a = std::exp(log_a - top);
    const double mag_b = std::exp(log_b - top);
    return {std::polar(mag_a, c.phi + rate.imag() * t), mag_b};
}

// mu = (mu_- A - mu_+ B)/(A - B), reported in the chart where |value| <= 1.
CoherentLabel label_from_homogeneous(cplx a, double b, const FixedPoints& fp) {
    const cplx num = fp.mu_minus * a - fp.mu_plus * b;
    const cplx den = a - b;
    if (std::abs(num) <= std::abs(den)) return CoherentLabel::north(num / den);
    return CoherentLabel::south(den / num);
}

double atanh_inv_sqrt(double lambda) {
    // atanh((1 + 2 l^2)^{-1/2})
    return std::atanh(1.0 / std::sqrt(1.0 + 2.0 * lambda * lambda));
}

} // namespace

FixedPoints fixed_points(const Flow& flow) {
    if (!(flow.omega > 0.0)) throw DegenerateDrive("fixed_points: omega = 0 leaves only mu = 0");
    const double l = flow.ratio();
    const cplx s = std::sqrt(cplx(1.0 - l * l, 0.0));
    const cplx pre = -kI * (flow.kappa_tilde / flow.omega);
    return {pre * (1.0 + s), pre * (1.0 - s)};
}

cplx deterministic_rhs(cplx mu, const Flow& flow) {
    return -kI * (0.5 * flow.omega) * (1.0 - mu * mu) - flow.kappa_tilde * mu;
}

cplx deterministic_rhs_south(cplx nu, const Flow& flow) {
    return kI * (0.5 * flow.omega) * (nu * nu - 1.0) + flow.kappa_tilde * nu;
}

cplx moebius_rate(const Flow& flow) {
    const double l = flow.ratio();
    return flow.kappa_tilde * std::sqrt(cplx(1.0 - l * l, 0.0));
}

cplx linearized_rate(cplx mu_fixed, const Flow& flow) {
    return kI * flow.omega * mu_fixed - flow.kappa_tilde;
}

CoherentLabel analytic_trajectory(const TorusCoords& coords0, const Flow& flow, double t) {
    if (std::abs(coords0.m) > 1.0) throw std::invalid_argument("analytic_trajectory: |m| must be <= 1");
    require_not_critical(flow, "analytic_trajectory");
    const FixedPoints fp = fixed_points(flow);
    const auto [a, b] = torus_homogeneous(coords0, moebius_rate(flow), t);
    return label_from_homogeneous(a, b, fp);
}

double torus_period(const Flow& flow) {
    require_cyclic(flow, "torus_period");
    const double l = flow.ratio();
    return 2.0 * kPi / (flow.kappa_tilde * std::sqrt(l * l - 1.0));
}

TorusCoords to_torus_coords(const CoherentLabel& label, const Flow& flow) {
    require_not_critical(flow, "to_torus_coords");
    const FixedPoints fp = fixed_points(flow);
    cplx num, den;
    if (label.chart() == Chart::North) {
        num = label.value() - fp.mu_plus;
        den = label.value() - fp.mu_minus;
    } else {
        num = 1.0 - fp.mu_plus * label.value();
        den = 1.0 - fp.mu_minus * label.value();
    }
    const double a = std::norm(num), b = std::norm(den);
    if (b == 0.0) return {1.0, 0.0};
    if (a == 0.0) return {-1.0, 0.0};
    return {(a - b) / (a + b), std::arg(num * std::conj(den))};
}

CoherentLabel integrate_flow_rk4(CoherentLabel start, const Flow& flow, double t_final, double dt,
                                 const std::function<void(double, const CoherentLabel&)>& observer) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_flow_rk4: dt must be > 0");
    CoherentLabel x = std::abs(start.value()) > kChartRadius ? start.canonical() : start;
    if (observer) observer(0.0, x);
    const auto steps = static_cast<long long>(std::ceil(t_final / dt - 1e-9));
    for (long long n = 0; n < steps; ++n) {
        const double t0 = n * dt;
        const double h = std::min(dt, t_final - t0);
        const bool north = x.chart() == Chart::North;
        auto f = [&](cplx z) { return north ? deterministic_rhs(z, flow) : deterministic_rhs_south(z, flow); };
        const cplx z = x.value();
        const cplx k1 = f(z);
        const cplx k2 = f(z + 0.5 * h * k1);
        const cplx k3 = f(z + 0.5 * h * k2);
        const cplx k4 = f(z + h * k3);
        x = CoherentLabel(z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), x.chart());
        if (std::abs(x.value()) > kChartRadius) x = north ? x.to_south() : x.to_north();
        if (observer) observer(t0 + h, x);
    }
    return x;
}

// ---------------------------------------------------------------------------

GaussLegendre gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    // Returns (P_n(x), P_n'(x)) by the three-term recurrence.
    auto legendre = [n](double x) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
    };
    GaussLegendre g;
    g.nodes.resize(n);
    g.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            const auto [p, dp] = legendre(x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = legendre(x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        g.nodes[i] = -x;
        g.nodes[n - 1 - i] = x;
        g.weights[i] = w;
        g.weights[n - 1 - i] = w;
    }
    return g;
}

namespace {

// Columns: coherent states along the orbit of m, scaled by sqrt(weight/n_quad).
Matrix orbit_states(double m, const Flow& flow, SpinQuantum spin, int n_quad, double weight) {
    const FixedPoints fp = fixed_points(flow);
    Matrix cols(spin.dim(), n_quad);
    const double scale = std::sqrt(weight / n_quad);
    for (int k = 0; k < n_quad; ++k) {
        const TorusCoords c{m, 2.0 * kPi * k / n_quad};
        const auto [a, b] = torus_homogeneous(c, cplx{0.0, 0.0}, 0.0);
        cols.col(k) = scale * coherent_state(spin, label_from_homogeneous(a, b, fp));
    }
    return cols;
}

} // namespace

DensityMatrix torus_state(double m, const Flow& flow, SpinQuantum spin, int n_quad) {
    require_cyclic(flow, "torus_state");
    if (std::abs(m) > 1.0) throw std::invalid_argument("torus_state: |m| must be <= 1");
    if (n_quad < 1) throw std::invalid_argument("torus_state: n_quad must be >= 1");
    const Matrix psi = orbit_states(m, flow, spin, n_quad, 1.0);
    Matrix rho = psi * psi.adjoint();
    return 0.5 * (rho + rho.adjoint());
}

TorusMoments torus_moments(double m, const Flow& flow, int n_quad) {
    require_cyclic(flow, "torus_moments");
    const FixedPoints fp = fixed_points(flow);
    double s1 = 0.0, s2 = 0.0;
    for (int k = 0; k < n_quad; ++k) {
        const auto [a, b] = torus_homogeneous({m, 2.0 * kPi * k / n_quad}, cplx{0.0, 0.0}, 0.0);
        const double nz = bloch_vector(label_from_homogeneous(a, b, fp))[2];
        s1 += nz;
        s2 += nz * nz;
    }
    return {s1 / n_quad, s2 / n_quad};
}

double jz_asymptote(double lambda) {
    if (!(lambda >= 0.0)) throw std::domain_error("jz_asymptote: lambda must be >= 0");
    return lambda < 1.0 ? std::sqrt(1.0 - lambda * lambda) : 0.0;
}

double torus_distribution_pdf(double m, double lambda) {
    if (!(lambda > 0.0)) throw std::domain_error("torus_distribution_pdf: lambda must be > 0");
    if (std::abs(m) > 1.0) return 0.0;
    const double a2 = 1.0 + 2.0 * lambda * lambda;
    return 0.5 * std::sqrt(a2) / atanh_inv_sqrt(lambda) / (a2 - m * m);
}

double torus_distribution_cdf(double m, double lambda) {
    if (!(lambda > 0.0)) throw std::domain_error("torus_distribution_cdf: lambda must be > 0");
    if (m <= -1.0) return 0.0;
    if (m >= 1.0) return 1.0;
    const double a = std::sqrt(1.0 + 2.0 * lambda * lambda);
    const double c = atanh_inv_sqrt(lambda);
    return (std::atanh(m / a) + c) / (2.0 * c);
}

double torus_distribution_sample(double u, double lambda) {
    if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("torus_distribution_sample: u must lie in [0, 1]");
    const double a = std::sqrt(1.0 + 2.0 * lambda * lambda);
    return a * std::tanh((2.0 * u - 1.0) * atanh_inv_sqrt(lambda));
}

DensityMatrix mixed_steady_state(double lambda, SpinQuantum spin, int n_quad_m, int n_quad_phi) {
    const Flow flow = Flow::thermodynamic(lambda);
    require_cyclic(flow, "mixed_steady_state");
    const GaussLegendre gl = gauss_legendre(n_quad_m);
    Matrix psi(spin.dim(), static_cast<Eigen::Index>(n_quad_m) * n_quad_phi);
    for (int i = 0; i < n_quad_m; ++i) {
        const double w = gl.weights[i] * torus_distribution_pdf(gl.nodes[i], lambda);
        psi.middleCols(static_cast<Eigen::Index>(i) * n_quad_phi, n_quad_phi) =
            orbit_states(gl.nodes[i], flow, spin, n_quad_phi, w);
    }
    const Matrix rho = psi * psi.adjoint();
    return hermitize_normalize(rho);
}

double mixed_jz2_label_quadrature(double lambda, int n_quad_m, int n_quad_phi) {
    const Flow flow = Flow::thermodynamic(lambda);
    require_cyclic(flow, "mixed_jz2_label_quadrature");
    const GaussLegendre gl = gauss_legendre(n_quad_m);
    double acc = 0.0;
    for (int i = 0; i < n_quad_m; ++i) {
        acc += gl.weights[i] * torus_distribution_pdf(gl.nodes[i], lambda) *
               torus_moments(gl.nodes[i], flow, n_quad_phi).mean_nz2;
    }
    return acc;
}

double mixed_jz2_at_spin(double lambda, SpinQuantum spin, int n_quad_m, int n_quad_phi) {
    const double nz2 = mixed_jz2_label_quadrature(lambda, n_quad_m, n_quad_phi);
    return nz2 + (1.0 - nz2) / (2.0 * spin.j());
}

double variance_asymptote(double lambda) {
    if (!(lambda > 1.0)) throw std::domain_error("variance_asymptote: defined for lambda > 1");
    const double l2m1 = (lambda - 1.0) * (lambda + 1.0);
    const double a2 = 1.0 + 2.0 * lambda * lambda;
    // y = sqrt(3/a2) -> 1 as lambda -> 1; evaluate atanh(y) from 1 - y^2 = 2(l^2-1)/a2.
    const double y = std::sqrt(3.0 / a2);
    const double one_minus_y = (2.0 * l2m1 / a2) / (1.0 + y);
    const double atanh_y = 0.5 * std::log((1.0 + y) / one_minus_y);
    return l2m1 * (atanh_y / (std::sqrt(3.0) * atanh_inv_sqrt(lambda)) - 1.0);
}

double relaxation_time(double lambda, double kappa) {
    if (lambda == 1.0) throw Critical("relaxation_time: diverges at lambda = 1");
    return 1.0 / (std::sqrt(std::abs(1.0 - lambda * lambda)) * kappa);
}

} // namespace spinqsd
