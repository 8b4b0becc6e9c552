// analytic.hpp: Closed-form results for the noiseless flow and the large-j limit
//
// The noiseless label flow is the Riccati equation
//
//   dmu/dt = -i (omega/2)(1 - mu^2) - kt mu
//
// with fixed points mu_pm = -i (kt/omega)(1 +- sqrt(1 - l^2)), l = omega/kt.
// In the Moebius coordinate w = (mu - mu_+)/(mu - mu_-) the flow is linear,
// w(t) = w(0) exp(kt sqrt(1 - l^2) t), and |w|^2 = (1+m)/(1-m) defines the
// torus label m, conserved when l > 1.

#pragma once

#include "spinqsd/liouvillian.hpp"
#include "spinqsd/model.hpp"

#include <functional>
#include <vector>

namespace spinqsd {

// Coefficients of the noiseless flow.
struct Flow {
    double omega = 1.0;
    double kappa_tilde = 1.0;

    // Finite-j flow followed by the noiseless QSD label.
    static Flow from_params(const ModelParams& p) { return {p.omega, p.kappa_tilde()}; }
    // Large-j flow at lambda = omega/kappa with kt -> kappa (kappa = 1).
    static Flow thermodynamic(double lambda) { return {lambda, 1.0}; }

    double ratio() const { return omega / kappa_tilde; }
};

struct FixedPoints {
    cplx mu_plus;
    cplx mu_minus;
};

struct TorusCoords {
    double m = 0.0;   // |m| <= 1; m = +1 is mu_-, m = -1 is mu_+
    double phi = 0.0; // radians
};

// Throws DegenerateDrive for omega = 0.
FixedPoints fixed_points(const Flow& flow);

cplx deterministic_rhs(cplx mu, const Flow& flow);
// Same flow in the South chart, nu = 1/mu.
cplx deterministic_rhs_south(cplx nu, const Flow& flow);

// Complex rate r with w(t) = w(0) e^{r t}: i kt sqrt(l^2 - 1) for l > 1,
// and kt sqrt(1 - l^2) > 0 for l < 1, so that generic orbits approach mu_-.
cplx moebius_rate(const Flow& flow);

// Closed-form label at time t from torus coordinates at t = 0.
// Throws Critical at l = 1.
CoherentLabel analytic_trajectory(const TorusCoords& coords0, const Flow& flow, double t);

// 2 pi / (kt sqrt(l^2 - 1)); NotCyclic for l <= 1.
double torus_period(const Flow& flow);

// Inverse of analytic_trajectory at t = 0. At a fixed point returns m = -1 (mu_+)
// or m = +1 (mu_-) with phi = 0. Throws Critical at l = 1.
TorusCoords to_torus_coords(const CoherentLabel& label, const Flow& flow);

// Fixed-step RK4 for the noiseless flow, switching chart at |value| > 4.
// Returns the label at each step boundary; `observer`, if set, sees every step.
CoherentLabel integrate_flow_rk4(CoherentLabel start, const Flow& flow, double t_final, double dt,
                                 const std::function<void(double, const CoherentLabel&)>& observer = {});

// Jacobian of the flow at a fixed point (complex eigenvalue of the linearization).
cplx linearized_rate(cplx mu_fixed, const Flow& flow);

// ---------------------------------------------------------------------------
// Torus states and their mixture

struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussLegendre gauss_legendre(int n);

// Time average of |mu_m(t)><mu_m(t)| over one period: uniform trapezoid in phi.
DensityMatrix torus_state(double m, const Flow& flow, SpinQuantum spin, int n_quad = 512);

// Orbit averages of nz and nz^2 (label level, no density matrix).
struct TorusMoments {
    double mean_nz;
    double mean_nz2;
};
TorusMoments torus_moments(double m, const Flow& flow, int n_quad = 512);

// sqrt(1 - l^2) for l < 1, else 0.
double jz_asymptote(double lambda);

// Stationary density of the torus label and its inverse-CDF sampler.
double torus_distribution_pdf(double m, double lambda);
double torus_distribution_cdf(double m, double lambda);
double torus_distribution_sample(double u, double lambda);

// Integral of P(m) rho_m dm at the large-j flow; NotCyclic for lambda <= 1.
DensityMatrix mixed_steady_state(double lambda, SpinQuantum spin, int n_quad_m = 128, int n_quad_phi = 512);

// Integral of P(m) <nz^2>_m dm, optionally with the coherent-state correction
// (1 - nz^2)/(2j) when spin is given (the value of Tr(Jz^2 rho_SS)/j^2).
double mixed_jz2_label_quadrature(double lambda, int n_quad_m = 128, int n_quad_phi = 512);
double mixed_jz2_at_spin(double lambda, SpinQuantum spin, int n_quad_m = 128, int n_quad_phi = 512);

// Large-j Jz variance / j^2 for lambda > 1; std::domain_error otherwise.
double variance_asymptote(double lambda);

// |1 - lambda^2|^{-1/2} / kappa; Critical at lambda = 1.
double relaxation_time(double lambda, double kappa = 1.0);

} // namespace spinqsd
