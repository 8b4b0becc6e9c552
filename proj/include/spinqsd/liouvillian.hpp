// liouvillian.hpp: GKSL generator, time evolution and steady state at finite j
//
// Density matrices are vectorized column-major, so A rho B maps to
// kron(B^T, A) acting on vec(rho).

#pragma once

#include "spinqsd/model.hpp"

#include <Eigen/SparseLU>

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace spinqsd {

// (2j+1)x(2j+1) Hermitian, unit-trace matrix in the Dicke basis.
using DensityMatrix = Matrix;

Vector vectorize(const Matrix& rho);
Matrix unvectorize(const Vector& v, Eigen::Index dim);

// (rho + rho^dagger)/2 scaled to unit trace.
DensityMatrix hermitize_normalize(const Matrix& rho);

// Largest |entry| of rho - rho^dagger and |Tr rho - 1|, and the smallest eigenvalue.
struct DensityCheck {
    double hermiticity_defect;
    double trace_defect;
    double min_eigenvalue;
};
DensityCheck check_density(const DensityMatrix& rho);

double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

// Default cap on (2j+1)^2; roughly j = 350.
inline constexpr std::size_t kDefaultMaxSuperDim = 500'000;

class Liouvillian {
public:
    explicit Liouvillian(const ModelParams& params, std::size_t max_super_dim = kDefaultMaxSuperDim);

    const ModelParams& params() const { return params_; }
    const SparseMatrix& matrix() const { return mat_; }
    const SparseSpinOperators& operators() const { return ops_; }
    Eigen::Index dim() const { return params_.spin.dim(); }
    Eigen::Index super_dim() const { return mat_.rows(); }

    Vector apply(const Vector& vec_rho) const { return mat_ * vec_rho; }
    Matrix apply(const Matrix& rho) const;

    // Max absolute row sum, an upper bound on the spectral radius.
    double gershgorin_bound() const;

private:
    ModelParams params_;
    SparseSpinOperators ops_;
    SparseMatrix mat_;
};

Liouvillian build_liouvillian(const ModelParams& params, std::size_t max_super_dim = kDefaultMaxSuperDim);

// ---------------------------------------------------------------------------
// Time evolution

struct EvolveOptions {
    double dt = 0.0;                // 0 selects min(1e-2/kappa, 1e-2/omega, 2.5/gershgorin)
    double max_trace_drift = 1e-10; // per step; larger drift halves the step
};

// Classical RK4 on vec(rho). Returns rho at each of the (non-decreasing,
// non-negative) sample times; samples are hermitized and trace-renormalized.
std::vector<DensityMatrix> evolve(const Liouvillian& L, const DensityMatrix& rho0,
                                  std::span<const double> sample_times, const EvolveOptions& opts = {});

double default_time_step(const Liouvillian& L);

// ---------------------------------------------------------------------------
// Steady state

struct SteadyStateOptions {
    double shift = 1e-8;            // sigma in units of kappa
    double residual_tol = 1e-10;    // ||L v|| / ||v||
    int max_iterations = 30;
    bool check_degeneracy = true;   // run shift-invert Arnoldi for the second eigenvalue
    int krylov_dim = 30;
    double ambiguity_tol = 1e-7;    // |lambda_2| below this (units of kappa) raises AmbiguousNull
    std::size_t dense_below = 256;  // super dimension under which a dense LU is used
};

struct SteadyStateResult {
    DensityMatrix rho;
    double residual = 0.0;
    int iterations = 0;
    bool used_arnoldi_fallback = false;
    // Eigenvalues of L nearest zero, null eigenvalue first (empty if not computed).
    std::vector<cplx> low_spectrum;
    // Slowest decay rate among low_spectrum (excluding the null eigenvalue); NaN if not computed.
    double spectral_gap = 0.0;
};

// Factorizes L - sigma*I once; supports the null vector and the low-lying spectrum.
class SteadyStateSolver {
public:
    explicit SteadyStateSolver(const Liouvillian& L, SteadyStateOptions opts = {});
    ~SteadyStateSolver();
    SteadyStateSolver(const SteadyStateSolver&) = delete;
    SteadyStateSolver& operator=(const SteadyStateSolver&) = delete;

    SteadyStateResult solve();

    // The `count` eigenvalues of L closest to zero, by shift-invert Arnoldi.
    std::vector<cplx> low_lying_spectrum(int count);

private:
    Vector shifted_solve(const Vector& rhs) const;
    struct ArnoldiResult {
        std::vector<cplx> eigenvalues; // of L, ascending |lambda|
        std::vector<Vector> vectors;
    };
    // With `deflate` (a right null vector) the Krylov space is kept in the
    // complement of the null mode, and only the decaying modes are returned.
    ArnoldiResult arnoldi(int krylov_dim, bool want_vectors, const Vector* deflate = nullptr) const;
    // Inverse iteration from the maximally mixed state; returns the last iterate.
    Vector inverse_iteration(int& iterations, double& residual) const;

    const Liouvillian& L_;
    SteadyStateOptions opts_;
    struct Factorization;
    std::unique_ptr<Factorization> fact_;
};

SteadyStateResult steady_state(const Liouvillian& L, const SteadyStateOptions& opts = {});

// ---------------------------------------------------------------------------
// Observables and symmetry

struct Observables {
    double mean_jz;
    double var_jz;
    double mean_jx;
    double mean_jy;
    double purity;
};

Observables observables(const DensityMatrix& rho, SpinQuantum spin);

// Tr(A rho) for a dense operator.
cplx expectation(const Matrix& op, const DensityMatrix& rho);

// U conj(rho) U^dagger with U = exp(-i pi Jz): Jx -> -Jx plus complex conjugation.
DensityMatrix mirror_rho(const DensityMatrix& rho);

// Projector onto a coherent state.
DensityMatrix coherent_projector(SpinQuantum spin, const CoherentLabel& label);

} // namespace spinqsd
