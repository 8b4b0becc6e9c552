// liouvillian.cpp: Superoperator assembly, RK4 propagation, null-space solver

#include "spinqsd/liouvillian.hpp"

#include "spinqsd/errors.hpp"
#include "spinqsd/random.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace spinqsd {

namespace {

SparseMatrix sparse_identity(Eigen::Index n) {
    SparseMatrix id(n, n);
    id.setIdentity();
    return id;
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
    SparseMatrix out = Eigen::kroneckerProduct(a, b).eval();
    out.makeCompressed();
    return out;
}

// vec(A rho) and vec(rho A).
SparseMatrix left_mult(const SparseMatrix& a, const SparseMatrix& id) { return kron(id, a); }
SparseMatrix right_mult(const SparseMatrix& a, const SparseMatrix& id) {
    return kron(SparseMatrix(a.transpose()), id);
}

// (kappa/j) (A rho A^dag - 1/2 {A^dag A, rho})
SparseMatrix dissipator(const SparseMatrix& a, const SparseMatrix& id, double rate) {
    const SparseMatrix ad = a.adjoint();
    const SparseMatrix ada = ad * a;
    SparseMatrix out = kron(SparseMatrix(a.conjugate()), a);
    out -= 0.5 * left_mult(ada, id);
    out -= 0.5 * right_mult(ada, id);
    return rate * out;
}

double trace_of_vec(const Vector& v, Eigen::Index dim) {
    cplx t{0.0, 0.0};
    for (Eigen::Index k = 0; k < dim; ++k) t += v(k * (dim + 1));
    return t.real();
}

} // namespace

Vector vectorize(const Matrix& rho) {
    return Eigen::Map<const Vector>(rho.data(), rho.size());
}

Matrix unvectorize(const Vector& v, Eigen::Index dim) {
    if (v.size() != dim * dim) throw std::invalid_argument("unvectorize: size mismatch");
    return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

DensityMatrix hermitize_normalize(const Matrix& rho) {
    Matrix h = 0.5 * (rho + rho.adjoint());
    const double tr = h.trace().real();
    if (!(std::abs(tr) > 0.0)) throw std::domain_error("hermitize_normalize: zero trace");
    return h / tr;
}

DensityCheck check_density(const DensityMatrix& rho) {
    DensityCheck c{};
    c.hermiticity_defect = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    c.trace_defect = std::abs(rho.trace() - cplx(1.0, 0.0));
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    c.min_eigenvalue = es.eigenvalues().minCoeff();
    return c;
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    const Matrix d = a - b;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// ---------------------------------------------------------------------------

Liouvillian::Liouvillian(const ModelParams& params, std::size_t max_super_dim) : params_(params) {
    params_.validate();
    const auto d = static_cast<std::size_t>(params_.spin.dim());
    if (d * d > max_super_dim) {
        throw DimensionOverflow("Liouvillian: (2j+1)^2 = " + std::to_string(d * d) + " exceeds budget " +
                                std::to_string(max_super_dim));
    }
    ops_ = build_sparse_operators(params_.spin);
    const SparseMatrix id = sparse_identity(params_.spin.dim());
    const double rate = params_.kappa / params_.j();

    const SparseMatrix h = params_.omega * ops_.jx + params_.omega_z * ops_.jz;
    mat_ = cplx(0.0, -1.0) * (left_mult(h, id) - right_mult(h, id));
    mat_ += dissipator(ops_.jplus, id, rate);
    mat_ += dissipator(ops_.jz, id, rate);
    mat_.prune(cplx(0.0, 0.0));
    mat_.makeCompressed();
}

Matrix Liouvillian::apply(const Matrix& rho) const {
    return unvectorize(mat_ * vectorize(rho), dim());
}

double Liouvillian::gershgorin_bound() const {
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(mat_.rows());
    for (Eigen::Index c = 0; c < mat_.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator it(mat_, c); it; ++it) rows(it.row()) += std::abs(it.value());
    }
    return rows.maxCoeff();
}

Liouvillian build_liouvillian(const ModelParams& params, std::size_t max_super_dim) {
    return Liouvillian(params, max_super_dim);
}

// ---------------------------------------------------------------------------

double default_time_step(const Liouvillian& L) {
    const auto& p = L.params();
    double dt = 1e-2 / p.kappa;
    if (p.omega > 0.0) dt = std::min(dt, 1e-2 / p.omega);
    const double g = L.gershgorin_bound();
    if (g > 0.0) dt = std::min(dt, 2.5 / g);
    return dt;
}

std::vector<DensityMatrix> evolve(const Liouvillian& L, const DensityMatrix& rho0,
                                  std::span<const double> sample_times, const EvolveOptions& opts) {
    const Eigen::Index d = L.dim();
    if (rho0.rows() != d || rho0.cols() != d) throw std::invalid_argument("evolve: rho0 has wrong dimension");
    if (!(opts.dt >= 0.0) || !std::isfinite(opts.dt)) throw std::invalid_argument("evolve: dt must be positive (or 0 for auto)");
    const DensityCheck chk = check_density(rho0);
    if (chk.hermiticity_defect > 1e-8 || chk.trace_defect > 1e-8) {
        throw std::invalid_argument("evolve: rho0 is not a Hermitian unit-trace matrix");
    }
    const double dt_nominal = opts.dt > 0.0 ? opts.dt : default_time_step(L);
    const SparseMatrix& m = L.matrix();

    std::vector<DensityMatrix> out;
    out.reserve(sample_times.size());
    Vector v = vectorize(rho0);
    Vector k1(v.size()), k2(v.size()), k3(v.size()), k4(v.size()), trial(v.size());
    double t = 0.0;
    double prev = 0.0;
    for (const double target : sample_times) {
        if (!(target >= prev)) throw std::invalid_argument("evolve: sample times must be non-negative and sorted");
        prev = target;
        while (t < target) {
            double h = std::min(dt_nominal, target - t);
            // Guard against a sliver step from rounding.
            if (target - t - h < 1e-12 * dt_nominal) h = target - t;
            const double tr0 = trace_of_vec(v, d);
            for (int attempt = 0;; ++attempt) {
                k1.noalias() = m * v;
                k2.noalias() = m * (v + 0.5 * h * k1);
                k3.noalias() = m * (v + 0.5 * h * k2);
                k4.noalias() = m * (v + h * k3);
                trial = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                const double drift = std::abs(trace_of_vec(trial, d) - tr0);
                if (drift <= opts.max_trace_drift || attempt >= 20) break;
                h *= 0.5;
            }
            v.swap(trial);
            t = (h == target - t) ? target : t + h;
        }
        out.push_back(hermitize_normalize(unvectorize(v, d)));
    }
    return out;
}

// ---------------------------------------------------------------------------

struct SteadyStateSolver::Factorization {
    bool dense = false;
    Eigen::PartialPivLU<Matrix> dense_lu;
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> sparse_lu;
};

SteadyStateSolver::SteadyStateSolver(const Liouvillian& L, SteadyStateOptions opts)
    : L_(L), opts_(opts), fact_(std::make_unique<Factorization>()) {
    const Eigen::Index n = L.super_dim();
    const double sigma = opts_.shift * L.params().kappa;
    SparseMatrix shifted = L.matrix() - sigma * sparse_identity(n);
    if (static_cast<std::size_t>(n) < opts_.dense_below) {
        fact_->dense = true;
        fact_->dense_lu.compute(Matrix(shifted));
    } else {
        shifted.makeCompressed();
        fact_->sparse_lu.analyzePattern(shifted);
        fact_->sparse_lu.factorize(shifted);
        if (fact_->sparse_lu.info() != Eigen::Success) {
            throw NonConvergence("sparse LU", fact_->sparse_lu.lastErrorMessage());
        }
    }
}

SteadyStateSolver::~SteadyStateSolver() = default;

Vector SteadyStateSolver::shifted_solve(const Vector& rhs) const {
    if (fact_->dense) return fact_->dense_lu.solve(rhs);
    Vector x = fact_->sparse_lu.solve(rhs);
    return x;
}

SteadyStateSolver::ArnoldiResult SteadyStateSolver::arnoldi(int krylov_dim, bool want_vectors,
                                                            const Vector* deflate) const {
    const Eigen::Index n = L_.super_dim();
    const int k = static_cast<int>(std::min<Eigen::Index>(krylov_dim, n));
    const double sigma = opts_.shift * L_.params().kappa;

    // Deterministic start vector with components along every mode.
    PhiloxStream rng(0x5eedULL, 0);
    Vector q(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto z = rng.normals4();
        q(i) = cplx(z[0], z[1]);
    }
    // v Tr(.)/Tr(v) is the spectral projector on the null mode, since the
    // identity is a left null vector of any trace-preserving generator.
    const Eigen::Index d = L_.dim();
    auto trace_of = [d](const Vector& x) {
        cplx t{0.0, 0.0};
        for (Eigen::Index i = 0; i < d; ++i) t += x(i * (d + 1));
        return t;
    };
    const cplx tr_null = deflate ? trace_of(*deflate) : cplx{1.0, 0.0};
    auto project = [&](Vector& x) {
        if (deflate) x -= (trace_of(x) / tr_null) * *deflate;
    };
    project(q);
    q.normalize();

    std::vector<Vector> basis;
    basis.reserve(k + 1);
    basis.push_back(q);
    Matrix h = Matrix::Zero(k + 1, k);
    int steps = 0;
    for (int col = 0; col < k; ++col) {
        Vector w = shifted_solve(basis[col]);
        project(w);
        for (int pass = 0; pass < 2; ++pass) {
            for (int row = 0; row <= col; ++row) {
                const cplx c = basis[row].dot(w);
                h(row, col) += c;
                w -= c * basis[row];
            }
        }
        const double beta = w.norm();
        h(col + 1, col) = beta;
        steps = col + 1;
        if (beta <= 1e-14 * h.col(col).norm()) break;
        basis.push_back(w / beta);
    }

    const Matrix hk = h.topLeftCorner(steps, steps);
    Eigen::ComplexEigenSolver<Matrix> es(hk, true);
    const double tail = std::abs(h(steps, steps - 1));

    struct Ritz {
        cplx lambda;
        Eigen::Index idx;
    };
    std::vector<Ritz> ritz;
    for (Eigen::Index i = 0; i < steps; ++i) {
        const cplx theta = es.eigenvalues()(i);
        if (std::abs(theta) == 0.0) continue;
        // Residual of the Ritz pair for the shift-inverted operator.
        const double res = tail * std::abs(es.eigenvectors()(steps - 1, i));
        if (res > 1e-6 * std::abs(theta)) continue;
        ritz.push_back({sigma + 1.0 / theta, i});
    }
    std::sort(ritz.begin(), ritz.end(), [](const Ritz& a, const Ritz& b) { return std::abs(a.lambda) < std::abs(b.lambda); });

    ArnoldiResult out;
    for (const auto& r : ritz) {
        out.eigenvalues.push_back(r.lambda);
        if (want_vectors) {
            Vector v = Vector::Zero(n);
            for (int c = 0; c < steps; ++c) v += es.eigenvectors()(c, r.idx) * basis[c];
            out.vectors.push_back(v.normalized());
        }
    }
    return out;
}

std::vector<cplx> SteadyStateSolver::low_lying_spectrum(int count) {
    int it = 0;
    double res = 0.0;
    const Vector v = inverse_iteration(it, res);
    auto ar = arnoldi(std::max(opts_.krylov_dim, count + 4), false, &v);
    std::vector<cplx> out{cplx{0.0, 0.0}};
    out.insert(out.end(), ar.eigenvalues.begin(), ar.eigenvalues.end());
    if (static_cast<int>(out.size()) > count) out.resize(count);
    return out;
}

Vector SteadyStateSolver::inverse_iteration(int& iterations, double& residual) const {
    const Eigen::Index d = L_.dim();
    const SparseMatrix& m = L_.matrix();
    auto relres = [&](const Vector& v) { return (m * v).norm() / v.norm(); };
    Vector v = vectorize(Matrix::Identity(d, d) / static_cast<double>(d));
    residual = relres(v);
    iterations = 0;
    double best = residual;
    while (residual > opts_.residual_tol && iterations < opts_.max_iterations) {
        v = shifted_solve(v);
        v /= v.norm();
        ++iterations;
        residual = relres(v);
        // Stalled: no progress over the last iteration.
        if (iterations > 3 && residual > 0.5 * best) break;
        best = std::min(best, residual);
    }
    return v;
}

SteadyStateResult SteadyStateSolver::solve() {
    const Eigen::Index d = L_.dim();
    const SparseMatrix& m = L_.matrix();
    auto relres = [&](const Vector& v) { return (m * v).norm() / v.norm(); };

    SteadyStateResult out;
    int it = 0;
    double res = 0.0;
    Vector v = inverse_iteration(it, res);

    if (res > opts_.residual_tol) {
        auto ar = arnoldi(opts_.krylov_dim, true);
        if (ar.vectors.empty()) throw NonConvergence("arnoldi", "no converged Ritz pair");
        v = ar.vectors.front();
        out.used_arnoldi_fallback = true;
        res = relres(v);
    }
    std::vector<cplx> spectrum;
    if (opts_.check_degeneracy) {
        spectrum.push_back(cplx{0.0, 0.0});
        const auto ar = arnoldi(opts_.krylov_dim, false, &v);
        spectrum.insert(spectrum.end(), ar.eigenvalues.begin(), ar.eigenvalues.end());
    }

    const cplx tr = [&] {
        cplx t{0.0, 0.0};
        for (Eigen::Index k = 0; k < d; ++k) t += v(k * (d + 1));
        return t;
    }();
    if (std::abs(tr) == 0.0) throw NonConvergence("normalization", "null vector is traceless");
    out.rho = hermitize_normalize(unvectorize(v / tr, d));
    out.residual = relres(vectorize(out.rho));
    out.iterations = it;
    if (out.residual > opts_.residual_tol) {
        throw NonConvergence(out.used_arnoldi_fallback ? "arnoldi" : "inverse iteration",
                             "residual " + std::to_string(out.residual) + " above tolerance");
    }

    out.spectral_gap = std::numeric_limits<double>::quiet_NaN();
    if (!spectrum.empty()) {
        out.low_spectrum = spectrum;
        if (spectrum.size() >= 2) {
            if (std::abs(spectrum[1]) < opts_.ambiguity_tol * L_.params().kappa) {
                throw AmbiguousNull("second eigenvalue |lambda_2| = " + std::to_string(std::abs(spectrum[1])) +
                                    " is numerically zero");
            }
            double gap = std::numeric_limits<double>::infinity();
            for (std::size_t i = 1; i < spectrum.size(); ++i) gap = std::min(gap, -spectrum[i].real());
            out.spectral_gap = gap;
        }
    }
    return out;
}

SteadyStateResult steady_state(const Liouvillian& L, const SteadyStateOptions& opts) {
    SteadyStateSolver solver(L, opts);
    return solver.solve();
}

// ---------------------------------------------------------------------------

Observables observables(const DensityMatrix& rho, SpinQuantum spin) {
    const int d = spin.dim();
    if (rho.rows() != d || rho.cols() != d) throw std::invalid_argument("observables: dimension mismatch");
    double mz = 0.0, mz2 = 0.0;
    for (int k = 0; k < d; ++k) {
        const double m = spin.m(k);
        const double p = rho(k, k).real();
        mz += m * p;
        mz2 += m * m * p;
    }
    cplx tp{0.0, 0.0}; // Tr(J+ rho) = <Jx> + i <Jy>
    for (int k = 1; k < d; ++k) tp += ladder_element(spin, spin.m(k)) * rho(k, k - 1);
    Observables o{};
    o.mean_jz = mz;
    o.var_jz = mz2 - mz * mz;
    o.mean_jx = tp.real();
    o.mean_jy = tp.imag();
    o.purity = (rho.cwiseProduct(rho.transpose())).sum().real();
    return o;
}

cplx expectation(const Matrix& op, const DensityMatrix& rho) {
    return (op.cwiseProduct(rho.transpose())).sum();
}

DensityMatrix mirror_rho(const DensityMatrix& rho) {
    DensityMatrix out = rho.conjugate();
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        for (Eigen::Index r = 0; r < out.rows(); ++r) {
            if ((r + c) % 2 != 0) out(r, c) = -out(r, c);
        }
    }
    return out;
}

DensityMatrix coherent_projector(SpinQuantum spin, const CoherentLabel& label) {
    const Vector psi = coherent_state(spin, label);
    return psi * psi.adjoint();
}

} // namespace spinqsd
