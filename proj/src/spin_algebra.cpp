// spin_algebra.cpp: Spin operators and coherent states in the Dicke basis

#include "spinqsd/spin_algebra.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace spinqsd {

namespace {

// Above this size the binomial prefactors are evaluated in log space.
constexpr int kLogDomainTwoJ = 60;

void require_spin(SpinQuantum spin, const char* who) {
    if (spin.two_j() < 1) {
        throw std::invalid_argument(std::string(who) + ": requires 2j >= 1");
    }
}

// Amplitudes z^k sqrt(C(n,k)), normalized, for k = 0..n.
Vector binomial_expansion(int n, cplx z) {
    Vector amp(n + 1);
    if (z == cplx{0.0, 0.0}) {
        amp.setZero();
        amp(0) = 1.0;
        return amp;
    }
    bool direct = n <= kLogDomainTwoJ;
    if (direct) {
        amp(0) = 1.0;
        for (int k = 1; k <= n; ++k) {
            amp(k) = amp(k - 1) * z * std::sqrt(static_cast<double>(n - k + 1) / k);
        }
        direct = std::isfinite(amp.squaredNorm());
    }
    if (!direct) {
        const double log_abs = std::log(std::abs(z));
        const double phase = std::arg(z);
        const double lgn = std::lgamma(n + 1.0);
        std::vector<double> logmag(n + 1);
        double peak = -std::numeric_limits<double>::infinity();
        for (int k = 0; k <= n; ++k) {
            const double log_binom = lgn - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
            logmag[k] = k * log_abs + 0.5 * log_binom;
            peak = std::max(peak, logmag[k]);
        }
        for (int k = 0; k <= n; ++k) {
            amp(k) = std::polar(std::exp(logmag[k] - peak), k * phase);
        }
    }
    const double norm = amp.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw std::range_error("coherent_state: normalization under/overflowed");
    }
    return amp / norm;
}

} // namespace

double ladder_element(SpinQuantum spin, double m) {
    const double j = spin.j();
    return std::sqrt(std::max(0.0, j * (j + 1.0) - m * (m + 1.0)));
}

SparseSpinOperators build_sparse_operators(SpinQuantum spin) {
    require_spin(spin, "build_sparse_operators");
    const int d = spin.dim();
    std::vector<Eigen::Triplet<cplx>> zt, pt;
    zt.reserve(d);
    pt.reserve(d - 1);
    for (int k = 0; k < d; ++k) {
        zt.emplace_back(k, k, spin.m(k));
    }
    // J+ |m> = c |m+1>; m+1 sits one index above m.
    for (int k = 1; k < d; ++k) {
        pt.emplace_back(k - 1, k, ladder_element(spin, spin.m(k)));
    }
    SparseSpinOperators ops;
    ops.jz.resize(d, d);
    ops.jz.setFromTriplets(zt.begin(), zt.end());
    ops.jplus.resize(d, d);
    ops.jplus.setFromTriplets(pt.begin(), pt.end());
    ops.jminus = SparseMatrix(ops.jplus.adjoint());
    ops.jx = 0.5 * (ops.jplus + ops.jminus);
    ops.jy = cplx(0.0, -0.5) * (ops.jplus - ops.jminus);
    return ops;
}

SpinOperators build_operators(SpinQuantum spin) {
    const auto sp = build_sparse_operators(spin);
    return SpinOperators{Matrix(sp.jx), Matrix(sp.jy), Matrix(sp.jz), Matrix(sp.jplus), Matrix(sp.jminus)};
}

cplx CoherentLabel::mu() const {
    if (chart_ == Chart::North) return value_;
    if (value_ == cplx{0.0, 0.0}) return {std::numeric_limits<double>::infinity(), 0.0};
    return 1.0 / value_;
}

cplx CoherentLabel::nu() const {
    if (chart_ == Chart::South) return value_;
    if (value_ == cplx{0.0, 0.0}) return {std::numeric_limits<double>::infinity(), 0.0};
    return 1.0 / value_;
}

CoherentLabel CoherentLabel::to_north() const { return north(mu()); }
CoherentLabel CoherentLabel::to_south() const { return south(nu()); }

CoherentLabel CoherentLabel::canonical() const {
    if (std::abs(value_) <= 1.0) return *this;
    return chart_ == Chart::North ? to_south() : to_north();
}

Vector coherent_state(SpinQuantum spin, const CoherentLabel& label) {
    if (!label.finite()) {
        throw std::invalid_argument("coherent_state: label is not finite in its chart");
    }
    const int n = spin.two_j();
    Vector amp = binomial_expansion(n, label.value());
    if (label.chart() == Chart::North) return amp;
    // South: nu^l sqrt(C(2j,l)) on |j,-j+l>, i.e. reversed basis order.
    return amp.reverse().eval();
}

std::array<double, 3> bloch_vector(const CoherentLabel& label) {
    const cplx z = label.value();
    const double r2 = std::norm(z);
    const double den = 1.0 + r2;
    if (label.chart() == Chart::North) {
        return {2.0 * z.real() / den, 2.0 * z.imag() / den, (1.0 - r2) / den};
    }
    // mu = 1/nu: 2 mu/(1+|mu|^2) = 2 conj(nu)/(1+|nu|^2).
    return {2.0 * z.real() / den, -2.0 * z.imag() / den, (r2 - 1.0) / den};
}

double chordal_distance(const CoherentLabel& a, const CoherentLabel& b) {
    const auto na = bloch_vector(a);
    const auto nb = bloch_vector(b);
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += (na[i] - nb[i]) * (na[i] - nb[i]);
    return std::sqrt(s);
}

CoherentLabel mirror_label(const CoherentLabel& label) {
    return {-std::conj(label.value()), label.chart()};
}

} // namespace spinqsd
