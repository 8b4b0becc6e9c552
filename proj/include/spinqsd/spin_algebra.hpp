// spin_algebra.hpp: Spin-j representation, coherent states and the Bloch map

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>

namespace spinqsd {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx>;

// Spin length stored as 2j so half-integer spins are exact.
class SpinQuantum {
public:
    constexpr SpinQuantum() = default;
    explicit constexpr SpinQuantum(int two_j)
        : two_j_(two_j >= 0 ? two_j : throw std::invalid_argument("SpinQuantum: 2j must be >= 0")) {}

    static constexpr SpinQuantum from_j(double j) { return SpinQuantum(static_cast<int>(2.0 * j + 0.5)); }

    constexpr int two_j() const { return two_j_; }
    constexpr double j() const { return 0.5 * two_j_; }
    constexpr int dim() const { return two_j_ + 1; }

    // Magnetic quantum number of basis index k (descending: m = j - k).
    constexpr double m(int k) const { return j() - k; }

    friend constexpr bool operator==(SpinQuantum, SpinQuantum) = default;

private:
    int two_j_ = 1;
};

// Dense operators in the basis |j,j>, |j,j-1>, ..., |j,-j>.
struct SpinOperators {
    Matrix jx, jy, jz, jplus, jminus;
};

struct SparseSpinOperators {
    SparseMatrix jx, jy, jz, jplus, jminus;
};

SpinOperators build_operators(SpinQuantum spin);
SparseSpinOperators build_sparse_operators(SpinQuantum spin);

// <j,m+1|J+|j,m>
double ladder_element(SpinQuantum spin, double m);

enum class Chart : std::uint8_t { North, South };

// Integrators leave the North chart when |mu| > 4 and the South chart when |nu| > 4.
inline constexpr double kChartRadius = 4.0;

// Complex stereographic label of a spin coherent state. In the North chart
// value() is mu; in the South chart it is nu = 1/mu, which covers mu = infinity.
class CoherentLabel {
public:
    constexpr CoherentLabel() = default;
    constexpr CoherentLabel(cplx value, Chart chart = Chart::North) : value_(value), chart_(chart) {}

    static constexpr CoherentLabel north(cplx mu) { return {mu, Chart::North}; }
    static constexpr CoherentLabel south(cplx nu) { return {nu, Chart::South}; }

    constexpr cplx value() const { return value_; }
    constexpr Chart chart() const { return chart_; }

    // mu in the North chart; infinite for nu = 0.
    cplx mu() const;
    // nu = 1/mu; infinite for mu = 0.
    cplx nu() const;

    CoherentLabel to_north() const;
    CoherentLabel to_south() const;
    // Chart in which |value| <= 1.
    CoherentLabel canonical() const;

    bool finite() const { return std::isfinite(value_.real()) && std::isfinite(value_.imag()); }

private:
    cplx value_{0.0, 0.0};
    Chart chart_ = Chart::North;
};

// Normalized |mu> = exp(mu J-)|j,j> / norm. The amplitude on |j,j> (North)
// or |j,-j> (South) is real and positive.
Vector coherent_state(SpinQuantum spin, const CoherentLabel& label);

// n = <mu|J|mu>/j = (2 Re mu, 2 Im mu, 1 - |mu|^2) / (1 + |mu|^2).
std::array<double, 3> bloch_vector(const CoherentLabel& label);

// Distance between the Bloch vectors of two labels (chordal metric on the sphere).
double chordal_distance(const CoherentLabel& a, const CoherentLabel& b);

// mu -> -conj(mu); in the South chart nu -> -conj(nu).
CoherentLabel mirror_label(const CoherentLabel& label);

} // namespace spinqsd
