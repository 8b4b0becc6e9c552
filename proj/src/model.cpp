// model.cpp

#include "spinqsd/model.hpp"

#include <cmath>
#include <stdexcept>

namespace spinqsd {

double ModelParams::noise_amplitude() const { return std::sqrt(kappa / j()); }

void ModelParams::validate() const {
    if (spin.two_j() < 1) throw std::invalid_argument("ModelParams: 2j must be >= 1");
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("ModelParams: kappa must be > 0");
    if (!(omega >= 0.0) || !std::isfinite(omega)) throw std::invalid_argument("ModelParams: omega must be >= 0");
    if (!std::isfinite(omega_z)) throw std::invalid_argument("ModelParams: omega_z must be finite");
}

} // namespace spinqsd
