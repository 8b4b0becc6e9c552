// model.hpp: Physical parameters of the driven, damped collective spin

#pragma once

#include "spinqsd/spin_algebra.hpp"

namespace spinqsd {

// Drive omega*Jx + omega_z*Jz, collective gain (jump J+) and Jz dephasing,
// both at rate kappa/j. Rates are in units of kappa when kappa = 1.
struct ModelParams {
    SpinQuantum spin{1};
    double omega = 0.0;
    double kappa = 1.0;
    double omega_z = 0.0;

    static ModelParams from_lambda(SpinQuantum spin, double lambda, double kappa = 1.0, double omega_z = 0.0) {
        return ModelParams{spin, lambda * kappa, kappa, omega_z};
    }

    double j() const { return spin.j(); }
    double lambda() const { return omega / kappa; }

    // Linear damping rate of the coherent-state label, kappa*(1 + 1/(2j)).
    // This is the value for which the label SDE reproduces the master
    // equation exactly at finite j.
    double kappa_tilde() const { return kappa * (1.0 + 1.0 / spin.two_j()); }

    // Amplitude sqrt(kappa/j) of the label noise.
    double noise_amplitude() const;

    // Throws std::invalid_argument on 2j < 1, kappa <= 0, omega < 0 or non-finite values.
    void validate() const;
};

} // namespace spinqsd
