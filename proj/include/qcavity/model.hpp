// Parameter space, dimensionless groups, experimental presets and analytic
// figures of merit shared by all solvers.
//
// Internal unit system: gamma = 1 and time is measured in 1/gamma. Every
// physical preset converts to (N, tau, phi, gamma0/gamma) once, here.
#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "common.hpp"

namespace qcavity {

// One cavity configuration.
//   delay_tau    : one-way phase-free delay gamma*d/v_g (round trip of the
//                  photon exchange between the central atom and one mirror)
//   phase_offset : phi, with theta = (2n+1)*pi + phi
//   env_rate     : gamma0/gamma, independent emission into the environment
struct CavityParams {
    double gamma = 1.0;
    int n_atoms = 1;
    double delay_tau = 0.0;
    double phase_offset = 0.0;
    double env_rate = 0.0;

    void validate() const {
        if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
        if (n_atoms < 1) throw ConfigError("n_atoms must be >= 1");
        if (!(delay_tau > 0.0) || !std::isfinite(delay_tau))
            throw ConfigError("delay_tau must be strictly positive and finite");
        if (!(std::fabs(phase_offset) < pi))
            throw ConfigError("|phase_offset| must be < pi");
        if (env_rate < 0.0) throw ConfigError("env_rate must be >= 0");
        if (!std::isfinite(static_cast<double>(n_atoms) * delay_tau))
            throw ConfigError("N*delay_tau overflows");
    }
};

struct DerivedGroups {
    double a;           // N * gamma d / v_g
    double detuning;    // Delta in units of gamma
    double half_trip;   // d/(2 v_g) in units of 1/gamma
    double round_trip;  // d/v_g in units of 1/gamma
};

struct FiguresOfMerit {
    double kappa;          // cavity loss rate, units of gamma
    double rabi_freq;      // Omega_Rabi, units of gamma
    double critical_n;     // N_c = 1/tau
    double cooperativity;  // eta; +inf marker when env_rate == 0
    double cycles_ratio;   // Omega_Rabi / (kappa + gamma0/gamma)
};

inline DerivedGroups derive_groups(const CavityParams& p) {
    p.validate();
    return {static_cast<double>(p.n_atoms) * p.delay_tau,
            p.phase_offset / p.delay_tau, p.delay_tau / 2.0, p.delay_tau};
}

inline FiguresOfMerit figures_of_merit(const CavityParams& p) {
    const DerivedGroups g = derive_groups(p);
    const double one_plus_a = 1.0 + g.a;
    FiguresOfMerit f{};
    f.kappa = 1.0 / (one_plus_a * one_plus_a);
    f.rabi_freq = std::sqrt(2.0 * p.n_atoms / one_plus_a);
    f.critical_n = 1.0 / p.delay_tau;
    f.cooperativity = p.env_rate > 0.0
                          ? 2.0 * p.n_atoms * one_plus_a / p.env_rate
                          : std::numeric_limits<double>::infinity();
    f.cycles_ratio = f.rabi_freq / (f.kappa + p.env_rate);
    return f;
}

// Table of experimental platforms: trapped cesium atoms and quantum dots on
// photonic-crystal waveguides, superconducting qubits on a transmission line.
struct PlatformPreset {
    std::string label;
    double omega_a;      // transition frequency, GHz
    double two_gamma;    // 2*gamma, MHz
    double gamma_ratio;  // 2*gamma/gamma0
    double vg_over_c;    // group velocity fraction
    double d_mm;         // mirror separation, mm
    double tau;          // gamma*d/v_g

    // Rates are treated as ordinary (not angular) frequencies; this choice
    // reproduces the stored tau column within 10% and is echoed in output
    // metadata.
    double tau_from_physical() const {
        const double gamma_per_s = (two_gamma / 2.0) * 1e6;
        const double d_m = d_mm * 1e-3;
        const double vg = vg_over_c * 2.998e8;
        return gamma_per_s * d_m / vg;
    }

    CavityParams params(int n_atoms) const {
        CavityParams p;
        p.n_atoms = n_atoms;
        p.delay_tau = tau;
        p.env_rate = 2.0 / gamma_ratio;  // gamma0/gamma
        p.validate();
        return p;
    }
};

inline const std::vector<PlatformPreset>& presets() {
    // Superconducting row: the source only bounds 2*gamma/gamma0 > 20;
    // equality is adopted (overridable through env_rate).
    static const std::vector<PlatformPreset> table = {
        {"cesium", 2.1e6, 32.0, 1.1, 0.1, 1.0, 5.3e-4},
        {"quantum_dot", 2.0e6, 6.2e3, 63.0, 0.01, 1e-2, 1.0e-2},
        {"superconducting", 7.1, 6e2, 20.0, 0.5, 10.0, 2e-2},
    };
    return table;
}

inline const PlatformPreset& preset(const std::string& label) {
    for (const auto& p : presets())
        if (p.label == label) return p;
    throw ConfigError("unknown preset '" + label +
                      "' (expected cesium, quantum_dot or superconducting)");
}

}  // namespace qcavity
