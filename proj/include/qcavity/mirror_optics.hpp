// Single-frequency scattering off a chain of two-level atoms on the
// waveguide: the broadened-Lorentzian closed form for a Bragg chain and an
// exact multiple-scattering calculation for arbitrary positions, plus the
// disorder ensemble average.
//
// Conventions (units gamma = 1, lengths in v_g/gamma):
//   single atom  r(D) = -1/(1 - i D),  t = 1 + r     (lossless, |r|^2+|t|^2=1)
//   propagation over L contributes phases e^{+-i k L}, k = w + D; amplitudes
//   are plane-wave coefficients referenced at x = 0, so an atom at x carries
//   r e^{2 i k x} seen from the left and r e^{-2 i k x} seen from the right.
// Blocks compose by the scattering (Redheffer) rule
//   r_AB = r_A + t_A^2 r_B / (1 - r'_A r_B),   t_AB = t_A t_B / (1 - r'_A r_B);
// composite moduli never exceed one, so the composition stays unitary to
// roundoff even deep in the disordered or near-resonant regime where the
// equivalent 2x2 transfer-matrix product overflows. The Bragg condition
// enters only through the positions.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "common.hpp"

namespace qcavity {

struct AtomChain {
    std::vector<double> positions;   // strictly increasing
    double omega_over_gamma = 0.0;   // carrier phase per unit length
    double gamma = 1.0;

    void validate() const {
        for (size_t i = 1; i < positions.size(); ++i)
            if (!(positions[i] > positions[i - 1]))
                throw ConfigError("chain positions must be strictly increasing");
        if (!positions.empty() && !(omega_over_gamma > 0.0))
            throw ConfigError("omega_over_gamma must be positive");
    }
};

// Equally spaced chain with omega_A d_m / v_g = phase_l * pi.
inline AtomChain bragg_chain(int n_atoms, double spacing_tau = 1e-5, int phase_l = 1) {
    if (n_atoms < 0) throw ConfigError("n_atoms must be >= 0");
    if (!(spacing_tau > 0.0)) throw ConfigError("spacing_tau must be positive");
    if (phase_l < 1) throw ConfigError("phase_l must be >= 1");
    AtomChain c;
    c.omega_over_gamma = phase_l * pi / spacing_tau;
    for (int j = 0; j < n_atoms; ++j) c.positions.push_back(j * spacing_tau);
    return c;
}

struct ScatterResult {
    cplx r{0.0, 0.0};
    cplx t{1.0, 0.0};
    double reflectance = 0.0;
    double transmittance = 1.0;
};

// Broadened Lorentzian reflectance of an N-atom Bragg mirror.
inline double lorentzian_reflectance(double delta, int n_atoms) {
    if (n_atoms < 1) throw ConfigError("n_atoms must be >= 1");
    const double x = delta / static_cast<double>(n_atoms);
    return 1.0 / (1.0 + x * x);
}

inline constexpr double kDefaultAmplificationBound = 1e250;

inline ScatterResult chain_scattering(const AtomChain& chain, double delta,
                                      double max_norm = kDefaultAmplificationBound) {
    chain.validate();
    ScatterResult out;
    if (chain.positions.empty()) return out;  // r=0, t=1

    const double k = chain.omega_over_gamma + delta;
    const double dg = delta / chain.gamma;
    const cplx r_atom = -1.0 / (1.0 - cplx(0.0, 1.0) * dg);
    const cplx t_atom = 1.0 + r_atom;

    if (std::abs(t_atom) < 1e-150) {
        // resonant atoms are perfect reflectors; the first one ends the story
        out.r = -std::exp(cplx(0.0, 2.0 * k * chain.positions.front()));
        out.t = 0.0;
        out.reflectance = 1.0;
        out.transmittance = 0.0;
        return out;
    }

    // fold atoms left to right; (r, rp, t) describe the composite block
    cplx r{0.0, 0.0}, rp{0.0, 0.0}, t{1.0, 0.0};
    for (const double x : chain.positions) {
        const cplx ph2 = std::exp(cplx(0.0, 2.0 * k * x));
        const cplx rb = r_atom * ph2;        // atom seen from the left
        const cplx rbp = r_atom / ph2;       // atom seen from the right
        const cplx denom = 1.0 - rp * rb;
        const double amp = 1.0 / std::abs(denom);
        if (!std::isfinite(amp) || amp > max_norm)
            throw NumericalError("scattering amplification above bound", delta);
        const cplx r_new = r + t * t * rb / denom;
        const cplx t_new = t * t_atom / denom;
        rp = rbp + t_atom * t_atom * rp / denom;
        r = r_new;
        t = t_new;
    }
    out.r = r;
    out.t = t;
    out.reflectance = std::norm(out.r);
    out.transmittance = std::norm(out.t);
    return out;
}

struct DisorderResult {
    std::vector<double> mean;    // mean |r|^2 per detuning
    std::vector<double> stderr_; // standard error of the mean
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Box-Muller on explicit 64-bit uniforms; identical streams on every
// platform. Truncated at +-4 sigma so draws cannot reorder the chain.
struct GaussianStream {
    std::mt19937_64 eng;
    explicit GaussianStream(std::uint64_t s) : eng(s) {}
    double uniform() {
        return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
    }
    double truncated_normal() {
        for (;;) {
            const double u1 = uniform(), u2 = uniform();
            const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
            if (std::fabs(z) <= 4.0) return z;
        }
    }
};

inline double pairwise_sum(const double* v, size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

}  // namespace detail

// Gaussian positional disorder of rms sigma_frac * d_m on each atom;
// intensity (|r|^2) averaging over the ensemble. Sample i draws from a
// substream keyed on (seed, i) so the ensemble is reproducible regardless
// of evaluation order.
inline DisorderResult disorder_averaged_reflectance(int n_atoms, double spacing_tau,
                                                    double sigma_frac,
                                                    const std::vector<double>& delta_grid,
                                                    int samples, std::uint64_t seed,
                                                    int phase_l = 1) {
    if (sigma_frac < 0.0) throw ConfigError("sigma must be >= 0");
    if (samples < 1) throw ConfigError("samples must be >= 1");
    const AtomChain base = bragg_chain(n_atoms, spacing_tau, phase_l);

    std::vector<std::vector<double>> r2(delta_grid.size(),
                                        std::vector<double>(samples, 0.0));
    AtomChain chain = base;
    for (int s = 0; s < samples; ++s) {
        detail::GaussianStream g(detail::splitmix64(seed ^ detail::splitmix64(s)));
        if (sigma_frac > 0.0) {
            for (int j = 0; j < n_atoms; ++j)
                chain.positions[j] = base.positions[j] +
                                     sigma_frac * spacing_tau * g.truncated_normal();
        }
        for (size_t d = 0; d < delta_grid.size(); ++d) {
            try {
                r2[d][s] = chain_scattering(chain, delta_grid[d]).reflectance;
            } catch (const NumericalError& e) {
                throw NumericalError(std::string(e.what()) + " (disorder sample " +
                                         std::to_string(s) + ")",
                                     e.at);
            }
        }
    }

    DisorderResult out;
    out.mean.resize(delta_grid.size());
    out.stderr_.resize(delta_grid.size());
    std::vector<double> dev(samples);
    for (size_t d = 0; d < delta_grid.size(); ++d) {
        const double mean = detail::pairwise_sum(r2[d].data(), samples) / samples;
        out.mean[d] = mean;
        if (samples > 1) {
            for (int s = 0; s < samples; ++s)
                dev[s] = (r2[d][s] - mean) * (r2[d][s] - mean);
            const double var = detail::pairwise_sum(dev.data(), samples) / (samples - 1);
            out.stderr_[d] = std::sqrt(var / samples);
        }
    }
    return out;
}

// Detuning at which the transfer-matrix reflectance of an N-atom Bragg
// chain drops to half its resonance value.
inline double reflectance_half_width(int n_atoms, double spacing_tau = 1e-5) {
    const AtomChain chain = bragg_chain(n_atoms, spacing_tau);
    auto refl = [&](double d) { return chain_scattering(chain, d).reflectance; };
    double lo = 0.0, hi = 0.0;
    const double step = n_atoms / 64.0;
    for (double d = step; d < 64.0 * n_atoms; d += step) {
        if (refl(d) < 0.5) {
            hi = d;
            lo = d - step;
            break;
        }
    }
    if (hi == 0.0) throw NumericalError("no half-maximum crossing found");
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (refl(mid) >= 0.5 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace qcavity
