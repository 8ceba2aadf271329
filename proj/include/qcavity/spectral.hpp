// Pole-based inverse Laplace transform.
//
// In the macroscopic limit the transform has simple poles on the imaginary
// axis, s = i y with y solving  y = cot((y - Delta) tau / 2)  (units gamma=1,
// detuning Delta = phi/tau). Each branch of the cotangent between adjacent
// singularities y = Delta + 2 pi m / tau carries exactly one root: bisection
// brackets it, Newton polishes it. The residue weight at each pole is
// 1 / (1 + tau/2 + y^2 tau/2) and the contribution of everything beyond the
// two main poles is bounded by tau/6.
//
// For finite N the two main poles come from expanding e^{-s tau} to second
// order, which turns the denominator into a cubic; only the two roots
// tracking -kappa/2 +- i Omega are physical.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "common.hpp"
#include "dde_core.hpp"
#include "model.hpp"
#include "polynomial.hpp"

namespace qcavity {

struct PoleSet {
    std::vector<cplx> poles;          // ordered by |Im s|
    std::vector<cplx> weights;        // residue prefactors
    std::vector<int> indices;         // signed branch index (+-1 = main pair)
    std::vector<long double> im_hi;   // Im s at long double precision
    double tail_bound = 0.0;          // bound on the omitted contribution
};

// |y - cot((y - delta) tau/2)| evaluated with branch-local argument
// reduction; the naive form at large |y| only measures the argument
// rounding of the trig call, not the solver.
inline double pole_equation_residual(const PoleSet& set, size_t i, double tau,
                                     double delta) {
    const long double y = set.im_hi[i];
    const int j = set.indices[i];
    const long m = j > 0 ? j - 1 : j;
    const long double pi_l = 3.14159265358979323846264338327950288L;
    const long double x = (y - (long double)delta) * (long double)tau / 2.0L - m * pi_l;
    return static_cast<double>(fabsl(y - cosl(x) / sinl(x)));
}

struct MainPoles {
    cplx s_plus;
    cplx s_minus;
};

inline double pole_tail_bound(double tau) {
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    return tau / 6.0;
}

namespace detail {

// Root on branch m: y in (delta + 2 pi m / tau, delta + 2 pi (m+1) / tau).
// Solved in the branch-local coordinate x = (y - delta) tau/2 - m pi
// in (0, pi), where the equation reads
//   g(x) = delta + (2/tau) (x + m pi) - cot(x) = 0,
// g strictly increasing from -inf to +inf. Bisection brackets the root in
// double, a few long double Newton steps polish it; the local coordinate
// keeps the root well conditioned however large |y| grows.
inline long double pole_on_branch(long m, double tau, double delta) {
    const long double pi_l = 3.14159265358979323846264338327950288L;
    const long double two_over_tau = 2.0L / (long double)tau;
    auto g = [&](long double x) {
        return (long double)delta + two_over_tau * (x + m * pi_l) - cosl(x) / sinl(x);
    };
    long double lo = 1e-18L, hi = pi_l - 1e-18L;
    if (!(g(lo) < 0.0L) || !(g(hi) > 0.0L))
        throw NumericalError("pole bracketing failed on branch " + std::to_string(m),
                             static_cast<double>(m) * 2.0 * pi / tau);
    for (int it = 0; it < 90 && hi - lo > 1e-24L; ++it) {
        const long double mid = 0.5L * (lo + hi);
        (g(mid) < 0.0L ? lo : hi) = mid;
    }
    long double x = 0.5L * (lo + hi);
    for (int it = 0; it < 8; ++it) {
        const long double s = sinl(x);
        const long double dg = two_over_tau + 1.0L / (s * s);
        const long double step = g(x) / dg;
        x -= step;
        if (x <= 0.0L || x >= pi_l) x = 0.5L * (lo + hi);
        if (fabsl(step) < 1e-22L * fabsl(x)) break;
    }
    return (long double)delta + two_over_tau * (x + m * pi_l);
}

}  // namespace detail

// The 2*count poles nearest the origin with their residue weights.
inline PoleSet macroscopic_poles(double tau, double detuning, int count) {
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (count < 2) throw ConfigError("need count >= 2 poles per side");
    PoleSet set;
    set.tail_bound = pole_tail_bound(tau);
    for (int j = 1; j <= count; ++j) {
        for (int sign : {+1, -1}) {
            const long m = sign > 0 ? j - 1 : -j;
            const long double y_hi = detail::pole_on_branch(m, tau, detuning);
            const double y = static_cast<double>(y_hi);
            set.poles.push_back(cplx(0.0, y));
            set.weights.push_back(cplx(1.0 / (1.0 + tau / 2.0 + y * y * tau / 2.0), 0.0));
            set.indices.push_back(sign * j);
            set.im_hi.push_back(y_hi);
        }
    }
    // order by |Im|
    std::vector<size_t> order(set.poles.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return std::fabs(set.poles[a].imag()) < std::fabs(set.poles[b].imag());
    });
    PoleSet sorted;
    sorted.tail_bound = set.tail_bound;
    for (size_t i : order) {
        sorted.poles.push_back(set.poles[i]);
        sorted.weights.push_back(set.weights[i]);
        sorted.indices.push_back(set.indices[i]);
        sorted.im_hi.push_back(set.im_hi[i]);
    }
    return sorted;
}

// Residue sum c0(t) = sum_j w_j e^{s_j t} in the macroscopic limit.
inline Trajectory macroscopic_c0(double tau, double detuning,
                                 const std::vector<double>& t_grid, int count = 64) {
    const PoleSet set = macroscopic_poles(tau, detuning, count);
    Trajectory out;
    out.t = t_grid;
    out.states.resize(t_grid.size());
    for (size_t i = 0; i < t_grid.size(); ++i) {
        cplx acc{};
        for (size_t j = 0; j < set.poles.size(); ++j)
            acc += set.weights[j] * std::exp(set.poles[j] * t_grid[i]);
        out.states[i].c0 = acc;
    }
    out.meta.method = "spectral";
    out.meta.extra["tail_bound"] = std::to_string(set.tail_bound);
    out.meta.extra["pole_count"] = std::to_string(2 * count);
    return out;
}

namespace detail {

// cubic coefficients of the second-order expansion of the denominator of the
// cavity transform, E = e^{i phi}
inline std::array<cplx, 4> main_pole_cubic_coeffs(const CavityParams& p) {
    const double n = p.n_atoms, tau = p.delay_tau;
    const cplx e = std::exp(cplx(0.0, p.phase_offset));
    return {n * (1.0 + e),                       // s^0
            cplx(n + 1.0) - e * n - e * n * tau, // s^1
            1.0 + e * n * tau + e * n * tau * tau / 2.0,
            -e * n * tau * tau / 2.0};
}

}  // namespace detail

inline MainPoles main_poles_cubic(const CavityParams& params) {
    params.validate();
    const auto c = detail::main_pole_cubic_coeffs(params);
    const auto roots = solve_cubic(c[3], c[2], c[1], c[0]);
    const auto fom = figures_of_merit(params);
    const DerivedGroups g = derive_groups(params);
    const cplx target_plus(-fom.kappa / 2.0, fom.rabi_freq + g.detuning / 2.0);
    const cplx target_minus(-fom.kappa / 2.0, -fom.rabi_freq + g.detuning / 2.0);

    // best assignment of two distinct roots to the two targets
    double best = std::numeric_limits<double>::infinity();
    int bp = -1, bm = -1;
    for (int ip = 0; ip < 3; ++ip)
        for (int im = 0; im < 3; ++im) {
            if (ip == im) continue;
            const double d = std::abs(roots[ip] - target_plus) +
                             std::abs(roots[im] - target_minus);
            if (d < best) {
                best = d;
                bp = ip;
                bm = im;
            }
        }
    MainPoles mp{roots[bp], roots[bm]};
    if (std::abs(mp.s_plus - mp.s_minus) <
        1e-9 * std::max(1.0, std::abs(mp.s_plus)))
        throw ConfigError("degenerate cubic: main poles are not separated");
    if (mp.s_plus.imag() < mp.s_minus.imag()) std::swap(mp.s_plus, mp.s_minus);
    if (params.phase_offset == 0.0) {
        // real-coefficient cubic: enforce the exact conjugate pair
        mp.s_plus = 0.5 * (mp.s_plus + std::conj(mp.s_minus));
        mp.s_minus = std::conj(mp.s_plus);
    }
    return mp;
}

// Two-term residue solution built on the cubic main poles.
inline Trajectory spectral_main_c0(const CavityParams& params,
                                   const std::vector<double>& t_grid) {
    params.validate();
    const auto mp = main_poles_cubic(params);
    const auto c = detail::main_pole_cubic_coeffs(params);
    const double n = params.n_atoms, tau = params.delay_tau;
    const cplx e = std::exp(cplx(0.0, params.phase_offset));
    auto numer = [&](cplx s) {
        // s + N(1 + e^{i theta - s tau}) expanded to the same order
        return s + n * (1.0 - e * (1.0 - s * tau + s * s * tau * tau / 2.0));
    };
    auto dcub = [&](cplx s) { return (3.0 * c[3] * s + 2.0 * c[2]) * s + c[1]; };
    const cplx wp = numer(mp.s_plus) / dcub(mp.s_plus);
    const cplx wm = numer(mp.s_minus) / dcub(mp.s_minus);
    const double damp = params.env_rate / 2.0;

    Trajectory out;
    out.t = t_grid;
    out.states.resize(t_grid.size());
    for (size_t i = 0; i < t_grid.size(); ++i) {
        const double t = t_grid[i];
        out.states[i].c0 = (wp * std::exp(mp.s_plus * t) + wm * std::exp(mp.s_minus * t)) *
                           std::exp(-damp * t);
    }
    out.meta.method = "spectral-main";
    out.meta.params = params;
    return out;
}

// Closed-form vacuum Rabi oscillation,
//   c0(t) = e^{-(kappa/2 + gamma0/2) t} cos(sqrt(2N/(1+a)) t).
inline Trajectory rabi_approx(const CavityParams& params,
                              const std::vector<double>& t_grid) {
    params.validate();
    const auto f = figures_of_merit(params);
    const double rate = f.kappa / 2.0 + params.env_rate / 2.0;
    Trajectory out;
    out.t = t_grid;
    out.states.resize(t_grid.size());
    for (size_t i = 0; i < t_grid.size(); ++i) {
        const double t = t_grid[i];
        out.states[i].c0 = std::exp(-rate * t) * std::cos(f.rabi_freq * t);
    }
    out.meta.method = "approx";
    out.meta.params = params;
    return out;
}

// Detuned closed form for arbitrary a:
//   c0 = e^{-t/(2(1+a)^2)} e^{(2a(1+a)v/(3 tau)) t}
//        [ cos(W t) + sqrt(-u/(1+u+v)) sin(W t) ],   W = Omega0 sqrt(1+u+v),
// with v = (3/4)(e^{i phi/(1+a)^2} - 1), u = -2a(1+a)^3 v^2 / (9 tau) and
// Omega0 = sqrt(2a/((a+1) tau)). The square-root branch is fixed by the
// macroscopic limit, where the sine coefficient must approach -i Delta/(2 W).
inline Trajectory detuned_general_c0(const CavityParams& params,
                                     const std::vector<double>& t_grid) {
    params.validate();
    const DerivedGroups g = derive_groups(params);
    const double a = g.a, tau = params.delay_tau, phi = params.phase_offset;
    const double one_a = 1.0 + a;
    const cplx v = 0.75 * (std::exp(cplx(0.0, phi / (one_a * one_a))) - 1.0);
    const cplx u = -2.0 * a * one_a * one_a * one_a * v * v / (9.0 * tau);
    const double omega0 = std::sqrt(2.0 * a / (one_a * tau));
    const cplx zeta = 1.0 + u + v;
    const cplx freq = omega0 * std::sqrt(zeta);
    cplx sin_coef = std::sqrt(-u / zeta);
    if (phi != 0.0 && sin_coef.imag() * phi > 0.0) sin_coef = -sin_coef;
    const cplx env_rate = cplx(-1.0 / (2.0 * one_a * one_a), 0.0) +
                          2.0 * a * one_a * v / (3.0 * tau) - params.env_rate / 2.0;

    Trajectory out;
    out.t = t_grid;
    out.states.resize(t_grid.size());
    for (size_t i = 0; i < t_grid.size(); ++i) {
        const double t = t_grid[i];
        const cplx arg = freq * t;
        out.states[i].c0 =
            std::exp(env_rate * t) * (std::cos(arg) + sin_coef * std::sin(arg));
    }
    out.meta.method = "detuned";
    out.meta.params = params;
    return out;
}

// |c0|^2 from the macroscopic detuned amplitude
// e^{i Delta t/2} (cos(W t) - i (Delta/2W) sin(W t)), W^2 = Omega0^2 + Delta^2/4.
inline double detuned_probability(double delta, double omega0, double t) {
    const double omega = std::sqrt(omega0 * omega0 + delta * delta / 4.0);
    const double c = std::cos(omega * t);
    const double r = (delta / (2.0 * omega0)) * (delta / (2.0 * omega0));
    return (c * c + r) / (1.0 + r);
}

}  // namespace qcavity
