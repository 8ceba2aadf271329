// Direct time-domain integration of the coupled delay differential equations
// for the central atom and the mirror bright mode,
//
//   dc0/dt = -c0 - sqrt(2N) e^{i theta/2} cm(t - tau/2) O(t - tau/2)
//   dcm/dt = -sqrt(2N) e^{i theta/2} c0(t - tau/2) O(t - tau/2)
//            - N [ cm + e^{i theta} cm(t - tau) O(t - tau) ]
//
// in units gamma = 1, tau = gamma d/v_g, theta = pi + phase_offset, plus
// -(gamma0/2) damping on both amplitudes when env_rate > 0.
//
// Method of steps with a classic 4th-order step: the step is an exact
// divisor of tau/2, so both delays land on grid nodes and every delayed
// lookup hits either a stored node or the midpoint of a completed interval
// (cubic Hermite there). Activation is decided on integer step indices, so
// the Heaviside gating is exact; the gated terms vanish continuously at
// their activation except the very first one, where the step-start stage
// uses the right-sided limit.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "common.hpp"
#include "model.hpp"

namespace qcavity {

struct DelayState {
    cplx c0{0.0, 0.0};
    cplx cm{0.0, 0.0};
};

struct TrajectoryMeta {
    std::string method;
    double dt = 0.0;
    CavityParams params;
    std::map<std::string, std::string> extra;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<DelayState> states;
    TrajectoryMeta meta;

    double p0(size_t i) const { return std::norm(states[i].c0); }
    size_t size() const { return t.size(); }
};

struct IntegratorConfig {
    double dt = 0.0;      // 0 -> min(half_trip/8, 0.002/max(1, Omega_Rabi))
    double t_max = 3.0;
    int dense_order = 3;  // 3 = cubic Hermite, 1 = linear (for convergence checks)
    bool zero_delay = false;  // integrate the d = 0 (Markov) limit instead

    void validate(double half_trip) const {
        if (dense_order != 1 && dense_order != 3)
            throw ConfigError("dense_order must be 1 or 3");
        if (!(t_max > 0.0)) throw ConfigError("t_max must be positive");
        if (dt != 0.0) {
            if (!(dt > 0.0)) throw ConfigError("dt must be positive");
            if (!zero_delay && half_trip > 0.0 && dt > half_trip / 8.0 * (1.0 + 1e-12))
                throw ConfigError("dt must not exceed half_trip/8 so delays are resolved");
        }
    }
};

namespace detail {

struct Deriv {
    cplx dc0, dcm;
};

inline DelayState axpy(const DelayState& y, double h, const Deriv& k) {
    return {y.c0 + h * k.dc0, y.cm + h * k.dcm};
}

// dense value inside a completed interval [i, i+1] at fraction th;
// derivatives are one-sided so kink nodes do not leak across the interval
inline DelayState dense_eval(const std::vector<DelayState>& ys,
                             const std::vector<Deriv>& f_right,
                             const std::vector<Deriv>& f_left, double dt, size_t i,
                             double th, int order) {
    const DelayState& y0 = ys[i];
    const DelayState& y1 = ys[i + 1];
    if (order == 1) {
        return {y0.c0 + th * (y1.c0 - y0.c0), y0.cm + th * (y1.cm - y0.cm)};
    }
    const Deriv& f0 = f_right[i];
    const Deriv& f1 = f_left[i + 1];
    const double h00 = (1 + 2 * th) * (1 - th) * (1 - th);
    const double h10 = th * (1 - th) * (1 - th);
    const double h01 = th * th * (3 - 2 * th);
    const double h11 = th * th * (th - 1);
    return {h00 * y0.c0 + dt * h10 * f0.dc0 + h01 * y1.c0 + dt * h11 * f1.dc0,
            h00 * y0.cm + dt * h10 * f0.dcm + h01 * y1.cm + dt * h11 * f1.dcm};
}

}  // namespace detail

inline double default_dde_step(const CavityParams& p) {
    const auto f = figures_of_merit(p);
    const double half = p.delay_tau / 2.0;
    return std::min(half / 8.0, 0.002 / std::max(1.0, f.rabi_freq));
}

inline Trajectory integrate_cavity(const CavityParams& params,
                                   IntegratorConfig config = {}) {
    params.validate();
    const double half = params.delay_tau / 2.0;
    config.validate(half);
    const double dt_req = config.dt > 0.0 ? config.dt : default_dde_step(params);

    // dt divides the half trip exactly; both delays then sit on grid nodes.
    const long m = config.zero_delay
                       ? 0
                       : std::max<long>(8, static_cast<long>(std::ceil(half / dt_req - 1e-9)));
    const double dt = config.zero_delay ? dt_req : half / static_cast<double>(m);
    const long n_steps = static_cast<long>(std::ceil(config.t_max / dt - 1e-9));
    if (n_steps > 20'000'000)
        throw ConfigError("step count above 2e7; raise dt or lower t_max");

    const double n_atoms = params.n_atoms;
    const double g = std::sqrt(2.0 * n_atoms);
    const double theta = pi + params.phase_offset;
    const cplx coupling = -g * std::exp(cplx(0.0, theta / 2.0));
    const cplx mirror_fb = -n_atoms * std::exp(cplx(0.0, theta));
    const double damp = params.env_rate / 2.0;

    std::vector<DelayState> ys;
    std::vector<detail::Deriv> fs_right, fs_left;  // one-sided node derivatives
    ys.reserve(n_steps + 1);
    fs_right.reserve(n_steps + 1);
    fs_left.reserve(n_steps + 1);
    ys.push_back({cplx(1.0, 0.0), cplx(0.0, 0.0)});

    // stage2: time in units of dt/2 (even = node, odd = midpoint)
    auto rhs = [&](long stage2, const DelayState& y, bool at_step_start) {
        cplx c0_half{}, cm_half{}, cm_full{};
        if (config.zero_delay) {
            c0_half = y.c0;
            cm_half = y.cm;
            cm_full = y.cm;
        } else {
            auto delayed = [&](long d2, bool want_c0) -> cplx {
                if (d2 < 0) return {};
                if (d2 == 0 && !at_step_start) return {};  // left limit, Theta(0) = 0
                DelayState v;
                if ((d2 & 1L) == 0) {
                    v = ys[static_cast<size_t>(d2 / 2)];
                } else {
                    v = detail::dense_eval(ys, fs_right, fs_left, dt,
                                           static_cast<size_t>(d2 / 2), 0.5,
                                           config.dense_order);
                }
                return want_c0 ? v.c0 : v.cm;
            };
            c0_half = delayed(stage2 - 2 * m, true);
            cm_half = delayed(stage2 - 2 * m, false);
            cm_full = delayed(stage2 - 4 * m, false);
        }
        detail::Deriv d;
        d.dc0 = -(1.0 + damp) * y.c0 + coupling * cm_half;
        d.dcm = coupling * c0_half + (-n_atoms - damp) * y.cm + mirror_fb * cm_full;
        return d;
    };

    fs_right.push_back(rhs(0, ys[0], true));
    fs_left.push_back(fs_right[0]);
    for (long n = 0; n < n_steps; ++n) {
        const DelayState& y = ys.back();
        const long s2 = 2 * n;
        const detail::Deriv& k1 = fs_right.back();
        const detail::Deriv k2 = rhs(s2 + 1, detail::axpy(y, dt / 2, k1), false);
        const detail::Deriv k3 = rhs(s2 + 1, detail::axpy(y, dt / 2, k2), false);
        const detail::Deriv k4 = rhs(s2 + 2, detail::axpy(y, dt, k3), false);
        DelayState next;
        next.c0 = y.c0 + dt / 6.0 * (k1.dc0 + 2.0 * k2.dc0 + 2.0 * k3.dc0 + k4.dc0);
        next.cm = y.cm + dt / 6.0 * (k1.dcm + 2.0 * k2.dcm + 2.0 * k3.dcm + k4.dcm);
        const double norm = std::norm(next.c0) + std::norm(next.cm);
        if (!std::isfinite(norm))
            throw NumericalError("non-finite state during DDE integration", (n + 1) * dt);
        if (params.env_rate == 0.0 && norm > 1.0 + 1e-6)
            throw NumericalError("state norm exceeded 1 during DDE integration",
                                 (n + 1) * dt);
        ys.push_back(next);
        fs_left.push_back(rhs(s2 + 2, next, false));   // left limit at the new node
        fs_right.push_back(rhs(s2 + 2, next, true));   // right limit, doubles as next k1
    }

    Trajectory out;
    out.t.resize(ys.size());
    for (size_t i = 0; i < ys.size(); ++i) out.t[i] = static_cast<double>(i) * dt;
    out.states = std::move(ys);
    out.meta.method = config.zero_delay ? "dde-markov" : "dde";
    out.meta.dt = dt;
    out.meta.params = params;
    return out;
}

// ---------------------------------------------------------------------------
// Full-chain integrator: one amplitude per atom, all pairwise delays.
//   dc_j/dt = -gamma sum_j' e^{i w |x_j - x_j'|} c_j'(t - |x_j - x_j'|)
// with positions in units of v_g/gamma and w = omega_A/gamma.

struct ChainLayout {
    std::vector<double> positions;  // strictly increasing, units v_g/gamma
    double omega_over_gamma = 0.0;
    int phase_l = 1;   // omega_A d_m / v_g = l pi for adjacent mirror atoms
    double gamma = 1.0;
};

// Mirror atoms at +-(d/2 + k d_m), central atom at the origin. The spacing
// is chosen so that the cavity phase is odd_multiple*pi + phase_offset while
// adjacent mirror atoms sit exactly phase_l*pi apart.
inline ChainLayout make_cavity_chain_layout(int n_per_mirror, double delay_tau,
                                            int odd_multiple, double phase_offset,
                                            int phase_l = 1) {
    if (n_per_mirror < 1) throw ConfigError("n_per_mirror must be >= 1");
    if (odd_multiple < 1 || odd_multiple % 2 == 0)
        throw ConfigError("odd_multiple must be a positive odd integer");
    const double theta = odd_multiple * pi + phase_offset;
    ChainLayout lay;
    lay.omega_over_gamma = theta / delay_tau;
    lay.phase_l = phase_l;
    const double spacing = phase_l * pi / lay.omega_over_gamma;
    for (int j = -n_per_mirror; j <= n_per_mirror; ++j) {
        if (j == 0) {
            lay.positions.push_back(0.0);
        } else if (j > 0) {
            lay.positions.push_back(delay_tau / 2.0 + (j - 1) * spacing);
        } else {
            lay.positions.push_back(-delay_tau / 2.0 + (j + 1) * spacing);
        }
    }
    std::sort(lay.positions.begin(), lay.positions.end());
    return lay;
}

struct FullChainTrajectory {
    std::vector<double> t;
    std::vector<std::vector<cplx>> amps;  // amps[step][atom], atoms left to right
    int phase_l = 1;
    double dt = 0.0;

    size_t n_atoms() const { return amps.empty() ? 0 : amps[0].size(); }

    // central atom is the middle entry of the sorted layout
    Trajectory central() const {
        Trajectory tr;
        tr.t = t;
        tr.states.resize(t.size());
        const size_t mid = n_atoms() / 2;
        for (size_t i = 0; i < t.size(); ++i) tr.states[i].c0 = amps[i][mid];
        tr.meta.method = "dde-full-chain";
        tr.meta.dt = dt;
        return tr;
    }

    // cm(t) = (1/sqrt(2N)) sum_{j != 0} (-1)^{(j+1) l} c_j(t)
    std::vector<cplx> bright_mode() const {
        const size_t k = n_atoms();
        const long mid = static_cast<long>(k / 2);
        std::vector<cplx> cm(t.size());
        const double norm = 1.0 / std::sqrt(static_cast<double>(k - 1));
        for (size_t i = 0; i < t.size(); ++i) {
            cplx acc{};
            for (long idx = 0; idx < static_cast<long>(k); ++idx) {
                const long j = idx - mid;
                if (j == 0) continue;
                const long par = std::abs((j + 1) * phase_l) % 2;
                acc += (par ? -1.0 : 1.0) * amps[i][idx];
            }
            cm[i] = norm * acc;
        }
        return cm;
    }
};

inline FullChainTrajectory integrate_full_chain(const ChainLayout& layout,
                                                IntegratorConfig config = {}) {
    const size_t k = layout.positions.size();
    if (k < 1) throw ConfigError("empty chain layout");
    for (size_t i = 1; i < k; ++i)
        if (!(layout.positions[i] > layout.positions[i - 1]))
            throw ConfigError("chain positions must be strictly increasing");
    double min_gap = std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < k; ++i)
        min_gap = std::min(min_gap, layout.positions[i] - layout.positions[i - 1]);

    if (config.dt != 0.0 && config.dt > min_gap / 2.0)
        throw ConfigError("dt must not exceed half the smallest atom separation");
    const double dt = config.dt > 0.0
                          ? config.dt
                          : std::min(min_gap / 8.0,
                                     0.002 / std::max(1.0, std::sqrt(double(k))));
    const long n_steps = static_cast<long>(std::ceil(config.t_max / dt - 1e-9));
    if (static_cast<double>(n_steps) * k > 3e7)
        throw ConfigError("full-chain problem too large; raise dt or lower t_max");

    // pairwise delays and coupling phases
    std::vector<double> delay(k * k);
    std::vector<cplx> coup(k * k);
    for (size_t i = 0; i < k; ++i)
        for (size_t j = 0; j < k; ++j) {
            const double d = std::fabs(layout.positions[i] - layout.positions[j]);
            delay[i * k + j] = d;
            coup[i * k + j] = -layout.gamma * std::exp(cplx(0.0, layout.omega_over_gamma * d));
        }

    std::vector<std::vector<cplx>> ys, fs;
    ys.reserve(n_steps + 1);
    fs.reserve(n_steps + 1);
    std::vector<cplx> y0(k, cplx(0.0, 0.0));
    y0[k / 2] = cplx(1.0, 0.0);
    ys.push_back(y0);

    auto dense = [&](double tq, size_t atom) -> cplx {
        // tq in [0, completed history]
        const double u = tq / dt;
        size_t i = static_cast<size_t>(u);
        if (i + 1 >= ys.size()) i = ys.size() - 2;
        const double th = u - static_cast<double>(i);
        const cplx y0v = ys[i][atom], y1v = ys[i + 1][atom];
        if (config.dense_order == 1) return y0v + th * (y1v - y0v);
        const cplx f0 = fs[i][atom], f1 = fs[i + 1][atom];
        const double h00 = (1 + 2 * th) * (1 - th) * (1 - th);
        const double h10 = th * (1 - th) * (1 - th);
        const double h01 = th * th * (3 - 2 * th);
        const double h11 = th * th * (th - 1);
        return h00 * y0v + dt * h10 * f0 + h01 * y1v + dt * h11 * f1;
    };

    auto rhs = [&](double tstage, const std::vector<cplx>& y) {
        std::vector<cplx> d(k);
        for (size_t i = 0; i < k; ++i) {
            cplx acc = -layout.gamma * y[i];  // self term, no delay
            for (size_t j = 0; j < k; ++j) {
                if (j == i) continue;
                const double tq = tstage - delay[i * k + j];
                if (tq <= 0.0) continue;
                acc += coup[i * k + j] * dense(tq, j);
            }
            d[i] = acc;
        }
        return d;
    };

    auto saxpy = [&](const std::vector<cplx>& y, double h, const std::vector<cplx>& f) {
        std::vector<cplx> r(k);
        for (size_t i = 0; i < k; ++i) r[i] = y[i] + h * f[i];
        return r;
    };

    fs.push_back(rhs(0.0, ys[0]));
    for (long n = 0; n < n_steps; ++n) {
        const double t = n * dt;
        const std::vector<cplx>& y = ys.back();
        const auto k1 = fs.back();
        const auto k2 = rhs(t + dt / 2, saxpy(y, dt / 2, k1));
        const auto k3 = rhs(t + dt / 2, saxpy(y, dt / 2, k2));
        const auto k4 = rhs(t + dt, saxpy(y, dt, k3));
        std::vector<cplx> next(k);
        double norm = 0.0;
        for (size_t i = 0; i < k; ++i) {
            next[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            norm += std::norm(next[i]);
        }
        if (!std::isfinite(norm))
            throw NumericalError("non-finite state during full-chain integration",
                                 (n + 1) * dt);
        ys.push_back(std::move(next));
        fs.push_back(rhs((n + 1) * dt, ys.back()));
    }

    FullChainTrajectory out;
    out.t.resize(ys.size());
    for (size_t i = 0; i < ys.size(); ++i) out.t[i] = static_cast<double>(i) * dt;
    out.amps = std::move(ys);
    out.phase_l = layout.phase_l;
    out.dt = dt;
    return out;
}

}  // namespace qcavity
