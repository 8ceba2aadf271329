// Trajectory post-processing: oscillation fits, retardation-kink detection
// and cross-method distances.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "common.hpp"
#include "dde_core.hpp"

namespace qcavity {

struct OscillationFit {
    double frequency = 0.0;        // dominant angular frequency of c0
    double amp_decay_rate = 0.0;   // envelope rate of |c0|
    double prob_decay_rate = 0.0;  // envelope rate of |c0|^2 (= 2x amplitude rate)
    int n_peaks = 0;
};

// Peak detection on |c0| with quadratic sub-sample refinement, then
//   frequency = pi / mean peak spacing   (|cos| peaks twice per period)
//   envelope  = least squares on log peak heights.
// Peaks with prominence below 5% of the overall magnitude swing are ripple
// (residue-tail beating, integration wiggle) and are dropped.
inline OscillationFit fit_oscillation(const Trajectory& tr) {
    const size_t n = tr.size();
    if (n < 5) throw ConfigError("trajectory too short to fit");
    std::vector<double> mag(n);
    double lo = 1e300, hi = -1e300;
    for (size_t i = 0; i < n; ++i) {
        mag[i] = std::abs(tr.states[i].c0);
        lo = std::min(lo, mag[i]);
        hi = std::max(hi, mag[i]);
    }
    const double min_prominence = 0.05 * (hi - lo);

    // hysteresis walk: a candidate maximum becomes a peak once the signal
    // has dropped min_prominence below it, and the search re-arms once it
    // has risen min_prominence above the following valley
    std::vector<size_t> peaks;
    bool armed = true;
    size_t max_idx = 0;
    double cur_max = mag[0], cur_min = mag[0];
    for (size_t i = 1; i < n; ++i) {
        if (armed) {
            if (mag[i] > cur_max) {
                cur_max = mag[i];
                max_idx = i;
            } else if (cur_max - mag[i] > min_prominence) {
                if (max_idx > 0) peaks.push_back(max_idx);
                armed = false;
                cur_min = mag[i];
            }
        } else {
            cur_min = std::min(cur_min, mag[i]);
            if (mag[i] - cur_min > min_prominence) {
                armed = true;
                cur_max = mag[i];
                max_idx = i;
            }
        }
    }

    std::vector<double> t_pk, h_pk;
    for (const size_t i : peaks) {
        if (i + 1 >= n) continue;
        // parabola through the three samples
        const double y0 = mag[i - 1], y1 = mag[i], y2 = mag[i + 1];
        const double denom = y0 - 2.0 * y1 + y2;
        double shift = 0.0;
        if (denom != 0.0) shift = 0.5 * (y0 - y2) / denom;
        shift = std::clamp(shift, -0.5, 0.5);
        const double dt = tr.t[i + 1] - tr.t[i];
        t_pk.push_back(tr.t[i] + shift * dt);
        h_pk.push_back(y1 - 0.25 * (y0 - y2) * shift);
    }
    if (t_pk.size() < 3) throw ConfigError("fewer than 3 oscillation peaks found");

    OscillationFit fit;
    fit.n_peaks = static_cast<int>(t_pk.size());
    fit.frequency = pi * static_cast<double>(t_pk.size() - 1) / (t_pk.back() - t_pk.front());

    // least squares of log h on t
    const size_t m = t_pk.size();
    double st = 0.0, sh = 0.0;
    for (size_t i = 0; i < m; ++i) {
        st += t_pk[i];
        sh += std::log(h_pk[i]);
    }
    st /= m;
    sh /= m;
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < m; ++i) {
        num += (t_pk[i] - st) * (std::log(h_pk[i]) - sh);
        den += (t_pk[i] - st) * (t_pk[i] - st);
    }
    fit.amp_decay_rate = -num / den;
    fit.prob_decay_rate = 2.0 * fit.amp_decay_rate;
    return fit;
}

struct KinkOptions {
    int median_window = 8;     // width of the trailing-median baseline
    double z_threshold = 12;   // flag |residual| above z * robust sigma
    double rel_floor = 0.02;   // ... and above this fraction of the largest spike
    double abs_floor = 1e-13;  // ignore residuals below this outright
    int merge_gap = 8;         // nodes allowed between flags in one cluster
};

// Second-difference spike detector. The second difference of p0 on a
// uniform grid tracks p0'' * dt^2, which is smooth except where a
// retardation kink activates; each node is compared against the linear
// extrapolation of the trailing window (a centered or median baseline
// either leaks the spike into pre-kink nodes or carries an O(p''' dt^3)
// trend bias that buries the weaker kinks). Flagged nodes are clustered;
// the cluster onsets come back, good to about one grid step.
inline std::vector<double> detect_kinks(const std::vector<double>& t,
                                        const std::vector<double>& p,
                                        const KinkOptions& opt = {}) {
    const size_t n = t.size();
    const size_t w = static_cast<size_t>(opt.median_window);
    if (n < 4 * w || p.size() != n) throw ConfigError("kink detector needs more samples");
    std::vector<double> d2(n, 0.0);
    for (size_t i = 1; i + 1 < n; ++i) d2[i] = p[i + 1] - 2.0 * p[i] + p[i - 1];

    // residual against the trailing linear fit of d2[i-w-1 .. i-2]
    const size_t start = w + 2;
    std::vector<double> resid(n, 0.0);
    const double jc = (w - 1) / 2.0;  // window centroid
    double jvar = 0.0;
    for (size_t j = 0; j < w; ++j) jvar += (j - jc) * (j - jc);
    for (size_t i = start; i + 1 < n; ++i) {
        double mean = 0.0, slope = 0.0;
        for (size_t j = 0; j < w; ++j) {
            const double v = d2[i - w - 1 + j];
            mean += v;
            slope += (j - jc) * v;
        }
        mean /= w;
        slope /= jvar;
        resid[i] = d2[i] - (mean + slope * (w + 1 - jc));
    }

    // robust scale and the largest spike set the two-part threshold
    std::vector<double> buf;
    double peak = 0.0;
    for (size_t i = start; i + 1 < n; ++i) {
        buf.push_back(std::fabs(resid[i]));
        peak = std::max(peak, std::fabs(resid[i]));
    }
    std::nth_element(buf.begin(), buf.begin() + buf.size() / 2, buf.end());
    const double sigma = 1.4826 * buf[buf.size() / 2];
    const double thresh =
        std::max({opt.z_threshold * sigma, opt.rel_floor * peak, opt.abs_floor});

    std::vector<double> onsets;
    long last_flag = -1000000;
    bool in_cluster = false;
    for (size_t i = start; i + 1 < n; ++i) {
        if (std::fabs(resid[i]) > thresh) {
            if (!in_cluster || static_cast<long>(i) - last_flag > opt.merge_gap) {
                onsets.push_back(t[i]);
                in_cluster = true;
            }
            last_flag = static_cast<long>(i);
        } else if (in_cluster && static_cast<long>(i) - last_flag > opt.merge_gap) {
            in_cluster = false;
        }
    }
    return onsets;
}

// sup and L2 distances between c0 trajectories on a shared grid
struct TrajectoryDistance {
    double sup = 0.0;
    double l2 = 0.0;
};

inline TrajectoryDistance trajectory_distance(const Trajectory& a, const Trajectory& b,
                                              double t_max =
                                                  std::numeric_limits<double>::infinity()) {
    if (a.size() != b.size()) throw ConfigError("trajectories are not on a shared grid");
    TrajectoryDistance d;
    double acc = 0.0;
    size_t used = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a.t[i] > t_max) break;
        if (std::fabs(a.t[i] - b.t[i]) > 1e-12 * std::max(1.0, std::fabs(a.t[i])))
            throw ConfigError("trajectories are not on a shared grid");
        const double diff = std::abs(a.states[i].c0 - b.states[i].c0);
        d.sup = std::max(d.sup, diff);
        acc += diff * diff;
        ++used;
    }
    if (used) d.l2 = std::sqrt(acc / static_cast<double>(used));
    return d;
}

// sup distance of c0 against a reference function of time
template <typename F>
double sup_distance_to(const Trajectory& a, F&& ref,
                       double t_max = std::numeric_limits<double>::infinity()) {
    double sup = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a.t[i] > t_max) break;
        sup = std::max(sup, std::abs(a.states[i].c0 - cplx(ref(a.t[i]))));
    }
    return sup;
}

inline std::vector<double> uniform_grid(double t_max, size_t n_points) {
    if (n_points < 2) throw ConfigError("grid needs at least 2 points");
    std::vector<double> t(n_points);
    for (size_t i = 0; i < n_points; ++i)
        t[i] = t_max * static_cast<double>(i) / static_cast<double>(n_points - 1);
    return t;
}

}  // namespace qcavity
