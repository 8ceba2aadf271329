// Exact series solution by term-by-term inverse Laplace transform of the
// geometric expansion of the cavity transform:
//
//   c0(t) = sum_k e^{i k phi} f_k(t - k tau) O(t - k tau),
//   f_0(t) = e^{-t},
//   f_k   = L^{-1}{ [1/(s+1) - 1/(s-1)] G(s)^k },  G = (s-1) N / ((s+1)(s+N)),
//
// in units gamma = 1. For k >= 1 the transform collapses to
//
//   H_k(s) = -2 N^k (s-1)^{k-1} / ((s+1)^{k+1} (s+N)^k),
//
// a pole at -1 of multiplicity k+1 and one at -N of multiplicity k. The
// repeated-pole residues come from exact polynomial algebra: shift to the
// pole, expand the analytic cofactor as a truncated power series, read the
// coefficients. The intermediate binomial sums cancel violently while the
// final coefficients stay modest, so the construction runs in double-double
// arithmetic and only the finished coefficients are rounded.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "common.hpp"
#include "dde_core.hpp"
#include "model.hpp"
#include "polynomial.hpp"
#include "wide.hpp"

namespace qcavity {

struct RationalFunction {
    Poly<cplx> num;
    Poly<cplx> den;  // normalized monic

    void normalize() {
        while (!den.empty() && std::abs(den.back()) == 0.0) den.pop_back();
        if (den.empty()) throw ConfigError("rational function with zero denominator");
        const cplx lead = den.back();
        for (auto& c : den) c /= lead;
        for (auto& c : num) c /= lead;
    }
};

enum class SeriesPrecision { standard, extended };

struct SeriesOptions {
    SeriesPrecision precision = SeriesPrecision::standard;
    std::optional<int> k_limit;  // override the per-mode default

    int limit() const {
        if (k_limit) return *k_limit;
        return precision == SeriesPrecision::standard ? 300 : 1200;
    }
};

// Sum of e^{pole t} * P(t) contributions; the closed form of one series term.
struct ExpPolynomial {
    struct Term {
        cplx pole;
        std::vector<double> coeffs;     // ascending powers of t
        std::vector<wide> wide_coeffs;  // same, before rounding
    };
    std::vector<Term> terms;
    int k = 0;

    double evaluate(double t) const {
        double acc = 0.0;
        for (const auto& term : terms) {
            double p = 0.0;
            for (size_t i = term.coeffs.size(); i-- > 0;) p = p * t + term.coeffs[i];
            acc += p * std::exp(term.pole.real() * t);
        }
        return acc;
    }

    double evaluate_extended(double t) const {
        const wide tw(t);
        wide acc(0.0L);
        for (const auto& term : terms) {
            wide p(0.0L);
            for (size_t i = term.wide_coeffs.size(); i-- > 0;)
                p = p * tw + term.wide_coeffs[i];
            acc += p * qcavity::exp(wide(term.pole.real()) * tw);
        }
        return static_cast<double>(acc);
    }

    double evaluate(double t, SeriesPrecision mode) const {
        return mode == SeriesPrecision::extended ? evaluate_extended(t) : evaluate(t);
    }
};

namespace detail {

// Minimal complex-over-scalar so the same recurrences run in double and in
// double-double precision.
template <typename R>
struct Cx {
    R re{}, im{};
    Cx operator+(const Cx& o) const { return {re + o.re, im + o.im}; }
    Cx operator-(const Cx& o) const { return {re - o.re, im - o.im}; }
    Cx operator*(const Cx& o) const {
        return {re * o.re - im * o.im, re * o.im + im * o.re};
    }
    Cx scaled(const R& s) const { return {re * s, im * s}; }
};

// Piecewise-exact summation of the full gated series. The half-trip delay
// is split into r aligned subintervals; on each one the solution is entire
// and the delayed amplitudes are just the Taylor polynomials of r (and 2r)
// intervals earlier evaluated at the same local coordinate, so the sum
// propagates by exact Taylor recurrences. Splitting keeps N*h small, which
// bounds the cancellation inside each Horner evaluation. Only a rolling
// window of 2r+1 intervals is kept; grid values are emitted as the
// propagation sweeps past them.
template <typename R>
void piecewise_series_eval(const CavityParams& p, const std::vector<double>& t_grid,
                           int degree, std::vector<DelayState>& out) {
    const double half = p.delay_tau / 2.0;
    const double n = p.n_atoms;
    const int r = std::max(1, static_cast<int>(std::ceil(n * half / 1.5)));
    const double h = half / r;
    double t_max = 0.0;
    for (double t : t_grid) t_max = std::max(t_max, t);
    const long n_iv = static_cast<long>(std::ceil(t_max / h - 1e-12)) + 1;

    const double theta = pi + p.phase_offset;
    const double g = std::sqrt(2.0 * n);
    const Cx<R> cpl{R(-g * std::cos(theta / 2.0)), R(-g * std::sin(theta / 2.0))};
    const Cx<R> fb{R(-n * std::cos(theta)), R(-n * std::sin(theta))};
    const R damp0(-(1.0 + p.env_rate / 2.0));
    const R dampm(-(n + p.env_rate / 2.0));
    const R hh(h);

    auto horner = [](const std::vector<Cx<R>>& c, const R& x) {
        Cx<R> acc{};
        for (size_t i = c.size(); i-- > 0;) acc = acc.scaled(x) + c[i];
        return acc;
    };

    // grid indices sorted by time, consumed as intervals complete
    std::vector<size_t> order(t_grid.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t x, size_t y) { return t_grid[x] < t_grid[y]; });
    size_t next = 0;

    const long window = 2L * r + 1;
    std::vector<std::vector<Cx<R>>> aw(window), bw(window);
    for (long j = 0; j < n_iv; ++j) {
        std::vector<Cx<R>> aj(degree + 1), bj(degree + 1);
        const auto& a_prev = aw[(j - 1 + window) % window];
        const auto& b_prev = bw[(j - 1 + window) % window];
        if (j == 0) {
            aj[0] = Cx<R>{R(1.0), R(0.0)};
        } else {
            aj[0] = horner(a_prev, hh);
            bj[0] = horner(b_prev, hh);
        }
        const std::vector<Cx<R>>* a_del = j >= r ? &aw[(j - r) % window] : nullptr;
        const std::vector<Cx<R>>* b_del = j >= r ? &bw[(j - r) % window] : nullptr;
        const std::vector<Cx<R>>* b_del2 = j >= 2 * r ? &bw[(j - 2 * r) % window] : nullptr;
        for (int m = 0; m < degree; ++m) {
            const R inv(1.0 / (m + 1.0));
            Cx<R> da = aj[m].scaled(damp0);
            if (b_del) da = da + cpl * (*b_del)[m];
            aj[m + 1] = da.scaled(inv);
            Cx<R> db = bj[m].scaled(dampm);
            if (a_del) db = db + cpl * (*a_del)[m];
            if (b_del2) db = db + fb * (*b_del2)[m];
            bj[m + 1] = db.scaled(inv);
        }
        // emit every grid point inside [j h, (j+1) h) (and any stragglers on
        // the final interval)
        while (next < order.size() &&
               (t_grid[order[next]] < (j + 1) * h || j == n_iv - 1)) {
            const size_t idx = order[next];
            const R xi(t_grid[idx] - j * h);
            const Cx<R> c0 = horner(aj, xi);
            const Cx<R> cm = horner(bj, xi);
            out[idx].c0 = {static_cast<double>(c0.re), static_cast<double>(c0.im)};
            out[idx].cm = {static_cast<double>(cm.re), static_cast<double>(cm.im)};
            ++next;
        }
        aw[j % window] = std::move(aj);
        bw[j % window] = std::move(bj);
    }
}

inline void check_series_order(int k, int n_atoms, const SeriesOptions& opt) {
    if (k < 0) throw ConfigError("series index k must be >= 0");
    if (k > opt.limit())
        throw MethodValidityError(
            "series order k=" + std::to_string(k) + " above the stability limit " +
            std::to_string(opt.limit()) +
            "; use the dde method (or extended precision) instead");
    // keep N^k and the binomial intermediates inside the long double range
    const double span = k * (2.0 * std::log10(double(n_atoms) + 1.0) + 0.7);
    if (span > 4500.0)
        throw MethodValidityError(
            "series order k=" + std::to_string(k) +
            " with N=" + std::to_string(n_atoms) +
            " exceeds the coefficient range; use the dde method instead");
}

inline std::vector<double> round_coeffs(const std::vector<wide>& w, int k, int n_atoms) {
    std::vector<double> out(w.size());
    for (size_t i = 0; i < w.size(); ++i) {
        out[i] = static_cast<double>(w[i]);
        if (!std::isfinite(out[i]))
            throw MethodValidityError(
                "series term k=" + std::to_string(k) + ", N=" + std::to_string(n_atoms) +
                " has coefficients outside double range; extended precision required");
    }
    return out;
}

}  // namespace detail

// Closed form of the k-th series term (phase factor e^{i k phi} excluded;
// the summation applies it).
inline ExpPolynomial term_fk(int k, const CavityParams& params,
                             const SeriesOptions& opt = {}) {
    params.validate();
    detail::check_series_order(k, params.n_atoms, opt);
    ExpPolynomial f;
    f.k = k;
    if (k == 0) {
        f.terms.push_back({cplx(-1.0, 0.0), {1.0}, {wide(1.0L)}});
        return f;
    }

    const long long n = params.n_atoms;
    const wide nw(static_cast<long long>(n));
    const wide scale = -wide(2.0L) * pow_int(nw, static_cast<unsigned long long>(k));

    if (n == 1) {
        // poles coincide: single pole -1 with multiplicity 2k+1
        Poly<wide> a = poly_binomial_power(wide(-2.0L), k - 1);
        for (auto& c : a) c *= scale;
        ExpPolynomial::Term term;
        term.pole = cplx(-1.0, 0.0);
        term.wide_coeffs.assign(2 * k + 1, wide(0.0L));
        for (size_t m = 0; m < a.size(); ++m) {
            const unsigned power = 2 * k - static_cast<unsigned>(m);
            term.wide_coeffs[power] = a[m] / factorial(power);
        }
        term.coeffs = detail::round_coeffs(term.wide_coeffs, k, params.n_atoms);
        f.terms.push_back(std::move(term));
        return f;
    }

    // pole -1: shift u = s+1, cofactor -2N^k (u-2)^{k-1} / (u + (N-1))^k
    {
        Poly<wide> a = poly_binomial_power(wide(-2.0L), k - 1);
        for (auto& c : a) c *= scale;
        Poly<wide> b = poly_binomial_power(wide(static_cast<long long>(n - 1)), k);
        Poly<wide> c = poly_series_div(a, b, k + 1);
        ExpPolynomial::Term term;
        term.pole = cplx(-1.0, 0.0);
        term.wide_coeffs.assign(k + 1, wide(0.0L));
        for (int m = 0; m <= k; ++m) {
            const unsigned power = static_cast<unsigned>(k - m);
            term.wide_coeffs[power] = c[m] / factorial(power);
        }
        term.coeffs = detail::round_coeffs(term.wide_coeffs, k, params.n_atoms);
        f.terms.push_back(std::move(term));
    }
    // pole -N: shift w = s+N, cofactor -2N^k (w-(N+1))^{k-1} / (w-(N-1))^{k+1}
    {
        Poly<wide> a = poly_binomial_power(wide(static_cast<long long>(-(n + 1))), k - 1);
        for (auto& c : a) c *= scale;
        Poly<wide> b = poly_binomial_power(wide(static_cast<long long>(-(n - 1))), k + 1);
        Poly<wide> c = poly_series_div(a, b, k);
        ExpPolynomial::Term term;
        term.pole = cplx(static_cast<double>(-n), 0.0);
        term.wide_coeffs.assign(k, wide(0.0L));
        for (int m = 0; m < k; ++m) {
            const unsigned power = static_cast<unsigned>(k - 1 - m);
            term.wide_coeffs[power] = c[m] / factorial(power);
        }
        term.coeffs = detail::round_coeffs(term.wide_coeffs, k, params.n_atoms);
        f.terms.push_back(std::move(term));
    }
    return f;
}

// Laplace-domain form of the k-th term (for oracles and round-trip checks).
inline RationalFunction term_transform(int k, const CavityParams& params) {
    params.validate();
    RationalFunction r;
    if (k == 0) {
        r.num = {cplx(1.0)};
        r.den = {cplx(1.0), cplx(1.0)};
        return r;
    }
    const double n = params.n_atoms;
    r.num = poly_binomial_power(cplx(-1.0), k - 1);
    const double scale = -2.0 * std::pow(n, k);
    for (auto& c : r.num) c *= scale;
    r.den = poly_mul(poly_binomial_power(cplx(1.0), k + 1),
                     poly_binomial_power(cplx(n, 0.0), k));
    r.normalize();
    return r;
}

// Re-expand an ExpPolynomial to its rational transform,
//   t^j e^{p t} <-> j! / (s-p)^{j+1}.
inline RationalFunction rational_from_exppoly(const ExpPolynomial& f) {
    // common denominator: prod (s - p_i)^{deg_i + 1}
    std::vector<Poly<cplx>> den_factors;
    for (const auto& term : f.terms)
        den_factors.push_back(poly_binomial_power(-term.pole, static_cast<unsigned>(term.coeffs.size())));
    RationalFunction r;
    r.den = {cplx(1.0)};
    for (const auto& d : den_factors) r.den = poly_mul(r.den, d);
    r.num = {};
    for (size_t i = 0; i < f.terms.size(); ++i) {
        const auto& term = f.terms[i];
        Poly<cplx> rest{cplx(1.0)};
        for (size_t j = 0; j < den_factors.size(); ++j)
            if (j != i) rest = poly_mul(rest, den_factors[j]);
        const unsigned mult = static_cast<unsigned>(term.coeffs.size());
        for (unsigned j = 0; j < mult; ++j) {
            // coeff * t^j -> coeff * j! * (s-p)^{mult-1-j} over (s-p)^mult
            double fact = 1.0;
            for (unsigned q = 2; q <= j; ++q) fact *= q;
            Poly<cplx> piece = poly_binomial_power(-term.pole, mult - 1 - j);
            for (auto& c : piece) c *= term.coeffs[j] * fact;
            r.num = poly_add(r.num, poly_mul(piece, rest));
        }
    }
    r.normalize();
    return r;
}

// Sum the gated series on a time grid. Default k_max covers the horizon
// exactly; later terms are switched off by the Heaviside gate anyway.
inline Trajectory series_c0(const CavityParams& params, const std::vector<double>& t_grid,
                            std::optional<int> k_max = std::nullopt,
                            const SeriesOptions& opt = {}) {
    params.validate();
    if (t_grid.empty()) throw ConfigError("empty time grid");
    double t_max = 0.0;
    for (double t : t_grid) {
        if (t < 0.0) throw ConfigError("series grid times must be >= 0");
        t_max = std::max(t_max, t);
    }
    const double tau = params.delay_tau;
    const int k_needed = static_cast<int>(std::floor(t_max / tau)) + 1;
    const int km = k_max ? *k_max : k_needed;
    detail::check_series_order(km, params.n_atoms, opt);

    Trajectory out;
    out.t = t_grid;
    out.states.resize(t_grid.size());
    out.meta.method = "series";
    out.meta.params = params;
    out.meta.extra["k_max"] = std::to_string(km);
    out.meta.extra["precision"] =
        opt.precision == SeriesPrecision::extended ? "extended" : "standard";

    if (km >= k_needed) {
        // Full sum over the horizon: every gated term is live, so the sum is
        // propagated piecewise-exactly on delay-aligned subintervals. The
        // exp-polynomial representation of individual f_k terms cancels
        // catastrophically for large k; this route is algebraically the same
        // sum without that failure mode.
        if (opt.precision == SeriesPrecision::extended)
            detail::piecewise_series_eval<wide>(params, t_grid, 40, out.states);
        else
            detail::piecewise_series_eval<double>(params, t_grid, 28, out.states);
        out.meta.extra["summation"] = "piecewise";
        return out;
    }

    // Explicit truncation below the horizon: term-by-term partial fractions.
    std::vector<ExpPolynomial> terms;
    terms.reserve(km + 1);
    for (int k = 0; k <= km; ++k) terms.push_back(term_fk(k, params, opt));

    const cplx phase = std::exp(cplx(0.0, params.phase_offset));
    for (size_t i = 0; i < t_grid.size(); ++i) {
        const double t = t_grid[i];
        cplx acc{};
        cplx ph(1.0, 0.0);
        for (int k = 0; k <= km; ++k, ph *= phase) {
            const double x = t - k * tau;
            if (x < 0.0) break;
            if (x == 0.0 && k > 0) continue;  // f_k(0) = 0 for k >= 1
            acc += ph * terms[k].evaluate(x, opt.precision);
        }
        out.states[i].c0 = acc;
    }
    out.meta.extra["summation"] = "term-wise";
    return out;
}

}  // namespace qcavity
