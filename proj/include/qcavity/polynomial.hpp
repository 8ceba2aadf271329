// Small dense polynomial helpers and a complex cubic solver.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "common.hpp"

namespace qcavity {

// Coefficients in ascending powers: p[0] + p[1] x + ...
template <typename T>
using Poly = std::vector<T>;

template <typename T>
Poly<T> poly_mul(const Poly<T>& a, const Poly<T>& b) {
    if (a.empty() || b.empty()) return {};
    Poly<T> c(a.size() + b.size() - 1, T{});
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

template <typename T>
Poly<T> poly_add(Poly<T> a, const Poly<T>& b) {
    if (b.size() > a.size()) a.resize(b.size(), T{});
    for (size_t i = 0; i < b.size(); ++i) a[i] += b[i];
    return a;
}

template <typename T, typename X>
auto poly_eval(const Poly<T>& p, const X& x) {
    using R = decltype(p[0] * x);
    R acc{};
    for (size_t i = p.size(); i-- > 0;) acc = acc * x + p[i];
    return acc;
}

// (x + c)^n
template <typename T>
Poly<T> poly_binomial_power(const T& c, unsigned n) {
    Poly<T> p{T(1.0)};
    Poly<T> lin{c, T(1.0)};
    for (unsigned i = 0; i < n; ++i) p = poly_mul(p, lin);
    return p;
}

// Truncated series quotient a(x)/b(x) mod x^(count), b[0] != 0.
template <typename T>
Poly<T> poly_series_div(const Poly<T>& a, const Poly<T>& b, size_t count) {
    Poly<T> c(count, T{});
    for (size_t m = 0; m < count; ++m) {
        T acc = m < a.size() ? a[m] : T{};
        for (size_t j = 1; j <= m && j < b.size(); ++j) acc -= b[j] * c[m - j];
        c[m] = acc / b[0];
    }
    return c;
}

// Roots of a3 x^3 + a2 x^2 + a1 x + a0 with complex coefficients, a3 != 0.
// Cardano on the depressed cubic, then a Newton polish per root.
inline std::array<cplx, 3> solve_cubic(cplx a3, cplx a2, cplx a1, cplx a0) {
    if (std::abs(a3) == 0.0) throw ConfigError("solve_cubic: leading coefficient is zero");
    const cplx b = a2 / a3, c = a1 / a3, d = a0 / a3;
    const cplx shift = b / 3.0;
    const cplx p = c - b * b / 3.0;
    const cplx q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;

    std::array<cplx, 3> roots;
    const cplx disc = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
    // pick the larger |u^3| branch to avoid cancellation
    cplx u3 = -q / 2.0 + disc;
    if (std::abs(-q / 2.0 - disc) > std::abs(u3)) u3 = -q / 2.0 - disc;
    if (std::abs(u3) == 0.0) {
        roots = {-shift, -shift, -shift};
    } else {
        const cplx u = std::pow(u3, 1.0 / 3.0);
        const cplx w(-0.5, std::sqrt(3.0) / 2.0);  // primitive cube root of unity
        for (int k = 0; k < 3; ++k) {
            cplx uk = u * std::pow(w, k);
            roots[k] = uk - p / (3.0 * uk) - shift;
        }
    }
    // Newton polish on the original cubic
    for (auto& r : roots) {
        for (int it = 0; it < 3; ++it) {
            cplx f = ((a3 * r + a2) * r + a1) * r + a0;
            cplx df = (3.0 * a3 * r + 2.0 * a2) * r + a1;
            if (std::abs(df) == 0.0) break;
            r -= f / df;
        }
    }
    return roots;
}

}  // namespace qcavity
