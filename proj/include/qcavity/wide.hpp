// Double-double arithmetic on top of x87 long double.
//
// The series solver expands rational transforms with repeated poles; the
// intermediate binomial sums cancel catastrophically while the final
// coefficients stay modest. Carrying ~38 significant digits and the long
// double exponent range (~1e4932) through the coefficient pipeline keeps
// both the cancellation and the N^k intermediates harmless.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace qcavity {

struct wide {
    long double hi{0.0L};
    long double lo{0.0L};

    constexpr wide() = default;
    constexpr wide(long double h) : hi(h), lo(0.0L) {}
    constexpr wide(long double h, long double l) : hi(h), lo(l) {}
    explicit constexpr wide(double h) : hi(h), lo(0.0L) {}
    explicit constexpr wide(int h) : hi(h), lo(0.0L) {}
    explicit constexpr wide(long long h) : hi(static_cast<long double>(h)), lo(0.0L) {}

    explicit operator double() const { return static_cast<double>(hi + lo); }
    explicit operator long double() const { return hi + lo; }
};

namespace detail {

inline wide two_sum(long double a, long double b) {
    long double s = a + b;
    long double bb = s - a;
    long double err = (a - (s - bb)) + (b - bb);
    return {s, err};
}

// requires |a| >= |b|
inline wide quick_two_sum(long double a, long double b) {
    long double s = a + b;
    long double err = b - (s - a);
    return {s, err};
}

inline wide two_prod(long double a, long double b) {
    long double p = a * b;
    long double err = fmal(a, b, -p);
    return {p, err};
}

}  // namespace detail

inline wide operator+(const wide& a, const wide& b) {
    wide s = detail::two_sum(a.hi, b.hi);
    wide t = detail::two_sum(a.lo, b.lo);
    s.lo += t.hi;
    s = detail::quick_two_sum(s.hi, s.lo);
    s.lo += t.lo;
    return detail::quick_two_sum(s.hi, s.lo);
}

inline wide operator-(const wide& a) { return {-a.hi, -a.lo}; }
inline wide operator-(const wide& a, const wide& b) { return a + (-b); }

inline wide operator*(const wide& a, const wide& b) {
    wide p = detail::two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return detail::quick_two_sum(p.hi, p.lo);
}

inline wide operator/(const wide& a, const wide& b) {
    long double q1 = a.hi / b.hi;
    wide r = a - wide(q1) * b;
    long double q2 = r.hi / b.hi;
    r = r - wide(q2) * b;
    long double q3 = r.hi / b.hi;
    wide q = detail::quick_two_sum(q1, q2);
    return q + wide(q3);
}

inline wide& operator+=(wide& a, const wide& b) { a = a + b; return a; }
inline wide& operator-=(wide& a, const wide& b) { a = a - b; return a; }
inline wide& operator*=(wide& a, const wide& b) { a = a * b; return a; }
inline wide& operator/=(wide& a, const wide& b) { a = a / b; return a; }

inline bool operator<(const wide& a, const wide& b) {
    return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo);
}
inline bool operator>(const wide& a, const wide& b) { return b < a; }
inline bool operator==(const wide& a, const wide& b) { return a.hi == b.hi && a.lo == b.lo; }

inline wide fabs(const wide& a) { return a.hi < 0.0L ? -a : a; }
inline bool isfinite(const wide& a) { return std::isfinite(a.hi); }

// 2^n, exact
inline wide ldexp(const wide& a, int n) {
    return {ldexpl(a.hi, n), ldexpl(a.lo, n)};
}

namespace detail {

// exp on [-0.5, 0.5]: scale down by 2^9, short Taylor sum, square back up.
inline wide exp_small(const wide& r) {
    wide x = qcavity::ldexp(r, -9);
    wide term(1.0L);
    wide sum(1.0L);
    for (int j = 1; j <= 14; ++j) {
        term = term * x / wide(static_cast<long long>(j));
        sum += term;
    }
    for (int i = 0; i < 9; ++i) sum = sum * sum;
    return sum;
}

// e computed once from its Taylor series; no decimal constants needed.
inline const wide& euler_e() {
    static const wide e = [] {
        wide term(1.0L), sum(1.0L);
        for (int j = 1; j <= 45; ++j) {
            term = term / wide(static_cast<long long>(j));
            sum += term;
        }
        return sum;
    }();
    return e;
}

inline wide ipow(wide base, unsigned long long n) {
    wide acc(1.0L);
    while (n) {
        if (n & 1ULL) acc *= base;
        base *= base;
        n >>= 1;
    }
    return acc;
}

}  // namespace detail

// exp(a) with ~1e-36 relative accuracy over the full long double range.
inline wide exp(const wide& a) {
    if (a.hi < -11360.0L) return wide(0.0L);
    if (a.hi > 11360.0L) return wide(std::numeric_limits<long double>::infinity());
    long long n = llroundl(a.hi);
    wide r = a - wide(n);
    wide er = detail::exp_small(r);
    if (n == 0) return er;
    wide en = detail::ipow(detail::euler_e(), static_cast<unsigned long long>(n < 0 ? -n : n));
    return n > 0 ? er * en : er / en;
}

inline wide pow_int(const wide& base, unsigned long long n) { return detail::ipow(base, n); }

// n! as wide (exact up to 2^64, correctly rounded products beyond)
inline wide factorial(unsigned n) {
    wide acc(1.0L);
    for (unsigned j = 2; j <= n; ++j) acc *= wide(static_cast<long long>(j));
    return acc;
}

}  // namespace qcavity
