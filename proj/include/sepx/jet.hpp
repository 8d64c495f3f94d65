#pragma once
// Truncated power series in epsilon with complex coefficients.
// Orders 0..kJetN-1 are kept; everything above is dropped.

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace sepx {

using cplx = std::complex<double>;

inline constexpr int kJetN = 4;

struct Jet {
    std::array<cplx, kJetN> c{};

    Jet() = default;
    Jet(double x) { c[0] = x; }
    Jet(cplx x) { c[0] = x; }

    static Jet eps(cplx a = 1.0) {
        Jet j;
        j.c[1] = a;
        return j;
    }
    static Jet order(int l, cplx a) {
        Jet j;
        if (l >= 0 && l < kJetN) j.c[l] = a;
        return j;
    }

    cplx& operator[](int i) { return c[i]; }
    const cplx& operator[](int i) const { return c[i]; }

    Jet& operator+=(const Jet& o) {
        for (int i = 0; i < kJetN; ++i) c[i] += o.c[i];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (int i = 0; i < kJetN; ++i) c[i] -= o.c[i];
        return *this;
    }
    Jet& operator*=(cplx s) {
        for (auto& x : c) x *= s;
        return *this;
    }
    Jet& operator*=(const Jet& o);

    bool is_zero() const {
        for (auto& x : c)
            if (x != cplx(0)) return false;
        return true;
    }
    // lowest nonvanishing order, kJetN if zero
    int valuation() const {
        for (int i = 0; i < kJetN; ++i)
            if (c[i] != cplx(0)) return i;
        return kJetN;
    }
    double max_abs() const {
        double m = 0;
        for (auto& x : c) m = std::max(m, std::abs(x));
        return m;
    }
    cplx at(cplx e) const {
        cplx r = 0;
        for (int i = kJetN - 1; i >= 0; --i) r = r * e + c[i];
        return r;
    }
    // keep orders <= l
    Jet truncated(int l) const {
        Jet r;
        for (int i = 0; i <= l && i < kJetN; ++i) r.c[i] = c[i];
        return r;
    }
};

inline Jet operator+(Jet a, const Jet& b) { return a += b; }
inline Jet operator-(Jet a, const Jet& b) { return a -= b; }
inline Jet operator-(Jet a) {
    for (auto& x : a.c) x = -x;
    return a;
}
inline Jet operator*(Jet a, cplx s) { return a *= s; }
inline Jet operator*(cplx s, Jet a) { return a *= s; }
inline Jet operator*(Jet a, double s) { return a *= cplx(s); }
inline Jet operator*(double s, Jet a) { return a *= cplx(s); }

inline Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (int i = 0; i < kJetN; ++i) {
        if (a.c[i] == cplx(0)) continue;
        for (int j = 0; i + j < kJetN; ++j) r.c[i + j] += a.c[i] * b.c[j];
    }
    return r;
}
inline Jet& Jet::operator*=(const Jet& o) { return *this = *this * o; }

// r += a*b without temporaries; hot loop of every convolution
inline void fma_into(Jet& r, const Jet& a, const Jet& b) {
    for (int i = 0; i < kJetN; ++i) {
        const cplx ai = a.c[i];
        if (ai == cplx(0)) continue;
        for (int j = 0; i + j < kJetN; ++j) r.c[i + j] += ai * b.c[j];
    }
}

inline Jet inverse(const Jet& a) {
    if (a.c[0] == cplx(0)) throw std::domain_error("jet inverse: zero constant term");
    Jet r;
    r.c[0] = 1.0 / a.c[0];
    for (int n = 1; n < kJetN; ++n) {
        cplx s = 0;
        for (int k = 1; k <= n; ++k) s += a.c[k] * r.c[n - k];
        r.c[n] = -s * r.c[0];
    }
    return r;
}
inline Jet operator/(const Jet& a, const Jet& b) { return a * inverse(b); }
inline Jet operator/(const Jet& a, cplx s) { return a * (1.0 / s); }

inline Jet conj(const Jet& a) {
    Jet r;
    for (int i = 0; i < kJetN; ++i) r.c[i] = std::conj(a.c[i]);
    return r;
}

// exp of a jet: e^{a0} * sum_n (a-a0)^n/n!
inline Jet exp(const Jet& a) {
    Jet n = a;
    n.c[0] = 0;
    Jet term(1.0), sum(1.0);
    for (int k = 1; k < kJetN; ++k) {
        term = term * n * (1.0 / k);
        sum += term;
    }
    return sum * std::exp(a.c[0]);
}

inline Jet pow_int(const Jet& a, int n) {
    Jet r(1.0);
    for (int i = 0; i < n; ++i) r = r * a;
    return r;
}

}  // namespace sepx
