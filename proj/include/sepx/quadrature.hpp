#pragma once
// thin wrappers over boost's double-exponential rules

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <complex>

namespace sepx {

// tanh-sinh on [a, b] split into n equal pieces; F returns double or complex
template <class F>
auto quad_ts(const F& f, double a, double b, int n = 1, double tol = 1e-14, double* err = nullptr) {
    using R = decltype(f(a));
    if (a == b) return R(0);
    // the integrator caches its abscissas; one per thread
    thread_local boost::math::quadrature::tanh_sinh<double> ts(12);
    R s = R(0);
    for (int i = 0; i < n; ++i) {
        const double lo = a + (b - a) * i / n, hi = a + (b - a) * (i + 1) / n;
        double e = 0;
        s += ts.integrate(f, lo, hi, tol, &e);
        if (err) *err += e;
    }
    return s;
}

// pieces of length at most `len`
template <class F>
auto quad_pieces(const F& f, double a, double b, double len, double tol = 1e-14, double* err = nullptr) {
    const int n = std::max(1, int(std::ceil(std::abs(b - a) / len)));
    return quad_ts(f, a, b, n, tol, err);
}

}  // namespace sepx
