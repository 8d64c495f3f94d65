#pragma once
// independent checks for the regularized integral and the kernel inverse,
// shared by the unit tests and the acceptance run

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>

#include "random_fields.hpp"
#include "sepx/regint.hpp"

namespace sepx::testing {

// (1/2 pi i) contour integral of F(R)/R over |R| = rho by the trapezoid rule
inline cplx contour_residue_over_R(const std::vector<RTerm>& ts, double rho, int n = 512) {
    cplx s = 0;
    for (int k = 0; k < n; ++k) {
        const cplx R = std::polar(rho, 2 * std::numbers::pi * (k + 0.5) / n);
        for (auto& x : ts) s += x.c * std::exp(double(x.sigma) * R * x.t) * std::pow(R - x.r, -x.n);
    }
    return s / double(n);
}

inline RegularizedIntegrand random_integrand(FieldGen& G, const FieldCtx& c, int nterms) {
    RegularizedIntegrand h;
    for (int i = 0; i < nterms; ++i)
        h.terms.push_back({G.i(0, 1), G.i(-2, 2), G.mode(c.d, 2), cplx(G.u(), G.u()), nullptr});
    return h;
}

inline cplx quad_finite(const std::function<cplx(double)>& f, double a, double b) {
    // plain Gauss-Kronrod, independent of the library's tanh-sinh path; fixed panels of
    // width <= 1/4 resolve these integrands to rounding, adaptivity would only chase 1e-15
    boost::math::quadrature::gauss_kronrod<double, 31> gk;
    if (a == b) return cplx(0);
    const int n = std::max(1, int(std::ceil(std::abs(b - a) * 4)));
    cplx s = 0;
    for (int i = 0; i < n; ++i) {
        const double lo = a + (b - a) * i / n, hi = a + (b - a) * (i + 1) / n;
        auto re = [&](double x) { return f(x).real(); };
        auto im = [&](double x) { return f(x).imag(); };
        s += cplx(gk.integrate(re, lo, hi, 0), gk.integrate(im, lo, hi, 0));
    }
    return s;
}

struct ClauseErrors {
    double clause1 = 0, clause2 = 0, clause3 = 0, clause4 = 0, clause5 = 0;
};

inline ClauseErrors run_clauses(const RegularizedIntegrand& h, cplx z, const std::vector<double>& th, double t,
                                double g, const FieldCtx& c) {
    ClauseErrors E;
    auto F = [&](const RegularizedIntegrand& x, double s, const std::vector<double>& tt) {
        return regint(x, Bounds::lower, s, z, tt, g, c);
    };
    const cplx It = F(h, t, th);
    const double scale = std::max(1.0, std::abs(It));
    // (1) shift of the base point
    for (double t0 : {-1.0, 0.0, 2.0}) {
        auto f = [&](double tau) { return h.eval(tau, z, th, g, c); };
        E.clause1 = std::max(E.clause1, std::abs(It - F(h, t0, th) - quad_finite(f, t0, t)) / scale);
    }
    // (2) the same function of tau written with (z, theta) absorbed into the coefficients
    RegularizedIntegrand h2;
    for (auto& m : h.terms) {
        double ph = 0;
        for (int j = 0; j < c.d; ++j) ph += m.q[j] * th[j];
        h2.terms.push_back({m.p, m.k, m.q, m.coeff * std::pow(z, m.k) * std::polar(1.0, ph), nullptr});
    }
    const std::vector<double> th0(size_t(c.d), 0.0);
    E.clause2 = std::abs(It - regint(h2, Bounds::lower, t, 1.0, th0, g, c)) / scale;
    // (3) Fourier truncation commutes; project the result on |q| <= 1 by a DFT in theta (d = 2)
    if (c.d == 2) {
        const int M = 8, N = 1;
        std::vector<cplx> grid(size_t(M * M));
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j)
                grid[size_t(i * M + j)] = F(h, t, {2 * std::numbers::pi * i / M, 2 * std::numbers::pi * j / M});
        cplx proj = 0;
        for (int a = -N; a <= N; ++a)
            for (int b = -N; b <= N; ++b) {
                if (std::abs(a) + std::abs(b) > N) continue;
                cplx coef = 0;
                for (int i = 0; i < M; ++i)
                    for (int j = 0; j < M; ++j)
                        coef += grid[size_t(i * M + j)] *
                                std::polar(1.0, -2 * std::numbers::pi * (a * i + b * j) / M);
                coef /= double(M * M);
                proj += coef * std::polar(1.0, a * th[0] + b * th[1]);
            }
        E.clause3 = std::abs(proj - F(h.truncated(N), t, th)) / scale;
    }
    // (4) derivative in t
    const double s = 1e-3;
    const cplx fd = (-F(h, t + 2 * s, th) + 8.0 * F(h, t + s, th) - 8.0 * F(h, t - s, th) + F(h, t - 2 * s, th)) / (12 * s);
    E.clause4 = std::abs(fd - h.eval(t, z, th, g, c)) / scale;
    // (5) iterated integral
    const cplx lhs = F(antiderivative(h, g, c), t, th);
    RegularizedIntegrand th1;
    for (auto m : h.terms) {
        m.p += 1;
        th1.terms.push_back(m);
    }
    const cplx rhs = t * It - F(th1, t, th);
    E.clause5 = std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
    return E;
}

inline std::pair<double, double> run_decomposition(const FTField& h, cplx z, const std::vector<double>& th, double t) {
    auto& c = *h.ctx;
    const double g = h.gamma[0].real();
    std::vector<double> tt(size_t(c.d));
    for (int j = 0; j < c.d; ++j) tt[size_t(j)] = th[size_t(j)] + c.omega[size_t(j)] * t;
    const cplx ut = z * std::exp(g * t);
    const cplx lhs = regint(to_integrand(h), Bounds::lower, t, z, th, g, c);
    const FTField h0 = taylor_part(h, 0);
    const cplx avg = h0.coeff(c.zero_mode(), 0)[0];
    const cplx rhs = avg * t + apply_Dinv(h0).eval(0.0, tt)[0] + apply_I(delta(h, 1)).eval(ut, tt)[0];
    const double e1 = std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
    const cplx lhs2 = regint(to_integrand(apply_L(h)), Bounds::lower, t, z, th, g, c);
    const cplx rhs2 = h.eval(ut, tt)[0] - avg;
    const double e2 = std::abs(lhs2 - rhs2) / std::max(1.0, std::abs(rhs2));
    return {e1, e2};
}

inline FTField drop_average(FTField h, int k) {
    auto it = h.modes.find(h.ctx->zero_mode());
    if (it != h.modes.end() && k >= it->second.lo && k <= it->second.hi()) it->second.c[size_t(k - it->second.lo)] = Jet();
    h.trim();
    return h;
}

struct RoundTrip {
    double round_trip = 0;
    double membership = 0;
};

inline RoundTrip kernel_round_trip(FieldGen& G, CtxPtr c, Jet g) {
    FieldVec h;
    h.push_back(drop_average(G.real_field(c, g, 3, 0, 6, 10, kJetN), 1));
    for (int i = 0; i < c->d; ++i) h.push_back(drop_average(G.real_field(c, g, 3, 0, 6, 8, kJetN), 0));
    auto w = kernel_inverse_apply(h);
    auto back = apply_Kop(w);
    RoundTrip r;
    const double s = std::max(1.0, max_abs(h));
    for (size_t i = 0; i < h.size(); ++i) r.round_trip = std::max(r.round_trip, max_abs(back[i] - h[i]) / s);
    const Mode z0 = c->zero_mode();
    r.membership = w[0].coeff(z0, 1).max_abs();
    for (size_t i = 1; i < w.size(); ++i) r.membership = std::max(r.membership, w[i].coeff(z0, 0).max_abs());
    return r;
}

inline double assembled_vs_factorized(FieldGen& G, CtxPtr c) {
    const double g = G.u(0.6, 1.5);
    const Jet gj(g);
    auto h = drop_average(G.real_field(c, gj, 2, 0, 4, 6, 1), 1);
    auto w = kernel_inverse_phi(h);
    const cplx z = std::polar(0.2, G.u(-0.5, 0.5));
    const double t = std::log(2.0) / g;
    std::vector<double> th{G.u(0, 6), G.u(0, 6)}, tt(2);
    for (int j = 0; j < 2; ++j) tt[size_t(j)] = th[size_t(j)] + c->omega[size_t(j)] * t;
    const cplx fact = w.eval(z * std::exp(g * t), tt)[0];
    const cplx assem = kernel_inverse_phi_assembled(h, t, z, th);
    return std::abs(fact - assem) / std::max(1.0, std::abs(fact));
}

}  // namespace sepx::testing
