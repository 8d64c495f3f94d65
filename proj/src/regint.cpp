#include "sepx/regint.hpp"

#include "sepx/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace sepx {

namespace {
double factorial(int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}
}  // namespace

cplx residue_over_R(const std::vector<RTerm>& terms) {
    cplx s = 0;
    for (auto& x : terms) {
        if (std::abs(x.r) <= 1e-300) {
            // e^{sigma R t} R^{-n}: the R^n Taylor coefficient of the exponential
            s += x.c * std::pow(double(x.sigma) * x.t, x.n) / factorial(x.n);
        } else {
            s += x.c * std::pow(-x.r, -x.n);
        }
    }
    return s;
}

namespace {
// int tau^p e^{c tau} = e^{c tau} sum_j (-1)^j p!/(p-j)! tau^{p-j} c^{-(j+1)}.
// With c = R + a (plus = true) or c = a - R, emit the antiderivative at tau
// times `sign` as RTerms.
void antideriv(std::vector<RTerm>& out, int p, cplx a, bool plus, double tau, double sign) {
    const cplx ea = std::exp(a * tau);
    for (int j = 0; j <= p; ++j) {
        const double w = ((j % 2) ? -1.0 : 1.0) * factorial(p) / factorial(p - j) * std::pow(tau, p - j);
        RTerm r;
        r.t = tau;
        r.n = j + 1;
        if (plus) {
            r.c = sign * w * ea;
            r.sigma = 1;
            r.r = -a;
        } else {
            // (a - R)^{-(j+1)} = (-1)^{j+1} (R - a)^{-(j+1)}
            r.c = sign * w * (((j + 1) % 2) ? -1.0 : 1.0) * ea;
            r.sigma = -1;
            r.r = a;
        }
        out.push_back(r);
    }
}
}  // namespace

std::vector<RTerm> laplace_terms(int p, cplx a, Bounds b, double t) {
    std::vector<RTerm> out;
    switch (b) {
        case Bounds::lower:
            if (t <= 0) {
                antideriv(out, p, a, true, t, 1);
            } else {
                antideriv(out, p, a, true, 0, 1);
                antideriv(out, p, a, false, t, 1);
                antideriv(out, p, a, false, 0, -1);
            }
            break;
        case Bounds::upper:
            if (t >= 0) {
                antideriv(out, p, a, false, t, -1);
            } else {
                antideriv(out, p, a, true, 0, 1);
                antideriv(out, p, a, true, t, -1);
                antideriv(out, p, a, false, 0, -1);
            }
            break;
        case Bounds::full: {
            out = laplace_terms(p, a, Bounds::lower, 0);
            auto up = laplace_terms(p, a, Bounds::upper, 0);
            out.insert(out.end(), up.begin(), up.end());
            break;
        }
    }
    return out;
}

cplx regint_exp(int p, cplx a, Bounds b, double t) { return residue_over_R(laplace_terms(p, a, b, t)); }

cplx Laurent::eval(cplx w) const {
    cplx s = 0;
    for (int i = int(c.size()) - 1; i >= 0; --i) s = s * w + c[size_t(i)];
    return s * std::pow(w, lo);
}

cplx RegularizedIntegrand::eval(double tau, cplx z, const std::vector<double>& theta, double gamma,
                                const FieldCtx& ctx) const {
    const cplx u = z * std::exp(gamma * tau);
    cplx s = 0;
    for (auto& m : terms) {
        double ph = 0;
        for (int j = 0; j < ctx.d; ++j) ph += m.q[j] * (theta[j] + ctx.omega[j] * tau);
        cplx v = m.coeff * std::pow(tau, m.p) * std::pow(u, m.k) * std::polar(1.0, ph);
        if (m.profile) v *= m.profile->value(u);
        s += v;
    }
    return s;
}

namespace {

std::vector<cplx> series_div(const std::vector<cplx>& a, const std::vector<cplx>& b, int n) {
    std::vector<cplx> q(size_t(n), 0.0);
    for (int i = 0; i < n; ++i) {
        cplx s = i < int(a.size()) ? a[size_t(i)] : 0.0;
        for (int j = 1; j <= i && j < int(b.size()); ++j) s -= b[size_t(j)] * q[size_t(i - j)];
        q[size_t(i)] = s / b[0];
    }
    return q;
}

std::vector<cplx> poly_pow(std::vector<cplx> p, int n) {
    std::vector<cplx> r{1.0};
    for (int k = 0; k < n; ++k) {
        std::vector<cplx> t(r.size() + p.size() - 1, 0.0);
        for (size_t i = 0; i < r.size(); ++i)
            for (size_t j = 0; j < p.size(); ++j) t[i + j] += r[i] * p[j];
        r = std::move(t);
    }
    return r;
}

}  // namespace

ProfilePtr rational_profile(std::vector<cplx> num, std::vector<cplx> den, double r0, double rinf, int nterms) {
    while (num.size() > 1 && num.back() == 0.0) num.pop_back();
    while (den.size() > 1 && den.back() == 0.0) den.pop_back();
    if (den.empty() || den[0] == 0.0) throw std::invalid_argument("rational_profile: den(0) = 0");
    auto pr = std::make_shared<Profile>();
    pr->value = [num, den](cplx u) {
        cplx a = 0, b = 0;
        for (size_t i = num.size(); i-- > 0;) a = a * u + num[i];
        for (size_t i = den.size(); i-- > 0;) b = b * u + den[i];
        return a / b;
    };
    pr->r0 = r0;
    pr->rinf = rinf;
    pr->has_inf = true;
    pr->at0.lo = 0;
    pr->at0.c = series_div(num, den, nterms);
    // f(1/w) = w^{deg den - deg num} rev(num)(w) / rev(den)(w)
    std::vector<cplx> rn(num.rbegin(), num.rend()), rd(den.rbegin(), den.rend());
    pr->atinf.lo = int(den.size()) - int(num.size());
    pr->atinf.c = series_div(rn, rd, nterms);
    return pr;
}

ProfilePtr Em_profile(int m, int nterms) {
    const cplx I(0, 1);
    const int n = 2 * std::abs(m);
    std::vector<cplx> a = poly_pow({1.0, I}, n), b = poly_pow({1.0, -I}, n);
    if (m < 0) std::swap(a, b);
    return rational_profile(a, b, 0.3, 1 / 0.3, nterms);
}

RegularizedIntegrand RegularizedIntegrand::truncated(int N) const {
    RegularizedIntegrand r;
    for (auto& m : terms)
        if (l1norm(m.q) <= N) r.terms.push_back(m);
    return r;
}

namespace {

cplx quad(const std::function<cplx(double)>& f, double a, double b, double period, double tol) {
    return quad_pieces(f, a, b, period, tol);
}

// closed-form value of one term with profile expanded in u (sign = +1) or 1/u
// (sign = -1) at the endpoint s
cplx closed_term(const ModeTerm& m, const Laurent* L, int sign, Bounds b, double s, cplx z,
                 const std::vector<double>& theta, double gamma, const FieldCtx& ctx) {
    const double W = ctx.Omega(m.q);
    double ph = 0;
    for (int j = 0; j < ctx.d; ++j) ph += m.q[j] * theta[j];
    const cplx eq = std::polar(1.0, ph);
    cplx total = 0;
    auto one = [&](int k, cplx c) {
        const cplx a(k * gamma, W);
        total += c * std::pow(z, k) * eq * regint_exp(m.p, a, b, s);
    };
    if (!L) {
        one(m.k, m.coeff);
    } else {
        for (size_t i = 0; i < L->c.size(); ++i) one(m.k + sign * (L->lo + int(i)), m.coeff * L->c[i]);
    }
    return total;
}

}  // namespace

cplx regint(const RegularizedIntegrand& h, Bounds b, double t, cplx z, const std::vector<double>& theta, double gamma,
            const FieldCtx& ctx, const RegintOptions& opt) {
    cplx total = 0;
    for (auto& m : h.terms) {
        if (!m.profile) {
            total += closed_term(m, nullptr, 1, b, t, z, theta, gamma, ctx);
            continue;
        }
        const Profile& pr = *m.profile;
        ModeTerm single = m;
        RegularizedIntegrand one{{single}};
        auto f = [&](double tau) { return one.eval(tau, z, theta, gamma, ctx); };
        const double W = std::abs(ctx.Omega(m.q));
        const double period = std::min(1.0 / gamma, W > 0 ? 2 * std::numbers::pi / W : 1e300);
        const double lz = std::log(std::abs(z));
        const double tc = (std::log(pr.r0) - lz) / gamma;
        double tinf = 0;
        if (b != Bounds::lower) {
            if (!pr.has_inf) throw RegularizationError("profile without expansion at infinity on an upper bound");
            tinf = (std::log(pr.rinf) - lz) / gamma;
        }
        switch (b) {
            case Bounds::lower:
                if (t <= tc)
                    total += closed_term(m, &pr.at0, 1, b, t, z, theta, gamma, ctx);
                else
                    total += closed_term(m, &pr.at0, 1, b, tc, z, theta, gamma, ctx) +
                             quad(f, tc, t, period, opt.quad_tol);
                break;
            case Bounds::upper:
                if (t >= tinf)
                    total += closed_term(m, &pr.atinf, -1, b, t, z, theta, gamma, ctx);
                else
                    total += closed_term(m, &pr.atinf, -1, b, tinf, z, theta, gamma, ctx) +
                             quad(f, t, tinf, period, opt.quad_tol);
                break;
            case Bounds::full: {
                const double a = std::min(tc, tinf), c = std::max(tc, tinf);
                total += closed_term(m, &pr.at0, 1, Bounds::lower, a, z, theta, gamma, ctx) +
                         quad(f, a, c, period, opt.quad_tol) +
                         closed_term(m, &pr.atinf, -1, Bounds::upper, c, z, theta, gamma, ctx);
                break;
            }
        }
    }
    return total;
}

RegularizedIntegrand antiderivative(const RegularizedIntegrand& h, double gamma, const FieldCtx& ctx) {
    RegularizedIntegrand r;
    for (auto& m : h.terms) {
        if (m.profile) throw RegularizationError("antiderivative: closed-form terms only");
        const cplx a(m.k * gamma, ctx.Omega(m.q));
        if (std::abs(a) <= 1e-300) {
            r.terms.push_back({m.p + 1, m.k, m.q, m.coeff / double(m.p + 1), nullptr});
            continue;
        }
        for (int j = 0; j <= m.p; ++j) {
            const double w = ((j % 2) ? -1.0 : 1.0) * factorial(m.p) / factorial(m.p - j);
            r.terms.push_back({m.p - j, m.k, m.q, m.coeff * w / std::pow(a, j + 1), nullptr});
        }
    }
    return r;
}

RegularizedIntegrand to_integrand(const FTField& h, int l) {
    RegularizedIntegrand r;
    h.for_each([&](const Mode& q, int k, const Jet& a) {
        if (a[l] != cplx(0)) r.terms.push_back({0, k, q, a[l], nullptr});
    });
    return r;
}

// ---- kernel ----

int xi(int i, int j) {
    if (i == 0 && j == 1) return 1;
    if (j == 2 && i == 1) return 0;
    return -1;  // (0,2), (1,1)
}
int xibar(int i, int j) {
    if (i == 0 && j == 2) return 1;
    if (i == 1 && j == 2) return 0;
    return -1;  // (0,1), (1,1)
}

namespace {
cplx checked_u(double t, cplx z, double gamma) {
    const cplx u = z * std::exp(gamma * t);
    if (std::abs(u * u + 1.0) < 1e-14 * std::max(1.0, std::norm(u)))
        throw SingularKernelError("kernel evaluated at the pole z e^{gamma t} = +-i");
    if (u == cplx(0)) throw SingularKernelError("kernel evaluated at u = 0");
    return u;
}
}  // namespace

KernelValue K_part(int i, int j, double t, cplx z, double gamma) {
    const cplx u = checked_u(t, z, gamma);
    if (i == 0 && j == 1) return {Q_of(u) / (2 * gamma), 0.0};
    if (i == 0 && j == 2) return {-P_of(u) / (2 * gamma), 0.0};
    if (i == 1 && j == 1) return {2.0 * P_of(u), 0.0};
    if (i == 1 && j == 2) return {0.0, 1.0};
    throw std::invalid_argument("kernel part index");
}

KernelValue Kbar_part(int i, int j, double tau, cplx z, double gamma) {
    const cplx u = checked_u(tau, z, gamma);
    if (j == 1 && (i == 0 || i == 1)) return {P_of(u), 0.0};
    if (i == 0 && j == 2) return {Q_of(u), 0.0};
    if (i == 1 && j == 2) return {0.0, 1.0};
    throw std::invalid_argument("kernel part index");
}

KernelValue kernel_parts(double t, double tau, cplx z, double gamma) {
    KernelValue s{0, 0};
    for (int i = 0; i <= 1; ++i)
        for (int j = 1; j <= 2; ++j) {
            auto a = K_part(i, j, t, z, gamma), b = Kbar_part(i, j, tau, z, gamma);
            const double w = i ? (t - tau) : 1.0;
            s.phi += w * a.phi * b.phi;
            s.psi += w * a.psi * b.psi;
        }
    return s;
}

double a_bound(int i, int j, bool bar, cplx z, double gamma, double T, int n) {
    const int x = bar ? xibar(i, j) : xi(i, j);
    double m = 0;
    for (int s = 0; s < n; ++s) {
        const double t = -T + 2 * T * s / (n - 1);
        auto v = bar ? Kbar_part(i, j, t, z, gamma) : K_part(i, j, t, z, gamma);
        const double a = std::max(std::abs(v.phi), std::abs(v.psi)) * std::exp(-x * gamma * std::abs(t));
        m = std::max(m, a);
    }
    return m;
}

namespace {
int out_K(const FTField& h) { return h.exact() ? std::max(h.hi(), 0) + 40 : h.K; }

// drop an average that must vanish; throw if it does not
void kill_average(FTField& h, int k, double tol, const char* what) {
    const Mode z0 = h.ctx->zero_mode();
    const Jet a = h.coeff(z0, k);
    const double scale = std::max(1.0, max_abs(h));
    if (a.max_abs() > tol * scale) throw SolvabilityError(std::string("nonzero average ") + what, z0);
    auto it = h.modes.find(z0);
    if (it != h.modes.end() && k >= it->second.lo && k <= it->second.hi()) it->second.c[size_t(k - it->second.lo)] = Jet();
}
}  // namespace

FTField kernel_inverse_phi(const FTField& h0) {
    if (h0.lo() < 0) throw SolvabilityError("K^{-1}: Phi input must be analytic at z=0");
    FTField h = h0;
    kill_average(h, 1, 1e-12, "<h_1> in the Phi block");
    const int K = out_K(h0);
    h = h.truncated_to(K);
    auto c = h.ctx;
    const Jet g = h.gamma;
    const FTField P = series_P(c, g, K + 3), Q = exact_Q(c, g);
    const Jet inv2g = inverse(2.0 * g);
    FTField Ph = P * h;
    FTField Qh = Q * h;
    // Qh has a z^0 q=0 term only through <h_1>, removed above
    FTField IPh = apply_I(Ph);
    FTField w = (Q * IPh) * inv2g - (P * apply_I(Qh)) * inv2g + (P * apply_I(IPh)) * Jet(2.0);
    return w.truncated_to(K);
}

FTField kernel_inverse_psi(const FTField& h0) {
    if (h0.lo() < 0) throw SolvabilityError("K^{-1}: Psi input must be analytic at z=0");
    FTField h = h0;
    kill_average(h, 0, 1e-12, "<h_0> in a Psi block");
    return apply_I(apply_I(h)).truncated_to(out_K(h0));
}

FieldVec kernel_inverse_apply(const FieldVec& h, double) {
    FieldVec w;
    w.push_back(kernel_inverse_phi(h[0]));
    for (size_t i = 1; i < h.size(); ++i) w.push_back(kernel_inverse_psi(h[i]));
    return w;
}

FieldVec apply_Kop(const FieldVec& w) {
    FieldVec r;
    const FTField& x = w[0];
    const int K = x.exact() ? std::max(x.hi(), 0) + 40 : x.K;
    FTField c = series_cosPhi0(x.ctx, x.gamma, K);
    r.push_back(apply_L(apply_L(x)) - (c * x) * (x.gamma * x.gamma));
    for (size_t i = 1; i < w.size(); ++i) r.push_back(apply_L(apply_L(w[i])));
    return r;
}

cplx kernel_inverse_phi_assembled(const FTField& h, double t, cplx z, const std::vector<double>& theta, double u_cut) {
    const double g = h.gamma[0].real();
    auto c = h.ctx;
    double tc = (std::log(u_cut) - std::log(std::abs(z))) / g;
    if (tc > t) tc = t;
    // near piece with the assembled kernel
    auto f = [&](double tau) {
        std::vector<double> th(size_t(c->d));
        for (int j = 0; j < c->d; ++j) th[size_t(j)] = theta[size_t(j)] + c->omega[size_t(j)] * tau;
        return kernel_parts(t, tau, z, g).phi * h.eval(z * std::exp(g * tau), th)[0];
    };
    cplx near = 0;
    if (t > tc) {
        near = quad_ts(f, tc, t, 1, 1e-15);
    }
    // far piece: expand P(tau) h, Q(tau) h in u_tau and regularize termwise
    const int K = out_K(h);
    const FTField H = h.eps_order(0).truncated_to(K);
    const Jet gj(g);
    FTField Hg = H;
    Hg.gamma = gj;
    FTField Ph = series_P(c, gj, K + 3) * Hg, Qh = exact_Q(c, gj) * Hg;
    const cplx ut = z * std::exp(g * t);
    const cplx Pt = P_of(ut), Qt = Q_of(ut);
    auto reg = [&](const FTField& F, int p) {
        auto R = to_integrand(F, 0);
        for (auto& m : R.terms) m.p = p;
        return regint(R, Bounds::lower, tc, z, theta, g, *c);
    };
    const cplx far = Qt / (2 * g) * reg(Ph, 0) - Pt / (2 * g) * reg(Qh, 0) + 2.0 * Pt * (t * reg(Ph, 0) - reg(Ph, 1));
    return near + far;
}

}  // namespace sepx
