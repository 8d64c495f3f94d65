#include "sepx/manifold.hpp"

#include <cmath>
#include <map>

#include "sepx/ode.hpp"
#include "sepx/regint.hpp"

namespace sepx {

struct WhiskerSeries {
    int K = 0;
    FTField Phi0, sinPhi0, cosPhi0, P;
    std::map<int, FTField> E;
    const FTField& Em(int m) const { return E.at(m); }
};

namespace {

constexpr cplx kI(0, 1);
constexpr double kTwoPi = 2 * std::numbers::pi;

void regauge(FieldVec& v, const Jet& g) {
    for (auto& f : v) f.gamma = g;
}
FTField cut(const FTField& f, int K) { return K < f.K ? f.truncated_to(K) : f; }

// order-l slot of a jet field as a plain (epsilon^0) field
FTField slot(const FTField& f, int l) {
    FTField r(f.ctx, Jet(f.gamma[0]), f.K);
    f.for_each([&](const Mode& q, int k, const Jet& a) {
        if (a[l] != cplx(0)) r.add_term(q, k, Jet(a[l]));
    });
    return r;
}

FTField reflect_theta(const FTField& f) {
    FTField r(f.ctx, f.gamma, f.K);
    f.for_each([&](const Mode& q, int k, const Jet& a) { r.add_term(-q, k, a); });
    return r;
}

void sincos(const Jet& a, Jet& s, Jet& c) {
    const Jet e = exp(a * kI), ei = exp(a * (-kI));
    s = (e - ei) * cplx(0, -0.5);
    c = (e + ei) * 0.5;
}

// pointwise epsilon-jets of Omega(X) and, optionally, its derivative blocks
struct ForceJet {
    std::vector<Jet> acc;             // (g^2 sin Phi + lam f_phi, lam f_psi)
    Jet cosPhi;
    Jet fpp;                          // f_phi phi
    std::vector<Jet> fpq;             // f_phi psi_j
    std::vector<std::vector<Jet>> fqq;
};

ForceJet force(const ModelParams& p, const std::vector<Jet>& X, const std::vector<double>& theta, bool second) {
    const int d = p.dim();
    const double g2 = p.g * p.g;
    const Jet lam = Jet::eps(g2);
    ForceJet F;
    F.acc.assign(size_t(d + 1), Jet());
    Jet sP;
    sincos(X[0], sP, F.cosPhi);
    Jet fphi;
    std::vector<Jet> fpsi(static_cast<size_t>(d));
    if (second) {
        F.fpq.assign(size_t(d), Jet());
        F.fqq.assign(size_t(d), std::vector<Jet>(size_t(d)));
    }
    for (auto& h : p.f.harmonics) {
        Jet A = X[0] * double(h.m);
        for (int j = 0; j < d; ++j)
            if (h.q[j]) A += (X[size_t(1 + j)] + Jet(theta[size_t(j)])) * double(h.q[j]);
        Jet sA, cA;
        sincos(A, sA, cA);
        fphi -= sA * (h.coeff * h.m);
        for (int j = 0; j < d; ++j) fpsi[size_t(j)] -= sA * (h.coeff * h.q[j]);
        if (second) {
            F.fpp -= cA * (h.coeff * h.m * h.m);
            for (int j = 0; j < d; ++j) {
                F.fpq[size_t(j)] -= cA * (h.coeff * h.m * h.q[j]);
                for (int k = 0; k < d; ++k) F.fqq[size_t(j)][size_t(k)] -= cA * (h.coeff * h.q[j] * h.q[k]);
            }
        }
    }
    F.acc[0] = sP * g2 + lam * fphi;
    for (int j = 0; j < d; ++j) F.acc[size_t(1 + j)] = lam * fpsi[size_t(j)];
    if (second) {
        F.fpp = lam * F.fpp;
        for (int j = 0; j < d; ++j) {
            F.fpq[size_t(j)] = lam * F.fpq[size_t(j)];
            for (int k = 0; k < d; ++k) F.fqq[size_t(j)][size_t(k)] = lam * F.fqq[size_t(j)][size_t(k)];
        }
    }
    return F;
}

// value and theta-gradient of a field at a jet-valued z
struct PointEval {
    const std::vector<Jet>& zp;
    const std::vector<double>& theta;
    const FieldCtx& c;

    void operator()(const FTField& f, Jet& v, std::vector<Jet>* grad) const {
        v = Jet();
        if (grad) grad->assign(size_t(c.d), Jet());
        for (auto& [q, pr] : f.modes) {
            if (pr.empty()) continue;
            if (pr.lo < 0) throw WhiskerDomainError("whisker evaluation: pole at z = 0");
            Jet s;
            for (size_t i = 0; i < pr.c.size(); ++i) {
                const int k = pr.lo + int(i);
                if (k >= int(zp.size())) break;
                fma_into(s, pr.c[i], zp[size_t(k)]);
            }
            double ph = 0;
            for (int j = 0; j < c.d; ++j) ph += q[j] * theta[size_t(j)];
            const Jet t = s * std::polar(1.0, ph);
            v += t;
            if (grad)
                for (int j = 0; j < c.d; ++j)
                    if (q[j]) (*grad)[size_t(j)] += t * cplx(0, q[j]);
        }
    }
};

WhiskerJet taylor_jet(const WhiskerExpansion& w, const Jet& z, const std::vector<double>& theta, bool tangent) {
    const int n = w.ctx->d + 1;
    int K = 0;
    for (auto& f : w.X_full()) K = std::max(K, f.hi());
    std::vector<Jet> zp(size_t(K + 2));
    zp[0] = Jet(1.0);
    for (size_t k = 1; k < zp.size(); ++k) zp[k] = zp[k - 1] * z;
    PointEval ev{zp, theta, *w.ctx};
    WhiskerJet r;
    r.X.resize(size_t(n));
    r.Y.resize(size_t(n));
    if (tangent) {
        r.dX.resize(size_t(n));
        r.dY.resize(size_t(n));
    }
    for (int i = 0; i < n; ++i) {
        ev(w.X_full()[size_t(i)], r.X[size_t(i)], tangent ? &r.dX[size_t(i)] : nullptr);
        ev(w.Y_full()[size_t(i)], r.Y[size_t(i)], tangent ? &r.dY[size_t(i)] : nullptr);
    }
    return r;
}

constexpr int kJetReals = 2 * kJetN;

void put(std::vector<double>& y, size_t& at, const Jet& a) {
    for (int i = 0; i < kJetN; ++i) {
        y[at++] = a[i].real();
        y[at++] = a[i].imag();
    }
}
Jet take(const std::vector<double>& y, size_t& at) {
    Jet a;
    for (int i = 0; i < kJetN; ++i) {
        a[i] = cplx(y[at], y[at + 1]);
        at += 2;
    }
    return a;
}

std::vector<double> pack(const WhiskerJet& s, bool tangent) {
    const size_t n = s.X.size(), d = n - 1;
    std::vector<double> y(size_t(kJetReals) * (2 * n + (tangent ? 2 * n * d : 0)));
    size_t at = 0;
    for (size_t i = 0; i < n; ++i) put(y, at, s.X[i]);
    for (size_t i = 0; i < n; ++i) put(y, at, s.Y[i]);
    if (tangent) {
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < d; ++j) put(y, at, s.dX[i][j]);
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < d; ++j) put(y, at, s.dY[i][j]);
    }
    return y;
}

WhiskerJet unpack(const std::vector<double>& y, size_t n, bool tangent) {
    const size_t d = n - 1;
    WhiskerJet s;
    size_t at = 0;
    for (size_t i = 0; i < n; ++i) s.X.push_back(take(y, at));
    for (size_t i = 0; i < n; ++i) s.Y.push_back(take(y, at));
    if (tangent) {
        s.dX.assign(n, std::vector<Jet>(d));
        s.dY.assign(n, std::vector<Jet>(d));
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < d; ++j) s.dX[i][j] = take(y, at);
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < d; ++j) s.dY[i][j] = take(y, at);
    }
    return s;
}

// jet equations of motion along theta(t) = theta0 + omega t, with the theta-tangent
WhiskerJet flow_jet(const ModelParams& p, const WhiskerJet& s0, const std::vector<double>& theta0, double T,
                    double tol, bool tangent) {
    const size_t n = s0.X.size(), d = n - 1;
    const double g2 = p.g * p.g;
    auto rhs = [&](const std::vector<double>& y, std::vector<double>& dy, double t) {
        const WhiskerJet s = unpack(y, n, tangent);
        std::vector<double> th(d);
        for (size_t j = 0; j < d; ++j) th[j] = theta0[j] + p.omega.omega[j] * t;
        const ForceJet F = force(p, s.X, th, tangent);
        WhiskerJet ds;
        ds.X = s.Y;
        ds.Y = F.acc;
        if (tangent) {
            ds.dX = s.dY;
            ds.dY.assign(n, std::vector<Jet>(d));
            for (size_t j = 0; j < d; ++j) {
                const Jet& uP = s.dX[0][j];
                std::vector<Jet> uQ(d);
                for (size_t k = 0; k < d; ++k) uQ[k] = s.dX[1 + k][j] + Jet(k == j ? 1.0 : 0.0);
                Jet a = F.cosPhi * uP * g2 + F.fpp * uP;
                for (size_t k = 0; k < d; ++k) a += F.fpq[k] * uQ[k];
                ds.dY[0][j] = a;
                for (size_t i = 0; i < d; ++i) {
                    Jet b = F.fpq[i] * uP;
                    for (size_t k = 0; k < d; ++k) b += F.fqq[i][k] * uQ[k];
                    ds.dY[1 + i][j] = b;
                }
            }
        }
        dy = pack(ds, tangent);
    };
    auto run = integrate_rk78<double>(rhs, pack(s0, tangent), 0.0, T, tol);
    return unpack(run.y_end, n, tangent);
}

}  // namespace

std::vector<cplx> ManifoldOrder::eval(cplx z, const std::vector<double>& theta) const {
    const cplx w = stable ? 1.0 / z : z;
    if (std::abs(w) > 0.5) throw WhiskerDomainError("ManifoldOrder::eval outside the Taylor disk of its chart");
    std::vector<cplx> r{X_phi.eval(w, theta)[0]};
    for (auto& f : X_psi) r.push_back(f.eval(w, theta)[0]);
    return r;
}

WhiskerExpansion::WhiskerExpansion(const ModelParams& p, WhiskerOptions o, WedgeDomain dom)
    : params(p), opt(o), domain(dom) {
    params.validate();
    if (opt.l_max < 0 || opt.l_max >= kJetN)
        throw std::invalid_argument("l_max must lie in [0, " + std::to_string(kJetN - 1) + "]");
    ctx = FieldCtx::from(p.omega);
    gamma = Jet(p.g);
    const Jet g(p.g);
    series_ = std::make_shared<WhiskerSeries>();
    auto& S = *series_;
    S.K = opt.K;
    S.Phi0 = series_Phi0(ctx, g, opt.K);
    S.sinPhi0 = series_sinPhi0(ctx, g, opt.K);
    S.cosPhi0 = series_cosPhi0(ctx, g, opt.K);
    S.P = series_P(ctx, g, opt.K);
    std::vector<int> ms{1, -1};
    for (auto& h : p.f.harmonics) {
        ms.push_back(h.m);
        ms.push_back(-h.m);
    }
    for (int m : ms)
        if (!S.E.count(m)) S.E.emplace(m, series_Em(ctx, g, m, opt.K));
    Xt = zero_vec(ctx, g, opt.K);

    ManifoldOrder o0;
    o0.ell = 0;
    o0.X_phi = S.Phi0;
    for (int j = 0; j < ctx->d; ++j) o0.X_psi.emplace_back(ctx, g, opt.K);
    o0.gamma_coeff = p.g;
    o0.norm_c.assign(size_t(ctx->d), 0.0);
    orders.push_back(o0);
    refresh();
}

double WhiskerExpansion::gamma_at(double eps) const {
    double s = 0, e = 1;
    for (int l = 0; l <= solved(); ++l, e *= eps) s += gamma[l].real() * e;
    return s;
}

void WhiskerExpansion::refresh() {
    regauge(Xt, gamma);
    X_ = Xt;
    X_[0] += series_->Phi0;
    regauge(X_, gamma);
    Y_ = map_vec(X_, [](const FTField& f) { return apply_L(f); });
}

FieldVec whisker_rhs(const WhiskerExpansion& w, const FieldVec& Xt, const Jet& gam, int K) {
    const auto& S = w.series();
    const auto& p = w.params;
    auto c = w.ctx;
    const int d = c->d;
    FieldVec X;
    for (auto& f : Xt) X.push_back(cut(f, K));
    regauge(X, gam);
    const Jet g2(p.g * p.g), lam = Jet::eps(p.g * p.g), dg = g2 - gam * gam;
    const FTField& ph = X[0];

    // pendulum: (g^2 - gamma^2)(sin Phi0 + cos Phi0 Phi~) + g^2 (E_1 N_+ - E_{-1} N_-) / 2i
    // with N_{+-} = e^{+-i Phi~} - 1 -+ i Phi~
    const FTField s = ph * Jet(kI);
    const FTField s2 = s * s * Jet(0.5);
    const FTField s3 = s2 * s * Jet(1.0 / 3);
    const FTField cos0 = cut(S.cosPhi0, K);
    FTField pend = (cut(S.sinPhi0, K) + cos0 * ph) * dg +
                   (cut(S.Em(1), K) * (s2 + s3) - cut(S.Em(-1), K) * (s2 - s3)) * (g2 * Jet(cplx(0, -0.5)));

    // lam df(X0 + X~ + (0, theta)); lam B^3 is beyond the jet length
    static_assert(kJetN <= 4, "the exponential series below stops at B^2");
    FieldVec df;
    for (int i = 0; i <= d; ++i) df.emplace_back(c, gam, K);
    const FTField one = FTField::constant(c, gam, Jet(1.0)).truncated_to(K);
    for (auto& h : p.f.harmonics) {
        FTField B = ph * Jet(double(h.m));
        for (int j = 0; j < d; ++j)
            if (h.q[j]) B += X[size_t(1 + j)] * Jet(double(h.q[j]));
        const FTField iB = B * Jet(kI);
        const FTField half = iB * iB * Jet(0.5);
        const FTField ep = one + iB + half, em = one - iB + half;
        const FTField Ap = shift_modes(cut(S.Em(h.m), K) * ep, h.q);
        const FTField Am = shift_modes(cut(S.Em(-h.m), K) * em, -h.q);
        const FTField sA = (Ap - Am) * Jet(cplx(0, -0.5));
        if (h.m) df[0] += sA * Jet(-h.coeff * h.m);
        for (int j = 0; j < d; ++j)
            if (h.q[j]) df[size_t(1 + j)] += sA * Jet(-h.coeff * h.q[j]);
    }
    FieldVec W;
    W.push_back(pend + df[0] * lam);
    for (int j = 0; j < d; ++j) W.push_back(df[size_t(1 + j)] * lam);
    regauge(W, gam);
    for (auto& f : W) f.trim();
    return W;
}

const ManifoldOrder& solve_order(int ell, WhiskerExpansion& w) {
    if (ell != w.solved() + 1) throw std::invalid_argument("solve_order: orders are solved in sequence");
    if (ell > w.opt.l_max) throw std::invalid_argument("solve_order: ell exceeds l_max");
    auto c = w.ctx;
    const int d = c->d, K = w.opt.K;
    const double g = w.params.g;
    const Mode z0 = c->zero_mode();
    Jet gam = w.gamma;
    gam[ell] = 0;

    // z^0, z^1 parts: only the z^{<=1} data enter there
    FieldVec X1;
    for (auto& f : w.Xt) X1.push_back(f.truncated_to(1));
    regauge(X1, gam);
    const FieldVec W1 = whisker_rhs(w, X1, gam, 1), KX = apply_Kop(X1);
    FieldVec R;
    double scale = 0;
    for (int i = 0; i <= d; ++i) {
        R.push_back(slot(taylor_upto(W1[size_t(i)] - KX[size_t(i)], 1), ell));
        scale = std::max(scale, max_abs(R.back()));
    }
    const cplx g1 = R[0].coeff(z0, 1)[0] / (8 * g);
    for (int i = 1; i <= d; ++i) {
        const cplx a = R[size_t(i)].coeff(z0, 0)[0];
        if (std::abs(a) > w.opt.solv_tol * std::max(1.0, scale))
            throw ConstructionError("order " + std::to_string(ell) + ": nonzero Psi average " +
                                        std::to_string(std::abs(a)) + " in component " + std::to_string(i),
                                    ell, z0);
    }
    gam[ell] = g1.real();

    R[0].for_each([&](const Mode& q, int k, const Jet& a) {
        const double W = c->Omega(q);
        const bool zq = (q == z0);
        cplx x;
        if (k == 0) {
            x = a[0] / -(W * W + g * g);
        } else {
            if (zq) return;  // fixes gamma; the free b comes from the normalization
            c->check_divisor(q);
            x = a[0] / (cplx(0, W) * cplx(2 * g, W));
        }
        w.Xt[0].add_term(q, k, Jet::order(ell, x));
    });
    for (int i = 1; i <= d; ++i)
        R[size_t(i)].for_each([&](const Mode& q, int k, const Jet& a) {
            const double W = c->Omega(q);
            cplx x;
            if (k == 0) {
                if (q == z0) return;  // free average, fixed by the normalization
                c->check_divisor(q);
                x = a[0] / -(W * W);
            } else {
                x = a[0] / (cplx(g, W) * cplx(g, W));
            }
            w.Xt[size_t(i)].add_term(q, k, Jet::order(ell, x));
        });
    w.gamma = gam;
    regauge(w.Xt, gam);

    // delta_2 X~ = K^{-1} delta_2 [W~(X~) + (gamma^2 cos Phi0 Phi~_{<=1}, 0)]
    const FieldVec Wf = whisker_rhs(w, w.Xt, gam, K);
    FieldVec h;
    h.push_back(delta(Wf[0] + (cut(w.series().cosPhi0, K) * taylor_upto(w.Xt[0], 1)) * (gam * gam), 2));
    for (int i = 1; i <= d; ++i) h.push_back(delta(Wf[size_t(i)], 2));
    regauge(h, gam);
    const FieldVec Z = kernel_inverse_apply(h);
    double drift = 0;
    for (int i = 0; i <= d; ++i) {
        const FTField old = delta(w.Xt[size_t(i)], 2);
        for (int l = 1; l < ell; ++l)
            drift = std::max(drift, max_abs(slot(Z[size_t(i)], l) - slot(old, l)));
        w.Xt[size_t(i)] += Z[size_t(i)].eps_order(ell);
    }
    regauge(w.Xt, gam);

    // normalization X^u(1, 0) = (pi, 0) with the homogeneous solutions 4P and constants
    w.refresh();
    const std::vector<double> th0(size_t(d), 0.0);
    const WhiskerJet at = whisker_at(w, Jet(1.0), th0);
    ManifoldOrder o;
    o.ell = ell;
    o.norm_b = -at.X[0][ell].real() / 2;
    w.Xt[0] += w.series().P * Jet::order(ell, 4 * o.norm_b);
    for (int i = 1; i <= d; ++i) {
        o.norm_c.push_back(-at.X[size_t(i)][ell].real());
        w.Xt[size_t(i)].add_term(z0, 0, Jet::order(ell, o.norm_c.back()));
    }
    w.refresh();

    // structural degree bound: nothing beyond ell N at order ell
    const int N = w.params.f.degree();
    for (int i = 0; i <= d; ++i)
        w.Xt[size_t(i)].for_each([&](const Mode& q, int, const Jet& a) {
            if (a[ell] != cplx(0) && l1norm(q) > ell * N)
                throw ConstructionError("order " + std::to_string(ell) + " has a mode beyond degree l N", ell, q);
        });

    o.X_phi = slot(w.Xt[0], ell);
    for (int i = 1; i <= d; ++i) o.X_psi.push_back(slot(w.Xt[size_t(i)], ell));
    o.gamma_coeff = gam[ell].real();
    o.degree = o.X_phi.degree();
    for (auto& f : o.X_psi) o.degree = std::max(o.degree, f.degree());
    o.picard_drift = drift;
    w.orders.push_back(std::move(o));
    return w.orders.back();
}

WhiskerExpansion build_whisker(const ModelParams& p, WhiskerOptions o, WedgeDomain dom) {
    WhiskerExpansion w(p, o, dom);
    for (int l = 1; l <= o.l_max; ++l) solve_order(l, w);
    return w;
}

double residual_norm(const WhiskerExpansion& w, int ell) {
    if (ell < 0 || ell > w.solved()) throw std::invalid_argument("residual_norm: order not available");
    const int d = w.ctx->d;
    const FieldVec L2 = map_vec(w.Y_full(), [](const FTField& f) { return apply_L(f); });
    const double th = w.domain.vartheta;
    std::vector<double> args{0, th, -th, std::numbers::pi, std::numbers::pi + th, std::numbers::pi - th};
    const std::vector<double> tgrid{0.3, 2.1, 4.4};
    double res = 0;
    std::vector<double> theta(static_cast<size_t>(d));
    const int nth = int(std::pow(3, d));
    for (double r : {0.1, 0.25, 0.4})
        for (double a : args) {
            const cplx z = std::polar(r, a);
            for (int it = 0; it < nth; ++it) {
                for (int j = 0, m = it; j < d; ++j, m /= 3) theta[size_t(j)] = tgrid[size_t(m % 3)];
                std::vector<Jet> X;
                for (auto& f : w.X_full()) X.push_back(f.eval(z, theta));
                const ForceJet F = force(w.params, X, theta, false);
                for (int i = 0; i <= d; ++i)
                    res = std::max(res, std::abs((L2[size_t(i)].eval(z, theta) - F.acc[size_t(i)])[ell]));
            }
        }
    return res;
}

ManifoldOrder stable_manifold(const ManifoldOrder& u) {
    if (u.stable) throw std::invalid_argument("stable_manifold: input is already the stable side");
    ManifoldOrder s = u;
    s.stable = true;
    s.X_phi = -reflect_theta(u.X_phi);
    if (u.ell == 0) s.X_phi.add_term(u.X_phi.ctx->zero_mode(), 0, Jet(kTwoPi));
    for (size_t i = 0; i < u.X_psi.size(); ++i) s.X_psi[i] = -reflect_theta(u.X_psi[i]);
    return s;
}

WhiskerJet whisker_at(const WhiskerExpansion& w, const Jet& z, const std::vector<double>& theta, bool tangent,
                      double tol) {
    const double r = std::abs(z[0]), rs = w.opt.r_seed, g = w.params.g;
    if (r <= rs * (1 + 1e-12)) return taylor_jet(w, z, theta, tangent);
    if (std::abs(std::arg(z[0])) > std::numbers::pi / 2 - 1e-3 && std::abs(std::arg(-z[0])) > std::numbers::pi / 2 - 1e-3)
        throw WhiskerDomainError("whisker_at: z on the imaginary axis beyond the Taylor disk");
    const double T = (std::log(r) - std::log(rs)) / g;
    if (g * T > 60) throw WhiskerDomainError("whisker_at: |z| beyond the continuation range");
    const Jet zs = z * exp(w.gamma * (-T));
    std::vector<double> ths(theta.size());
    for (size_t j = 0; j < theta.size(); ++j) ths[j] = theta[j] - w.params.omega.omega[j] * T;
    const WhiskerJet s0 = taylor_jet(w, zs, ths, tangent);
    return flow_jet(w.params, s0, ths, T, tol > 0 ? tol : w.opt.ode_tol, tangent);
}

WhiskerJet whisker_stable_at(const WhiskerExpansion& w, const Jet& z, const std::vector<double>& theta,
                             bool tangent) {
    std::vector<double> mth(theta.size());
    for (size_t j = 0; j < theta.size(); ++j) mth[j] = -theta[j];
    WhiskerJet u = whisker_at(w, inverse(z), mth, tangent);
    for (auto& x : u.X) x = -x;
    u.X[0] += Jet(kTwoPi);
    for (auto& row : u.dY)
        for (auto& x : row) x = -x;
    return u;
}

PhaseState to_phase(const WhiskerJet& j, const std::vector<double>& theta, const std::vector<double>& omega,
                    double eps, int l_cap) {
    PhaseState s;
    auto val = [&](const Jet& a) { return a.truncated(l_cap).at(eps).real(); };
    s.phi = val(j.X[0]);
    s.I = val(j.Y[0]);
    for (size_t i = 0; i < theta.size(); ++i) {
        s.psi.push_back(theta[i] + val(j.X[i + 1]));
        s.A.push_back(omega[i] + val(j.Y[i + 1]));
    }
    return s;
}

std::pair<PhaseState, PhaseState> homoclinic_trajectory(double t, const WhiskerExpansion& w, double eps) {
    const double ga = w.gamma_at(eps);
    if (std::abs(ga * t) > 40) throw WhiskerDomainError("homoclinic_trajectory: |gamma t| beyond the charts");
    const Jet z(std::exp(ga * t));
    std::vector<double> th;
    for (double o : w.params.omega.omega) th.push_back(o * t);
    const auto u = whisker_at(w, z, th), s = whisker_stable_at(w, z, th);
    const int L = w.solved();
    return {to_phase(u, th, w.params.omega.omega, eps, L), to_phase(s, th, w.params.omega.omega, eps, L)};
}

std::vector<WedgeProbe> wedge_probes(const WhiskerExpansion& w, double vartheta, double s_max, int n, double tol) {
    const int L = w.solved();
    if (L < 1) throw std::invalid_argument("wedge_probe: no perturbative order available");
    std::vector<WedgeProbe> out(static_cast<size_t>(L));
    for (int l = 1; l <= L; ++l) {
        out[size_t(l - 1)].ell = l;
        out[size_t(l - 1)].vartheta = vartheta;
    }
    const double g = w.params.g;
    const std::vector<double> th0(size_t(w.ctx->d), 0.0);
    for (int i = 0; i < n; ++i) {
        const double s = s_max * i / (n - 1);
        std::vector<double> sz(size_t(L + 1), 0.0);
        for (double sg : {1.0, -1.0}) {
            const cplx z = std::polar(w.opt.r_seed * std::exp(g * s), sg * vartheta);
            const WhiskerJet j = whisker_at(w, Jet(z), th0, false, tol);
            for (auto& x : j.X)
                for (int l = 1; l <= L; ++l) sz[size_t(l)] = std::max(sz[size_t(l)], std::abs(x[l]));
        }
        for (int l = 1; l <= L; ++l) {
            auto& P = out[size_t(l - 1)];
            P.s.push_back(s);
            P.size.push_back(sz[size_t(l)]);
            if (!std::isfinite(sz[size_t(l)])) P.finite = false;
        }
    }
    const double ds = g * s_max / (n - 1);
    for (auto& P : out) {
        // least-squares slope over the second half
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int m = 0;
        for (int i = n / 2; i < n; ++i) {
            if (!(P.size[size_t(i)] > 0)) continue;
            const double x = g * P.s[size_t(i)], y = std::log(P.size[size_t(i)]);
            sx += x, sy += y, sxx += x * x, sxy += x * y, ++m;
        }
        if (m >= 2) P.rate = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        for (int i = 1; i < n; ++i) {
            const double a = P.size[size_t(i - 1)], b = P.size[size_t(i)];
            if (a > 0 && b > 0 && std::abs(std::log(b / a)) > (P.ell + 2) * ds + 1) P.smooth = false;
        }
    }
    return out;
}

}  // namespace sepx
