#include "sepx/field.hpp"

#include <algorithm>
#include <cmath>

namespace sepx {

void FieldCtx::check_divisor(const Mode& q) const {
    const int n = l1norm(q);
    if (n == 0) return;
    const double W = std::abs(Omega(q));
    if (W < 1e-13 * std::pow(double(n), -nu) * a_est) {
        std::string s = "small divisor at q=(";
        for (size_t j = 0; j < q.size(); ++j) s += (j ? "," : "") + std::to_string(q[j]);
        throw SmallDivisorError(s + ")", q);
    }
}

std::shared_ptr<const FieldCtx> FieldCtx::from(const FrequencyVector& w) {
    auto c = std::make_shared<FieldCtx>();
    c->d = w.dim();
    c->omega = w.omega;
    c->nu = w.nu;
    c->a_est = w.a_est > 0 ? w.a_est : 1;
    return c;
}

Jet& ZProfile::ref(int k) {
    if (c.empty()) {
        lo = k;
        c.resize(1);
        return c[0];
    }
    if (k < lo) {
        c.insert(c.begin(), size_t(lo - k), Jet());
        lo = k;
    } else if (k > hi()) {
        c.resize(size_t(k - lo + 1));
    }
    return c[size_t(k - lo)];
}

void ZProfile::trim() {
    size_t a = 0, b = c.size();
    while (a < b && c[a].is_zero()) ++a;
    while (b > a && c[b - 1].is_zero()) --b;
    if (a == b) {
        c.clear();
        lo = 0;
        return;
    }
    c = std::vector<Jet>(c.begin() + long(a), c.begin() + long(b));
    lo += int(a);
}

Mode operator+(const Mode& a, const Mode& b) {
    Mode r(a.size());
    for (size_t j = 0; j < a.size(); ++j) r[j] = a[j] + b[j];
    return r;
}
Mode operator-(const Mode& a) {
    Mode r(a.size());
    for (size_t j = 0; j < a.size(); ++j) r[j] = -a[j];
    return r;
}

int FTField::lo() const {
    int m = INT_MAX;
    for (auto& [q, p] : modes)
        if (!p.empty()) m = std::min(m, p.lo);
    return m == INT_MAX ? 0 : m;
}
int FTField::hi() const {
    int m = INT_MIN;
    for (auto& [q, p] : modes)
        if (!p.empty()) m = std::max(m, p.hi());
    return m == INT_MIN ? 0 : m;
}
int FTField::degree() const {
    int n = 0;
    for (auto& [q, p] : modes)
        for (auto& x : p.c)
            if (!x.is_zero()) {
                n = std::max(n, l1norm(q));
                break;
            }
    return n;
}
bool FTField::is_zero() const {
    for (auto& [q, p] : modes)
        for (auto& x : p.c)
            if (!x.is_zero()) return false;
    return true;
}
size_t FTField::n_terms() const {
    size_t n = 0;
    for (auto& [q, p] : modes) n += p.c.size();
    return n;
}

Jet FTField::coeff(const Mode& q, int k) const {
    auto it = modes.find(q);
    return it == modes.end() ? Jet() : it->second.at(k);
}

void FTField::add_term(const Mode& q, int k, const Jet& a) {
    if (k > K || a.is_zero()) return;
    modes[q].ref(k) += a;
}

void FTField::for_each(const std::function<void(const Mode&, int, const Jet&)>& fn) const {
    for (auto& [q, p] : modes)
        for (size_t i = 0; i < p.c.size(); ++i) fn(q, p.lo + int(i), p.c[i]);
}

Jet FTField::eval(cplx z, const std::vector<double>& theta) const {
    Jet s;
    for (auto& [q, p] : modes) {
        if (p.empty()) continue;
        double ph = 0;
        for (int j = 0; j < dim(); ++j) ph += q[j] * theta[j];
        // Horner in z, then multiply by z^lo
        Jet acc;
        for (int i = int(p.c.size()) - 1; i >= 0; --i) acc = acc * z + p.c[size_t(i)];
        s += acc * (std::pow(z, p.lo) * std::polar(1.0, ph));
    }
    return s;
}

FTField FTField::truncated_to(int Knew) const {
    FTField r(ctx, gamma, std::min(K, Knew));
    for_each([&](const Mode& q, int k, const Jet& a) { r.add_term(q, k, a); });
    return r;
}

FTField FTField::eps_order(int l) const {
    FTField r(ctx, gamma, K);
    for_each([&](const Mode& q, int k, const Jet& a) { r.add_term(q, k, Jet::order(l, a[l])); });
    return r;
}

FTField FTField::eps_truncated(int l) const {
    FTField r(ctx, gamma, K);
    for_each([&](const Mode& q, int k, const Jet& a) { r.add_term(q, k, a.truncated(l)); });
    return r;
}

void FTField::trim() {
    for (auto it = modes.begin(); it != modes.end();) {
        it->second.trim();
        if (it->second.empty())
            it = modes.erase(it);
        else
            ++it;
    }
}

FTField& FTField::operator+=(const FTField& o) {
    if (!ctx) ctx = o.ctx, gamma = o.gamma;
    K = std::min(K, o.K);
    if (K < kExactK)
        for (auto& [q, p] : modes)
            if (!p.empty() && p.hi() > K) p.c.resize(size_t(std::max(0, K - p.lo + 1)));
    o.for_each([&](const Mode& q, int k, const Jet& a) { add_term(q, k, a); });
    return *this;
}
FTField& FTField::operator-=(const FTField& o) { return *this += -o; }
FTField& FTField::operator*=(const Jet& s) {
    for (auto& [q, p] : modes)
        for (auto& x : p.c) x = x * s;
    return *this;
}

FTField FTField::monomial(CtxPtr c, Jet g, const Mode& q, int k, Jet a) {
    FTField r(std::move(c), g);
    r.add_term(q, k, a);
    return r;
}

FTField operator+(FTField a, const FTField& b) { return a += b; }
FTField operator-(FTField a, const FTField& b) { return a -= b; }
FTField operator-(FTField a) {
    a *= Jet(-1.0);
    return a;
}
FTField operator*(FTField a, const Jet& s) { return a *= s; }
FTField operator*(const Jet& s, FTField a) { return a *= s; }

FTField operator*(const FTField& a, const FTField& b) {
    const int la = a.lo(), lb = b.lo();
    int K = kExactK;
    if (!a.exact()) K = std::min(K, a.K + lb);
    if (!b.exact()) K = std::min(K, b.K + la);
    FTField r(a.ctx ? a.ctx : b.ctx, a.ctx ? a.gamma : b.gamma, K);
    for (auto& [qa, pa] : a.modes) {
        if (pa.empty()) continue;
        for (auto& [qb, pb] : b.modes) {
            if (pb.empty()) continue;
            const int kmin = pa.lo + pb.lo;
            const int kmax = std::min(pa.hi() + pb.hi(), K);
            if (kmax < kmin) continue;
            ZProfile& out = r.modes[qa + qb];
            out.ref(kmin);
            out.ref(kmax);
            for (size_t i = 0; i < pa.c.size(); ++i) {
                const int ka = pa.lo + int(i);
                const Jet& x = pa.c[i];
                if (x.is_zero()) continue;
                const int jmax = std::min(int(pb.c.size()) - 1, kmax - ka - pb.lo);
                for (int j = 0; j <= jmax; ++j) fma_into(out.c[size_t(ka + pb.lo + j - out.lo)], x, pb.c[size_t(j)]);
            }
        }
    }
    r.trim();
    return r;
}

namespace {
template <class Fn>
FTField map_terms(const FTField& h, Fn fn) {
    FTField r(h.ctx, h.gamma, h.K);
    h.for_each([&](const Mode& q, int k, const Jet& a) {
        if (a.is_zero()) return;
        r.add_term(q, k, fn(q, k, a));
    });
    return r;
}
}  // namespace

FTField apply_L(const FTField& h) {
    return map_terms(h, [&](const Mode& q, int k, const Jet& a) {
        return a * (double(k) * h.gamma + Jet(cplx(0, h.ctx->Omega(q))));
    });
}

FTField apply_Dinv(const FTField& h) {
    FTField r(h.ctx, h.gamma, h.K);
    h.for_each([&](const Mode& q, int k, const Jet& a) {
        if (l1norm(q) == 0 || a.is_zero()) return;
        h.ctx->check_divisor(q);
        r.add_term(q, k, a / cplx(0, h.ctx->Omega(q)));
    });
    return r;
}

FTField apply_I(const FTField& h) {
    return map_terms(h, [&](const Mode& q, int k, const Jet& a) {
        if (k == 0) {
            if (l1norm(q) == 0) throw SecularTermError("I: non-integrable (k,q)=(0,0) term");
            h.ctx->check_divisor(q);
        }
        return a / (double(k) * h.gamma + Jet(cplx(0, h.ctx->Omega(q))));
    });
}

FTField apply_zdz(const FTField& h) {
    return map_terms(h, [](const Mode&, int k, const Jet& a) { return a * double(k); });
}

FTField shift_modes(const FTField& h, const Mode& s) {
    FTField r(h.ctx, h.gamma, h.K);
    for (auto& [q, p] : h.modes) r.modes[q + s] = p;
    return r;
}

FTField taylor_part(const FTField& h, int k) {
    if (h.lo() < 0 && k >= 0) throw PoleProjectionError("taylor_part: field has a pole at z=0");
    if (k > h.K) throw PoleProjectionError("taylor_part: coefficient beyond truncation");
    FTField r(h.ctx, h.gamma);
    for (auto& [q, p] : h.modes) r.add_term(q, 0, p.at(k));
    return r;
}

FTField delta(const FTField& h, int k) {
    if (h.lo() < 0) throw PoleProjectionError("delta: field has a pole at z=0");
    FTField r(h.ctx, h.gamma, h.K);
    h.for_each([&](const Mode& q, int kk, const Jet& a) {
        if (kk >= k) r.add_term(q, kk, a);
    });
    return r;
}

FTField taylor_upto(const FTField& h, int k) {
    if (h.lo() < 0) throw PoleProjectionError("taylor_upto: field has a pole at z=0");
    if (k > h.K) throw PoleProjectionError("taylor_upto: coefficient beyond truncation");
    FTField r(h.ctx, h.gamma);
    h.for_each([&](const Mode& q, int kk, const Jet& a) {
        if (kk <= k) r.add_term(q, kk, a);
    });
    return r;
}

FTField truncate_modes(const FTField& h, int N) {
    FTField r(h.ctx, h.gamma, h.K);
    for (auto& [q, p] : h.modes)
        if (l1norm(q) <= N) r.modes[q] = p;
    return r;
}

FTField time_reverse(const FTField& h) {
    if (!h.exact()) throw std::domain_error("time_reverse needs an exact Laurent polynomial");
    FTField r(h.ctx, h.gamma);
    h.for_each([&](const Mode& q, int k, const Jet& a) { r.add_term(-q, -k, a); });
    return r;
}

FTField mode_conjugate(const FTField& h) {
    FTField r(h.ctx, h.gamma, h.K);
    h.for_each([&](const Mode& q, int k, const Jet& a) { r.add_term(-q, k, conj(a)); });
    return r;
}

double max_abs(const FTField& h) {
    double m = 0;
    h.for_each([&](const Mode&, int, const Jet& a) { m = std::max(m, a.max_abs()); });
    return m;
}

bool is_real(const FTField& h, double tol) {
    const double s = std::max(1.0, max_abs(h));
    return max_abs(h - mode_conjugate(h)) <= tol * s;
}

// ---- separatrix series ----

FTField series_P(CtxPtr c, Jet g, int K) {
    FTField r(c, g, K);
    const Mode z0 = c->zero_mode();
    for (int n = 1; n <= K; n += 2) r.add_term(z0, n, Jet(((n / 2) % 2) ? -1.0 : 1.0));
    return r;
}

FTField exact_Q(CtxPtr c, Jet g) {
    FTField r(c, g);
    const Mode z0 = c->zero_mode();
    r.add_term(z0, 1, Jet(1.0));
    r.add_term(z0, -1, Jet(-1.0));
    return r;
}

FTField series_Phi0(CtxPtr c, Jet g, int K) {
    FTField r(c, g, K);
    const Mode z0 = c->zero_mode();
    for (int n = 1; n <= K; n += 2) r.add_term(z0, n, Jet(4.0 * (((n / 2) % 2) ? -1.0 : 1.0) / n));
    return r;
}

namespace {
// 1/(1+z^2)^2 = sum (n+1)(-1)^n z^{2n}
FTField inv_sq(CtxPtr c, Jet g, int K) {
    FTField r(c, g, K);
    const Mode z0 = c->zero_mode();
    for (int n = 0; 2 * n <= K; ++n) r.add_term(z0, 2 * n, Jet(double(n + 1) * ((n % 2) ? -1.0 : 1.0)));
    return r;
}
}  // namespace

FTField series_sinPhi0(CtxPtr c, Jet g, int K) {
    FTField num(c, g);
    const Mode z0 = c->zero_mode();
    num.add_term(z0, 1, Jet(4.0));
    num.add_term(z0, 3, Jet(-4.0));
    return num * inv_sq(c, g, K);
}

FTField series_cosPhi0(CtxPtr c, Jet g, int K) {
    FTField r = FTField::monomial(c, g, c->zero_mode(), 2, Jet(-8.0)) * inv_sq(c, g, K);
    r.add_term(c->zero_mode(), 0, Jet(1.0));
    return r;
}

FTField series_Em(CtxPtr c, Jet g, int m, int K) {
    const Mode z0 = c->zero_mode();
    FTField r = FTField::constant(c, g, Jet(1.0)).truncated_to(K);
    if (m == 0) return r;
    // (1+iz)/(1-iz) = 1 + 2 sum_{n>=1} (iz)^n, and E_{-m}(z) = E_m(-z)
    const double sgn = m > 0 ? 1.0 : -1.0;
    FTField base(c, g, K);
    base.add_term(z0, 0, Jet(1.0));
    cplx p = 1;
    for (int n = 1; n <= K; ++n) {
        p *= cplx(0, sgn);
        base.add_term(z0, n, Jet(2.0 * p));
    }
    for (int i = 0; i < 2 * std::abs(m); ++i) r = r * base;
    return r;
}

FieldVec zero_vec(CtxPtr c, Jet g, int K) {
    FieldVec v;
    for (int i = 0; i <= c->d; ++i) v.emplace_back(c, g, K);
    return v;
}
FieldVec operator+(const FieldVec& a, const FieldVec& b) {
    FieldVec r = a;
    for (size_t i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}
FieldVec operator-(const FieldVec& a, const FieldVec& b) {
    FieldVec r = a;
    for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}
FieldVec operator*(const Jet& s, const FieldVec& a) {
    FieldVec r = a;
    for (auto& x : r) x *= s;
    return r;
}
FieldVec map_vec(const FieldVec& a, const std::function<FTField(const FTField&)>& fn) {
    FieldVec r;
    for (auto& x : a) r.push_back(fn(x));
    return r;
}
double max_abs(const FieldVec& a) {
    double m = 0;
    for (auto& x : a) m = std::max(m, max_abs(x));
    return m;
}

}  // namespace sepx
