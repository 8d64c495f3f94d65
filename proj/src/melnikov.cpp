#include "sepx/melnikov.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "sepx/quadrature.hpp"

namespace sepx {

namespace {

constexpr double kPi = std::numbers::pi;

Mat outer(const Mode& q) {
    const int d = int(q.size());
    Mat M(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) M(i, j) = double(q[i]) * q[j];
    return M;
}

bool is_zero_mode(const Mode& q) {
    return std::all_of(q.begin(), q.end(), [](int x) { return x == 0; });
}

// largest |t| where e^{i m Phi0(e^{gt})} - 1 is still above 1e-17
double cutoff(int m, double g) { return (39.0 + std::log(4.0 * std::abs(m) + 1)) / g; }

}  // namespace

cplx melnikov_J(int m, double W, double g, double tol, double* err) {
    if (m == 0) return 0;
    // pure in its arguments; memoized per thread
    using Key = std::tuple<int, double, double, double>;
    thread_local std::map<Key, std::pair<cplx, double>> memo;
    const Key key{m, W, g, tol};
    if (auto it = memo.find(key); it != memo.end()) {
        if (err) *err += it->second.second;
        return it->second.first;
    }
    auto f = [=](double t) {
        const double u = std::exp(g * t);
        return std::polar(1.0, W * t) * (std::polar(1.0, 4.0 * m * std::atan(u)) - 1.0);
    };
    const double T = cutoff(m, g);
    const double len = std::min(1.0 / g, std::abs(W) > 0 ? 2 * kPi / std::abs(W) : 1e300);
    double e = 0;
    const cplx v = quad_pieces(f, -T, T, len, tol, &e);
    if (memo.size() > 4096) memo.clear();
    memo.emplace(key, std::pair{v, e});
    if (err) *err += e;
    return v;
}

Mat melnikov_F(double s, const std::vector<double>& theta, const ModelParams& p, double tol) {
    const int d = p.dim();
    Mat F = Mat::Zero(d, d);
    for (auto& h : p.f.harmonics) {
        if (h.m == 0 || is_zero_mode(h.q)) continue;
        const double W = p.omega.dot(h.q);
        double ph = 0;
        for (int j = 0; j < d; ++j) ph += h.q[j] * (theta[size_t(j)] - p.omega.omega[size_t(j)] * s / p.g);
        const cplx J = melnikov_J(h.m, W, p.g, tol);
        F -= h.coeff * (std::polar(1.0, ph) * J).real() * outer(h.q);
    }
    return F;
}

MelnikovResult melnikov_matrix(const ModelParams& p) {
    const int d = p.dim();
    MelnikovResult r;
    r.g = p.g;
    r.upsilon1 = Mat::Zero(d, d);
    const double g2 = p.g * p.g;
    for (auto& h : p.f.harmonics) {
        if (h.m == 0 || is_zero_mode(h.q)) continue;
        double err = 0;
        const cplx J = melnikov_J(h.m, p.omega.dot(h.q), p.g, 1e-14, &err);
        const CMat M = (-0.5 * h.coeff * g2) * J * outer(h.q).cast<cplx>();
        auto add = [&](const Mode& q, const CMat& X) {
            auto it = r.per_mode.find(q);
            if (it == r.per_mode.end())
                r.per_mode.emplace(q, X);
            else
                it->second += X;
        };
        add(h.q, M);
        add(-h.q, M.conjugate());
        r.quadrature_error += g2 * std::abs(h.coeff) * outer(h.q).norm() * err;
    }
    for (auto& [q, X] : r.per_mode) r.upsilon1 += X.real();
    return r;
}

Mat melnikov_matrix_regint(const ModelParams& p, double t) {
    const int d = p.dim();
    auto ctx = FieldCtx::from(p.omega);
    std::map<int, ProfilePtr> prof;
    auto E = [&](int m) {
        auto it = prof.find(m);
        if (it == prof.end()) it = prof.emplace(m, Em_profile(m)).first;
        return it->second;
    };
    Mat U = Mat::Zero(d, d);
    const std::vector<double> th(size_t(d), 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            RegularizedIntegrand h;
            for (auto& hm : p.f.harmonics) {
                if (hm.m == 0 || hm.q[i] * hm.q[j] == 0) continue;
                const double c = -0.5 * hm.coeff * hm.q[i] * hm.q[j];
                h.terms.push_back({0, 0, hm.q, c, E(hm.m)});
                h.terms.push_back({0, 0, -hm.q, c, E(-hm.m)});
            }
            if (h.terms.empty()) continue;
            const cplx v = regint(h, Bounds::lower, t, 1.0, th, p.g, *ctx) + regint(h, Bounds::upper, t, 1.0, th, p.g, *ctx);
            U(i, j) = U(j, i) = p.g * p.g * v.real();
        }
    return U;
}

Mat single_harmonic_oracle(const Mode& q, double g, const FrequencyVector& omega) {
    const double W = omega.dot(q);
    if (std::abs(W) < 1e-12) return 4 * g * outer(q);
    return (2 * kPi * W / std::sinh(kPi * W / (2 * g))) * outer(q);
}

CMat melnikov_Fhat(const Mode& q, const ModelParams& p) {
    const int d = p.dim();
    CMat F = CMat::Zero(d, d);
    const double W = p.omega.dot(q);
    for (auto& h : p.f.harmonics) {
        if (h.m == 0) continue;
        if (h.q == q) F += (-0.5 * h.coeff) * melnikov_J(h.m, W, p.g) * outer(q).cast<cplx>();
        if (h.q == -q) F += (-0.5 * h.coeff) * melnikov_J(-h.m, W, p.g) * outer(q).cast<cplx>();
    }
    return F;
}

LazutkinFit lazutkin_scan(const ModelParams& p, const std::vector<double>& g_list) {
    std::vector<Mode> qs;
    for (auto& h : p.f.harmonics)
        if (h.m != 0 && !is_zero_mode(h.q) && std::find(qs.begin(), qs.end(), -h.q) == qs.end() &&
            std::find(qs.begin(), qs.end(), h.q) == qs.end())
            qs.push_back(h.q);
    struct Row {
        double W, n, logv, g;
    };
    std::vector<Row> rows;
    for (double g : g_list) {
        ModelParams pg = p;
        pg.g = g;
        for (auto& q : qs) {
            const double v = melnikov_Fhat(q, pg).norm();
            if (v > 0) rows.push_back({std::abs(p.omega.dot(q)) / g, double(l1norm(q)), std::log(v), g});
        }
    }
    LazutkinFit r;
    r.n = int(rows.size());
    if (rows.empty()) return r;
    const bool vary_n = std::any_of(rows.begin(), rows.end(), [&](const Row& x) { return x.n != rows[0].n; });
    const int cols = vary_n ? 3 : 2;
    Eigen::MatrixXd A(r.n, cols);
    Eigen::VectorXd b(r.n);
    for (int i = 0; i < r.n; ++i) {
        A(i, 0) = 1;
        A(i, 1) = -rows[size_t(i)].W;
        if (vary_n) A(i, 2) = -rows[size_t(i)].n;
        b(i) = rows[size_t(i)].logv;
    }
    const Eigen::VectorXd x = A.colPivHouseholderQr().solve(b);
    r.theta_eff = x(1);
    r.eta_eff = vary_n ? x(2) : 0;
    r.rms = std::sqrt((A * x - b).squaredNorm() / r.n);
    double top = -1e300;
    for (auto& w : rows) top = std::max(top, w.logv + r.theta_eff * w.W + r.eta_eff * w.n);
    r.B = std::exp(top);
    return r;
}

const char* to_string(FitModel m) { return m == FitModel::single_harmonic ? "single_harmonic" : "diophantine"; }

SmallnessFit smallness_fit(const std::vector<double>& g, const std::vector<double>& y, FitModel model, double nu) {
    if (g.size() != y.size()) throw std::invalid_argument("smallness_fit: size mismatch");
    if (g.size() < 4) throw FitDomainError("smallness_fit: need at least 4 points");
    const int n = int(g.size());
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd b(n);
    double lo = 1e300, hi = -1e300;
    for (int i = 0; i < n; ++i) {
        if (!(y[size_t(i)] > 0) || !(g[size_t(i)] > 0)) throw FitDomainError("smallness_fit: non-positive value");
        const double ly = std::log(y[size_t(i)]);
        lo = std::min(lo, ly);
        hi = std::max(hi, ly);
        const double gi = g[size_t(i)];
        A(i, 0) = 1;
        if (model == FitModel::single_harmonic) {
            A(i, 1) = -1 / gi;
            b(i) = ly;
        } else {
            A(i, 1) = -std::pow(gi, -1 / (nu + 1));
            b(i) = ly - 2 * std::log(gi);
        }
    }
    const Eigen::VectorXd x = A.colPivHouseholderQr().solve(b);
    SmallnessFit r;
    r.model = model;
    r.nu = nu;
    r.C_fit = std::exp(x(0));
    r.c_fit = x(1);
    const Eigen::VectorXd res = A * x - b;
    const double rms = std::sqrt(res.squaredNorm() / n);
    r.residual = hi > lo ? rms / (hi - lo) : rms;
    for (int i = 0; i < n; ++i) {
        const double gi = g[size_t(i)];
        r.predicted.push_back(model == FitModel::single_harmonic
                                  ? r.C_fit * std::exp(-r.c_fit / gi)
                                  : r.C_fit * gi * gi * std::exp(-r.c_fit * std::pow(gi, -1 / (nu + 1))));
    }
    return r;
}

SmallnessFit smallness_fit(const std::vector<double>& g, const std::vector<Mat>& values, FitModel model, double nu) {
    std::vector<double> y;
    for (auto& v : values) y.push_back(v.norm());
    return smallness_fit(g, y, model, nu);
}

namespace {

// first nonzero power of a Laurent series
int valuation(const Laurent& L) {
    for (size_t i = 0; i < L.c.size(); ++i)
        if (std::abs(L.c[i]) > 0) return L.lo + int(i);
    return 1 << 20;
}

// int_0^inf e^{a t} (t + c)^p dt, continued to Re a >= 0
cplx half_line_poly(cplx a, cplx c, int p) {
    cplx s = 0, binom = 1, fact = 1;
    for (int j = 0; j <= p; ++j) {
        if (j > 0) {
            binom *= double(p - j + 1) / j;
            fact *= double(j);
        }
        s += binom * std::pow(c, p - j) * fact * (j % 2 ? 1.0 : -1.0) / std::pow(a, j + 1);
    }
    return s;
}

}  // namespace

ContourShift contour_shift_eval(const ModeTerm& h, double vartheta, double g, const FieldCtx& ctx,
                                double singular_arg) {
    if (!h.profile) throw std::invalid_argument("contour_shift_eval: term needs a profile");
    const Profile& pr = *h.profile;
    if (h.k + valuation(pr.at0) < 1) throw std::invalid_argument("contour_shift_eval: integrand must vanish at u = 0");
    if (!pr.has_inf) throw std::invalid_argument("contour_shift_eval: profile lacks data at infinity");
    const int vinf = valuation(pr.atinf);
    if (h.k - vinf > 0) throw std::invalid_argument("contour_shift_eval: integrand must stay bounded at infinity");
    if (vartheta <= 0 || vartheta >= singular_arg)
        throw ContourObstructionError("contour_shift_eval: shifted strip reaches a profile singularity");
    const double W = ctx.Omega(h.q);
    if (W == 0) throw std::invalid_argument("contour_shift_eval: resonant mode");
    // limit of u^k a(u) at infinity
    cplx hinf = 0;
    if (h.k == vinf) hinf = pr.atinf.c[size_t(vinf - pr.atinf.lo)];

    ContourShift r;
    RegularizedIntegrand one{{h}};
    const std::vector<double> th(size_t(ctx.d), 0.0);
    r.direct = regint(one, Bounds::full, 0, 1.0, th, g, ctx);

    const double sg = W > 0 ? 1 : -1;
    const double tq = sg * vartheta / g;
    const cplx rot = std::polar(1.0, sg * vartheta);
    const cplx itq(0, tq);
    auto hat = [&](double t) {
        const cplx u = rot * std::exp(g * t);
        return h.coeff * std::pow(u, h.k) * pr.value(u);
    };
    const double T = 60 / g;
    const double len = std::min(1 / g, 2 * std::numbers::pi / std::abs(W));
    auto H = [&](cplx R) {
        auto f = [&](double t) { return std::exp(cplx(-R.real(), W - R.imag()) * t) * std::pow(t + itq, h.p) * (hat(t) - hinf); };
        return quad_pieces(f, 0.0, T, len) + hinf * half_line_poly(cplx(-R.real(), W - R.imag()), itq, h.p);
    };
    auto left = [&](double t) { return std::polar(1.0, W * t) * std::pow(t + itq, h.p) * hat(t); };
    const cplx I0 = quad_pieces(left, -T, 0.0, len);
    r.prefactor = std::exp(-vartheta * std::abs(W) / g);
    r.remaining = H(0.0) + I0;
    r.shifted = r.prefactor * r.remaining;
    r.rho = g / 4;
    for (int k = 0; k < 32; ++k) r.sup_H = std::max(r.sup_H, std::abs(H(std::polar(r.rho, 2 * std::numbers::pi * k / 32))));
    double term = 1;
    for (int j = 0; j <= h.p; ++j) {
        if (j > 0) term *= r.rho * vartheta / g / j;
        r.residue_bound += term;
    }
    return r;
}

}  // namespace sepx
