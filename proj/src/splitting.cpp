#include "sepx/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>

#include "sepx/manifold.hpp"
#include "sepx/regint.hpp"

namespace sepx {

namespace {

constexpr double kLn2 = std::numbers::ln2;

Mat melnikov_or_zero(const ModelParams& p) {
    if (!p.f.depends_on_psi()) return Mat::Zero(p.dim(), p.dim());
    return melnikov_matrix(p).upsilon1;
}

std::vector<double> omega_t(const ModelParams& p, double t) {
    std::vector<double> th;
    for (double o : p.omega.omega) th.push_back(o * t);
    return th;
}

// ---- rational profiles: 1, P = u/(1+u^2), Q = u - 1/u against e^{i m Phi0} ----
enum class Weight { one, P, Q };

using Poly = std::vector<cplx>;
Poly pmul(const Poly& a, const Poly& b) {
    Poly r(a.size() + b.size() - 1, 0.0);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}
Poly ppow(const Poly& a, int n) {
    Poly r{1.0};
    for (int i = 0; i < n; ++i) r = pmul(r, a);
    return r;
}

class ProfileCache {
public:
    // returns (k, profile) with u^k profile(u) = weight(u) e^{i m Phi0(u)}
    std::pair<int, ProfilePtr> get(Weight w, int m) {
        const auto key = std::make_pair(int(w), m);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        const cplx I(0, 1);
        Poly num = ppow({1.0, I}, 2 * std::abs(m)), den = ppow({1.0, -I}, 2 * std::abs(m));
        if (m < 0) std::swap(num, den);
        std::pair<int, ProfilePtr> v;
        switch (w) {
            case Weight::one:
                v = {0, m == 0 ? nullptr : rational_profile(num, den, 0.3, 1 / 0.3)};
                break;
            case Weight::P:
                v = {1, rational_profile(num, pmul(den, {1.0, 0.0, 1.0}), 0.3, 1 / 0.3)};
                break;
            case Weight::Q:
                v = {-1, rational_profile(pmul(num, {-1.0, 0.0, 1.0}), den, 0.3, 1 / 0.3)};
                break;
        }
        return cache_[key] = v;
    }

private:
    std::map<std::pair<int, int>, std::pair<int, ProfilePtr>> cache_;
};

// coeff tau^p weight(u) * sum_h a(h) cos(m Phi0(u) + q.omega tau) along the homoclinic
// trajectory. Every a(h) carries a factor of q from a psi-derivative, so q = 0
// harmonics drop out; a surviving q = 0 term would break the theta-gradient structure.
RegularizedIntegrand harmonic_integrand(const ModelParams& p, ProfileCache& pc, Weight w, int pw, double coeff,
                                        const std::function<double(const Harmonic&)>& a) {
    RegularizedIntegrand r;
    for (auto& h : p.f.harmonics) {
        const double c = coeff * a(h);
        if (c == 0) continue;
        if (std::all_of(h.q.begin(), h.q.end(), [](int x) { return x == 0; })) throw std::logic_error("q = 0 term in a theta-gradient integrand");
        auto [k1, pr1] = pc.get(w, h.m);
        auto [k2, pr2] = pc.get(w, -h.m);
        Mode mq = h.q;
        for (auto& x : mq) x = -x;
        r.terms.push_back({pw, k1, h.q, 0.5 * c, pr1});
        r.terms.push_back({pw, k2, mq, 0.5 * c, pr2});
    }
    return r;
}

double real_regint(const RegularizedIntegrand& h, Bounds b, double t, const ModelParams& p, const FieldCtx& ctx) {
    if (h.terms.empty()) return 0;
    const std::vector<double> th(size_t(p.dim()), 0.0);
    return regint(h, b, t, 1.0, th, p.g, ctx).real();
}

// d Y_Psi / d theta of both sides at (e^{gamma t}, theta) from the jets
struct SideJets {
    WhiskerJet u, s;
};
SideJets side_jets(double t, const WhiskerExpansion& w) {
    const Jet z = exp(w.gamma * t);
    const auto th = omega_t(w.params, t);
    return {whisker_at(w, z, th, true), whisker_stable_at(w, z, th, true)};
}

// one side of a direct measurement: the phase point of the chosen whisker at
// (e^{gamma (t + s)}, theta) reached by the true flow over T0
class DirectSide {
public:
    DirectSide(const WhiskerExpansion& w, double eps, double T0, double tol, bool stable)
        : w_(w), eps_(eps), T0_(T0), tol_(tol), stable_(stable) {
        p_ = w.params;
        p_.epsilon = eps;
        gamma_ = w.gamma_at(eps);
    }
    // the first call records the step sequence, later calls replay it
    PhaseState at(double t, const std::vector<double>& theta) {
        const int d = p_.dim();
        const double dir = stable_ ? 1 : -1;
        std::vector<double> th0(static_cast<size_t>(d));
        for (int j = 0; j < d; ++j) th0[size_t(j)] = theta[size_t(j)] + dir * p_.omega.omega[size_t(j)] * T0_;
        const Jet z(std::exp(gamma_ * (t + dir * T0_)));
        const WhiskerJet J = stable_ ? whisker_stable_at(w_, z, th0) : whisker_at(w_, z, th0);
        const PhaseState x0 = to_phase(J, th0, p_.omega.omega, eps_, w_.solved());
        if (steps_.empty()) return flow_map(x0, p_, -dir * T0_, tol_, &steps_);
        return flow_map(x0, p_, -dir * T0_, tol_, nullptr, &steps_);
    }
    size_t steps() const { return steps_.size(); }

private:
    const WhiskerExpansion& w_;
    ModelParams p_;
    double eps_, T0_, tol_, gamma_ = 0;
    bool stable_;
    std::vector<double> steps_;
};

double default_T0(const WhiskerExpansion& w, double eps, const DirectOptions& opt) {
    return opt.T0 > 0 ? opt.T0 : 6 / w.gamma_at(eps);
}

}  // namespace

const char* to_string(SplitMethod m) {
    switch (m) {
        case SplitMethod::melnikov: return "melnikov";
        case SplitMethod::perturbative_l2: return "perturbative-l2";
        case SplitMethod::direct: return "direct";
    }
    return "?";
}

SplittingResult splitting_melnikov(double t, const ModelParams& p) {
    p.validate();
    SplittingResult r;
    r.t = t;
    r.params = p;
    r.order_tag = SplitMethod::melnikov;
    if (p.f.depends_on_psi()) {
        auto M = melnikov_matrix(p);
        r.matrix = p.epsilon * M.upsilon1;
        r.error_estimate = std::abs(p.epsilon) * M.quadrature_error;
    } else {
        r.matrix = Mat::Zero(p.dim(), p.dim());
    }
    return r;
}

std::array<Mat, kJetN> splitting_jet(double t, const WhiskerExpansion& w) {
    const int d = w.params.dim();
    const SideJets J = side_jets(t, w);
    std::array<Mat, kJetN> U;
    for (auto& M : U) M = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const Jet v = J.u.dY[size_t(1 + i)][size_t(j)] - J.s.dY[size_t(1 + i)][size_t(j)];
            for (int l = 0; l < kJetN; ++l) U[size_t(l)](i, j) = v[l].real();
        }
    return U;
}

SplittingResult splitting_perturbative(double t, const WhiskerExpansion& w, double eps, int ell) {
    if (ell < 1 || ell > w.solved()) throw std::invalid_argument("splitting_perturbative: order not available");
    const auto U = splitting_jet(t, w);
    SplittingResult r;
    r.t = t;
    r.params = w.params;
    r.params.epsilon = eps;
    r.order_tag = SplitMethod::perturbative_l2;
    r.matrix = Mat::Zero(w.params.dim(), w.params.dim());
    for (int l = 1; l <= ell; ++l) r.matrix += std::pow(eps, l) * U[size_t(l)];
    if (ell + 1 < kJetN && ell + 1 <= w.solved())
        r.error_estimate = std::pow(std::abs(eps), ell + 1) * U[size_t(ell + 1)].norm();
    return r;
}

SplittingResult splitting_direct(double t, const WhiskerExpansion& w, double eps, const DirectOptions& opt) {
    const ModelParams& p = w.params;
    const int d = p.dim(), L = w.solved();
    const double T0 = default_T0(w, eps, opt), h = opt.fd_step, ga = w.gamma_at(eps);

    SplittingResult r;
    r.t = t;
    r.params = p;
    r.params.epsilon = eps;
    r.order_tag = SplitMethod::direct;
    r.T0 = T0;

    // budgets before integrating anything
    const auto U = splitting_jet(t, w);
    r.expected = std::abs(eps) * U[1].norm();
    double rho = 1;
    for (int l = 2; l <= L; ++l)
        if (U[size_t(l - 1)].norm() > 0) rho = std::max(rho, U[size_t(l)].norm() / U[size_t(l - 1)].norm());
    r.truncation_budget = std::pow(std::abs(eps), L + 1) * U[size_t(L)].norm() * rho;
    for (double zs : {std::exp(ga * (t - T0)), std::exp(-ga * (t + T0))}) {
        const double amp = std::exp(ga * T0);
        const double lin = zs <= w.opt.r_seed ? std::pow(zs, w.opt.K + 1) / (1 - zs) : w.opt.ode_tol;
        r.linearization_budget = std::max(r.linearization_budget, lin * amp);
    }
    if (r.truncation_budget + r.linearization_budget > opt.budget_ratio * r.expected + 10 * opt.tol) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "splitting_direct: truncation %.3e + linearization %.3e vs expected %.3e",
                      r.truncation_budget, r.linearization_budget, r.expected);
        throw InconclusiveMeasurement(buf, r.truncation_budget + r.linearization_budget, r.expected);
    }

    DirectSide us(w, eps, T0, opt.tol, false), st(w, eps, T0, opt.tol, true);
    const auto th = omega_t(p, t);
    const PhaseState a0 = us.at(t, th);
    st.at(t, th);
    // central differences at h and 2h; their gap measures truncation and rounding of the differences
    auto central = [&](double step) {
        Mat D = Mat::Zero(d, d);
        for (int j = 0; j < d; ++j) {
            auto tp = th, tm = th;
            tp[size_t(j)] += step;
            tm[size_t(j)] -= step;
            const PhaseState up = us.at(t, tp), um = us.at(t, tm), sp = st.at(t, tp), sm = st.at(t, tm);
            for (int i = 0; i < d; ++i)
                D(i, j) = ((up.A[size_t(i)] - sp.A[size_t(i)]) - (um.A[size_t(i)] - sm.A[size_t(i)])) / (2 * step);
        }
        return D;
    };
    r.matrix = central(h);
    r.fd_budget = (central(2 * h) - r.matrix).norm();
    // |D_h - D_2h| can vanish by accident; rounding along the replayed steps adds up like a random walk
    double amax = 0;
    for (double a : a0.A) amax = std::max(amax, std::abs(a));
    r.rounding_budget = std::numeric_limits<double>::epsilon() * amax * std::sqrt(double(us.steps() + st.steps())) / h;
    r.error_estimate = r.truncation_budget + r.linearization_budget + r.fd_budget + r.rounding_budget;
    return r;
}

SplittingResult splitting_direct(double t, const ModelParams& p, double tol, double fd_step) {
    p.validate();
    WhiskerOptions o;
    o.l_max = 3;
    const WhiskerExpansion w = build_whisker(p, o);
    DirectOptions opt;
    opt.tol = tol;
    opt.fd_step = fd_step;
    return splitting_direct(t, w, p.epsilon, opt);
}

// ---- order eps^2 ----

std::vector<AsymptoticPart> asymptotic_parts(const ModelParams& p, double t) {
    p.validate();
    const int d = p.dim();
    const double g = p.g, g2 = g * g;
    auto ctx = FieldCtx::from(p.omega);
    ProfileCache pc;
    // f_{varphi_r psi_j} = -coeff a_r q_j cos(...), a_0 = m, a_{1+l} = q_l
    auto fd2 = [](int r, int j) {
        return [r, j](const Harmonic& h) { return -h.coeff * (r == 0 ? h.m : h.q[size_t(r - 1)]) * h.q[size_t(j)]; };
    };
    std::vector<AsymptoticPart> out;
    for (int i = 0; i <= 1; ++i)
        for (int pp = 0; pp <= i; ++pp)
            for (int j = 1; j <= 2; ++j) {
                AsymptoticPart a;
                a.i = i;
                a.p = pp;
                a.j = j;
                a.E = Mat::Zero(d + 1, d);
                a.c = Mat::Zero(d, d + 1);
                // bar K_ij and K_ij as (weight, factor) on the Phi and Psi blocks
                const bool psi_part = (i == 1 && j == 2);
                const Weight kbar_w = j == 1 ? Weight::P : Weight::Q;
                Weight k_w = Weight::P;
                double k_f = 0;
                if (i == 0 && j == 1) k_w = Weight::Q, k_f = 1 / (2 * g);
                if (i == 0 && j == 2) k_w = Weight::P, k_f = -1 / (2 * g);
                if (i == 1 && j == 1) k_w = Weight::P, k_f = 2;
                // E: -(-tau)^e bar K_ij g^2 f_{varphi psi_j'}, full line
                const int e = (i == 1 ? 1 : 0) - pp;
                const double sgn = -((e % 2) ? -1.0 : 1.0) * g2;
                for (int jj = 0; jj < d; ++jj) {
                    if (psi_part) {
                        for (int l = 0; l < d; ++l)
                            a.E(1 + l, jj) = real_regint(harmonic_integrand(p, pc, Weight::one, e, sgn, fd2(1 + l, jj)),
                                                         Bounds::full, 0, p, *ctx);
                    } else {
                        a.E(0, jj) =
                            real_regint(harmonic_integrand(p, pc, kbar_w, e, sgn, fd2(0, jj)), Bounds::full, 0, p, *ctx);
                    }
                }
                // c: int_t^inf tau^p K_ij f_{psi_k varphi_r}
                for (int k = 0; k < d; ++k) {
                    if (psi_part) {
                        for (int l = 0; l < d; ++l)
                            a.c(k, 1 + l) = real_regint(harmonic_integrand(p, pc, Weight::one, pp, 1.0, fd2(1 + l, k)),
                                                        Bounds::upper, t, p, *ctx);
                    } else {
                        a.c(k, 0) = real_regint(harmonic_integrand(p, pc, k_w, pp, k_f, fd2(0, k)), Bounds::upper, t, p,
                                                *ctx);
                    }
                }
                out.push_back(std::move(a));
            }
    return out;
}

Mat zeta1(double tau, const std::vector<AsymptoticPart>& parts, double g) {
    Mat Z = Mat::Zero(parts.front().E.rows(), parts.front().E.cols());
    for (auto& a : parts) {
        const KernelValue K = K_part(a.i, a.j, tau, 1.0, g);
        const double tp = std::pow(tau, a.p);
        Z.row(0) += tp * K.phi.real() * a.E.row(0);
        Z.bottomRows(Z.rows() - 1) += tp * K.psi.real() * a.E.bottomRows(Z.rows() - 1);
    }
    return Z;
}

Mat zeta1_jet(double tau, const WhiskerExpansion& w) {
    const int d = w.params.dim();
    const SideJets J = side_jets(tau, w);
    Mat Z(d + 1, d);
    for (int r = 0; r <= d; ++r)
        for (int j = 0; j < d; ++j)
            Z(r, j) = (J.s.dX[size_t(r)][size_t(j)] - J.u.dX[size_t(r)][size_t(j)])[1].real();
    return Z;
}

double Order2Result::contracted_residual() const {
    const double n = upsilon2_jet.norm();
    return n > 0 ? (upsilon2 - upsilon2_jet).norm() / n : (upsilon2 - upsilon2_jet).norm();
}

Order2Result splitting_order2(const ModelParams& p, double t) {
    p.validate();
    Order2Result r;
    r.t = t;
    const double g2 = p.g * p.g;
    const int d = p.dim();
    r.upsilon1 = melnikov_or_zero(p);
    if (!p.f.depends_on_psi()) {
        r.upsilon1_regint = r.full_line2 = r.contracted2 = r.upsilon2 = r.upsilon2_jet = Mat::Zero(d, d);
    } else {
        r.upsilon1_regint = melnikov_matrix_regint(p, t);
        WhiskerOptions o;
        o.l_max = 2;
        const WhiskerExpansion w = build_whisker(p, o);
        auto contract = [&](const std::vector<AsymptoticPart>& parts) {
            Mat S = Mat::Zero(d, d);
            for (auto& a : parts) S += a.c * a.E;
            return Mat(g2 * S);
        };
        const auto parts0 = asymptotic_parts(p, 0);
        r.full_line2 = splitting_jet(0, w)[2] - contract(parts0);
        r.parts = t == 0 ? parts0 : asymptotic_parts(p, t);
        r.contracted2 = contract(r.parts);
        r.upsilon2 = r.full_line2 + r.contracted2;
        r.upsilon2_jet = splitting_jet(t, w)[2];
    }
    r.result.t = t;
    r.result.params = p;
    r.result.order_tag = SplitMethod::perturbative_l2;
    r.result.matrix = p.epsilon * r.upsilon1 + p.epsilon * p.epsilon * r.upsilon2;
    r.result.error_estimate = p.epsilon * p.epsilon * (r.upsilon2 - r.upsilon2_jet).norm();
    return r;
}

EpsFit fit_order2(double t, const WhiskerExpansion& w, const std::vector<double>& eps, const DirectOptions& opt) {
    if (eps.size() < 2) throw std::invalid_argument("fit_order2: need at least two eps values");
    const int d = w.params.dim();
    EpsFit f;
    f.eps = eps;
    const Mat U1 = melnikov_or_zero(w.params);
    Eigen::MatrixXd A(eps.size(), 2);
    for (size_t k = 0; k < eps.size(); ++k) {
        A(Eigen::Index(k), 0) = eps[k];
        A(Eigen::Index(k), 1) = eps[k] * eps[k];
        f.measured.push_back(splitting_direct(t, w, eps[k], opt).matrix);
    }
    f.upsilon2 = Mat::Zero(d, d);
    f.upsilon3 = Mat::Zero(d, d);
    const auto qr = A.colPivHouseholderQr();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            Eigen::VectorXd y(eps.size());
            for (size_t k = 0; k < eps.size(); ++k) y(Eigen::Index(k)) = f.measured[k](i, j) / eps[k] - U1(i, j);
            const Eigen::VectorXd c = qr.solve(y);
            f.upsilon2(i, j) = c(0);
            f.upsilon3(i, j) = c(1);
        }
    return f;
}

// ---- dichotomy ----

DichotomyBound dichotomy_bound(const DichotomyInput& in) {
    if (!(in.C > 0 && in.eps1 > 0 && in.c > 0 && in.nu > 0 && in.g > 0))
        throw std::invalid_argument("dichotomy_bound: C, eps1, c, nu, g must be positive");
    DichotomyBound b;
    const double x = in.c * std::pow(in.g, -1 / (in.nu + 1));
    b.n_g = long(std::ceil(x / kLn2));
    b.eps_tilde = (in.eps / in.eps1) * std::pow(in.c / kLn2, 4 * (in.nu + 1)) * std::pow(in.g, -4);
    const double et = std::abs(b.eps_tilde);
    if (et >= 0.5) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "dichotomy_bound: |eps~| = %.3e violates |eps~| < 1/2", et);
        throw HypothesisViolation(buf);
    }
    b.decay = std::exp(-x);
    b.head = in.C * et * b.decay;
    b.tail = et > 0 ? in.C * et * std::exp(double(b.n_g) * std::log(et)) : 0;
    b.bound = b.head + b.tail;
    return b;
}

// ---- full Jacobian ----

FlowKernelCheck flow_kernel_check(double t, const WhiskerExpansion& w, double eps, const DirectOptions& opt) {
    const ModelParams& p = w.params;
    const int d = p.dim(), n = d + 1;
    const double T0 = default_T0(w, eps, opt), h = opt.fd_step;
    const auto th = omega_t(p, t);

    // derivatives in x = (s, theta) of the configuration (phi, psi) and of (I, A)
    auto jac = [&](bool stable, Mat& DF, Mat& DY, PhaseState& centre) {
        DirectSide side(w, eps, T0, opt.tol, stable);
        centre = side.at(t, th);
        DF = Mat::Zero(n, n);
        DY = Mat::Zero(n, n);
        for (int k = 0; k < n; ++k) {
            double tp = t, tm = t;
            auto thp = th, thm = th;
            if (k == 0) {
                tp += h;
                tm -= h;
            } else {
                thp[size_t(k - 1)] += h;
                thm[size_t(k - 1)] -= h;
            }
            const PhaseState a = side.at(tp, thp), b = side.at(tm, thm);
            DF(0, k) = (a.phi - b.phi) / (2 * h);
            DY(0, k) = (a.I - b.I) / (2 * h);
            for (int i = 0; i < d; ++i) {
                DF(1 + i, k) = (a.psi[size_t(i)] - b.psi[size_t(i)]) / (2 * h);
                DY(1 + i, k) = (a.A[size_t(i)] - b.A[size_t(i)]) / (2 * h);
            }
        }
    };
    Mat DFu, DYu, DFs, DYs;
    PhaseState cu, cs;
    jac(false, DFu, DYu, cu);
    jac(true, DFs, DYs, cs);

    FlowKernelCheck r;
    r.jacobian = DYu * DFu.inverse() - DYs * DFs.inverse();
    r.velocity = Eigen::VectorXd(n);
    r.velocity(0) = cu.I;
    for (int i = 0; i < d; ++i) r.velocity(1 + i) = cu.A[size_t(i)];
    r.flow_residual = (r.jacobian * r.velocity).norm();
    const double jn = Eigen::JacobiSVD<Mat>(r.jacobian).singularValues()(0);
    r.budget = 10 * (h * h + opt.tol) * jn;
    r.noise_floor = (opt.tol + std::numeric_limits<double>::epsilon() / h) * std::exp(w.gamma_at(eps) * T0) *
                    std::max(Eigen::JacobiSVD<Mat>(DYu).singularValues()(0), Eigen::JacobiSVD<Mat>(DYs).singularValues()(0));
    r.upsilon = (DYu - DYs).block(1, 1, d, d);
    r.upsilon_tilde = r.jacobian.block(1, 1, d, d);
    r.eps_tilde = std::exp(p.g * std::abs(t)) * std::abs(eps) / p.g;
    if (eps == 0 || !p.f.depends_on_psi()) {
        r.factor_residual = 0;
        return r;
    }
    const auto sv = Eigen::JacobiSVD<Mat>(r.upsilon_tilde).singularValues();
    if (sv(d - 1) <= 1e-9 * sv(0))
        throw ConditioningError("flow_kernel_check: reduced splitting matrix is numerically singular");
    r.factor_residual = (r.upsilon * r.upsilon_tilde.inverse() - Mat::Identity(d, d)).norm();
    return r;
}

FlowKernelCheck flow_kernel_check(double t, const ModelParams& p, double tol) {
    p.validate();
    WhiskerOptions o;
    o.l_max = 3;
    const WhiskerExpansion w = build_whisker(p, o);
    DirectOptions opt;
    opt.tol = tol;
    return flow_kernel_check(t, w, p.epsilon, opt);
}

// ---- CSV ----

std::string splitting_csv_header(int d) {
    std::string s = "method,t,g,eps";
    for (int i = 1; i <= d; ++i)
        for (int j = 1; j <= d; ++j) s += ",U" + std::to_string(i) + std::to_string(j);
    return s + ",error_estimate";
}

std::string splitting_csv_row(const SplittingResult& r) {
    char buf[64];
    auto num = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return std::string(buf);
    };
    std::string s = std::string(to_string(r.order_tag)) + "," + num(r.t) + "," + num(r.params.g) + "," +
                    num(r.params.epsilon);
    for (int i = 0; i < r.matrix.rows(); ++i)
        for (int j = 0; j < r.matrix.cols(); ++j) s += "," + num(r.matrix(i, j));
    return s + "," + num(r.error_estimate);
}

}  // namespace sepx
