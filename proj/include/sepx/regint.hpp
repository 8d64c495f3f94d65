#pragma once
// Regularized integrals of quasiperiodic-times-exponential integrands, computed
// as res_{R=0} (1/R) of their Laplace-type regularization, and the explicit
// inverse kernel of K = diag(L, calL^2).

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "sepx/field.hpp"

namespace sepx {

class SingularKernelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class RegularizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class SolvabilityError : public std::runtime_error {
public:
    Mode q;
    SolvabilityError(const std::string& m, Mode q_ = {}) : std::runtime_error(m), q(std::move(q_)) {}
};

// ---- residue algebra in R ----
// term c e^{sigma R t} (R - r)^{-n}
struct RTerm {
    cplx c;
    int sigma = 0;
    double t = 0;
    cplx r;
    int n = 1;
};
// res_{R=0} (1/R) sum of terms = constant Laurent coefficient at R = 0
cplx residue_over_R(const std::vector<RTerm>& terms);

enum class Bounds { lower, upper, full };  // (-inf, t], [t, inf), (-inf, inf)

// regularization of int tau^p e^{a tau} over the bounds, as RTerms
std::vector<RTerm> laplace_terms(int p, cplx a, Bounds b, double t);
// the regularized value of int tau^p e^{a tau}
cplx regint_exp(int p, cplx a, Bounds b, double t);

// Laurent series in a variable w around 0 (scalar coefficients)
struct Laurent {
    int lo = 0;
    std::vector<cplx> c;
    cplx eval(cplx w) const;
    int hi() const { return lo + int(c.size()) - 1; }
};

// factor a(u), u = z e^{gamma tau}: known closed function plus Laurent data at
// u = 0 (valid for |u| <= r0) and in 1/u at infinity (valid for |u| >= rinf)
struct Profile {
    std::function<cplx(cplx)> value;
    Laurent at0;
    Laurent atinf;
    double r0 = 0;
    double rinf = 0;
    bool has_inf = false;
    int divergence_rate_at_inf() const { return has_inf ? -atinf.lo : kUnknownRate; }
};
using ProfilePtr = std::shared_ptr<const Profile>;

// num(u)/den(u) with coefficient vectors in ascending powers; den(0) != 0.
// r0 < (nearest pole) and rinf > (farthest pole) are supplied by the caller.
ProfilePtr rational_profile(std::vector<cplx> num, std::vector<cplx> den, double r0, double rinf, int nterms = 90);
// e^{i m Phi0(u)} = ((1+iu)/(1-iu))^{2m}; poles at u = +-i
ProfilePtr Em_profile(int m, int nterms = 90);

// coeff tau^p (z e^{gamma tau})^k e^{i q.(theta + omega tau)} [a(z e^{gamma tau})]
struct ModeTerm {
    int p = 0;
    int k = 0;
    Mode q;
    cplx coeff;
    ProfilePtr profile;
};

struct RegularizedIntegrand {
    std::vector<ModeTerm> terms;
    cplx eval(double tau, cplx z, const std::vector<double>& theta, double gamma, const FieldCtx& ctx) const;
    RegularizedIntegrand truncated(int N) const;  // T_N
};

struct RegintOptions {
    double quad_tol = 1e-14;
};

cplx regint(const RegularizedIntegrand& h, Bounds b, double t, cplx z, const std::vector<double>& theta, double gamma,
            const FieldCtx& ctx, const RegintOptions& opt = {});

// tau -> regint of h over (-inf, tau], again as closed-form mode terms
RegularizedIntegrand antiderivative(const RegularizedIntegrand& h, double gamma, const FieldCtx& ctx);

// epsilon-order l of a field as mode terms (p = 0, no profile)
RegularizedIntegrand to_integrand(const FTField& h, int l = 0);

// ---- kernel ----
struct KernelValue {
    cplx phi;  // Phi block
    cplx psi;  // Psi block (a multiple of the identity)
};

inline cplx P_of(cplx u) { return u / (u * u + 1.0); }
inline cplx Q_of(cplx u) { return u - 1.0 / u; }

// xi_{ij} and bar xi_{ij} for i in {0,1}, j in {1,2}
int xi(int i, int j);
int xibar(int i, int j);
// diagonal entries (Phi, Psi) of K_{ij}(t;z) and bar K_{ij}(tau;z)
KernelValue K_part(int i, int j, double t, cplx z, double gamma);
KernelValue Kbar_part(int i, int j, double tau, cplx z, double gamma);
// assembled K(t, tau; z)
KernelValue kernel_parts(double t, double tau, cplx z, double gamma);
// a_{ij}(z) = sup_t |K_{ij}(t;z)| e^{-xi_{ij} gamma |t|} on a grid over |t| <= T
double a_bound(int i, int j, bool bar, cplx z, double gamma, double T, int n = 4001);

// K^{-1} on S_1 x S_0 (mode algebra, gamma may be an epsilon-jet)
FieldVec kernel_inverse_apply(const FieldVec& h, double avg_tol = 1e-12);
// Phi and Psi blocks separately
FTField kernel_inverse_phi(const FTField& h);
FTField kernel_inverse_psi(const FTField& h);
// L = calL^2 - gamma^2 cos Phi0 and calL^2, mode-wise
FieldVec apply_Kop(const FieldVec& w);

// Phi block of K^{-1}h at (z e^{gamma t}, theta + omega t) from the assembled
// kernel: quadrature on [tau_c, t] plus closed-form regularization of the
// u-expansion of the integrand on (-inf, tau_c]; epsilon-order 0 of h only
cplx kernel_inverse_phi_assembled(const FTField& h, double t, cplx z, const std::vector<double>& theta,
                                  double u_cut = 0.3);

}  // namespace sepx
