#pragma once
// The splitting matrix Upsilon(t) = d/dtheta (Y^u_Psi - Y^s_Psi)(e^{gamma t}, omega t):
// first order (Melnikov), the epsilon-jets of the whiskers, a direct ODE
// measurement, the order-eps^2 terms of the contracted asymptotic form, the
// dichotomy bound and the flow-direction identity of the full Jacobian.
//
// Matrix convention: row i = component Psi_i, column j = derivative in theta_j.

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sepx/dynamics.hpp"
#include "sepx/jet.hpp"
#include "sepx/melnikov.hpp"

namespace sepx {

class WhiskerExpansion;

enum class SplitMethod { melnikov, perturbative_l2, direct };
const char* to_string(SplitMethod m);

struct SplittingResult {
    double t = 0;
    Mat matrix;
    SplitMethod order_tag = SplitMethod::melnikov;
    ModelParams params;
    double error_estimate = 0;
    // direct measurements only
    double expected = 0;               // |eps Upsilon^1|
    double truncation_budget = 0;      // next whisker order, estimated from the jets
    double linearization_budget = 0;   // Taylor remainder of the seed in z
    double fd_budget = 0;              // |D_h - D_2h| of the central differences
    double rounding_budget = 0;        // machine eps |A| sqrt(steps) / h
    double T0 = 0;
};

class InconclusiveMeasurement : public std::runtime_error {
public:
    double truncation, expected;
    InconclusiveMeasurement(const std::string& m, double tr, double ex)
        : std::runtime_error(m), truncation(tr), expected(ex) {}
};
class ConditioningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// eps Upsilon^1, the same for every t
SplittingResult splitting_melnikov(double t, const ModelParams& p);

// coefficient matrices of eps^0..eps^{kJetN-1} from the tangent jets of both whiskers
std::array<Mat, kJetN> splitting_jet(double t, const WhiskerExpansion& w);
// sum_{l <= ell} eps^l of those, eps = p.epsilon of the call
SplittingResult splitting_perturbative(double t, const WhiskerExpansion& w, double eps, int ell = 2);

struct DirectOptions {
    double tol = 1e-13;
    double fd_step = 1e-4;
    double T0 = 0;              // 0: 6 / gamma
    double budget_ratio = 1e-2; // truncation + linearization must stay below this fraction of |eps Upsilon^1|
};

// Unstable side: seed at (e^{gamma (t - T0)}, theta - omega T0) from the truncated whisker and flow T0.
// Stable side: seed the stable whisker at (e^{gamma (t + T0)}, theta + omega T0) and flow back.
// Central differences in theta on a replayed step sequence.
SplittingResult splitting_direct(double t, const WhiskerExpansion& w, double eps, const DirectOptions& opt = {});
// builds the whisker (l_max = 3) of params first
SplittingResult splitting_direct(double t, const ModelParams& p, double tol = 1e-13, double fd_step = 1e-4);

// ---- order eps^2 through the regularized-integral form ----
// one piece (i, p, j) of the kernel split, at lowest order
struct AsymptoticPart {
    int i = 0, p = 0, j = 1;
    Mat E;  // (d+1) x d: order-eps coefficient of -int (-tau)^{[i=1]-p} bar K_ij d_theta A^u
    Mat c;  // d x (d+1): int_t^inf f_{psi varphi} tau^p K_ij at order eps^0
};
// the six (i, p, j) with 0 <= p <= i <= 1
std::vector<AsymptoticPart> asymptotic_parts(const ModelParams& p, double t);

// zeta^1(tau) = sum tau^p K_ij(tau) E_ij^p, the first order of d_theta (X^s - X^u) along the
// homoclinic trajectory; (d+1) x d
Mat zeta1(double tau, const std::vector<AsymptoticPart>& parts, double g);
// the same from the tangent jets of the two whiskers
Mat zeta1_jet(double tau, const WhiskerExpansion& w);

struct Order2Result {
    double t = 0;
    Mat upsilon1_regint;   // order eps of the full-line term
    Mat upsilon1;          // melnikov_matrix
    Mat full_line2;        // order eps^2 of lambda int_R d_theta f^u_psi
    Mat contracted2;       // g^2 c_ij^p E_ij^p at lowest order
    Mat upsilon2;          // full_line2 + contracted2
    Mat upsilon2_jet;      // order-2 jet coefficient at t
    std::vector<AsymptoticPart> parts;
    SplittingResult result;  // eps Upsilon^1 + eps^2 Upsilon^2 at params.epsilon

    double contracted_residual() const;  // |upsilon2 - upsilon2_jet| / |upsilon2_jet|
};
// The full-line term at order eps^2 is assembled at tau = 0: the lower u-integral and
// the upper s-integral are the whisker data d_theta Y^{u,s}_Psi there, and the
// difference of the integrands on [0, inf) is -f_{psi varphi} zeta^1.
Order2Result splitting_order2(const ModelParams& p, double t = 0);

// order-2 coefficient from a quadratic fit of direct measurements:
// Upsilon / eps - Upsilon^1 = eps Upsilon^2 + eps^2 Upsilon^3 over the given eps
struct EpsFit {
    Mat upsilon2, upsilon3;
    std::vector<double> eps;
    std::vector<Mat> measured;
};
EpsFit fit_order2(double t, const WhiskerExpansion& w, const std::vector<double>& eps, const DirectOptions& opt = {});

// ---- dichotomy ----
struct DichotomyInput {
    double C = 1, eps1 = 1, c = 1, nu = 1, g = 1, eps = 0;
};
struct DichotomyBound {
    long n_g = 0;
    double eps_tilde = 0;
    double decay = 0;      // e^{-c g^{-1/(nu+1)}}
    double head = 0;       // C |eps~| e^{-c g^{-1/(nu+1)}}
    double tail = 0;       // C |eps~| e^{n(g) ln |eps~|}
    double bound = 0;
};
class HypothesisViolation : public std::domain_error {
public:
    using std::domain_error::domain_error;
};
// n(g) = ceil(c g^{-1/(nu+1)} / ln 2); eps~ = (eps/eps1)(c/ln 2)^{4(nu+1)} g^{-4}, |eps~| < 1/2
DichotomyBound dichotomy_bound(const DichotomyInput& in);

// ---- full Jacobian and the reduced matrix ----
struct FlowKernelCheck {
    Mat jacobian;        // (d+1) x (d+1): d(I, A)/d(phi, psi) of unstable minus stable
    Eigen::VectorXd velocity;  // (I, A) at the homoclinic point
    double flow_residual = 0;  // |jacobian * velocity|
    double budget = 0;         // 10 (h^2 + tol) |jacobian|
    // (tol + machine eps / h) e^{gamma T0} max |d(I, A)/d(s, theta)|: what a zero jacobian looks like,
    // local errors being stretched along the unstable direction over T0
    double noise_floor = 0;
    Mat upsilon, upsilon_tilde;
    double factor_residual = 0;  // |Upsilon Upsilon~^{-1} - 1|
    double eps_tilde = 0;        // e^{g |t|} eps / g
};
// finite differences in (s, theta) around (e^{gamma t}, omega t), both whiskers measured directly
FlowKernelCheck flow_kernel_check(double t, const WhiskerExpansion& w, double eps, const DirectOptions& opt = {});
FlowKernelCheck flow_kernel_check(double t, const ModelParams& p, double tol = 1e-13);

// method, t, g, eps, U_ij..., error_estimate
std::string splitting_csv_header(int d);
std::string splitting_csv_row(const SplittingResult& r);

}  // namespace sepx
