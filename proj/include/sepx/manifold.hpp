#pragma once
// Order-by-order construction of the unstable whisker X^u(z, theta) and the
// Lyapunov exponent gamma(eps), plus pointwise evaluation of the truncated
// parametrization anywhere on the real characteristic or inside the wedge.
//
// Near z = 0 the orders are Fourier-Taylor fields. Beyond |z| = r_seed the
// jet-valued equations of motion are integrated along z e^{gamma t},
// theta + omega t, seeded from the Taylor data; with a jet-valued gamma this
// reproduces every order exactly (up to the integrator tolerance).

#include <memory>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "sepx/dynamics.hpp"
#include "sepx/field.hpp"

namespace sepx {

class ConstructionError : public std::runtime_error {
public:
    int ell;
    Mode q;
    ConstructionError(const std::string& m, int l, Mode q_) : std::runtime_error(m), ell(l), q(std::move(q_)) {}
};

class WhiskerDomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct WhiskerOptions {
    int l_max = 3;           // at most kJetN - 1
    int K = 60;              // Taylor truncation in z
    double r_seed = 0.3;     // Taylor data are used for |z| <= r_seed
    double ode_tol = 1e-12;
    double solv_tol = 1e-10; // allowed Psi z^0 average, relative to the order's residual
};

// wedge |arg z| <= vartheta (and its mirror), disk |z| <= tau, strip |Im theta| <= sigma
struct WedgeDomain {
    double tau = 0.3;
    double vartheta = 0.7 * std::numbers::pi / 4;
    double sigma = 0.1;
};

struct ManifoldOrder {
    int ell = 0;
    // stable side: X^{s,l}(z, theta) = fields evaluated at (1/z, theta)
    bool stable = false;
    FTField X_phi;
    std::vector<FTField> X_psi;
    double gamma_coeff = 0;
    int degree = 0;  // max |q| over the stored modes
    // homogeneous pieces added for X(1,0) = (pi, 0): 4 b P(z) in Phi, c in Psi
    double norm_b = 0;
    std::vector<double> norm_c;
    // largest change of lower orders under the Picard step (consistency diagnostic)
    double picard_drift = 0;

    // Taylor evaluation; domain error outside |z| <= 0.5 of the chart
    std::vector<cplx> eval(cplx z, const std::vector<double>& theta) const;
};

struct WhiskerSeries;  // separatrix series shared by all orders

class WhiskerExpansion {
public:
    ModelParams params;
    WhiskerOptions opt;
    WedgeDomain domain;
    CtxPtr ctx;
    std::vector<ManifoldOrder> orders;  // orders[0] = X^0
    Jet gamma;                          // orders 0..solved()
    FieldVec Xt;                        // sum_{1 <= l <= solved()} eps^l X^l

    WhiskerExpansion(const ModelParams& p, WhiskerOptions o = {}, WedgeDomain dom = {});

    int solved() const { return int(orders.size()) - 1; }
    double gamma_at(double eps) const;
    // X^0 + Xt and L of it, refreshed after each order
    const FieldVec& X_full() const { return X_; }
    const FieldVec& Y_full() const { return Y_; }
    const WhiskerSeries& series() const { return *series_; }
    void refresh();

private:
    std::shared_ptr<WhiskerSeries> series_;
    FieldVec X_, Y_;
};

// nonlinear right-hand side of K X~ = W~(X~) on fields; all epsilon orders
FieldVec whisker_rhs(const WhiskerExpansion& w, const FieldVec& Xt, const Jet& gamma, int K);

// computes order prior.solved() + 1 (which must equal ell) and appends it
const ManifoldOrder& solve_order(int ell, WhiskerExpansion& prior);
WhiskerExpansion build_whisker(const ModelParams& p, WhiskerOptions o = {}, WedgeDomain dom = {});

// sup over a Taylor-disk grid of the order-ell coefficient of L^2 X - Omega(X)
double residual_norm(const WhiskerExpansion& w, int ell);

// time reversal: X^s = (2 pi, 0) - X^u o T
ManifoldOrder stable_manifold(const ManifoldOrder& u);

// ---- pointwise data, as epsilon-jets ----
struct WhiskerJet {
    std::vector<Jet> X, Y;                 // (Phi, Psi_1..d) and L of it
    std::vector<std::vector<Jet>> dX, dY;  // [component][j] = d/dtheta_j, if requested
};

// X^u and Y^u at (z, theta); z may carry epsilon dependence (z = e^{gamma t}).
// tol <= 0 uses opt.ode_tol
WhiskerJet whisker_at(const WhiskerExpansion& w, const Jet& z, const std::vector<double>& theta,
                      bool tangent = false, double tol = 0);
// the stable side through the symmetry
WhiskerJet whisker_stable_at(const WhiskerExpansion& w, const Jet& z, const std::vector<double>& theta,
                             bool tangent = false);

// phase point (X + (0, theta), Y + (0, omega)) at numeric eps, orders <= l_cap
PhaseState to_phase(const WhiskerJet& j, const std::vector<double>& theta, const std::vector<double>& omega,
                    double eps, int l_cap);

// both parametrizations at (e^{gamma t}, omega t), gamma = gamma(eps), orders <= l_max
std::pair<PhaseState, PhaseState> homoclinic_trajectory(double t, const WhiskerExpansion& w, double eps);

// |X^l| along the rays arg z = +-vartheta out to |z| = r_seed e^{g s_max}
struct WedgeProbe {
    int ell = 0;
    double vartheta = 0;
    std::vector<double> s;     // log|z| / g
    std::vector<double> size;  // max over components and both rays of |X^l|
    double rate = 0;           // fitted d log(size) / d(g s) over the tail
    bool finite = true;
    bool smooth = true;        // no sign of blow-up between neighbouring samples
};
// one entry per order 1..solved(); each sample point is integrated once for all orders
// (a loose tolerance is enough for growth rates; the tight default needs ~1e4 steps per ray)
std::vector<WedgeProbe> wedge_probes(const WhiskerExpansion& w, double vartheta, double s_max = 20, int n = 21,
                                     double tol = 1e-9);

}  // namespace sepx
