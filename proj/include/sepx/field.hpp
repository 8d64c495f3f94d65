#pragma once
// Fourier-Taylor fields h(z, theta) = sum_q sum_k c_{k,q} z^k e^{i q.theta}
// with epsilon-jet coefficients, and the operators L, D^{-1}, I, projections
// and time reversal acting on them mode by mode.

#include <climits>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sepx/dynamics.hpp"
#include "sepx/jet.hpp"

namespace sepx {

struct FieldCtx {
    int d = 1;
    std::vector<double> omega;
    double nu = 1;
    double a_est = 1;

    double Omega(const Mode& q) const {
        double s = 0;
        for (int j = 0; j < d; ++j) s += q[j] * omega[j];
        return s;
    }
    Mode zero_mode() const { return Mode(d, 0); }
    // |omega.q| below 1e-13 |q|^{-nu} a_est counts as a resonance
    void check_divisor(const Mode& q) const;

    static std::shared_ptr<const FieldCtx> from(const FrequencyVector& w);
};
using CtxPtr = std::shared_ptr<const FieldCtx>;

class SmallDivisorError : public std::runtime_error {
public:
    Mode q;
    SmallDivisorError(const std::string& m, Mode q_) : std::runtime_error(m), q(std::move(q_)) {}
};
// (k, q) = (0, 0) under I, or an average that should vanish but does not
class SecularTermError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class PoleProjectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kExactK = INT_MAX / 4;
inline constexpr int kUnknownRate = INT_MIN;

struct ZProfile {
    int lo = 0;            // exponent of c.front()
    std::vector<Jet> c;    // c[i] multiplies z^{lo+i}
    int divergence_rate_at_inf = kUnknownRate;

    int hi() const { return lo + int(c.size()) - 1; }
    int pole_order_at_0() const { return lo < 0 ? -lo : 0; }
    Jet at(int k) const {
        if (k < lo || k > hi()) return Jet();
        return c[k - lo];
    }
    Jet& ref(int k);  // grows storage
    void trim();      // drop zero ends
    bool empty() const { return c.empty(); }
};

Mode operator+(const Mode& a, const Mode& b);
Mode operator-(const Mode& a);

class FTField {
public:
    CtxPtr ctx;
    Jet gamma;
    int K = kExactK;      // coefficients with k <= K are exact
    std::map<Mode, ZProfile> modes;

    FTField() = default;
    FTField(CtxPtr c, Jet g, int K_ = kExactK) : ctx(std::move(c)), gamma(g), K(K_) {}

    bool exact() const { return K >= kExactK; }
    int dim() const { return ctx->d; }
    int lo() const;          // min k over stored terms (0 if empty)
    int hi() const;          // max stored k
    int degree() const;      // max |q|_1 over nonzero modes
    bool is_zero() const;
    size_t n_terms() const;

    Jet coeff(const Mode& q, int k) const;
    void add_term(const Mode& q, int k, const Jet& a);
    void for_each(const std::function<void(const Mode&, int, const Jet&)>& fn) const;

    // h(z, theta) as an epsilon-jet
    Jet eval(cplx z, const std::vector<double>& theta) const;
    cplx eval(cplx z, const std::vector<double>& theta, cplx eps) const { return eval(z, theta).at(eps); }

    FTField truncated_to(int Knew) const;
    FTField eps_order(int l) const;        // keep only the epsilon^l coefficient
    FTField eps_truncated(int l) const;    // keep epsilon orders <= l
    void trim();

    FTField& operator+=(const FTField& o);
    FTField& operator-=(const FTField& o);
    FTField& operator*=(const Jet& s);

    static FTField monomial(CtxPtr c, Jet g, const Mode& q, int k, Jet a);
    static FTField constant(CtxPtr c, Jet g, Jet a) { return monomial(c, g, c->zero_mode(), 0, a); }
};

FTField operator+(FTField a, const FTField& b);
FTField operator-(FTField a, const FTField& b);
FTField operator-(FTField a);
FTField operator*(FTField a, const Jet& s);
FTField operator*(const Jet& s, FTField a);
FTField operator*(const FTField& a, const FTField& b);

// z^k e^{iq theta} -> (k gamma + i omega.q) z^k e^{iq theta}
FTField apply_L(const FTField& h);
// mode q != 0 divided by i omega.q, mode 0 dropped (all z powers)
FTField apply_Dinv(const FTField& h);
// z^k e^{iq theta} -> z^k e^{iq theta} / (k gamma + i omega.q); (0,0) is an error
FTField apply_I(const FTField& h);
// z d/dz
FTField apply_zdz(const FTField& h);
// shift all Fourier indices by q (multiplication by e^{iq theta})
FTField shift_modes(const FTField& h, const Mode& q);

// h_k(theta): z-independent field of the z^k coefficients
FTField taylor_part(const FTField& h, int k);
// delta_k h = h - h_{<=k-1}
FTField delta(const FTField& h, int k);
// h_{<=k}
FTField taylor_upto(const FTField& h, int k);
// T_N: modes with |q|_1 <= N
FTField truncate_modes(const FTField& h, int N);
// h o T with T(z, theta) = (1/z, -theta); exact fields only
FTField time_reverse(const FTField& h);
// mode -q conjugate of mode q
bool is_real(const FTField& h, double tol = 1e-13);
FTField mode_conjugate(const FTField& h);  // h -> conj(h(conj z, theta)) for real theta
double max_abs(const FTField& h);          // max |coefficient|

// ---- separatrix series ----
// expansions around z = 0 up to z^K of functions of z only
FTField series_P(CtxPtr c, Jet g, int K);        // z/(1+z^2)
FTField exact_Q(CtxPtr c, Jet g);                // z - 1/z
FTField series_Phi0(CtxPtr c, Jet g, int K);     // 4 arctan z
FTField series_sinPhi0(CtxPtr c, Jet g, int K);  // 4z(1-z^2)/(1+z^2)^2
FTField series_cosPhi0(CtxPtr c, Jet g, int K);  // 1 - 8z^2/(1+z^2)^2
// E_m(z) = e^{i m Phi0(z)} = ((1+iz)/(1-iz))^{2m}
FTField series_Em(CtxPtr c, Jet g, int m, int K);

// pair (Phi, Psi_1..d)
using FieldVec = std::vector<FTField>;
FieldVec zero_vec(CtxPtr c, Jet g, int K);
FieldVec operator+(const FieldVec& a, const FieldVec& b);
FieldVec operator-(const FieldVec& a, const FieldVec& b);
FieldVec operator*(const Jet& s, const FieldVec& a);
FieldVec map_vec(const FieldVec& a, const std::function<FTField(const FTField&)>& fn);
double max_abs(const FieldVec& a);

}  // namespace sepx
