#pragma once
// First-order splitting: the Melnikov function F(s, theta), the matrix
// Upsilon^1 = g^2 F(0,0), Lazutkin decay scans, contour shifts and
// exponential-smallness fits.

#include <Eigen/Dense>

#include <map>
#include <stdexcept>

#include "sepx/dynamics.hpp"
#include "sepx/regint.hpp"

namespace sepx {

using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

// J_m(W, g) = int e^{iWt} (e^{i m Phi0(e^{gt})} - 1) dt, absolutely convergent
cplx melnikov_J(int m, double W, double g, double tol = 1e-14, double* err = nullptr);

// F(s, theta) as a d x d matrix
Mat melnikov_F(double s, const std::vector<double>& theta, const ModelParams& p, double tol = 1e-14);

struct MelnikovResult {
    Mat upsilon1;
    std::map<Mode, CMat> per_mode;  // sum over q is upsilon1; entries at q and -q are conjugate
    double g = 0;
    double quadrature_error = 0;
};
MelnikovResult melnikov_matrix(const ModelParams& p);

// the same matrix as g^2 times the regularized full-line integral of f_psipsi
// along the separatrix, split at t into a lower and an upper piece
Mat melnikov_matrix_regint(const ModelParams& p, double t = 0);

// 2 pi W / sinh(pi W / 2g) q q^T, the value for f = cos(phi) cos(q.psi); 4g q q^T at W = 0
Mat single_harmonic_oracle(const Mode& q, double g, const FrequencyVector& omega);

// Fourier coefficient of theta -> F(0, theta) at q
CMat melnikov_Fhat(const Mode& q, const ModelParams& p);

// log|Fhat(0,q)| <= log B - theta_eff |w.q| / g - eta_eff |q| over scanned (q, g)
struct LazutkinFit {
    double B = 0;
    double theta_eff = 0;
    double eta_eff = 0;
    double rms = 0;  // least-squares residual before B is raised to an upper bound
    int n = 0;
};
LazutkinFit lazutkin_scan(const ModelParams& p, const std::vector<double>& g_list);

// ---- exponential-smallness fits ----
class FitDomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class FitModel { single_harmonic, diophantine };
const char* to_string(FitModel m);

struct SmallnessFit {
    FitModel model = FitModel::single_harmonic;
    double nu = 1;
    double c_fit = 0;
    double C_fit = 0;
    double residual = 0;  // rms of the log-fit divided by the range of log values
    std::vector<double> predicted;
};
// single_harmonic: y = C e^{-c/g};  diophantine: y = C g^2 e^{-c g^{-1/(nu+1)}}
SmallnessFit smallness_fit(const std::vector<double>& g, const std::vector<double>& y, FitModel model,
                           double nu = 1);
SmallnessFit smallness_fit(const std::vector<double>& g, const std::vector<Mat>& values, FitModel model,
                           double nu = 1);

// ---- contour shift for one full-line mode integral ----
class ContourObstructionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ContourShift {
    cplx direct;         // regint over the real line
    cplx shifted;        // prefactor * remaining
    double prefactor;    // e^{-theta |w.q| / g}
    cplx remaining;      // H_q(0) plus the left half-line piece
    double rho = 0;
    double sup_H = 0;    // sup over |R| = rho of |H_q(R)|
    double residue_bound = 0;
};

// h: tau^p u^k e^{i q.omega tau} a(u) with u = e^{g tau}, the product u^k a(u)
// vanishing at u = 0 and bounded at infinity. singular_arg is the smallest
// |arg u| of a singularity of a.
ContourShift contour_shift_eval(const ModeTerm& h, double vartheta, double g, const FieldCtx& ctx,
                                double singular_arg = std::numbers::pi / 2);

}  // namespace sepx
