#pragma once
// The forced pendulum H = I^2/2 + g^2 cos(phi) + |A|^2/2 - lambda f(phi, psi),
// its separatrix and small-divisor diagnostics.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace sepx {

using Mode = std::vector<int>;

struct Harmonic {
    int m = 0;
    Mode q;
    double coeff = 0;
};

// f(phi, psi) = sum coeff cos(m phi + q.psi); even by construction
struct Perturbation {
    std::vector<Harmonic> harmonics;

    int dim() const { return harmonics.empty() ? 0 : int(harmonics.front().q.size()); }
    int degree() const;  // N = max |q|_1
    bool depends_on_psi() const;

    template <class Real>
    Real value(Real phi, const std::vector<Real>& psi) const {
        Real s = 0;
        for (auto& h : harmonics) s += h.coeff * std::cos(h.m * phi + dot(h.q, psi));
        return s;
    }
    // gradient: out[0] = df/dphi, out[1..d] = df/dpsi
    template <class Real>
    void gradient(Real phi, const std::vector<Real>& psi, std::vector<Real>& out) const {
        out.assign(psi.size() + 1, Real(0));
        for (auto& h : harmonics) {
            Real s = -h.coeff * std::sin(h.m * phi + dot(h.q, psi));
            out[0] += h.m * s;
            for (size_t j = 0; j < psi.size(); ++j) out[j + 1] += h.q[j] * s;
        }
    }

    template <class Real>
    static Real dot(const Mode& q, const std::vector<Real>& x) {
        Real s = 0;
        for (size_t j = 0; j < q.size(); ++j) s += q[j] * x[j];
        return s;
    }
};

class DiophantineError : public std::runtime_error {
public:
    Mode q;
    DiophantineError(const std::string& m, Mode q_) : std::runtime_error(m), q(std::move(q_)) {}
};

struct FrequencyVector {
    std::vector<double> omega;
    double nu = 1;
    double a_est = 0;
    int scan_cutoff = 0;
    Mode q_min;

    int dim() const { return int(omega.size()); }
    double dot(const Mode& q) const {
        double s = 0;
        for (size_t j = 0; j < q.size(); ++j) s += q[j] * omega[j];
        return s;
    }
    // builds a_est from a scan up to Q
    static FrequencyVector make(std::vector<double> omega, double nu, int Q = 1000);
    static FrequencyVector golden(double nu = 1, int Q = 1000);
    static FrequencyVector sqrt2(double nu = 1, int Q = 1000);
};

struct DiophantineScan {
    double a_est;
    Mode q_min;
};

// a_est = min over 0 < |q|_1 <= Q of |omega.q| |q|^nu
DiophantineScan diophantine_scan(const std::vector<double>& omega, double nu, int Q);

int l1norm(const Mode& q);

struct ModelParams {
    double g = 1;
    double epsilon = 0;
    FrequencyVector omega;
    Perturbation f;

    double lambda() const { return epsilon * g * g; }
    int dim() const { return omega.dim(); }
    void validate() const;
};

struct PhaseState {
    double phi = 0;
    std::vector<double> psi;
    double I = 0;
    std::vector<double> A;

    int dim() const { return int(psi.size()); }
    std::vector<double> pack() const;
    static PhaseState unpack(const std::vector<double>& y);
    PhaseState normalized() const;  // angles into [0, 2pi)
};

double wrap_angle(double a);

// Phi0(z) = 4 arctan z, for real and complex z
inline double Phi0(double z) { return 4 * std::atan(z); }
inline std::complex<double> Phi0(std::complex<double> z) { return 4.0 * std::atan(z); }

struct SeparatrixPoint {
    double phi, I;
};
SeparatrixPoint separatrix(double t, double g);

double hamiltonian(const PhaseState& x, const ModelParams& p);

// right-hand side of the equations of motion on the packed state
// (phi, psi_1..d, I, A_1..d)
template <class Real>
void equations_of_motion(const ModelParams& p, const std::vector<Real>& y, std::vector<Real>& dy) {
    const int d = p.dim();
    std::vector<Real> psi(y.begin() + 1, y.begin() + 1 + d), grad;
    p.f.gradient(y[0], psi, grad);
    const Real lam = p.lambda(), g2 = p.g * p.g;
    dy.resize(y.size());
    dy[0] = y[d + 1];
    for (int j = 0; j < d; ++j) dy[1 + j] = y[d + 2 + j];
    dy[d + 1] = g2 * std::sin(y[0]) + lam * grad[0];
    for (int j = 0; j < d; ++j) dy[d + 2 + j] = lam * grad[1 + j];
}

struct Trajectory {
    ModelParams params;
    double tol = 1e-12;
    std::vector<double> t;
    std::vector<PhaseState> x;
    std::vector<double> energy;
    double energy_drift = 0;  // max |H(t) - H(t0)|

    // continuous extension: restart from the nearest accepted node
    PhaseState at(double time) const;
};

// errors: IntegrationError on step-size underflow
Trajectory integrate_flow(const PhaseState& x0, const ModelParams& p, double t0, double t1, double tol = 1e-12);

// endpoint only; optional step recording/replay for finite differencing
PhaseState flow_map(const PhaseState& x0, const ModelParams& p, double T, double tol,
                    std::vector<double>* steps_out = nullptr, const std::vector<double>* replay = nullptr);

}  // namespace sepx
