#include "sepx/dynamics.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>

#include "sepx/ode.hpp"

namespace sepx {

int l1norm(const Mode& q) {
    int s = 0;
    for (int x : q) s += std::abs(x);
    return s;
}

int Perturbation::degree() const {
    int n = 0;
    for (auto& h : harmonics) n = std::max(n, l1norm(h.q));
    return n;
}

bool Perturbation::depends_on_psi() const {
    for (auto& h : harmonics)
        if (h.coeff != 0 && l1norm(h.q) > 0) return true;
    return false;
}

namespace {

// For fixed r = (q_2..q_d) the map q1 -> |q1 w1 + s| (|q1| + |r|)^nu has its
// minima at q1 = 0 or next to the root -s/w1 (it is quasi-concave between them),
// so the scan is over r only.
void scan_rest(const std::vector<double>& w, double nu, int Q, Mode& q, int pos, int used, DiophantineScan& best) {
    const int d = int(w.size());
    if (pos == d) {
        double s = 0;
        for (int j = 1; j < d; ++j) s += q[j] * w[j];
        const int budget = Q - used;
        const double root = -s / w[0];
        const double cands[3] = {0, std::floor(root), std::ceil(root)};
        for (double c : cands) {
            if (std::abs(c) > budget) continue;
            q[0] = int(c);
            const int n = used + std::abs(q[0]);
            if (n == 0) continue;
            const double v = std::abs(q[0] * w[0] + s);
            double scale = 0;
            for (double x : w) scale = std::max(scale, std::abs(x));
            if (v <= 64 * std::numeric_limits<double>::epsilon() * scale * n)
                throw DiophantineError("resonant frequency vector", q);
            const double a = v * std::pow(double(n), nu);
            if (a < best.a_est) {
                best.a_est = a;
                best.q_min = q;
            }
        }
        return;
    }
    for (int k = -(Q - used); k <= Q - used; ++k) {
        q[pos] = k;
        scan_rest(w, nu, Q, q, pos + 1, used + std::abs(k), best);
    }
    q[pos] = 0;
}

}  // namespace

DiophantineScan diophantine_scan(const std::vector<double>& omega, double nu, int Q) {
    if (omega.empty() || Q < 1) throw std::invalid_argument("diophantine_scan: need d >= 1 and Q >= 1");
    if (omega[0] == 0) throw std::invalid_argument("diophantine_scan: omega_1 must be nonzero");
    DiophantineScan best{std::numeric_limits<double>::infinity(), {}};
    Mode q(omega.size(), 0);
    scan_rest(omega, nu, Q, q, 1, 0, best);
    return best;
}

FrequencyVector FrequencyVector::make(std::vector<double> omega, double nu, int Q) {
    FrequencyVector f;
    f.omega = std::move(omega);
    f.nu = nu;
    f.scan_cutoff = Q;
    auto s = diophantine_scan(f.omega, nu, Q);
    f.a_est = s.a_est;
    f.q_min = s.q_min;
    return f;
}

FrequencyVector FrequencyVector::golden(double nu, int Q) {
    return make({1.0, (1 + std::sqrt(5.0)) / 2}, nu, Q);
}
FrequencyVector FrequencyVector::sqrt2(double nu, int Q) { return make({1.0, std::sqrt(2.0)}, nu, Q); }

void ModelParams::validate() const {
    if (!(g > 0)) throw std::invalid_argument("g must be positive");
    if (omega.dim() < 1) throw std::invalid_argument("omega must have d >= 1 entries");
    for (auto& h : f.harmonics)
        if (int(h.q.size()) != omega.dim())
            throw std::invalid_argument("harmonic q has wrong dimension");
}

std::vector<double> PhaseState::pack() const {
    std::vector<double> y;
    y.reserve(2 * psi.size() + 2);
    y.push_back(phi);
    y.insert(y.end(), psi.begin(), psi.end());
    y.push_back(I);
    y.insert(y.end(), A.begin(), A.end());
    return y;
}

PhaseState PhaseState::unpack(const std::vector<double>& y) {
    const size_t d = y.size() / 2 - 1;
    PhaseState x;
    x.phi = y[0];
    x.psi.assign(y.begin() + 1, y.begin() + 1 + d);
    x.I = y[d + 1];
    x.A.assign(y.begin() + 2 + d, y.end());
    return x;
}

double wrap_angle(double a) {
    const double tp = 2 * std::numbers::pi;
    double r = std::fmod(a, tp);
    if (r < 0) r += tp;
    if (r >= tp) r = 0;
    return r;
}

PhaseState PhaseState::normalized() const {
    PhaseState x = *this;
    x.phi = wrap_angle(phi);
    for (auto& p : x.psi) p = wrap_angle(p);
    return x;
}

SeparatrixPoint separatrix(double t, double g) {
    // arctan(e^x) written to stay accurate for large |x|
    const double x = g * t;
    const double phi = x > 0 ? 2 * std::numbers::pi - 4 * std::atan(std::exp(-x)) : 4 * std::atan(std::exp(x));
    return {phi, 2 * g / std::cosh(x)};
}

double hamiltonian(const PhaseState& x, const ModelParams& p) {
    double a2 = 0;
    for (double a : x.A) a2 += a * a;
    return 0.5 * x.I * x.I + p.g * p.g * std::cos(x.phi) + 0.5 * a2 - p.lambda() * p.f.value(x.phi, x.psi);
}

namespace {
OdeRhs<double> rhs_of(const ModelParams& p) {
    return [&p](const std::vector<double>& y, std::vector<double>& dy, double) { equations_of_motion(p, y, dy); };
}
}  // namespace

Trajectory integrate_flow(const PhaseState& x0, const ModelParams& p, double t0, double t1, double tol) {
    if (!(tol > 0)) throw std::invalid_argument("integrate_flow: tol must be positive");
    Trajectory tr;
    tr.params = p;
    tr.tol = tol;
    auto run = integrate_rk78<double>(rhs_of(tr.params), x0.pack(), t0, t1, tol, true);
    tr.t = run.t;
    const double h0 = hamiltonian(x0, p);
    for (auto& y : run.y) {
        tr.x.push_back(PhaseState::unpack(y));
        tr.energy.push_back(hamiltonian(tr.x.back(), p));
        tr.energy_drift = std::max(tr.energy_drift, std::abs(tr.energy.back() - h0));
    }
    return tr;
}

PhaseState Trajectory::at(double time) const {
    if (t.empty()) throw std::logic_error("empty trajectory");
    const bool fwd = t.back() >= t.front();
    const double lo = std::min(t.front(), t.back()), hi = std::max(t.front(), t.back());
    if (time < lo - 1e-12 || time > hi + 1e-12) throw std::out_of_range("trajectory time outside span");
    // nearest node not past `time` in the integration direction
    size_t i = 0;
    if (fwd)
        i = size_t(std::upper_bound(t.begin(), t.end(), time) - t.begin());
    else
        i = size_t(std::upper_bound(t.begin(), t.end(), time, std::greater<double>()) - t.begin());
    if (i > 0) --i;
    if (t[i] == time) return x[i];
    auto run = integrate_rk78<double>(rhs_of(params), x[i].pack(), t[i], time, tol);
    return PhaseState::unpack(run.y_end);
}

PhaseState flow_map(const PhaseState& x0, const ModelParams& p, double T, double tol, std::vector<double>* steps_out,
                    const std::vector<double>* replay) {
    auto run = integrate_rk78<double>(rhs_of(p), x0.pack(), 0.0, T, tol, false, replay);
    if (steps_out) *steps_out = run.steps;
    return PhaseState::unpack(run.y_end);
}

}  // namespace sepx
