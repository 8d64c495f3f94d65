#pragma once
// Adaptive Runge-Kutta-Fehlberg 7(8) driver on top of boost::odeint.
// The accepted step sequence can be recorded and replayed with fixed steps,
// which keeps finite differences across neighbouring initial data smooth.

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sepx {

class IntegrationError : public std::runtime_error {
public:
    double last_t;
    IntegrationError(const std::string& m, double t) : std::runtime_error(m), last_t(t) {}
};

template <class Real>
struct OdeRun {
    std::vector<Real> t;                 // accepted times (only if recorded)
    std::vector<std::vector<Real>> y;    // states at those times
    std::vector<Real> steps;             // accepted step sizes
    std::vector<Real> y_end;
};

template <class Real>
bool all_finite(const std::vector<Real>& y) {
    for (auto& v : y)
        if (!std::isfinite(v)) return false;
    return true;
}

template <class Real>
using OdeRhs = std::function<void(const std::vector<Real>&, std::vector<Real>&, Real)>;

// Integrate from t0 to t1. With a non-null replay, the given step list is used
// verbatim (its sum must reach t1 - t0).
template <class Real>
OdeRun<Real> integrate_rk78(const OdeRhs<Real>& rhs, std::vector<Real> y, Real t0, Real t1, Real tol,
                            bool record = false, const std::vector<Real>* replay = nullptr) {
    namespace odeint = boost::numeric::odeint;
    using state = std::vector<Real>;
    using stepper_t = odeint::runge_kutta_fehlberg78<state, Real, state, Real>;
    auto sys = [&](const state& x, state& dx, Real t) { rhs(x, dx, t); };

    OdeRun<Real> run;
    Real t = t0;
    if (record) {
        run.t.push_back(t);
        run.y.push_back(y);
    }
    if (replay) {
        stepper_t st;
        for (Real h : *replay) {
            st.do_step(sys, y, t, h);
            t += h;
            run.steps.push_back(h);
            if (record) {
                run.t.push_back(t);
                run.y.push_back(y);
            }
        }
        run.y_end = y;
        return run;
    }
    // the embedded estimate is per step; tighten so global errors stay near tol
    auto ctl = odeint::make_controlled(tol / 100, tol / 100, stepper_t());
    const Real dir = t1 >= t0 ? 1 : -1;
    Real dt = dir * std::min<Real>(Real(0.05), std::abs(t1 - t0));
    int fails = 0;
    while (dir * (t1 - t) > 0) {
        if (dir * (t + dt - t1) > 0) dt = t1 - t;
        Real dt_try = dt;
        const state y_prev = y;
        const Real t_prev = t;
        auto res = ctl.try_step(sys, y, t, dt);
        if (res == odeint::success && !all_finite(y)) {
            // NaN error estimates slip through the controller
            y = y_prev;
            t = t_prev;
            dt = dt_try / 4;
            res = odeint::fail;
        }
        if (res == odeint::success) {
            run.steps.push_back(dt_try);
            fails = 0;
            if (record) {
                run.t.push_back(t);
                run.y.push_back(y);
            }
            // odeint may grow dt a lot; cap it to keep dense restarts cheap
            if (std::abs(dt) > 1) dt = dir;
        } else {
            if (std::abs(dt) < 1e-14 * std::max<Real>(1, std::abs(t)) || ++fails > 200)
                throw IntegrationError("step size underflow at t=" + std::to_string(double(t)), double(t));
        }
    }
    run.y_end = y;
    return run;
}

}  // namespace sepx
