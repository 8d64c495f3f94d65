#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "sepx/dynamics.hpp"
#include "sepx/ode.hpp"

using namespace sepx;
using std::numbers::pi;

static ModelParams pendulum_only(double g) {
    ModelParams p;
    p.g = g;
    p.omega = FrequencyVector::golden();
    p.f.harmonics = {{1, {1, 0}, 1.0}};
    p.epsilon = 0;
    return p;
}

TEST_CASE("separatrix values and symmetry") {
    auto s = separatrix(0, 1);
    CHECK(s.phi == doctest::Approx(pi).epsilon(1e-15));
    CHECK(s.I == doctest::Approx(2.0));
    auto far = separatrix(40, 1.3);
    CHECK(std::abs(far.phi - 2 * pi) < 1e-12);
    CHECK(std::abs(far.I) < 1e-12);
    CHECK(std::abs(Phi0(2.0) + Phi0(0.5) - 2 * pi) < 1e-15);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0, 1);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const double z = 1e3 * U(rng) + 1e-9;
        worst = std::max(worst, std::abs(Phi0(z) + Phi0(1 / z) - 2 * pi));
    }
    CHECK(worst < 1e-12);

    for (int i = 0; i < 200; ++i) {
        const double t = 20 * U(rng) - 10, g = 0.1 + 2 * U(rng);
        const double c = std::cos(separatrix(t, g).phi);
        CHECK(std::abs(c - (1 - 2 / std::pow(std::cosh(g * t), 2))) < 1e-12);
        // reversibility of the separatrix
        CHECK(std::abs(separatrix(-t, g).phi - (2 * pi - separatrix(t, g).phi)) < 1e-12);
    }
}

TEST_CASE("hamiltonian examples") {
    auto p = pendulum_only(0.7);
    for (double t : {-3.0, 0.0, 1.5}) {
        auto s = separatrix(t, p.g);
        PhaseState x{s.phi, {0.3, 0.1}, s.I, {0, 0}};
        CHECK(hamiltonian(x, p) == doctest::Approx(p.g * p.g).epsilon(1e-13));
    }
    PhaseState o{0, {0, 0}, 0, {0, 0}};
    CHECK(hamiltonian(o, p) == doctest::Approx(p.g * p.g));
    PhaseState top{pi, {0, 0}, 0, p.omega.omega};
    const double w2 = 1 + std::pow((1 + std::sqrt(5.0)) / 2, 2);
    CHECK(hamiltonian(top, p) == doctest::Approx(-p.g * p.g + 0.5 * w2).epsilon(1e-14));
}

TEST_CASE("flow along the separatrix and at equilibrium") {
    const double g = 1.0, tol = 1e-12;
    auto p = pendulum_only(g);
    auto s0 = separatrix(-5 / g, g);
    PhaseState x0{s0.phi, {0.2, 0.4}, s0.I, p.omega.omega};
    auto tr = integrate_flow(x0, p, -5 / g, 5 / g, tol);
    double worst = 0;
    for (double t : {-4.0, -1.0, 0.0, 2.5, 5.0}) {
        auto x = tr.at(t);
        auto s = separatrix(t, g);
        worst = std::max({worst, std::abs(x.phi - s.phi), std::abs(x.I - s.I)});
    }
    CHECK(worst < 10 * tol);

    PhaseState eq{0, {0.5, 1.0}, 0, p.omega.omega};
    auto tr2 = integrate_flow(eq, p, 0, 3, tol);
    auto xe = tr2.at(3);
    CHECK(std::abs(xe.phi) < 1e-14);
    CHECK(xe.psi[0] == doctest::Approx(0.5 + 3 * p.omega.omega[0]).epsilon(1e-13));
    CHECK(xe.psi[1] == doctest::Approx(1.0 + 3 * p.omega.omega[1]).epsilon(1e-13));
}

TEST_CASE("energy conservation with forcing") {
    auto p = pendulum_only(1.0);
    p.epsilon = 0.05;
    p.f.harmonics = {{1, {1, 0}, 1.0}, {0, {1, -1}, 0.5}};
    const double tol = 1e-12;
    auto s = separatrix(-6, 1);
    PhaseState x0{s.phi, {0.1, 0.2}, s.I, p.omega.omega};
    auto tr = integrate_flow(x0, p, 0, 12, tol);
    CHECK(tr.energy_drift <= 100 * tol);
}

TEST_CASE("step-size underflow is reported") {
    ModelParams p = pendulum_only(1.0);
    p.epsilon = 1e300;  // absurd stiffness via a huge forcing
    PhaseState x0{0.1, {0, 0}, 0, {0, 0}};
    CHECK_THROWS_AS((void)integrate_flow(x0, p, 0, 1, 1e-12), IntegrationError);
}

TEST_CASE("diophantine scans") {
    auto a3 = diophantine_scan({1, (1 + std::sqrt(5.0)) / 2}, 1, 1000);
    auto a4 = diophantine_scan({1, (1 + std::sqrt(5.0)) / 2}, 1, 10000);
    CHECK(a3.a_est > 0.3);
    CHECK(a4.a_est <= a3.a_est);
    CHECK(a4.a_est > a3.a_est / 2);

    CHECK_THROWS_AS((void)diophantine_scan(std::vector<double>{1, 1}, 1, 2), DiophantineError);

    auto r2 = diophantine_scan({1, std::sqrt(2.0)}, 1, 1000);
    CHECK(r2.a_est > 0);
    // minimizer (p, q) solves Pell's equation p^2 - 2 q^2 = +-1, i.e. a convergent of sqrt 2
    const long pp = std::abs(r2.q_min[0]), qq = std::abs(r2.q_min[1]);
    CHECK(std::abs(pp * pp - 2 * qq * qq) == 1);

    double prev = 1e9;
    for (int Q : {1, 2, 5, 10, 50, 200, 1000}) {
        auto s = diophantine_scan({1, (1 + std::sqrt(5.0)) / 2}, 1, Q);
        CHECK(s.a_est <= prev);
        CHECK(s.a_est > 0);
        prev = s.a_est;
    }
}

TEST_CASE("angles normalized at reporting") {
    PhaseState x{-0.5, {7.0, -13.0}, 1, {0, 0}};
    auto n = x.normalized();
    CHECK(n.phi >= 0);
    CHECK(n.phi < 2 * pi);
    for (double a : n.psi) {
        CHECK(a >= 0);
        CHECK(a < 2 * pi);
    }
}
