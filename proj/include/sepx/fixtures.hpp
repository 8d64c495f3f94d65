#pragma once
// Perturbations used throughout the tests and shipped as fixtures/*.toml

#include <cmath>

#include "sepx/dynamics.hpp"

namespace sepx::fixtures {

// f = cos(phi) cos(q.psi)
inline Perturbation single(const Mode& q) { return {{{1, q, 0.5}, {-1, q, 0.5}}}; }

// f = cos(phi) (cos psi_1 + cos psi_2)
inline Perturbation two_harmonic() {
    Perturbation f = single({1, 0});
    for (auto& h : single({0, 1}).harmonics) f.harmonics.push_back(h);
    return f;
}

// f = cos(phi) sum_{0 < |q| <= 3, q in a half lattice} e^{-|q|} cos(q.psi)
inline Perturbation multi(int N = 3) {
    Perturbation f;
    for (int a = 0; a <= N; ++a)
        for (int b = -N; b <= N; ++b) {
            if (std::abs(a) + std::abs(b) > N || (a == 0 && b <= 0)) continue;
            const double c = 0.5 * std::exp(-double(std::abs(a) + std::abs(b)));
            f.harmonics.push_back({1, {a, b}, c});
            f.harmonics.push_back({-1, {a, b}, c});
        }
    return f;
}

inline ModelParams golden(double g = 1, double eps = 0, Perturbation f = single({1, 0})) {
    ModelParams p;
    p.g = g;
    p.epsilon = eps;
    p.omega = FrequencyVector::golden();
    p.f = std::move(f);
    return p;
}

}  // namespace sepx::fixtures
