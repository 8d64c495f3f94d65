#pragma once
// random Laurent/trig polynomials shared by the unit tests and the acceptance run

#include <random>

#include "sepx/field.hpp"

namespace sepx::testing {

struct FieldGen {
    std::mt19937_64 rng;
    explicit FieldGen(uint64_t seed) : rng(seed) {}

    double u(double a = -1, double b = 1) { return std::uniform_real_distribution<double>(a, b)(rng); }
    int i(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }

    Jet jet(int orders = kJetN) {
        Jet j;
        for (int l = 0; l < orders; ++l) j[l] = cplx(u(), u());
        return j;
    }
    Mode mode(int d, int N) {
        Mode q(d, 0);
        int left = i(0, N);
        for (int j = 0; j < d && left > 0; ++j) {
            q[j] = i(-left, left);
            left -= std::abs(q[j]);
        }
        return q;
    }
    // real field (mode -q conjugate of mode q), z powers in [kmin, kmax]
    FTField real_field(CtxPtr c, Jet g, int N, int kmin, int kmax, int nterms, int orders = 1) {
        FTField h(c, g);
        for (int n = 0; n < nterms; ++n) {
            Mode q = mode(c->d, N);
            int k = i(kmin, kmax);
            Jet a = jet(orders);
            if (l1norm(q) == 0)
                for (auto& x : a.c) x = x.real();
            h.add_term(q, k, a);
            if (l1norm(q) != 0) h.add_term(-q, k, conj(a));
        }
        return h;
    }
};

}  // namespace sepx::testing
