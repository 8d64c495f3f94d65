#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "random_fields.hpp"
#include "sepx/field.hpp"

using namespace sepx;
using sepx::testing::FieldGen;

namespace {
CtxPtr golden_ctx() { return FieldCtx::from(FrequencyVector::golden()); }

// drop the secular (0,0) term so that I is applicable
FTField admissible(FTField h) {
    auto it = h.modes.find(h.ctx->zero_mode());
    if (it != h.modes.end()) {
        FTField r = h;
        r.modes[h.ctx->zero_mode()].ref(0) = Jet();
        r.trim();
        return r;
    }
    return h;
}
}  // namespace

TEST_CASE("L on monomials and constants") {
    auto c = golden_ctx();
    const Jet g = Jet(0.8) + Jet::eps(0.1);
    Mode q{1, -2};
    auto h = FTField::monomial(c, g, q, 1, Jet(1.0));
    auto Lh = apply_L(h);
    Jet expect = g + Jet(cplx(0, c->Omega(q)));
    CHECK((Lh.coeff(q, 1) - expect).max_abs() < 1e-15);
    CHECK(apply_L(FTField::constant(c, g, Jet(2.5))).is_zero());
}

TEST_CASE("L is the time derivative along the linear flow") {
    auto c = golden_ctx();
    FieldGen G(11);
    const Jet g(0.9);
    for (int trial = 0; trial < 20; ++trial) {
        auto h = G.real_field(c, g, 3, -2, 4, 6);
        auto Lh = apply_L(h);
        const cplx z(G.u(0.3, 0.8), G.u(-0.2, 0.2));
        std::vector<double> th{G.u(0, 6), G.u(0, 6)};
        auto along = [&](double t) {
            std::vector<double> tt{th[0] + c->omega[0] * t, th[1] + c->omega[1] * t};
            return h.eval(z * std::exp(0.9 * t), tt)[0];
        };
        const double s = 1e-3;
        const cplx fd = (-along(2 * s) + 8.0 * along(s) - 8.0 * along(-s) + along(-2 * s)) / (12 * s);
        CHECK(std::abs(fd - Lh.eval(z, th)[0]) < 1e-8 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("Dinv") {
    auto c = golden_ctx();
    const Jet g(1.0);
    Mode q{2, 1};
    auto e = FTField::monomial(c, g, q, 0, Jet(1.0));
    CHECK((apply_Dinv(e).coeff(q, 0) - Jet(1.0 / cplx(0, c->Omega(q)))).max_abs() < 1e-15);
    CHECK(apply_Dinv(FTField::constant(c, g, Jet(1.0))).is_zero());

    FieldGen G(3);
    for (int trial = 0; trial < 30; ++trial) {
        auto h0 = G.real_field(c, g, 4, 0, 0, 5, kJetN);
        // D = L on z-independent fields
        auto back = apply_Dinv(apply_L(h0));
        auto avg = FTField::constant(c, g, h0.coeff(c->zero_mode(), 0));
        CHECK(max_abs(back - (h0 - avg)) < 1e-12);
        auto dd = apply_L(apply_Dinv(h0));
        CHECK(max_abs(dd - (h0 - avg)) < 1e-12);
    }
    // resonant divisor is refused
    auto cr = std::make_shared<FieldCtx>(FieldCtx{2, {1.0, 1.0}, 1, 0.5});
    CHECK_THROWS_AS((void)apply_Dinv(FTField::monomial(cr, g, Mode{1, -1}, 0, Jet(1.0))), SmallDivisorError);
}

TEST_CASE("I inverts L") {
    auto c = golden_ctx();
    const Jet g = Jet(1.1) + Jet::eps(-0.3) + Jet::order(2, 0.05);
    Mode q{0, 1};
    auto h = FTField::monomial(c, g, q, 1, Jet(1.0));
    auto Ih = apply_I(h);
    CHECK((Ih.coeff(q, 1) - Jet(1.0) / (g + Jet(cplx(0, c->Omega(q))))).max_abs() < 1e-15);
    CHECK_THROWS_AS((void)apply_I(FTField::constant(c, g, Jet(1.0))), SecularTermError);

    FieldGen G(5);
    for (int trial = 0; trial < 50; ++trial) {
        auto h1 = admissible(G.real_field(c, g, 3, -2, 5, 8, kJetN));
        CHECK(max_abs(apply_L(apply_I(h1)) - h1) < 1e-10);
        auto d1 = delta(G.real_field(c, g, 3, 0, 5, 8, kJetN), 1);
        CHECK(max_abs(apply_I(apply_L(d1)) - d1) < 1e-10);
    }
}

TEST_CASE("projections") {
    auto c = golden_ctx();
    const Jet g(1.0);
    Mode q{1, 1};
    auto h = FTField::monomial(c, g, c->zero_mode(), 1, Jet(1.0)) + FTField::monomial(c, g, q, 2, Jet(1.0));
    auto d2 = delta(h, 2);
    CHECK(d2.n_terms() == 1);
    CHECK(d2.coeff(q, 2)[0] == cplx(1.0));
    CHECK(max_abs(truncate_modes(h, 5) - h) == 0);
    CHECK(truncate_modes(h, 1).degree() == 0);

    FieldGen G(9);
    for (int trial = 0; trial < 30; ++trial) {
        auto r = G.real_field(c, g, 3, 0, 6, 10, 2);
        CHECK(max_abs(taylor_upto(r, 1) + delta(r, 2) - r) == 0);
        CHECK(max_abs(delta(delta(r, 2), 2) - delta(r, 2)) == 0);
        CHECK(max_abs(truncate_modes(truncate_modes(r, 2), 2) - truncate_modes(r, 2)) == 0);
        auto h3 = taylor_part(r, 3);
        CHECK(h3.hi() == 0);
    }
    auto pole = FTField::monomial(c, g, q, -1, Jet(1.0));
    CHECK_THROWS_AS((void)taylor_part(pole, 0), PoleProjectionError);
}

TEST_CASE("time reversal") {
    auto c = golden_ctx();
    const Jet g(0.7);
    Mode q{1, -1};
    auto h = FTField::monomial(c, g, q, 1, Jet(1.0));
    auto r = time_reverse(h);
    CHECK(r.coeff(-q, -1)[0] == cplx(1.0));
    FieldGen G(21);
    for (int trial = 0; trial < 30; ++trial) {
        auto f = G.real_field(c, g, 3, -3, 3, 7, kJetN);
        CHECK(max_abs(apply_L(time_reverse(f)) + time_reverse(apply_L(f))) < 1e-12);
        CHECK(max_abs(time_reverse(time_reverse(f)) - f) == 0);
    }
}

TEST_CASE("products convolve modes and preserve reality") {
    auto c = golden_ctx();
    const Jet g(1.0);
    FieldGen G(4);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = G.real_field(c, g, 2, -1, 3, 4, 2);
        auto b = G.real_field(c, g, 3, 0, 3, 4, 2);
        auto p = a * b;
        CHECK(p.degree() <= a.degree() + b.degree());
        CHECK(is_real(p));
        CHECK(is_real(apply_I(admissible(p))));
        const cplx z(0.4, 0.1);
        std::vector<double> th{0.3, -1.2};
        CHECK(std::abs(p.eval(z, th)[1] - (a.eval(z, th) * b.eval(z, th))[1]) < 1e-12);
    }
}

TEST_CASE("separatrix series against closed forms") {
    auto c = golden_ctx();
    const Jet g(1.0);
    const int K = 60;
    std::vector<double> th{0, 0};
    for (cplx z : {cplx(0.3, 0), cplx(0.2, 0.35), cplx(-0.5, 0.1)}) {
        const cplx Phi = 4.0 * std::atan(z);
        CHECK(std::abs(series_Phi0(c, g, K).eval(z, th)[0] - Phi) < 1e-12);
        CHECK(std::abs(series_sinPhi0(c, g, K).eval(z, th)[0] - std::sin(Phi)) < 1e-12);
        CHECK(std::abs(series_cosPhi0(c, g, K).eval(z, th)[0] - std::cos(Phi)) < 1e-12);
        CHECK(std::abs(series_P(c, g, K).eval(z, th)[0] - z / (1.0 + z * z)) < 1e-12);
        CHECK(std::abs(exact_Q(c, g).eval(z, th)[0] - (z - 1.0 / z)) < 1e-14);
        for (int m : {-2, -1, 1, 3}) {
            const cplx E = std::exp(cplx(0, m) * Phi);
            CHECK(std::abs(series_Em(c, g, m, 2 * K).eval(z, th)[0] - E) < 1e-10);
        }
    }
    // z d/dz Phi0 = 4P
    auto lhs = apply_zdz(series_Phi0(c, g, K));
    CHECK(max_abs(lhs - 4.0 * series_P(c, g, K)) < 1e-14);
}
