#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "melnikov_oracles.hpp"
#include "sepx/fixtures.hpp"
#include "sepx/manifold.hpp"
#include "sepx/splitting.hpp"

using namespace sepx;
using namespace sepx::testing;

namespace {

WhiskerExpansion whisker(const ModelParams& p, int l_max = 3) {
    WhiskerOptions o;
    o.l_max = l_max;
    return build_whisker(p, o);
}

// least-squares slope of log y against log x
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        const double a = std::log(x[i]), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("Melnikov splitting: t-independent, zero without psi, single-harmonic closed form") {
    const Mode q{1, 0};
    for (double g : {0.5, 1.0}) {
        const ModelParams p = fixtures::golden(g, 1e-3, fixtures::single(q));
        const Mat oracle = 1e-3 * single_harmonic_oracle(q, g, p.omega);
        const Mat m0 = splitting_melnikov(0, p).matrix;
        CHECK(rel(m0, oracle) < 1e-8);
        for (double t : {-2.0, 3.0}) CHECK(splitting_melnikov(t, p).matrix == m0);
        CHECK(splitting_melnikov(0, p).order_tag == SplitMethod::melnikov);
    }
    ModelParams flat = fixtures::golden(1, 1e-3);
    flat.f = {{{1, {0, 0}, 1.0}}};
    CHECK(splitting_melnikov(0, flat).matrix.norm() == 0);
}

TEST_CASE("jets of the splitting: order eps is Upsilon^1 at every t") {
    const ModelParams p = fixtures::golden(1, 0, fixtures::two_harmonic());
    const auto w = whisker(p, 2);
    const Mat U1 = melnikov_matrix(p).upsilon1;
    for (double t : {-1.5, 0.0, 0.7, 2.0}) {
        const auto U = splitting_jet(t, w);
        CHECK(U[0].norm() < 1e-13);
        CHECK(rel(U[1], U1) < 1e-8);
        // the even reversibility of the model gives Upsilon(t) = Upsilon(-t) order by order
        const auto V = splitting_jet(-t, w);
        CHECK(rel(U[2], V[2]) < 1e-9);
    }
    CHECK_THROWS_AS(splitting_perturbative(0, w, 1e-3, 3), std::invalid_argument);
    const auto r = splitting_perturbative(0, w, 1e-3, 2);
    CHECK(r.order_tag == SplitMethod::perturbative_l2);
    CHECK(std::string(to_string(r.order_tag)) == "perturbative-l2");
}

TEST_CASE("direct measurement: unperturbed whiskers coincide") {
    const ModelParams p = fixtures::golden(1, 0, fixtures::two_harmonic());
    const auto w = whisker(p);
    DirectOptions opt;
    const auto r = splitting_direct(0.5, w, 0.0, opt);
    CHECK(r.matrix.cwiseAbs().maxCoeff() <= 10 * opt.tol);
    CHECK(r.order_tag == SplitMethod::direct);
    // f without psi: the actions A never move
    ModelParams flat = fixtures::golden(1, 1e-3);
    flat.f = {{{1, {0, 0}, 1.0}}};
    CHECK(splitting_direct(0, flat).matrix.cwiseAbs().maxCoeff() <= 10 * opt.tol);
}

TEST_CASE("Melnikov dominance of the direct measurement") {
    const ModelParams p = fixtures::golden(1, 0, fixtures::single({1, 0}));
    const auto w = whisker(p);
    const Mat U1 = single_harmonic_oracle({1, 0}, 1, p.omega);
    std::vector<double> eps{1e-3, 2e-3, 4e-3}, disc;
    for (double e : eps) {
        const auto r = splitting_direct(0, w, e);
        const double re = rel(r.matrix, e * U1);
        CHECK(re <= 10 * e);
        disc.push_back((r.matrix - e * U1).norm());
        // budgets were computed and are far below the signal
        CHECK(r.expected > 0);
        CHECK(r.truncation_budget < 1e-2 * r.expected);
        CHECK(r.error_estimate > 0);
        CHECK(r.T0 == doctest::Approx(6 / w.gamma_at(e)).epsilon(1e-14));
        // reflected time
        const auto m = splitting_direct(-0.8, w, e), pl = splitting_direct(0.8, w, e);
        CHECK((m.matrix - pl.matrix).norm() <= 10 * e * (e * U1).norm() * 1e-3);
    }
    CHECK(loglog_slope(eps, disc) >= 1.8);
    // the ParamsRecord entry point builds its own whisker
    ModelParams pe = p;
    pe.epsilon = 1e-3;
    CHECK(rel(splitting_direct(0, pe).matrix, splitting_direct(0, w, 1e-3).matrix) < 1e-12);
}

TEST_CASE("direct measurement agrees with the whisker jets and does not depend on T0") {
    const ModelParams p = fixtures::golden(1, 0, fixtures::two_harmonic());
    const auto w = whisker(p);
    for (double e : {1e-3, 4e-3}) {
        const auto ref = splitting_perturbative(1, w, e, 3);
        const auto r = splitting_direct(1, w, e);
        // the gap is the untracked fourth order; the estimate is its size up to a factor
        CHECK((r.matrix - ref.matrix).norm() <= 10 * r.error_estimate);
        for (double T0 : {2.0, 4.0, 8.0, 12.0}) {
            DirectOptions o;
            o.T0 = T0;
            const auto s = splitting_direct(1, w, e, o);
            CHECK((s.matrix - r.matrix).norm() <= 1e-3 * e * ref.matrix.norm());
        }
    }
}

TEST_CASE("direct measurement refuses when the whisker truncation dominates") {
    const ModelParams p = fixtures::golden(1, 0, fixtures::two_harmonic());
    const auto w1 = whisker(p, 1);
    CHECK_THROWS_AS(splitting_direct(0, w1, 0.05), InconclusiveMeasurement);
    try {
        splitting_direct(0, w1, 0.05);
    } catch (const InconclusiveMeasurement& e) {
        CHECK(e.truncation > 1e-2 * e.expected);
        CHECK(e.expected > 0);
    }
    CHECK_NOTHROW(splitting_direct(0, w1, 1e-4));
}

TEST_CASE("order eps from the regularized-integral form is the Melnikov matrix") {
    for (double g : {0.5, 1.0}) {
        const ModelParams p = fixtures::golden(g, 1e-3, fixtures::two_harmonic());
        const auto r = splitting_order2(p, 0.4);
        CHECK(rel(r.upsilon1_regint, r.upsilon1) < 1e-8);
    }
}

TEST_CASE("lowest-order zeta from the split kernel matches the whisker tangents") {
    const ModelParams p = fixtures::golden(1, 1e-3, fixtures::two_harmonic());
    const auto w = whisker(p, 1);
    const auto parts = asymptotic_parts(p, 0);
    REQUIRE(parts.size() == 6);
    for (double tau : {-3.0, -1.0, 0.0, 0.5, 2.5}) {
        const Mat a = zeta1(tau, parts, p.g), b = zeta1_jet(tau, w);
        CHECK((a - b).norm() <= 1e-10 * std::max(1.0, b.norm()));
    }
    // reversibility: the two whiskers have the same theta-tangent at (1, 0)
    CHECK(zeta1_jet(0, w).norm() < 1e-12);
}

TEST_CASE("contracted asymptotic form at order eps^2") {
    const ModelParams p = fixtures::golden(1, 2e-3, fixtures::two_harmonic());
    for (double t : {-1.0, 0.0, 0.5, 1.0, 2.0}) {
        const auto r = splitting_order2(p, t);
        CHECK(r.contracted_residual() < 1e-10);
        CHECK(r.result.order_tag == SplitMethod::perturbative_l2);
        CHECK(rel(r.result.matrix, p.epsilon * r.upsilon1 + p.epsilon * p.epsilon * r.upsilon2) < 1e-15);
    }
    // the full-line term does not depend on t; only c_ij^p does
    const auto a = splitting_order2(p, 0.5), b = splitting_order2(p, 1.5);
    CHECK(rel(a.full_line2, b.full_line2) < 1e-12);
    CHECK(rel(a.contracted2, b.contracted2) > 1e-3);
}

TEST_CASE("order eps^2 against an eps-polynomial fit of direct measurements") {
    const ModelParams p = fixtures::golden(1, 0, fixtures::two_harmonic());
    const auto w = whisker(p);
    for (double t : {0.0, 1.0}) {
        const auto fit = fit_order2(t, w, {1e-3, 2e-3, 4e-3});
        const auto r = splitting_order2(p, t);
        CHECK(rel(fit.upsilon2, r.upsilon2) < 1e-3);
        REQUIRE(fit.measured.size() == 3);
    }
    CHECK_THROWS_AS(fit_order2(0, w, {1e-3}), std::invalid_argument);
}

TEST_CASE("E_ij^p at order one: parity zeros and exponential smallness") {
    const std::vector<double> gs{1.0, 0.5, 0.35, 0.25};
    std::vector<std::vector<double>> series(4);
    for (double g : gs) {
        const ModelParams p = fixtures::golden(g, 1e-3, fixtures::two_harmonic());
        const auto parts = asymptotic_parts(p, 0);
        double scale = 0;
        for (auto& a : parts) scale = std::max(scale, a.E.norm());
        for (auto& a : parts) {
            // Q and tau P are odd along the orbit while f_{phi psi} is even
            if ((a.i == 0 && a.j == 2) || (a.i == 1 && a.p == 0 && a.j == 1)) CHECK(a.E.norm() <= 1e-12 * scale);
            if (a.i == 1 && a.p == 0 && a.j == 2) CHECK(a.E.norm() <= 1e-12 * scale);
        }
        // E_01^0 = E_11^1 on the Phi row, and E_12^1 on the Psi rows is -Upsilon^1
        CHECK(rel(parts[0].E, parts[4].E) < 1e-10);
        const Mat U1 = melnikov_matrix(p).upsilon1;
        CHECK(rel(Mat(parts[5].E.bottomRows(2)), Mat(-U1)) < 1e-8);
        series[0].push_back(std::abs(parts[0].E(0, 0)));
        series[1].push_back(std::abs(parts[0].E(0, 1)));
        series[2].push_back(std::abs(parts[5].E(1, 0)));
        series[3].push_back(std::abs(parts[5].E(2, 1)));
    }
    for (auto& s : series) {
        const auto f = smallness_fit(gs, s, FitModel::diophantine, 1);
        CHECK(f.c_fit > 0);
        for (size_t k = 1; k < s.size(); ++k) CHECK(s[k] < s[k - 1]);
    }
}

TEST_CASE("q = 0 harmonics never reach the splitting") {
    ModelParams p = fixtures::golden(1, 1e-3, fixtures::two_harmonic());
    ModelParams p0 = p;
    p0.f.harmonics.push_back({1, {0, 0}, 0.3});
    p0.f.harmonics.push_back({2, {0, 0}, -0.2});
    const auto a = asymptotic_parts(p, 0.7), b = asymptotic_parts(p0, 0.7);
    for (size_t k = 0; k < a.size(); ++k) {
        CHECK(rel(a[k].E, b[k].E) < 1e-14);
        if (a[k].c.norm() > 0) CHECK(rel(a[k].c, b[k].c) < 1e-14);
    }
    CHECK(rel(splitting_melnikov(0, p0).matrix, splitting_melnikov(0, p).matrix) < 1e-14);
}

TEST_CASE("dichotomy bound") {
    // independent evaluation of the displayed chain
    auto oracle = [](const DichotomyInput& in) {
        const double x = in.c / std::pow(in.g, 1 / (in.nu + 1));
        const long n = long(std::ceil(x / std::log(2.0)));
        const double e = in.eps / in.eps1 * std::pow(in.c / std::log(2.0), 4 * (in.nu + 1)) / std::pow(in.g, 4);
        return std::make_pair(n, in.C * std::abs(e) * (std::exp(-x) + std::pow(std::abs(e), double(n))));
    };
    DichotomyInput in;
    in.C = 2;
    in.eps1 = 50;
    in.c = 0.8;
    in.nu = 1;
    for (double g : {0.05, 0.1, 0.3, 0.6, 1.0}) {
        in.g = g;
        in.eps = 1e-3 * std::pow(g, 4);
        const auto b = dichotomy_bound(in);
        const auto [n, v] = oracle(in);
        CHECK(b.n_g == n);
        CHECK(b.bound == doctest::Approx(v).epsilon(1e-12));
        // the choice of n(g) makes the tail no larger than the head
        CHECK(double(b.n_g) * std::log(std::abs(b.eps_tilde)) <= -in.c * std::pow(g, -1 / (in.nu + 1)));
        CHECK(b.tail <= b.head);
    }
    // fixed eps~: the bound falls as 1/g grows
    const double et = 0.3;
    double prev = 1e300;
    for (int k = 0; k <= 40; ++k) {
        const double g = 1.0 - k * (0.95 / 40);
        in.g = g;
        in.eps = et * in.eps1 * std::pow(g, 4) / std::pow(in.c / std::log(2.0), 4 * (in.nu + 1));
        const auto b = dichotomy_bound(in);
        CHECK(b.eps_tilde == doctest::Approx(et).epsilon(1e-12));
        CHECK(b.bound < prev);
        prev = b.bound;
    }
    in.eps = 0;
    CHECK(dichotomy_bound(in).bound == 0);
    in.g = 0.1;
    in.eps = 1;
    CHECK_THROWS_AS(dichotomy_bound(in), HypothesisViolation);
    in.g = -1;
    CHECK_THROWS_AS(dichotomy_bound(in), std::invalid_argument);
}

TEST_CASE("flow direction annihilates the full splitting Jacobian") {
    const ModelParams p = fixtures::golden(1, 0, fixtures::two_harmonic());
    const auto w = whisker(p);
    DirectOptions opt;
    const auto a = flow_kernel_check(0, w, 1e-3, opt);
    CHECK(a.flow_residual <= a.budget);
    CHECK(a.jacobian.norm() > 1e-4);
    // without the flow-direction identity the residual would be |J| |(I, A)|
    CHECK(a.flow_residual < 1e-4 * a.jacobian.norm() * a.velocity.norm());
    // the Jacobian is the Hessian of S^u - S^s
    CHECK((a.jacobian - a.jacobian.transpose()).norm() <= a.budget);
    // the reduced block comes from the same data as the direct Upsilon
    CHECK(rel(a.upsilon, splitting_direct(0, w, 1e-3, opt).matrix) < 1e-12);

    // Upsilon = Upsilon~ (1 + O(eps~)) with a stable constant
    for (double t : {0.0, 1.0}) {
        const auto r1 = flow_kernel_check(t, w, 1e-3, opt), r2 = flow_kernel_check(t, w, 2e-3, opt);
        const double K = r1.factor_residual / r1.eps_tilde;
        CHECK(r2.factor_residual <= 1.25 * K * r2.eps_tilde);
        CHECK(r2.factor_residual / r1.factor_residual == doctest::Approx(2).epsilon(0.2));
        CHECK(r1.flow_residual <= r1.budget);
    }
}

TEST_CASE("flow kernel check: zero splitting and singular reduced matrix") {
    const ModelParams p = fixtures::golden(1, 0, fixtures::two_harmonic());
    const auto w = whisker(p);
    const auto z = flow_kernel_check(0.3, w, 0.0);
    // a zero Jacobian measured by differences: only integration and rounding noise are left
    CHECK(z.flow_residual <= z.noise_floor);
    CHECK(z.jacobian.norm() <= z.noise_floor);
    CHECK(z.noise_floor < 1e-4 * flow_kernel_check(0.3, w, 1e-3).jacobian.norm());
    CHECK(z.factor_residual == 0);
    CHECK(z.upsilon.norm() == 0);
    // f = cos(phi) cos(psi_1) never moves A_2: Upsilon~ has a zero row
    ModelParams s = fixtures::golden(1, 1e-3, fixtures::single({1, 0}));
    CHECK_THROWS_AS(flow_kernel_check(0, s), ConditioningError);
}

TEST_CASE("CSV rows") {
    const ModelParams p = fixtures::golden(1, 1e-3, fixtures::two_harmonic());
    const auto r = splitting_melnikov(0.25, p);
    CHECK(splitting_csv_header(2) == "method,t,g,eps,U11,U12,U21,U22,error_estimate");
    const std::string row = splitting_csv_row(r);
    CHECK(row.rfind("melnikov,0.25,1,0.001,", 0) == 0);
    int commas = 0;
    for (char ch : row) commas += ch == ',';
    CHECK(commas == 8);
    // 17 significant digits round-trip the doubles
    const auto first = row.find(',', 22);
    CHECK(std::stod(row.substr(22, first - 22)) == r.matrix(0, 0));
}
