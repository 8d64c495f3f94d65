#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "json.hpp"
#include "tree_oracles.hpp"
#include "sepx/fixtures.hpp"
#include "sepx/manifold.hpp"
#include "sepx/regint.hpp"
#include "sepx/trees.hpp"

using namespace sepx;
using namespace sepx::testing;

namespace {

double rel_diff(const FTField& a, const FTField& b) { return max_abs(a - b) / std::max(1.0, max_abs(b)); }

WhiskerExpansion whisker(const Perturbation& f, double g) {
    WhiskerOptions o;
    o.l_max = 3;
    return build_whisker(fixtures::golden(g, 0, f), o);
}

}  // namespace

TEST_CASE("enumeration: small degrees and counts") {
    auto one = enumerate_trees(1);
    REQUIRE(one.size() == 1);
    CHECK(to_text(one[0]) == "c1");
    std::vector<std::string> two;
    for (auto& t : enumerate_trees(2)) two.push_back(to_text(t));
    CHECK(two == std::vector<std::string>{"c1", "c2", "w[c1]", "w[x,c1]", "w[c1,x]", "w[c1,c1]"});
    for (int L = 1; L <= 5; ++L) {
        const auto T = enumerate_trees(L);
        CHECK(double(T.size()) <= std::pow(2.0, 6 * L));
        if (L <= 4) CHECK(long(T.size()) == brute_force_count(L));
        std::set<std::string> keys;
        for (auto& t : T) {
            CHECK(keys.insert(to_text(t)).second);
            CHECK(degree(t) <= L);
            CHECK_NOTHROW(validate(t));
        }
        // classes modulo child permutations, with multiplicities adding up
        long total = 0;
        for (auto& [key, cnt] : canonical_classes(T)) {
            CHECK(multiplicity(parse_tree(key)) == cnt);
            total += cnt;
        }
        CHECK(total == long(T.size()));
    }
    CHECK(canonical_classes(enumerate_trees(2)).size() == 5);
    CHECK_THROWS_AS((void)enumerate_trees(7), std::length_error);
}

TEST_CASE("degree and rules") {
    CHECK(degree(parse_tree("c1")) == 1);
    CHECK(degree(parse_tree("w[x,c1]")) == 2);
    CHECK(degree(parse_tree("w[c1]")) == 2);
    CHECK(degree(parse_tree("w[x,c2,w[c1]]")) == 5);
    CHECK(degree(parse_tree("F[w[c1],x]")) == 4);
    CHECK_THROWS_AS((void)parse_tree("w[x,x]"), TreeRuleError);
    CHECK_THROWS_AS((void)parse_tree("w[]"), TreeRuleError);
    CHECK_THROWS_AS((void)parse_tree("w[w[x],c1]"), TreeRuleError);
    CHECK_THROWS_AS((void)parse_tree("w[c1,F]"), TreeRuleError);
    CHECK_THROWS_AS((void)parse_tree("c0"), TreeRuleError);
    CHECK_THROWS_AS((void)parse_tree("w[c1"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_tree("c1@31"), TreeLabelError);
}

TEST_CASE("text and JSON export") {
    for (auto& t : enumerate_trees(4)) CHECK(parse_tree(to_text(t)) == t);
    for (auto& t : enumerate_root_trees(4)) CHECK(parse_tree(to_text(t)) == t);
    const Tree L = parse_tree("F^1[w[c1@02,x]@01,x]@12");
    CHECK(to_text(L) == "F^1[w[c1@02,x]@01,x]@12");
    const auto rep = divergence_rates(L);
    auto j = nlohmann::json::parse(tree_json(L, &rep));
    CHECK(j["text"] == to_text(L));
    CHECK(j["degree"] == 4);
    CHECK(j["tree"]["p"] == 1);
    CHECK(j["tree"]["children"][0]["part"] == nlohmann::json::array({0, 1}));
    CHECK(j["rates"]["n0"] == rep.n0);
    CHECK(j["rates"]["nodes"].size() == rep.nodes.size());
}

TEST_CASE("plane tree count against balanced words") {
    const long small[] = {1, 1, 2, 5};
    for (int k = 1; k <= 4; ++k) CHECK(plane_tree_count(k) == small[k - 1]);
    for (int k = 1; k <= 7; ++k) {
        const long brute = long(dyck_words(k - 1).size());
        CHECK(plane_tree_count(k) == brute);
        CHECK(double(plane_tree_count(k)) <= std::pow(4.0, k - 1) / k);
        const auto shapes = plane_tree_shapes(k);
        CHECK(long(shapes.size()) == brute);
        std::set<std::string> keys;
        for (auto& s : shapes) {
            CHECK(s.n_nodes() == k);
            keys.insert(to_text(s));
        }
        CHECK(keys.size() == shapes.size());
    }
}

TEST_CASE("tree sum equals delta_2 X~ order by order") {
    for (auto [f, g] : {std::pair{fixtures::two_harmonic(), 0.8}, std::pair{fixtures::single({1, 1}), 1.0}}) {
        auto w = whisker(f, g);
        const FieldVec Z = picard(w);
        for (int l = 1; l <= 3; ++l) {
            const FieldVec S = tree_sum(w, l);
            for (size_t i = 0; i < S.size(); ++i) {
                const FTField t = S[i].eps_order(l);
                CHECK(rel_diff(t, delta(w.Xt[i], 2).eps_order(l)) < 1e-8);
                CHECK(rel_diff(t, Z[i].eps_order(l)) < 1e-8);
            }
        }
    }
}

TEST_CASE("node values") {
    auto w = whisker(fixtures::two_harmonic(), 0.8);
    TreeEvaluator ev(w);
    const Jet gam = w.gamma;
    // sum of h^{(k)} over k <= 3 is the full right-hand side at X~_{<=1} through eps^3
    {
        FieldVec W = whisker_rhs(w, ev.X1(), gam, w.opt.K);
        W[0] += series_cosPhi0(w.ctx, gam, w.opt.K) * ev.X1()[0] * (gam * gam);
        FieldVec H = ev.h(1) + ev.h(2) + ev.h(3);
        for (size_t i = 0; i < W.size(); ++i) CHECK(rel_diff(H[i], W[i]) < 1e-12);
        // h^{(k)} = O(eps^k)
        for (int k = 1; k <= 3; ++k)
            for (auto& f : ev.h(k))
                for (int l = 0; l < k; ++l) CHECK(max_abs(f.eps_order(l)) < 1e-13);
    }
    // circle 1 is K^{-1} delta_2 h^{(1)}
    {
        FieldVec h = ev.h(1);
        for (auto& f : h) {
            f = delta(f, 2);
            f.gamma = gam;
        }
        const FieldVec c = kernel_inverse_apply(h);
        const FieldVec& v = ev.value(parse_tree("c1"));
        for (size_t i = 0; i < c.size(); ++i) CHECK(max_abs(v[i] - c[i]) == 0);
    }
    // symmetric multilinear forms: child order does not matter
    for (auto [a, b] : {std::pair{"w[c1,x]", "w[x,c1]"}, std::pair{"w[c1,c2,x]", "w[x,c2,c1]"},
                        std::pair{"w[w[c1],c1,x]", "w[c1,x,w[c1]]"}}) {
        const FieldVec& va = ev.value(parse_tree(a));
        const FieldVec& vb = ev.value(parse_tree(b));
        // equal up to the summation order of the field products
        for (size_t i = 0; i < va.size(); ++i) CHECK(rel_diff(va[i], vb[i]) < 1e-12);
    }
    // each tree is O(eps^deg)
    for (auto& t : enumerate_trees(3)) {
        const FieldVec& v = ev.value(t);
        for (auto& f : v)
            for (int l = 0; l < degree(t); ++l) CHECK(max_abs(f.eps_order(l)) < 1e-13 * std::max(1.0, max_abs(f)));
    }
    CHECK(ev.cache_size() >= enumerate_trees(3).size());
    CHECK_THROWS_AS((void)ev.value(parse_tree("F[c1]")), std::invalid_argument);
}

TEST_CASE("divergence rates") {
    // split node and end node cases
    {
        const auto R = divergence_rates(parse_tree("F[c1@11]"));
        REQUIRE(R.nodes.size() == 3);
        CHECK(R.nodes[1].multiplier_case == 3);
        CHECK(R.nodes[1].r == 0);
        CHECK(R.nodes[2].multiplier_case == 1);
    }
    {
        const auto R = divergence_rates(parse_tree("F[c1@02]"));
        CHECK(R.nodes[1].r == 2);
        CHECK(R.nodes[1].n == 2);
        CHECK(R.r0 == -1);
        CHECK(R.n0 == 1);
        CHECK(R.xibar_F == 0);
    }
    CHECK(divergence_rates(parse_tree("F[x]@02")).r0 == 2);
    CHECK(divergence_rates(parse_tree("F@01")).xibar_F == 0);
    CHECK_THROWS_AS((void)divergence_rates(parse_tree("F[c1]")), TreeLabelError);
    CHECK_THROWS_AS((void)divergence_rates(parse_tree("F[w[c1@01]]")), TreeLabelError);

    long labeled = 0;
    for (auto& T : enumerate_root_trees(4))
        for_each_labeling(T, [&](const Tree& L) {
            ++labeled;
            const auto R = divergence_rates(L);
            CHECK(R.n0 <= R.degree);
            CHECK(R.xibar_F >= 0);
            CHECK(R.xibar_F <= 1);
            for (auto& n : R.nodes) CHECK(n.n == n.r + n.s);
            return true;
        });
    CHECK(labeled > 10000);
}

TEST_CASE("contraction audits over every exhaustion") {
    {
        const Tree F = parse_tree("F");
        const auto ex = exhaustions(F);
        REQUIRE(ex.size() == 1);
        const auto A = contraction_audit(F, ex[0]);
        CHECK(A.violations() == 0);
        CHECK(A.s[0] == 0);
    }
    const Tree L = parse_tree("F[c1@02,w[c1@01,x]@02]");
    CHECK(exhaustions(L).size() == 3);
    CHECK_THROWS_AS((void)contraction_audit(L, {0, 3, 1, 2}), ExhaustionError);
    CHECK_THROWS_AS((void)contraction_audit(L, {0, 1}), ExhaustionError);
    CHECK_THROWS_AS((void)contraction_audit(L, {1, 0, 2, 3}), ExhaustionError);

    long audited = 0, orders = 0, viol = 0, paths = 0;
    for (auto& T : enumerate_root_trees(4))
        for_each_labeling(T, [&](const Tree& lab) {
            if (n_integrated(lab) > 5) return true;
            ++audited;
            for (auto& o : exhaustions(lab)) {
                ++orders;
                const auto A = contraction_audit(lab, o);
                viol += A.violations();
                paths += A.k_paths;
            }
            return true;
        });
    CHECK(viol == 0);
    CHECK(audited > 1000);
    CHECK(orders >= audited);
    CHECK(paths > orders);
}

TEST_CASE("node counts and tree-count bounds") {
    for (int ell = 1; ell <= 5; ++ell) {
        long count = 0;
        for (auto& T : enumerate_root_trees(ell)) {
            ++count;
            const int d = degree(T);
            CHECK(d <= ell);
            CHECK(T.n_end_nodes() <= d - 1);
            if (d >= 2) CHECK(T.n_nodes() <= 2 * (d - 1));
            if (ell >= 2) CHECK(T.n_nodes() <= 2 * (ell - 1));
        }
        CHECK(double(count) <= std::pow(2.0, 6 * ell));
    }
    // the only tree at d = 1 is F^{(0)}
    CHECK(enumerate_root_trees(1).size() == 1);
    CHECK(root_weight(parse_tree("F[c1,x,x]")) == 3);
}

TEST_CASE("scalar split bound") {
    for (int d = 1; d <= 2; ++d)
        for (int ell = 1; ell <= 4; ++ell) {
            double total = 0;
            for (auto& T : enumerate_root_trees(ell)) {
                total += scalar_tree_count(T, d);
                CHECK(max_split_lines(T) <= 4 * (ell - 1));
            }
            const double Cd = 1024.0 * (d + 1) * (d + 1);
            CHECK(total < std::pow(Cd, ell));
        }
}

TEST_CASE("growth along the wedge rays against the tree prediction") {
    auto w = whisker(fixtures::two_harmonic(), 1);
    const auto P = wedge_probes(w, w.domain.vartheta, 20, 11);
    for (auto& p : P) {
        const int pred = predicted_growth(p.ell);
        CHECK(pred <= p.ell);
        CHECK(p.rate <= pred + 0.25);
    }
    CHECK(predicted_growth(1) == 1);
    CHECK(predicted_growth(3) == 3);
}
