#include "sepx/trees.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>

#include "json.hpp"
#include "sepx/manifold.hpp"
#include "sepx/regint.hpp"

namespace sepx {

namespace {

constexpr int kMaxDegree = 6;

bool integrated(const Tree& t) { return t.kind != NodeKind::dot; }

long factorial(int n) {
    long r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

long binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// ordered sequences of m children with total degree D, each a dot or a delta_2 tree
void child_sequences(int m, int D, const std::vector<std::vector<Tree>>& byDeg, std::vector<Tree>& cur,
                     bool has_tree, const std::function<void(const std::vector<Tree>&)>& emit) {
    if (m == 0) {
        if (D == 0 && has_tree) emit(cur);
        return;
    }
    if (D < m) return;  // every child has degree >= 1
    cur.push_back(Tree::dot());
    child_sequences(m - 1, D - 1, byDeg, cur, has_tree, emit);
    cur.pop_back();
    for (int e = 1; e <= D - (m - 1); ++e)
        for (const Tree& t : byDeg[size_t(e)]) {
            cur.push_back(t);
            child_sequences(m - 1, D - e, byDeg, cur, true, emit);
            cur.pop_back();
        }
}

std::vector<std::vector<Tree>> trees_by_degree(int L) {
    std::vector<std::vector<Tree>> by(size_t(L + 1));
    for (int D = 1; D <= L; ++D) {
        auto& out = by[size_t(D)];
        out.push_back(Tree::circle(D));
        if (D >= 2)
            for (const Tree& t : by[size_t(D - 1)]) out.push_back(Tree::node({t}));
        std::vector<Tree> cur;
        for (int m = 2; m <= D; ++m)
            child_sequences(m, D, by, cur, false, [&](const std::vector<Tree>& ch) { out.push_back(Tree::node(ch)); });
    }
    return by;
}

std::string part_text(const std::optional<KernelPart>& p) {
    if (!p) return "";
    return "@" + std::to_string(p->i) + std::to_string(p->j);
}

const char* kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::dot: return "dot";
        case NodeKind::circle: return "circle";
        case NodeKind::internal: return "internal";
        case NodeKind::root: return "root";
        case NodeKind::split: return "split";
    }
    return "?";
}

void check_part(const KernelPart& p) {
    if (p.i < 0 || p.i > 1 || p.j < 1 || p.j > 2) throw TreeLabelError("kernel part out of range");
}

// ---- parser ----
struct Parser {
    const std::string& s;
    size_t pos = 0;

    [[noreturn]] void fail(const std::string& m) const {
        throw std::invalid_argument("parse_tree: " + m + " at position " + std::to_string(pos) + " in '" + s + "'");
    }
    char peek() const { return pos < s.size() ? s[pos] : '\0'; }
    int number() {
        size_t b = pos;
        while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos;
        if (b == pos) fail("expected a number");
        return std::stoi(s.substr(b, pos - b));
    }
    Tree node() {
        Tree t;
        const char c = peek();
        ++pos;
        if (c == 'x') {
            t = Tree::dot();
        } else if (c == 'c') {
            t = Tree::circle(number());
        } else if (c == 'w' || c == 'F' || c == 's') {
            t.kind = c == 'w' ? NodeKind::internal : c == 'F' ? NodeKind::root : NodeKind::split;
            t.k = 0;
            if (c == 'F' && peek() == '^') {
                ++pos;
                t.p = number();
            }
            if (peek() == '[') {
                ++pos;
                if (peek() != ']')
                    for (;;) {
                        t.children.push_back(node());
                        if (peek() == ',') {
                            ++pos;
                            continue;
                        }
                        break;
                    }
                if (peek() != ']') fail("expected ']'");
                ++pos;
            }
        } else {
            --pos;
            fail("unknown node");
        }
        if (peek() == '@') {
            ++pos;
            if (pos + 2 > s.size()) fail("short part label");
            t.part = KernelPart{s[pos] - '0', s[pos + 1] - '0'};
            pos += 2;
            check_part(*t.part);
        }
        return t;
    }
};

// ---- split tree bookkeeping ----
struct Flat {
    std::vector<const Tree*> node;         // integrated nodes in preorder
    std::vector<std::vector<int>> kids;    // integrated children ids
    std::vector<int> r, n, dots, up;       // up = xi of the line leaving the node
};

int up_xi(const Tree& c) {
    if (!c.part) throw TreeLabelError("unlabeled line leaving " + to_text(c));
    return xi(c.part->i, c.part->j);
}

int flatten(const Tree& t, Flat& F) {
    const int id = int(F.node.size());
    F.node.push_back(&t);
    F.kids.emplace_back();
    F.r.push_back(0);
    F.n.push_back(0);
    F.dots.push_back(0);
    F.up.push_back(0);
    for (const Tree& c : t.children) {
        if (!integrated(c)) {
            ++F.dots[size_t(id)];
            continue;
        }
        const int cid = flatten(c, F);
        F.kids[size_t(id)].push_back(cid);
    }
    int r = 0;
    switch (t.kind) {
        case NodeKind::circle:
            if (!t.part) throw TreeLabelError("unlabeled circle");
            r = xibar(t.part->i, t.part->j) + t.k;
            break;
        case NodeKind::internal:
            if (!t.part) throw TreeLabelError("unlabeled internal node");
            r = xibar(t.part->i, t.part->j) + F.dots[size_t(id)];
            break;
        case NodeKind::split: r = 0; break;
        case NodeKind::root: r = root_xibar(t) + F.dots[size_t(id)]; break;
        case NodeKind::dot: break;
    }
    int s = 0;
    for (int c : F.kids[size_t(id)]) {
        if (t.kind != NodeKind::split) r += up_xi(*F.node[size_t(c)]);
        s += std::max(0, F.n[size_t(c)]);
    }
    if (t.kind != NodeKind::root) F.up[size_t(id)] = t.part ? xi(t.part->i, t.part->j) : 0;
    F.r[size_t(id)] = r;
    F.n[size_t(id)] = r + s;
    return id;
}

Tree split_rec(const Tree& t) {
    Tree c = t;
    c.children.clear();
    for (const Tree& ch : t.children) c.children.push_back(split_rec(ch));
    if (t.kind != NodeKind::root && t.kind != NodeKind::split && t.part && t.part->i == 1) {
        Tree s;
        s.kind = NodeKind::split;
        s.k = 0;
        s.part = t.part;
        s.children.push_back(std::move(c));
        return s;
    }
    return c;
}

}  // namespace

// ---- Tree ----
bool Tree::has_circle() const {
    if (kind == NodeKind::circle) return true;
    return std::any_of(children.begin(), children.end(), [](const Tree& c) { return c.has_circle(); });
}
int Tree::n_nodes() const {
    int n = 1;
    for (auto& c : children) n += c.n_nodes();
    return n;
}
int Tree::n_end_nodes() const {
    if (kind == NodeKind::dot || kind == NodeKind::circle) return 1;
    int n = 0;
    for (auto& c : children) n += c.n_end_nodes();
    return n;
}

int degree(const Tree& t) {
    switch (t.kind) {
        case NodeKind::dot: return 1;
        case NodeKind::circle: return t.k;
        case NodeKind::split: return t.children.empty() ? 0 : degree(t.children[0]);
        case NodeKind::internal: {
            int d = t.children.size() == 1 ? 1 : 0;
            for (auto& c : t.children) d += degree(c);
            return d;
        }
        case NodeKind::root: {
            int d = 1;
            for (auto& c : t.children) d += degree(c);
            return d;
        }
    }
    return 0;
}

void validate(const Tree& t) {
    switch (t.kind) {
        case NodeKind::dot:
        case NodeKind::circle:
            if (!t.children.empty()) throw TreeRuleError("end nodes are dots and numbered circles only");
            if (t.kind == NodeKind::circle && t.k < 1) throw TreeRuleError("circle index must be >= 1");
            return;
        case NodeKind::internal:
            if (t.children.empty()) throw TreeRuleError("an internal node needs an entering line");
            if (std::none_of(t.children.begin(), t.children.end(), [](const Tree& c) { return c.has_circle(); }))
                throw TreeRuleError("an internal node needs an entering subtree with a numbered circle");
            break;
        case NodeKind::split:
            if (t.children.size() != 1 || !integrated(t.children[0]))
                throw TreeRuleError("a split node has exactly one integrated successor");
            break;
        case NodeKind::root: break;
    }
    for (const Tree& c : t.children) {
        if (c.kind == NodeKind::root) throw TreeRuleError("F only at the root");
        validate(c);
    }
}

std::vector<Tree> enumerate_trees(int L) {
    if (L > kMaxDegree) throw std::length_error("enumerate_trees: degree above " + std::to_string(kMaxDegree));
    if (L < 1) return {};
    auto by = trees_by_degree(L);
    std::vector<Tree> out;
    for (int D = 1; D <= L; ++D)
        for (auto& t : by[size_t(D)]) out.push_back(std::move(t));
    return out;
}

std::vector<Tree> enumerate_root_trees(int max_d) {
    if (max_d > kMaxDegree) throw std::length_error("enumerate_root_trees: order above " + std::to_string(kMaxDegree));
    std::vector<Tree> out;
    if (max_d < 1) return out;
    auto by = trees_by_degree(std::max(1, max_d - 1));
    // sequences of delta_2 trees with total degree <= budget
    std::function<void(int, std::vector<Tree>&)> rec = [&](int budget, std::vector<Tree>& seq) {
        for (int dots = 0; dots <= budget; ++dots) {
            Tree r = Tree::froot(seq);
            for (int i = 0; i < dots; ++i) r.children.push_back(Tree::dot());
            out.push_back(std::move(r));
        }
        for (int e = 1; e <= budget; ++e)
            for (const Tree& t : by[size_t(e)]) {
                seq.push_back(t);
                rec(budget - e, seq);
                seq.pop_back();
            }
    };
    std::vector<Tree> seq;
    rec(max_d - 1, seq);
    return out;
}

long root_weight(const Tree& t) {
    if (t.kind != NodeKind::root) return 1;
    int m = int(t.children.size()), mp = 0;
    for (auto& c : t.children) mp += integrated(c) ? 1 : 0;
    return binom(m, mp);
}

// ---- canonical ----
Tree canonical(const Tree& t) {
    Tree c = t;
    for (auto& ch : c.children) ch = canonical(ch);
    if (c.kind == NodeKind::root) {
        // the shuffle convention keeps the dots after the delta_2 subtrees
        auto mid = std::stable_partition(c.children.begin(), c.children.end(), integrated);
        std::sort(c.children.begin(), mid, [](const Tree& a, const Tree& b) { return to_text(a) < to_text(b); });
    } else {
        std::sort(c.children.begin(), c.children.end(),
                  [](const Tree& a, const Tree& b) { return to_text(a) < to_text(b); });
    }
    return c;
}

long multiplicity(const Tree& t) {
    long m = 1;
    std::map<std::string, int> cnt;
    int n = 0;
    for (auto& c : t.children) {
        m *= multiplicity(c);
        if (t.kind == NodeKind::root && !integrated(c)) continue;
        ++cnt[to_text(canonical(c))];
        ++n;
    }
    m *= factorial(n);
    for (auto& [k, v] : cnt) m /= factorial(v);
    return m;
}

std::map<std::string, long> canonical_classes(const std::vector<Tree>& trees) {
    std::map<std::string, long> out;
    for (auto& t : trees) ++out[to_text(canonical(t))];
    return out;
}

// ---- text ----
std::string to_text(const Tree& t) {
    std::string s;
    switch (t.kind) {
        case NodeKind::dot: s = "x"; break;
        case NodeKind::circle: s = "c" + std::to_string(t.k); break;
        case NodeKind::internal: s = "w"; break;
        case NodeKind::root: s = t.p ? "F^" + std::to_string(t.p) : "F"; break;
        case NodeKind::split: s = "s"; break;
    }
    if (t.kind == NodeKind::internal || t.kind == NodeKind::root || t.kind == NodeKind::split) {
        s += "[";
        for (size_t i = 0; i < t.children.size(); ++i) s += (i ? "," : "") + to_text(t.children[i]);
        s += "]";
    }
    return s + part_text(t.part);
}

Tree parse_tree(const std::string& s) {
    Parser P{s};
    Tree t = P.node();
    if (P.pos != s.size()) P.fail("trailing characters");
    validate(t);
    return t;
}

namespace {
nlohmann::json node_json(const Tree& t) {
    nlohmann::json j;
    j["kind"] = kind_name(t.kind);
    if (t.kind == NodeKind::circle) j["k"] = t.k;
    if (t.kind == NodeKind::root) j["p"] = t.p;
    if (t.part) j["part"] = {t.part->i, t.part->j};
    if (!t.children.empty()) {
        j["children"] = nlohmann::json::array();
        for (auto& c : t.children) j["children"].push_back(node_json(c));
    }
    return j;
}
}  // namespace

std::string tree_json(const Tree& t, const DivergenceReport* rates) {
    nlohmann::json j;
    j["text"] = to_text(t);
    j["degree"] = degree(t);
    j["nodes"] = t.n_nodes();
    j["end_nodes"] = t.n_end_nodes();
    j["multiplicity"] = multiplicity(t);
    j["tree"] = node_json(t);
    if (rates) {
        nlohmann::json r;
        r["r0"] = rates->r0;
        r["s0"] = rates->s0;
        r["n0"] = rates->n0;
        r["xibar_F"] = rates->xibar_F;
        for (auto& n : rates->nodes)
            r["nodes"].push_back({{"label", n.label}, {"case", n.multiplier_case}, {"r", n.r}, {"s", n.s}, {"n", n.n}});
        j["rates"] = r;
    }
    return j.dump();
}

// ---- plane trees ----
long plane_tree_count(int k) {
    if (k < 1) return 0;
    return binom(2 * k - 2, k - 1) / k;
}

std::vector<Tree> plane_tree_shapes(int k) {
    if (k < 1) return {};
    if (k > 12) throw std::length_error("plane_tree_shapes: too many nodes");
    std::vector<std::vector<Tree>> shapes(size_t(k + 1)), forests(size_t(k + 1));
    forests[0].push_back(Tree::node({}));  // empty forest as a childless holder
    for (int n = 1; n <= k; ++n) {
        for (const Tree& f : forests[size_t(n - 1)]) {
            Tree t = f.children.empty() ? Tree::dot() : Tree::node(f.children);
            shapes[size_t(n)].push_back(t);
        }
        // forests of n nodes: first tree of size s, then a forest of n - s
        for (int s = 1; s <= n; ++s)
            for (const Tree& a : shapes[size_t(s)])
                for (const Tree& f : forests[size_t(n - s)]) {
                    Tree g = Tree::node({a});
                    for (auto& c : f.children) g.children.push_back(c);
                    forests[size_t(n)].push_back(std::move(g));
                }
    }
    return shapes[size_t(k)];
}

// ---- evaluation ----
struct TreeEvaluator::Impl {
    const WhiskerExpansion& w;
    CtxPtr ctx;
    Jet gam;
    int K;
    int d;
    Jet g2, lam;
    FieldVec X1;
    std::map<int, FTField> E;                  // E_m series
    std::map<std::pair<size_t, int>, FTField> S;  // sin^{(k)}(A_h) at X0; index harmonics.size() = pendulum
    std::map<std::string, FieldVec> cache;

    explicit Impl(const WhiskerExpansion& w_) : w(w_), ctx(w_.ctx), gam(w_.gamma), K(w_.opt.K), d(w_.ctx->d) {
        const double g = w.params.g;
        g2 = Jet(g * g);
        lam = Jet::eps(g * g);
        for (auto& f : w.Xt) {
            X1.push_back(taylor_upto(f, 1));
            X1.back().gamma = gam;
        }
    }

    const FTField& Em(int m) {
        auto it = E.find(m);
        if (it == E.end()) it = E.emplace(m, series_Em(ctx, gam, m, K)).first;
        return it->second;
    }
    // sin(A + k pi/2) = (i^k e^{iA} - (-i)^k e^{-iA}) / 2i, A = m Phi0 + q.theta
    const FTField& Sk(size_t h, int k) {
        auto key = std::make_pair(h, k);
        auto it = S.find(key);
        if (it != S.end()) return it->second;
        const auto& H = w.params.f.harmonics;
        const int m = h < H.size() ? H[h].m : 1;
        const Mode q = h < H.size() ? H[h].q : ctx->zero_mode();
        cplx ik(1), mik(1);
        for (int i = 0; i < k; ++i) {
            ik *= cplx(0, 1);
            mik *= cplx(0, -1);
        }
        FTField v = (shift_modes(Em(m), q) * Jet(ik) - shift_modes(Em(-m), -q) * Jet(mik)) * Jet(cplx(0, -0.5));
        v.gamma = gam;
        return S.emplace(key, std::move(v)).first->second;
    }

    FieldVec wk(const std::vector<const FieldVec*>& args) {
        const int m = int(args.size());
        const auto& H = w.params.f.harmonics;
        FieldVec out;
        for (int i = 0; i <= d; ++i) out.emplace_back(ctx, gam, K);
        // pendulum: g^2 sin^{(m)}(Phi0) prod x_Phi, minus gamma^2 for m <= 1
        {
            FTField prod = FTField::constant(ctx, gam, Jet(1.0));
            for (auto* a : args) prod = prod * (*a)[0];
            const Jet c = m <= 1 ? g2 - gam * gam : g2;
            out[0] += Sk(H.size(), m) * prod * c;
        }
        for (size_t hI = 0; hI < H.size(); ++hI) {
            const auto& h = H[hI];
            FTField prod = FTField::constant(ctx, gam, Jet(1.0));
            for (auto* a : args) {
                FTField B = (*a)[0] * Jet(double(h.m));
                for (int j = 0; j < d; ++j)
                    if (h.q[size_t(j)]) B += (*a)[size_t(1 + j)] * Jet(double(h.q[size_t(j)]));
                prod = prod * B;
            }
            // lam df = -lam coeff b sin(A); its m-th derivative carries -sin^{(m)} = sin^{(m+2)}
            const FTField t = Sk(hI, m + 2) * prod * lam;
            if (h.m) out[0] += t * Jet(h.coeff * h.m);
            for (int j = 0; j < d; ++j)
                if (h.q[size_t(j)]) out[size_t(1 + j)] += t * Jet(h.coeff * h.q[size_t(j)]);
        }
        const Jet inv(1.0 / double(factorial(m)));
        for (auto& f : out) {
            f = f * inv;
            if (f.K > K) f = f.truncated_to(K);
            f.gamma = gam;
            f.trim();
        }
        return out;
    }

    FieldVec hk(int k) {
        if (k < 1) throw std::invalid_argument("h^(k) needs k >= 1");
        if (k == 1) {
            FieldVec r = wk({});
            const FieldVec l = wk({&X1});
            for (int i = 0; i <= d; ++i) r[size_t(i)] += l[size_t(i)];
            FTField c = series_cosPhi0(ctx, gam, K) * X1[0] * (gam * gam);
            r[0] += c;
            for (auto& f : r) f.gamma = gam;
            return r;
        }
        std::vector<const FieldVec*> a(static_cast<size_t>(k), &X1);
        return wk(a);
    }

    FieldVec kinv(FieldVec h) {
        for (auto& f : h) {
            f = delta(f, 2);
            f.gamma = gam;
        }
        return kernel_inverse_apply(h);
    }

    const FieldVec& value(const Tree& t) {
        if (t.kind == NodeKind::dot) return X1;
        const std::string key = to_text(t);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        FieldVec v;
        if (t.kind == NodeKind::circle) {
            v = kinv(hk(t.k));
        } else if (t.kind == NodeKind::internal) {
            std::vector<const FieldVec*> args;
            for (auto& c : t.children) args.push_back(&value(c));
            v = kinv(wk(args));
        } else {
            throw std::invalid_argument("evaluate: only delta_2 trees and dots have field values");
        }
        return cache.emplace(key, std::move(v)).first->second;
    }
};

TreeEvaluator::TreeEvaluator(const WhiskerExpansion& w) : impl_(std::make_unique<Impl>(w)) {
    if (w.solved() < 1) throw std::invalid_argument("TreeEvaluator: X~_{<=1} needs order 1");
}
TreeEvaluator::~TreeEvaluator() = default;
const FieldVec& TreeEvaluator::X1() const { return impl_->X1; }
FieldVec TreeEvaluator::h(int k) const { return impl_->hk(k); }
FieldVec TreeEvaluator::w(const std::vector<const FieldVec*>& args) const { return impl_->wk(args); }
const FieldVec& TreeEvaluator::value(const Tree& t) { return impl_->value(t); }
size_t TreeEvaluator::cache_size() const { return impl_->cache.size(); }

FieldVec evaluate(const Tree& t, const WhiskerExpansion& w) {
    validate(t);
    TreeEvaluator ev(w);
    return ev.value(t);
}

FieldVec tree_sum(const WhiskerExpansion& w, int ell) {
    TreeEvaluator ev(w);
    FieldVec s;
    for (auto& f : ev.X1()) s.emplace_back(f.ctx, f.gamma, w.opt.K);
    for (const Tree& t : enumerate_trees(ell)) s = s + ev.value(t);
    for (auto& f : s) f.gamma = w.gamma;
    return s;
}

// ---- divergence ----
Tree split_double_integrals(const Tree& t) { return split_rec(t); }

int root_xibar(const Tree& root) {
    if (!root.part) return 0;
    return std::max(0, xibar(root.part->i, root.part->j));
}

DivergenceReport divergence_rates(const Tree& labeled) {
    validate(labeled);
    const Tree t = split_rec(labeled);
    Flat F;
    flatten(t, F);
    DivergenceReport rep;
    for (size_t i = 0; i < F.node.size(); ++i) {
        const Tree& v = *F.node[i];
        NodeRates nr;
        nr.label = std::to_string(i) + ":" + kind_name(v.kind);
        nr.multiplier_case = v.kind == NodeKind::circle ? 1 : v.kind == NodeKind::internal ? 2
                             : v.kind == NodeKind::split ? 3 : 4;
        nr.r = F.r[i];
        nr.n = F.n[i];
        nr.s = nr.n - nr.r;
        rep.nodes.push_back(nr);
    }
    rep.r0 = rep.nodes[0].r;
    rep.s0 = rep.nodes[0].s;
    rep.n0 = rep.nodes[0].n;
    rep.xibar_F = labeled.kind == NodeKind::root ? root_xibar(labeled) : 0;
    rep.degree = degree(labeled);
    return rep;
}

int growth_rate(const Tree& labeled) {
    if (labeled.kind == NodeKind::root || labeled.kind == NodeKind::dot)
        throw std::invalid_argument("growth_rate: needs a labeled delta_2 tree");
    if (!labeled.part) throw TreeLabelError("growth_rate: the root line needs a kernel part");
    const Tree t = split_rec(labeled);
    Flat F;
    flatten(t, F);
    return xi(t.part->i, t.part->j) + std::max(0, F.n[0]);
}

void for_each_labeling(const Tree& t0, const std::function<bool(const Tree&)>& fn) {
    Tree t = t0;
    std::vector<Tree*> slots;
    std::function<void(Tree&)> collect = [&](Tree& v) {
        if (integrated(v) && v.kind != NodeKind::split) slots.push_back(&v);
        for (auto& c : v.children) collect(c);
    };
    collect(t);
    static const KernelPart parts[4] = {{0, 1}, {0, 2}, {1, 1}, {1, 2}};
    // the root F additionally has the lambda f_psi choice (no part)
    std::function<bool(size_t)> rec = [&](size_t i) -> bool {
        if (i == slots.size()) return fn(t);
        Tree& v = *slots[i];
        if (v.kind == NodeKind::root) {
            v.part.reset();
            if (!rec(i + 1)) return false;
        }
        for (const auto& p : parts) {
            v.part = p;
            if (!rec(i + 1)) return false;
        }
        return true;
    };
    rec(0);
}

int predicted_growth(int ell) {
    int best = 1;
    for (const Tree& t : enumerate_trees(ell))
        for_each_labeling(t, [&](const Tree& l) {
            best = std::max(best, growth_rate(l));
            return true;
        });
    return best;
}

// ---- audits ----
int n_integrated(const Tree& labeled) {
    Flat F;
    flatten(split_rec(labeled), F);
    return int(F.node.size());
}

std::vector<std::vector<int>> exhaustions(const Tree& labeled) {
    Flat F;
    flatten(split_rec(labeled), F);
    std::vector<std::vector<int>> out;
    std::vector<int> seq{0};
    std::function<void(std::vector<int>)> rec = [&](std::vector<int> frontier) {
        if (frontier.empty()) {
            out.push_back(seq);
            return;
        }
        for (size_t a = 0; a < frontier.size(); ++a) {
            const int v = frontier[a];
            std::vector<int> next = frontier;
            next.erase(next.begin() + long(a));
            for (int c : F.kids[size_t(v)]) next.push_back(c);
            seq.push_back(v);
            rec(next);
            seq.pop_back();
        }
    };
    rec(F.kids[0]);
    return out;
}

AuditReport contraction_audit(const Tree& labeled, const std::vector<int>& order) {
    validate(labeled);
    Flat F;
    flatten(split_rec(labeled), F);
    const int N = int(F.node.size());
    if (int(order.size()) != N) throw ExhaustionError("exhaustion must contract every integrated node");
    if (order[0] != 0) throw ExhaustionError("exhaustion starts at the root");
    AuditReport rep;
    rep.n0 = F.n[0];
    std::vector<int> frontier = F.kids[0];
    std::vector<bool> seen(size_t(N), false);
    seen[0] = true;
    auto s_of = [&](const std::vector<int>& fr) {
        int s = 0;
        for (int w : fr) s += std::max(0, F.n[size_t(w)]);
        return s;
    };
    rep.r.push_back(F.r[0]);
    rep.s.push_back(s_of(frontier));
    for (int i = 1; i < N; ++i) {
        const int v = order[size_t(i)];
        auto it = std::find(frontier.begin(), frontier.end(), v);
        if (v < 0 || v >= N || seen[size_t(v)] || it == frontier.end())
            throw ExhaustionError("node " + std::to_string(v) + " is not a successor of the current root");
        seen[size_t(v)] = true;
        frontier.erase(it);
        for (int c : F.kids[size_t(v)]) frontier.push_back(c);
        rep.r.push_back(F.r[size_t(v)]);
        rep.s.push_back(s_of(frontier));
        if (rep.s[size_t(i)] + rep.r[size_t(i)] > rep.s[size_t(i - 1)]) ++rep.sr_violations;
    }
    if (rep.s.back() != 0) ++rep.sr_violations;
    const int n0 = rep.n0;
    std::function<void(int, int, int)> rec = [&](int i, int kt, int sum) {
        if (i == N) {
            ++rep.k_paths;
            return;
        }
        ++rep.steps;
        const int lo = -kt - rep.s[size_t(i)], hi = rep.r[size_t(i)];
        const int cnt = hi - lo + 1;
        if (cnt <= 0) {
            // the whole multiplier is the convergent remainder: nothing left to integrate by parts
            ++rep.terminated;
            ++rep.k_paths;
            return;
        }
        if (kt + rep.r[size_t(i)] + rep.s[size_t(i)] > n0) ++rep.index_violations;
        if (cnt > 1 + n0) ++rep.range_violations;
        for (int k = lo; k <= hi; ++k) {
            const int s2 = sum + k - rep.r[size_t(i)];
            if (s2 < -n0) ++rep.sum_violations;
            rec(i + 1, kt + k, s2);
        }
    };
    rec(0, 0, 0);
    return rep;
}

// ---- scalar split ----
double scalar_tree_count(const Tree& t, int d) {
    double c = t.kind == NodeKind::root ? d + 1 : 1;
    std::function<void(const Tree&, bool)> rec = [&](const Tree& v, bool top) {
        if (v.kind == NodeKind::dot) {
            c *= d + 1;
            return;
        }
        if (!top) c *= 2 * (d + 1);
        for (auto& ch : v.children) rec(ch, false);
    };
    rec(t, true);
    return c;
}

int max_split_lines(const Tree& t) {
    int n = 0;
    std::function<void(const Tree&, bool)> rec = [&](const Tree& v, bool top) {
        if (!top) n += integrated(v) ? 2 : 1;
        for (auto& ch : v.children) rec(ch, false);
    };
    rec(t, true);
    return n;
}

}  // namespace sepx
