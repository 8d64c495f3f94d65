#pragma once
// Tree diagrams of the delta_2 X~ recursion: enumeration, evaluation on
// Fourier-Taylor fields, and the static divergence-rate bookkeeping used to
// control the integrals of F-rooted trees.
//
// Node kinds:
//   dot       X~_{<=1}
//   circle k  K^{-1} delta_2 h^{(k)}
//   internal  K^{-1} w^{(m)}(children), m = number of entering lines
//   root      F^{(m)}(children) for the integrals of F-rooted trees
//   split     u = 1, inserted where a (t - tau) kernel part is split into two integrals
// Children are ordered; the expansion sums ordered trees with weight one.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sepx/field.hpp"

namespace sepx {

class WhiskerExpansion;

class TreeRuleError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};
class TreeLabelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};
class ExhaustionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class NodeKind { dot, circle, internal, root, split };

// (i, j) piece of the kernel split, i in {0,1}, j in {1,2}
struct KernelPart {
    int i = 0;
    int j = 1;
    bool operator==(const KernelPart&) const = default;
};

struct Tree {
    NodeKind kind = NodeKind::circle;
    int k = 1;                        // circle index
    std::vector<Tree> children;       // entering lines, in order
    std::optional<KernelPart> part;   // line leaving the node; for a root: the bar K factor of F (none = lambda f_psi)
    int p = 0;                        // power of t in a root F

    static Tree dot() { return {NodeKind::dot, 0, {}, {}, 0}; }
    static Tree circle(int k) { return {NodeKind::circle, k, {}, {}, 0}; }
    static Tree node(std::vector<Tree> ch) { return {NodeKind::internal, 0, std::move(ch), {}, 0}; }
    static Tree froot(std::vector<Tree> ch) { return {NodeKind::root, 0, std::move(ch), {}, 0}; }

    bool has_circle() const;
    int n_nodes() const;
    int n_end_nodes() const;  // dots and circles
    bool operator==(const Tree&) const = default;
};

// #(internal nodes with one entering line) + #dots + sum_k k #(circle k);
// for a root tree the order bound 1 + #(dots at the root) + sum deg(subtrees)
int degree(const Tree& t);
// (R1)/(R2) and the shape rules of each kind; throws TreeRuleError
void validate(const Tree& t);

// all ordered trees of degree <= max_degree contributing to delta_2 X~; max_degree <= 6
std::vector<Tree> enumerate_trees(int max_degree);
// F^{(m)} roots with an ordered sequence of delta_2 trees followed by m - m' dots, d(T) <= max_d;
// the multiplicity binom(m, m') of each is root_weight()
std::vector<Tree> enumerate_root_trees(int max_d);
long root_weight(const Tree& t);

// ---- canonical form ----
// children sorted by their own canonical keys (part labels included)
Tree canonical(const Tree& t);
// number of distinct child orderings: ordered trees in this class
long multiplicity(const Tree& t);
// key -> number of ordered trees in the class
std::map<std::string, long> canonical_classes(const std::vector<Tree>& trees);

// ---- text and JSON ----
// x, c<k>, w[...], F[...], s[...]; "@ij" after a node labels its leaving line
// (for F: its bar K factor), "^p" after F gives the power of t
std::string to_text(const Tree& t);
Tree parse_tree(const std::string& s);
struct DivergenceReport;
std::string tree_json(const Tree& t, const DivergenceReport* rates = nullptr);

// ---- plane tree shapes ----
long plane_tree_count(int k);  // (1/k) binom(2k - 2, k - 1)
std::vector<Tree> plane_tree_shapes(int k);  // unlabeled, k nodes (end nodes shown as dots)

// ---- evaluation ----
// Node values on the fields of a solved whisker; subtrees are cached by key
class TreeEvaluator {
public:
    explicit TreeEvaluator(const WhiskerExpansion& w);
    ~TreeEvaluator();
    TreeEvaluator(const TreeEvaluator&) = delete;
    TreeEvaluator& operator=(const TreeEvaluator&) = delete;

    const FieldVec& X1() const;          // X~_{<=1}
    FieldVec h(int k) const;             // h^{(k)}
    // w^{(m)}(x_1, ..., x_m) = D^m W~(0)[x_1, ..., x_m] / m!
    FieldVec w(const std::vector<const FieldVec*>& args) const;
    const FieldVec& value(const Tree& t);  // delta_2 trees and dots
    size_t cache_size() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

FieldVec evaluate(const Tree& t, const WhiskerExpansion& w);
// sum over the ordered trees of degree <= ell (all epsilon orders kept)
FieldVec tree_sum(const WhiskerExpansion& w, int ell);

// ---- divergence rates ----
// replaces every line with an i = 1 part by split node -> node (the part stays on both)
Tree split_double_integrals(const Tree& t);

struct NodeRates {
    std::string label;  // preorder position and kind
    int multiplier_case = 0;  // 1 end node, 2 internal, 3 split, 4 root
    int r = 0, s = 0, n = 0;
};
struct DivergenceReport {
    std::vector<NodeRates> nodes;  // preorder over integrated nodes of the split tree
    int r0 = 0, s0 = 0, n0 = 0;
    int xibar_F = 0;
    int degree = 0;
};
// every non-dot line needs a part (TreeLabelError otherwise); i = 1 lines are split first
DivergenceReport divergence_rates(const Tree& labeled);
// xibar_F for a root: 0 for lambda f_psi, otherwise max(0, bar xi_ij) of its bar K factor
int root_xibar(const Tree& root);
// growth exponent of a labeled delta_2 tree along its root line: xi of the line plus max(0, n)
int growth_rate(const Tree& labeled);
// largest growth_rate over all labelings of the delta_2 trees of degree <= ell (and 1 for X~_{<=1})
int predicted_growth(int ell);

// all part assignments of the non-dot lines (and of the root's F); visitor returns false to stop
void for_each_labeling(const Tree& t, const std::function<bool(const Tree&)>& fn);

// ---- integration-by-parts audits ----
struct AuditReport {
    int n0 = 0;
    long steps = 0;              // (state, step) pairs visited
    long k_paths = 0;            // complete choices of k_0, k_1, ...
    long terminated = 0;         // paths stopped by an empty k range (no integral left to regularize)
    long sr_violations = 0;      // s_{i+1} + r_{i+1} > s_i
    long index_violations = 0;   // k~_i + r_i + s_i outside [0, n0] at a step with a k range
    long range_violations = 0;   // more than 1 + n0 admissible k_i
    long sum_violations = 0;     // sum_{i<=j} (k_i - r_i) < -n0
    std::vector<int> r, s;       // along the exhaustion
    long violations() const { return sr_violations + index_violations + range_violations + sum_violations; }
};
// integrated nodes of the split tree in preorder: ids used by exhaustion orders
int n_integrated(const Tree& labeled);
// all valid exhaustion orders (successor chains of contractions)
std::vector<std::vector<int>> exhaustions(const Tree& labeled);
// checks one exhaustion with every admissible k_i; ExhaustionError for an invalid order
AuditReport contraction_audit(const Tree& labeled, const std::vector<int>& order);

// ---- scalar split count ----
// scalar trees from one tree: 2(d+1) kernel-part/component choices per integrated line,
// d+1 components per dot and per root output
double scalar_tree_count(const Tree& root_tree, int d);
// lines after splitting all double integrals (worst case: every integrated line has i = 1)
int max_split_lines(const Tree& root_tree);

}  // namespace sepx
