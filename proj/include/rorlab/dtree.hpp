#pragma once

// Adaptive decision trees over {-1,+1}^n with 0/1 leaf outputs.
//
// Nodes live in an arena and are addressed by index. An internal node reads
// x_var (1-based) and moves to `minus` when x_var = -1 and to `plus` when
// x_var = +1. Under the +-1 output convention a leaf bit b stands for 1 - 2b.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rorlab/boolfn.hpp"

namespace rorlab::dtree {

using boolfn::BitVector;
using boolfn::FourierSpectrum;
using boolfn::OutputConvention;
using boolfn::Subset;

struct Node {
  std::uint32_t var = 0;  // 0 marks a leaf
  std::int32_t minus = -1;
  std::int32_t plus = -1;
  std::uint8_t out = 0;

  bool is_leaf() const { return var == 0; }
};

/// Fixed coordinates along a root-to-leaf path.
struct LeafSignature {
  std::vector<std::pair<std::uint32_t, std::int8_t>> fixed;  // (var, sign), path order
  int depth = 0;
  std::uint8_t output = 0;
};

/// Per-node quantities, ZeroOne convention.
struct NodeStats {
  int depth = 0;
  double p = 1.0;           // reach probability, 2^-depth
  double q = 0.0;           // acceptance probability of the subtree
  double a_hat_next = 0.0;  // A_v-hat({next(v)}); 0 at leaves
};

class DecisionTree {
 public:
  /// Validates: children in range, every node reachable exactly once from
  /// `root`, query variables in [1, n], no variable repeated along a path.
  DecisionTree(int n, std::vector<Node> nodes, std::int32_t root = 0);

  int n() const { return n_; }
  std::int32_t root() const { return root_; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::int32_t id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::span<const Node> nodes() const { return nodes_; }
  int depth() const { return depth_; }

  std::uint8_t evaluate(const BitVector& x) const;

  /// Evaluates with coordinates supplied on demand; `value(j)` returns x_j.
  template <class Lookup>
  std::uint8_t evaluate_lazy(Lookup&& value) const {
    std::int32_t v = root_;
    while (!nodes_[v].is_leaf()) {
      v = value(nodes_[v].var) > 0 ? nodes_[v].plus : nodes_[v].minus;
    }
    return nodes_[v].out;
  }

 private:
  int n_;
  std::vector<Node> nodes_;
  std::int32_t root_;
  int depth_ = 0;
};

/// Incremental arena construction.
class TreeBuilder {
 public:
  std::int32_t leaf(std::uint8_t out);
  std::int32_t query(std::uint32_t var, std::int32_t minus, std::int32_t plus);
  DecisionTree build(int n, std::int32_t root) &&;

 private:
  std::vector<Node> nodes_;
};

std::vector<LeafSignature> leaf_signatures(const DecisionTree& tree);
std::vector<NodeStats> node_stats(const DecisionTree& tree);
double acceptance_probability(const DecisionTree& tree);

/// Exact expansion from leaf paths:
///   f_hat(S) = sum over leaves with S inside the fixed set of
///              2^-depth * f(leaf) * prod_{i in S} sign_i.
/// Throws std::length_error when sum over leaves of 2^depth exceeds 2^26.
FourierSpectrum sparse_fourier(const DecisionTree& tree, OutputConvention convention);

/// Both sides of the decomposition identity
///   f_hat(S) = sum_{j in S} sum_{v: next(v)=j} B_v-hat(S \ {j}) * A_v-hat({j}).
/// lhs comes from sparse_fourier. Throws on empty S.
std::pair<double, double> decomposition_sides(
    const DecisionTree& tree, const Subset& s,
    OutputConvention convention = OutputConvention::ZeroOne);

/// Swaps the children of every node whose A_v-hat({next(v)}) is negative.
/// Reach probabilities and the acceptance probability are unchanged.
DecisionTree relabel_nonnegative(const DecisionTree& tree);

/// Sum over internal nodes with depth in [d_lo, d_hi) of p_v * |A_v-hat({next(v)})|.
double refined_level1_sum(const DecisionTree& tree, int d_lo, int d_hi);

/// Probability mass of s = sum_i (v_leaf)_i under a uniformly random input.
std::map<int, double> leaf_sum_distribution(const DecisionTree& tree);

DecisionTree make_constant(int n, std::uint8_t out);
/// Reads x_var and outputs 1 iff x_var = +1.
DecisionTree make_dictator(int n, std::uint32_t var);
/// Outputs 1 iff the product of the listed variables is +1.
DecisionTree make_parity(int n, std::span<const std::uint32_t> vars);
/// Majority of x_1..x_d, output 1 iff the +1 votes win. d odd, d <= 21.
DecisionTree make_majority(int d);
/// Address function on n = d + 2^d variables: x_1..x_d index (x_i = +1 is
/// bit i-1 set), then the array. Output 1 iff the addressed entry is +1.
DecisionTree make_address(int d);
/// Address_d with each array entry replaced by a majority of d fresh
/// variables. d odd, d <= 3.
DecisionTree make_address_of_majority(int d);
/// AND of x_1..x_d: outputs 1 iff all are +1, so the acceptance probability
/// is 2^-d. d <= 24.
DecisionTree make_and(int d);
/// Full tree of depth exactly d; query variables uniform without repetition
/// along each path; leaf bits uniform.
DecisionTree random_tree(int n, int d, std::uint64_t seed);

/// Randomized tree as an explicit finite mixture.
struct RandomizedTree {
  std::vector<std::pair<double, DecisionTree>> components;
};
FourierSpectrum mixture_spectrum(const RandomizedTree& mix, OutputConvention convention);

struct NamedTree {
  std::string id;
  DecisionTree tree;
};

/// Trees used to check the Fourier growth bounds: constants, a dictator, a
/// parity, AND_1..AND_8, MAJ_1..MAJ_11, Add_1..Add_4, Add o MAJ for d = 1, 3,
/// `random_count` random full trees on 3..12 variables with depth up to 8,
/// and relabeled copies of the first ten random trees.
std::vector<NamedTree> fourier_corpus(std::uint64_t seed, int random_count = 200);

/// p * sqrt(ln(e/p)), continuous at p = 0.
double p_log_factor(double p);
/// C * sqrt(width) * p * sqrt(ln(e/p)).
double level1_bound(int width, double p, double c = 10.0);

enum class LevelLog {
  Statement,  // ln(4 n^i / p)
  Proof,      // ln(e n^i / p)
};
/// sqrt(C^ell * binom(d, ell)) * p * prod_{i<ell} sqrt(log(base * n^i / p)).
double level_ell_bound(int d, int ell, int n, double p, double c = 32.0,
                       LevelLog form = LevelLog::Statement);

/// {"n", "root", "nodes": [{"q": var | null, "lo": id | null, "hi": id | null,
/// "out": bit | null}]}; q is 0-based.
nlohmann::json to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const nlohmann::json& j);

}  // namespace rorlab::dtree
