#pragma once

// Classical side: decision trees against the mixture (U_k + D_{U,k}) / 2,
// and evaluators for the asymptotic bound shapes.
//
// Trees read kN variables in the block-major layout of rorlab/dist.hpp.
// A tree output of 1 means "YES / drawn from D_{U,k}".

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rorlab/dtree.hpp"
#include "rorlab/ortho.hpp"

namespace rorlab::distinguish {

using dtree::DecisionTree;
using dtree::RandomizedTree;
using ortho::MatrixHandle;
using ortho::OrthogonalMatrix;

struct MixtureSpec {
  MatrixHandle u;
  int k = 2;
  double weight_uniform = 0.5;
  double weight_duk = 0.5;

  int n() const { return u ? u->n() : 0; }
  /// Throws unless u is set, k >= 2 and the weights are non-negative and sum to 1.
  void validate() const;
};

struct AdvantageReport {
  std::string tree_id;
  double estimate = 0.0;   // E[F(U_k)] - E[F(D_{U,k})]
  double std_error = 0.0;  // from both arms; 0 only when both arms are constant
  double theory_bound = 0.0;
  int d = 0;
  int k = 0;
  int n = 0;
  std::uint64_t samples = 0;  // per arm

  nlohmann::json to_json() const;
};

struct AdvantageOptions {
  std::uint64_t samples = 20000;
  std::uint64_t seed = 0;
  /// Blocks whose coordinates are negated in the D_{U,k} arm.
  std::vector<int> flip_blocks;
};

/// Independent arms of `samples` draws each. The D_{U,k} arm samples
/// coordinates lazily, so cost per draw is O(kN + depth * N).
AdvantageReport advantage(const DecisionTree& tree, const OrthogonalMatrix& u, int k, const AdvantageOptions& opt,
                          std::string tree_id = {});
/// Mixture: every component is evaluated on the same draws and weighted.
AdvantageReport advantage(const RandomizedTree& tree, const OrthogonalMatrix& u, int k,
                          const AdvantageOptions& opt, std::string tree_id = {});

/// (d ln(kN))^((3k-1)/4) / N^((k-1)/2), constant pinned to 1.
double thm_main_bound(int d, int k, int n);
/// (d (ln kN)^(2-1/k) / N^(1-1/k))^(k/2), constant pinned to 1.
double conjectured_bound(double d, int k, int n);
/// N^(2(k-1)/(3k-1)) / (k ln(kN)), constant pinned to 1.
double lower_bound_depth(int k, int n);

struct MisclassificationReport {
  double rate = 0.0;  // errors / samples
  double std_error = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t errors = 0;
  std::uint64_t ambiguous = 0;  // non-promise draws, never counted as errors
  std::uint64_t yes = 0;
  std::uint64_t no = 0;

  nlohmann::json to_json() const;
};

/// Draws z from the mixture, labels it by phi, and counts promise inputs on
/// which the tree disagrees with the label (1 for YES, 0 for NO).
MisclassificationReport misclassification_rate(const DecisionTree& tree, const MixtureSpec& mix,
                                               std::uint64_t samples, std::uint64_t seed);

struct CorpusEntry {
  std::string id;
  std::string family;
  DecisionTree tree;
};

/// Fixed families over kN variables: constants, dictators, parities within
/// a block and across adjacent blocks, greedy parities over the largest
/// |U_ij| pairs, and random full trees of depth 2..max_depth.
std::vector<CorpusEntry> standard_corpus(const OrthogonalMatrix& u, int k, int max_depth, std::uint64_t seed);

/// Depth-2 tree on z^(1)_i and z^(2)_j (1-based) that outputs 1 iff their
/// product is +1.
DecisionTree cross_parity_tree(int n, int k, std::uint32_t i, std::uint32_t j);

/// Closed form of advantage(cross_parity_tree(i, j)): -(1/2) (2/pi) arcsin(U_ij)
/// for k = 2. For k >= 3, z^(2)_j carries an independent symmetric factor
/// X^(2)_j and the advantage is 0.
double cross_parity_advantage(const OrthogonalMatrix& u, int k, std::uint32_t i, std::uint32_t j);

}  // namespace rorlab::distinguish
