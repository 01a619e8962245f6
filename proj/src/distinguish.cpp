#include "rorlab/distinguish.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rorlab/dist.hpp"
#include "rorlab/rng.hpp"
#include "rorlab/rorrelation.hpp"
#include "rorlab/stats.hpp"

namespace rorlab::distinguish {

namespace {

constexpr std::size_t kShards = 16;
constexpr std::uint64_t kUniformArm = 0x41524d5500000000ULL;
constexpr std::uint64_t kDukArm = 0x41524d4400000000ULL;
constexpr std::uint64_t kMixStream = 0x4d49584d00000000ULL;

// Independent uniform sign per variable, derived from a per-draw key.
int hashed_sign(std::uint64_t key, std::uint32_t v) {
  return (mix64(key + v * 0x9e3779b97f4a7c15ULL) >> 63) ? 1 : -1;
}

template <class Draw>
RunningStats run_arm(std::uint64_t samples, std::uint64_t seed, std::uint64_t stream, Draw draw) {
  std::vector<RunningStats> parts(kShards);
  parallel_shards(kShards, [&](std::size_t shard) {
    Rng rng(seed, stream + shard);
    const auto lo = samples * shard / kShards;
    const auto hi = samples * (shard + 1) / kShards;
    for (auto i = lo; i < hi; ++i) parts[shard].add(draw(rng.next_u64()));
  });
  RunningStats total;
  for (const auto& p : parts) total.merge(p);
  return total;
}

template <class Eval>
AdvantageReport advantage_impl(Eval eval, int tree_n, int depth, const OrthogonalMatrix& u, int k,
                               const AdvantageOptions& opt, std::string tree_id) {
  if (k < 2) throw std::invalid_argument("advantage: k must be >= 2");
  if (tree_n != k * u.n()) {
    throw std::invalid_argument("advantage: tree reads " + std::to_string(tree_n) + " variables, expected kN = " +
                                std::to_string(k * u.n()));
  }
  if (opt.samples == 0) throw std::invalid_argument("advantage: samples must be positive");

  const auto uni = run_arm(opt.samples, opt.seed, kUniformArm, [&](std::uint64_t key) {
    return eval([key](std::uint32_t v) { return hashed_sign(key, v); });
  });
  const auto duk = run_arm(opt.samples, opt.seed, kDukArm, [&](std::uint64_t key) {
    dist::LazyDUk z(u, k, key, opt.flip_blocks);
    return eval([&z](std::uint32_t v) { return z.value(v); });
  });

  AdvantageReport r;
  r.tree_id = std::move(tree_id);
  r.estimate = uni.mean() - duk.mean();
  r.std_error = std::hypot(uni.stderr_mean(), duk.stderr_mean());
  r.d = depth;
  r.k = k;
  r.n = u.n();
  r.samples = opt.samples;
  r.theory_bound = thm_main_bound(std::max(depth, 1), k, u.n());
  return r;
}

}  // namespace

void MixtureSpec::validate() const {
  if (!u) throw std::invalid_argument("mixture: matrix not set");
  if (k < 2) throw std::invalid_argument("mixture: k must be >= 2");
  if (weight_uniform < 0.0 || weight_duk < 0.0 || std::abs(weight_uniform + weight_duk - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture: weights must be non-negative and sum to 1");
  }
}

nlohmann::json AdvantageReport::to_json() const {
  return {{"tree", tree_id}, {"estimate", estimate}, {"stderr", std_error}, {"theory_bound", theory_bound},
          {"d", d},          {"k", k},               {"N", n},             {"samples", samples}};
}

AdvantageReport advantage(const DecisionTree& tree, const OrthogonalMatrix& u, int k, const AdvantageOptions& opt,
                          std::string tree_id) {
  auto eval = [&tree](auto&& lookup) { return static_cast<double>(tree.evaluate_lazy(lookup)); };
  return advantage_impl(eval, tree.n(), tree.depth(), u, k, opt, std::move(tree_id));
}

AdvantageReport advantage(const RandomizedTree& mix, const OrthogonalMatrix& u, int k, const AdvantageOptions& opt,
                          std::string tree_id) {
  if (mix.components.empty()) throw std::invalid_argument("advantage: empty mixture");
  const int n = mix.components.front().second.n();
  int depth = 0;
  for (const auto& [w, t] : mix.components) {
    if (t.n() != n) throw std::invalid_argument("advantage: mixture components disagree on n");
    depth = std::max(depth, t.depth());
  }
  auto eval = [&mix](auto&& lookup) {
    double acc = 0.0;
    for (const auto& [w, t] : mix.components) acc += w * t.evaluate_lazy(lookup);
    return acc;
  };
  return advantage_impl(eval, n, depth, u, k, opt, std::move(tree_id));
}

double thm_main_bound(int d, int k, int n) {
  if (d < 1 || k < 2 || n < 1) throw std::invalid_argument("thm_main_bound: need d >= 1, k >= 2, N >= 1");
  const double l = d * std::log(static_cast<double>(k) * n);
  return std::pow(l, (3.0 * k - 1.0) / 4.0) / std::pow(static_cast<double>(n), (k - 1.0) / 2.0);
}

double conjectured_bound(double d, int k, int n) {
  if (d <= 0.0 || k < 2 || n < 1) throw std::invalid_argument("conjectured_bound: need d > 0, k >= 2, N >= 1");
  const double lg = std::log(static_cast<double>(k) * n);
  const double inner = d * std::pow(lg, 2.0 - 1.0 / k) / std::pow(static_cast<double>(n), 1.0 - 1.0 / k);
  return std::pow(inner, k / 2.0);
}

double lower_bound_depth(int k, int n) {
  if (k < 2 || n < 1) throw std::invalid_argument("lower_bound_depth: need k >= 2, N >= 1");
  const double e = 2.0 * (k - 1.0) / (3.0 * k - 1.0);
  return std::pow(static_cast<double>(n), e) / (k * std::log(static_cast<double>(k) * n));
}

nlohmann::json MisclassificationReport::to_json() const {
  return {{"rate", rate}, {"stderr", std_error}, {"samples", samples}, {"errors", errors},
          {"ambiguous", ambiguous}, {"yes", yes}, {"no", no}};
}

MisclassificationReport misclassification_rate(const DecisionTree& tree, const MixtureSpec& mix,
                                               std::uint64_t samples, std::uint64_t seed) {
  mix.validate();
  const int n = mix.n();
  const int k = mix.k;
  if (tree.n() != k * n) throw std::invalid_argument("misclassification_rate: tree must read kN variables");
  if (samples == 0) throw std::invalid_argument("misclassification_rate: samples must be positive");

  struct Part {
    std::uint64_t errors = 0, ambiguous = 0, yes = 0, no = 0;
  };
  std::vector<Part> parts(kShards);
  parallel_shards(kShards, [&](std::size_t shard) {
    Rng rng(seed, kMixStream + shard);
    const auto lo = samples * shard / kShards;
    const auto hi = samples * (shard + 1) / kShards;
    auto& p = parts[shard];
    for (auto s = lo; s < hi; ++s) {
      const bool from_uniform = rng.uniform() < mix.weight_uniform;
      const auto key = rng.next_u64();
      const auto z = from_uniform ? dist::sample_uniform_vectors(k, n, key) : dist::sample_DUk_vectors(*mix.u, k, key);
      const auto tag = rorrelation::classify(*mix.u, z).tag;
      const auto out = tree.evaluate_lazy([&](std::uint32_t v) {
        return z[(v - 1) / static_cast<std::uint32_t>(n)][(v - 1) % static_cast<std::uint32_t>(n)];
      });
      switch (tag) {
        case rorrelation::Tag::Yes:
          ++p.yes;
          if (out != 1) ++p.errors;
          break;
        case rorrelation::Tag::No:
          ++p.no;
          if (out != 0) ++p.errors;
          break;
        case rorrelation::Tag::Ambiguous:
          ++p.ambiguous;
          break;
      }
    }
  });
  MisclassificationReport r;
  r.samples = samples;
  for (const auto& p : parts) {
    r.errors += p.errors;
    r.ambiguous += p.ambiguous;
    r.yes += p.yes;
    r.no += p.no;
  }
  r.rate = static_cast<double>(r.errors) / static_cast<double>(samples);
  r.std_error = std::sqrt(r.rate * (1.0 - r.rate) / static_cast<double>(samples));
  return r;
}

DecisionTree cross_parity_tree(int n, int k, std::uint32_t i, std::uint32_t j) {
  if (k < 2 || i < 1 || j < 1 || static_cast<int>(i) > n || static_cast<int>(j) > n) {
    throw std::invalid_argument("cross_parity_tree: bad arguments");
  }
  const std::uint32_t vars[] = {i, static_cast<std::uint32_t>(n) + j};
  return dtree::make_parity(k * n, vars);
}

double cross_parity_advantage(const OrthogonalMatrix& u, int k, std::uint32_t i, std::uint32_t j) {
  if (k != 2) return 0.0;
  return -0.5 * dist::u_tilde_exact_1x1(u, i, j).value;
}

std::vector<CorpusEntry> standard_corpus(const OrthogonalMatrix& u, int k, int max_depth, std::uint64_t seed) {
  if (k < 2 || max_depth < 2) throw std::invalid_argument("standard_corpus: need k >= 2, max_depth >= 2");
  const int n = u.n();
  const int total = k * n;
  const auto un = static_cast<std::uint32_t>(n);
  std::vector<CorpusEntry> out;
  auto add = [&](std::string id, std::string family, DecisionTree t) {
    out.push_back({std::move(id), std::move(family), std::move(t)});
  };

  add("const0", "constant", dtree::make_constant(total, 0));
  add("const1", "constant", dtree::make_constant(total, 1));
  add("dict_z1_1", "dictator", dtree::make_dictator(total, 1));
  add("dict_z2_1", "dictator", dtree::make_dictator(total, un + 1));
  add("dict_zk_N", "dictator", dtree::make_dictator(total, static_cast<std::uint32_t>(total)));
  {
    const std::uint32_t v[] = {1, 2};
    add("parity_z1_1_2", "parity-within", dtree::make_parity(total, v));
  }

  // Cross pairs (i, j) ordered by |U_ij|, largest first, with distinct rows
  // and columns.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  {
    std::vector<std::tuple<double, int, int>> all;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) all.emplace_back(-std::abs(u(i, j)), i, j);
    }
    std::sort(all.begin(), all.end());
    std::vector<bool> row(static_cast<std::size_t>(n)), col(static_cast<std::size_t>(n));
    for (const auto& [neg, i, j] : all) {
      if (row[i] || col[j]) continue;
      row[i] = col[j] = true;
      pairs.emplace_back(i + 1, j + 1);
      if (static_cast<int>(pairs.size()) * 2 >= max_depth) break;
    }
  }
  const auto [bi, bj] = pairs.front();
  add("cross_parity_max", "parity-across", cross_parity_tree(n, k, bi, bj));
  {
    Rng rng(seed, 0x434f525000000000ULL);
    const auto i = static_cast<std::uint32_t>(rng.below(un)) + 1;
    const auto j = static_cast<std::uint32_t>(rng.below(un)) + 1;
    add("cross_parity_random", "parity-across", cross_parity_tree(n, k, i, j));
  }
  for (std::size_t m = 2; m <= pairs.size() && static_cast<int>(2 * m) <= max_depth; ++m) {
    std::vector<std::uint32_t> vars;
    for (std::size_t p = 0; p < m; ++p) {
      vars.push_back(pairs[p].first);
      vars.push_back(un + pairs[p].second);
    }
    add("greedy_parity_" + std::to_string(m), "greedy", dtree::make_parity(total, vars));
  }
  for (int d = 2; d <= max_depth; ++d) {
    add("random_d" + std::to_string(d), "random",
        dtree::random_tree(total, d, derive_seed(seed, static_cast<std::uint64_t>(d))));
  }
  return out;
}

}  // namespace rorlab::distinguish
