#include "rorlab/dtree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "rorlab/rng.hpp"
#include "rorlab/stats.hpp"

namespace rorlab::dtree {

namespace {

constexpr std::uint64_t kFourierTermBudget = std::uint64_t{1} << 26;

double leaf_value(std::uint8_t out, OutputConvention c) {
  return c == OutputConvention::ZeroOne ? static_cast<double>(out) : 1.0 - 2.0 * out;
}

}  // namespace

DecisionTree::DecisionTree(int n, std::vector<Node> nodes, std::int32_t root)
    : n_(n), nodes_(std::move(nodes)), root_(root) {
  if (n < 0) throw std::invalid_argument("DecisionTree: negative variable count");
  if (nodes_.empty()) throw std::invalid_argument("DecisionTree: empty arena");
  const auto count = static_cast<std::int32_t>(nodes_.size());
  if (root < 0 || root >= count) throw std::invalid_argument("DecisionTree: root out of range");

  std::vector<char> seen(nodes_.size(), 0);
  std::vector<char> on_path(static_cast<std::size_t>(n) + 1, 0);
  std::size_t visited = 0;
  std::function<void(std::int32_t, int)> walk = [&](std::int32_t v, int depth) {
    if (v < 0 || v >= count) throw std::invalid_argument("DecisionTree: child out of range");
    if (seen[v]) throw std::invalid_argument("DecisionTree: node shared or cyclic");
    seen[v] = 1;
    ++visited;
    const Node& nd = nodes_[v];
    if (nd.is_leaf()) {
      if (nd.out > 1) throw std::invalid_argument("DecisionTree: leaf output must be 0 or 1");
      depth_ = std::max(depth_, depth);
      return;
    }
    if (nd.var > static_cast<std::uint32_t>(n)) {
      throw std::invalid_argument("DecisionTree: query variable out of range");
    }
    if (on_path[nd.var]) throw std::invalid_argument("DecisionTree: variable repeated on a path");
    on_path[nd.var] = 1;
    walk(nd.minus, depth + 1);
    walk(nd.plus, depth + 1);
    on_path[nd.var] = 0;
  };
  walk(root_, 0);
  if (visited != nodes_.size()) throw std::invalid_argument("DecisionTree: unreachable nodes");
}

std::uint8_t DecisionTree::evaluate(const BitVector& x) const {
  if (static_cast<int>(x.size()) != n_) {
    throw std::invalid_argument("DecisionTree::evaluate: dimension mismatch");
  }
  return evaluate_lazy([&](std::uint32_t j) { return x.var(j); });
}

std::int32_t TreeBuilder::leaf(std::uint8_t out) {
  nodes_.push_back(Node{0, -1, -1, out});
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

std::int32_t TreeBuilder::query(std::uint32_t var, std::int32_t minus, std::int32_t plus) {
  if (var == 0) throw std::invalid_argument("TreeBuilder: variables are 1-based");
  nodes_.push_back(Node{var, minus, plus, 0});
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

DecisionTree TreeBuilder::build(int n, std::int32_t root) && {
  return DecisionTree(n, std::move(nodes_), root);
}

std::vector<LeafSignature> leaf_signatures(const DecisionTree& tree) {
  std::vector<LeafSignature> out;
  LeafSignature path;
  std::function<void(std::int32_t)> walk = [&](std::int32_t v) {
    const Node& nd = tree.node(v);
    if (nd.is_leaf()) {
      path.output = nd.out;
      path.depth = static_cast<int>(path.fixed.size());
      out.push_back(path);
      return;
    }
    path.fixed.emplace_back(nd.var, -1);
    walk(nd.minus);
    path.fixed.back().second = 1;
    walk(nd.plus);
    path.fixed.pop_back();
  };
  walk(tree.root());
  return out;
}

std::vector<NodeStats> node_stats(const DecisionTree& tree) {
  std::vector<NodeStats> st(tree.size());
  std::function<void(std::int32_t, int)> walk = [&](std::int32_t v, int depth) {
    const Node& nd = tree.node(v);
    NodeStats& s = st[v];
    s.depth = depth;
    s.p = std::ldexp(1.0, -depth);
    if (nd.is_leaf()) {
      s.q = nd.out;
      return;
    }
    walk(nd.minus, depth + 1);
    walk(nd.plus, depth + 1);
    // A_v = (1 - x_j)/2 A_minus + (1 + x_j)/2 A_plus and neither child reads x_j.
    s.q = 0.5 * (st[nd.minus].q + st[nd.plus].q);
    s.a_hat_next = 0.5 * (st[nd.plus].q - st[nd.minus].q);
  };
  walk(tree.root(), 0);
  return st;
}

double acceptance_probability(const DecisionTree& tree) {
  return node_stats(tree)[tree.root()].q;
}

FourierSpectrum sparse_fourier(const DecisionTree& tree, OutputConvention convention) {
  const auto leaves = leaf_signatures(tree);
  std::uint64_t terms = 0;
  for (const auto& l : leaves) {
    if (l.depth >= 26) throw std::length_error("sparse_fourier: tree too deep");
    terms += std::uint64_t{1} << l.depth;
    if (terms > kFourierTermBudget) throw std::length_error("sparse_fourier: term budget exceeded");
  }
  FourierSpectrum spec(tree.n());
  std::vector<std::uint32_t> members;
  for (const auto& l : leaves) {
    const double value = leaf_value(l.output, convention);
    if (value == 0.0) continue;
    const double weight = std::ldexp(value, -l.depth);
    const std::uint64_t subsets = std::uint64_t{1} << l.depth;
    for (std::uint64_t mask = 0; mask < subsets; ++mask) {
      members.clear();
      int sign = 1;
      for (int b = 0; b < l.depth; ++b) {
        if ((mask >> b) & 1U) {
          members.push_back(l.fixed[b].first);
          sign *= l.fixed[b].second;
        }
      }
      spec.add(Subset(members), sign * weight);
    }
  }
  spec.prune();
  return spec;
}

std::pair<double, double> decomposition_sides(const DecisionTree& tree, const Subset& s,
                                              OutputConvention convention) {
  if (s.empty()) throw std::invalid_argument("decomposition_sides: S must be non-empty");
  const double lhs = sparse_fourier(tree, convention).coeff(s);

  const auto stats = node_stats(tree);
  const double a_scale = convention == OutputConvention::ZeroOne ? 1.0 : -2.0;
  std::vector<std::pair<std::uint32_t, int>> path;  // (var, sign) above the current node

  // B_v-hat(T) = 2^-depth(v) * prod_{i in T} sign_i when T lies on the path to v, else 0.
  auto b_hat = [&](const Subset& t, int depth) {
    int sign = 1;
    for (auto i : t) {
      auto it = std::find_if(path.begin(), path.end(), [i](const auto& e) { return e.first == i; });
      if (it == path.end()) return 0.0;
      sign *= it->second;
    }
    return std::ldexp(static_cast<double>(sign), -depth);
  };

  double rhs = 0.0;
  std::function<void(std::int32_t)> walk = [&](std::int32_t v) {
    const Node& nd = tree.node(v);
    if (nd.is_leaf()) return;
    if (s.contains(nd.var)) {
      rhs += b_hat(s.without(nd.var), stats[v].depth) * a_scale * stats[v].a_hat_next;
    }
    path.emplace_back(nd.var, -1);
    walk(nd.minus);
    path.back().second = 1;
    walk(nd.plus);
    path.pop_back();
  };
  walk(tree.root());
  return {lhs, rhs};
}

DecisionTree relabel_nonnegative(const DecisionTree& tree) {
  const auto stats = node_stats(tree);
  std::vector<Node> nodes(tree.nodes().begin(), tree.nodes().end());
  for (std::size_t v = 0; v < nodes.size(); ++v) {
    if (!nodes[v].is_leaf() && stats[v].a_hat_next < 0.0) std::swap(nodes[v].minus, nodes[v].plus);
  }
  return DecisionTree(tree.n(), std::move(nodes), tree.root());
}

double refined_level1_sum(const DecisionTree& tree, int d_lo, int d_hi) {
  // A single leaf has depth 0; the layer range [0, 1) is still meaningful for it.
  if (d_lo < 0 || d_lo >= d_hi || d_hi > std::max(tree.depth(), 1)) {
    throw std::invalid_argument("refined_level1_sum: bad layer range");
  }
  const auto stats = node_stats(tree);
  double total = 0.0;
  for (std::size_t v = 0; v < stats.size(); ++v) {
    if (tree.nodes()[v].is_leaf()) continue;
    if (stats[v].depth >= d_lo && stats[v].depth < d_hi) {
      total += stats[v].p * std::abs(stats[v].a_hat_next);
    }
  }
  return total;
}

std::map<int, double> leaf_sum_distribution(const DecisionTree& tree) {
  std::map<int, double> dist;
  for (const auto& l : leaf_signatures(tree)) {
    int s = 0;
    for (const auto& [_, sign] : l.fixed) s += sign;
    dist[s] += std::ldexp(1.0, -l.depth);
  }
  return dist;
}

DecisionTree make_constant(int n, std::uint8_t out) {
  TreeBuilder b;
  const auto root = b.leaf(out);
  return std::move(b).build(n, root);
}

DecisionTree make_dictator(int n, std::uint32_t var) {
  TreeBuilder b;
  const auto lo = b.leaf(0);
  const auto hi = b.leaf(1);
  const auto root = b.query(var, lo, hi);
  return std::move(b).build(n, root);
}

DecisionTree make_parity(int n, std::span<const std::uint32_t> vars) {
  TreeBuilder b;
  // parity_sign: product of the values read so far.
  std::function<std::int32_t(std::size_t, int)> grow = [&](std::size_t i, int parity_sign) {
    if (i == vars.size()) return b.leaf(parity_sign > 0 ? 1 : 0);
    const auto lo = grow(i + 1, -parity_sign);
    const auto hi = grow(i + 1, parity_sign);
    return b.query(vars[i], lo, hi);
  };
  const auto root = grow(0, 1);
  return std::move(b).build(n, root);
}

namespace {

// Majority over vars[0..d), appended to `b`.
std::int32_t grow_majority(TreeBuilder& b, std::span<const std::uint32_t> vars) {
  const int d = static_cast<int>(vars.size());
  const int need = d / 2 + 1;
  std::function<std::int32_t(int, int, int)> grow = [&](int i, int plus, int minus) {
    if (plus >= need) return b.leaf(1);
    if (minus >= need) return b.leaf(0);
    const auto lo = grow(i + 1, plus, minus + 1);
    const auto hi = grow(i + 1, plus + 1, minus);
    return b.query(vars[i], lo, hi);
  };
  return grow(0, 0, 0);
}

}  // namespace

DecisionTree make_majority(int d) {
  if (d < 1 || d % 2 == 0) throw std::invalid_argument("make_majority: d must be odd");
  if (d > 21) throw std::invalid_argument("make_majority: d must be <= 21");
  std::vector<std::uint32_t> vars(d);
  for (int i = 0; i < d; ++i) vars[i] = static_cast<std::uint32_t>(i + 1);
  TreeBuilder b;
  const auto root = grow_majority(b, vars);
  return std::move(b).build(d, root);
}

namespace {

// Index bits x_1..x_d select address a; leaf(a) builds the subtree for a.
std::int32_t grow_index(TreeBuilder& b, int d, int i, std::uint32_t address,
                        const std::function<std::int32_t(std::uint32_t)>& at) {
  if (i == d) return at(address);
  const auto lo = grow_index(b, d, i + 1, address, at);
  const auto hi = grow_index(b, d, i + 1, address | (1U << i), at);
  return b.query(static_cast<std::uint32_t>(i + 1), lo, hi);
}

}  // namespace

DecisionTree make_address(int d) {
  if (d < 0 || d > 4) throw std::invalid_argument("make_address: d must be in [0, 4]");
  const int n = d + (1 << d);
  TreeBuilder b;
  const auto root = grow_index(b, d, 0, 0, [&](std::uint32_t a) {
    const auto lo = b.leaf(0);
    const auto hi = b.leaf(1);
    return b.query(static_cast<std::uint32_t>(d) + a + 1, lo, hi);
  });
  return std::move(b).build(n, root);
}

DecisionTree make_address_of_majority(int d) {
  if (d < 1 || d % 2 == 0 || d > 3) {
    throw std::invalid_argument("make_address_of_majority: d must be 1 or 3");
  }
  const int n = d + (1 << d) * d;
  TreeBuilder b;
  const auto root = grow_index(b, d, 0, 0, [&](std::uint32_t a) {
    std::vector<std::uint32_t> block(d);
    for (int i = 0; i < d; ++i) block[i] = static_cast<std::uint32_t>(d + a * d + i + 1);
    return grow_majority(b, block);
  });
  return std::move(b).build(n, root);
}

DecisionTree make_and(int d) {
  if (d < 1 || d > 24) throw std::invalid_argument("make_and: d must be in [1, 24]");
  TreeBuilder b;
  std::int32_t node = b.leaf(1);
  for (int i = d; i >= 1; --i) node = b.query(static_cast<std::uint32_t>(i), b.leaf(0), node);
  return std::move(b).build(d, node);
}

DecisionTree random_tree(int n, int d, std::uint64_t seed) {
  if (d < 0 || d > n) throw std::invalid_argument("random_tree: need 0 <= d <= n");
  if (d > 24) throw std::invalid_argument("random_tree: d must be <= 24");
  Rng rng(seed);
  TreeBuilder b;
  std::vector<std::uint32_t> free_vars(n);
  for (int i = 0; i < n; ++i) free_vars[i] = static_cast<std::uint32_t>(i + 1);
  // free_vars[0, n - depth) are the variables not yet on the path.
  std::function<std::int32_t(int)> grow = [&](int depth) {
    if (depth == d) return b.leaf(rng.coin() ? 1 : 0);
    const auto avail = static_cast<std::size_t>(n - depth);
    const auto pick = static_cast<std::size_t>(rng.below(avail));
    std::swap(free_vars[pick], free_vars[avail - 1]);
    const auto var = free_vars[avail - 1];
    const auto lo = grow(depth + 1);
    const auto hi = grow(depth + 1);
    return b.query(var, lo, hi);
  };
  const auto root = grow(0);
  return std::move(b).build(n, root);
}

std::vector<NamedTree> fourier_corpus(std::uint64_t seed, int random_count) {
  std::vector<NamedTree> out;
  auto add = [&out](std::string id, DecisionTree t) { out.push_back({std::move(id), std::move(t)}); };
  add("const0", make_constant(4, 0));
  add("const1", make_constant(4, 1));
  add("dictator", make_dictator(4, 2));
  {
    const std::uint32_t vars[] = {1, 2, 3};
    add("parity3", make_parity(5, vars));
  }
  for (int d = 1; d <= 8; ++d) add("and" + std::to_string(d), make_and(d));
  for (int d = 1; d <= 11; d += 2) add("maj" + std::to_string(d), make_majority(d));
  for (int d = 1; d <= 4; ++d) add("add" + std::to_string(d), make_address(d));
  add("addmaj1", make_address_of_majority(1));
  add("addmaj3", make_address_of_majority(3));
  std::vector<DecisionTree> randoms;
  for (int t = 0; t < random_count; ++t) {
    const int n = 3 + t % 10;
    const int d = 1 + (t / 10) % std::min(n, 8);
    randoms.push_back(random_tree(n, d, derive_seed(seed, static_cast<std::uint64_t>(t))));
    add("random" + std::to_string(t), randoms.back());
  }
  for (int t = 0; t < std::min(random_count, 10); ++t) {
    add("relabeled" + std::to_string(t), relabel_nonnegative(randoms[static_cast<std::size_t>(t)]));
  }
  return out;
}

FourierSpectrum mixture_spectrum(const RandomizedTree& mix, OutputConvention convention) {
  std::vector<double> weights;
  std::vector<FourierSpectrum> spectra;
  double total = 0.0;
  for (const auto& [w, t] : mix.components) {
    if (w < 0.0) throw std::invalid_argument("mixture_spectrum: negative weight");
    weights.push_back(w);
    spectra.push_back(sparse_fourier(t, convention));
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("mixture_spectrum: weights must sum to 1");
  return boolfn::convex_combination(weights, spectra);
}

double p_log_factor(double p) {
  if (p <= 0.0) return 0.0;
  return p * std::sqrt(std::log(std::numbers::e / p));
}

double level1_bound(int width, double p, double c) {
  return c * std::sqrt(static_cast<double>(width)) * p_log_factor(p);
}

double level_ell_bound(int d, int ell, int n, double p, double c, LevelLog form) {
  if (p <= 0.0) return 0.0;
  const double base = form == LevelLog::Statement ? 4.0 : std::numbers::e;
  double prod = 1.0;
  for (int i = 0; i < ell; ++i) {
    prod *= std::sqrt(std::log(base * std::pow(static_cast<double>(std::max(n, 1)), i) / p));
  }
  return std::sqrt(std::pow(c, ell) * binomial(d, ell)) * p * prod;
}

nlohmann::json to_json(const DecisionTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& nd : tree.nodes()) {
    if (nd.is_leaf()) {
      nodes.push_back({{"q", nullptr}, {"lo", nullptr}, {"hi", nullptr}, {"out", nd.out}});
    } else {
      nodes.push_back({{"q", nd.var - 1}, {"lo", nd.minus}, {"hi", nd.plus}, {"out", nullptr}});
    }
  }
  return {{"n", tree.n()}, {"root", tree.root()}, {"nodes", nodes}};
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  std::vector<Node> nodes;
  for (const auto& e : j.at("nodes")) {
    Node nd;
    if (e.at("q").is_null()) {
      nd.out = e.at("out").get<std::uint8_t>();
    } else {
      nd.var = e.at("q").get<std::uint32_t>() + 1;
      nd.minus = e.at("lo").get<std::int32_t>();
      nd.plus = e.at("hi").get<std::int32_t>();
    }
    nodes.push_back(nd);
  }
  return DecisionTree(j.at("n").get<int>(), std::move(nodes), j.value("root", 0));
}

}  // namespace rorlab::dtree
