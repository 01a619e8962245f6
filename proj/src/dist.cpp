#include "rorlab/dist.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rorlab/rng.hpp"
#include "rorlab/stats.hpp"

namespace rorlab::dist {

namespace {

constexpr std::uint64_t kGkStream = 0x474b000000000001ULL;
constexpr std::uint64_t kUniformStream = 0x554e494600000001ULL;
constexpr std::uint64_t kUTildeStream = 0x5554494c00000000ULL;
constexpr std::uint64_t kSignStream = 0x5347434f00000000ULL;
constexpr std::size_t kShards = 16;

int sgn(double x) { return x >= 0.0 ? 1 : -1; }

// (U^T x)_i accumulated in a fixed order, shared by the eager and lazy
// samplers so their signs agree exactly.
double column_dot(const OrthogonalMatrix& u, const Eigen::VectorXd& x, int i) {
  double acc = 0.0;
  for (int r = 0; r < u.n(); ++r) acc += u(r, i) * x(r);
  return acc;
}

std::vector<Eigen::VectorXd> draw_x(int n, int k, std::uint64_t seed) {
  Rng rng(seed, kGkStream);
  std::vector<Eigen::VectorXd> x;
  for (int m = 0; m < k - 1; ++m) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.normal();
    x.push_back(std::move(v));
  }
  return x;
}

void check_k(int k) {
  if (k < 2) throw std::invalid_argument("k must be >= 2");
}

void check_subset(const Subset& s, int n, const char* what) {
  if (static_cast<int>(s.max()) > n) throw std::invalid_argument(std::string(what) + ": index out of range");
}

// Sharded Monte Carlo with a fixed shard count; shard sums are merged in
// order so the result does not depend on the number of workers.
template <class Draw>
RunningStats sharded(std::uint64_t samples, std::uint64_t seed, std::uint64_t stream, Draw draw) {
  std::vector<RunningStats> parts(kShards);
  parallel_shards(kShards, [&](std::size_t shard) {
    Rng rng(seed, stream + shard);
    const auto lo = samples * shard / kShards;
    const auto hi = samples * (shard + 1) / kShards;
    for (auto i = lo; i < hi; ++i) parts[shard].add(draw(rng));
  });
  RunningStats total;
  for (const auto& p : parts) total.merge(p);
  return total;
}

MomentEstimate from_stats(const RunningStats& st) {
  return {st.mean(), st.stderr_mean(), st.count, false};
}

std::vector<std::uint32_t> pick_distinct(Rng& rng, std::uint32_t universe, std::size_t count) {
  std::vector<std::uint32_t> pool(universe);
  for (std::uint32_t i = 0; i < universe; ++i) pool[i] = i + 1;
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + rng.below(universe - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

Subset structured_set(Rng& rng, int k, int n, int ell) {
  // Block sizes share a parity and are all non-zero.
  std::vector<int> sizes(static_cast<std::size_t>(k));
  int base = 1;
  if ((ell - k) % 2 != 0) {
    if (ell % 2 == 0 && ell >= 2 * k) {
      base = 2;
    } else {
      --ell;
    }
  }
  std::fill(sizes.begin(), sizes.end(), base);
  int spare = (ell - base * k) / 2;
  int guard = 0;
  while (spare > 0 && guard < 100000) {
    const auto b = rng.below(static_cast<std::uint64_t>(k));
    ++guard;
    if (sizes[b] + 2 > n) continue;
    sizes[b] += 2;
    --spare;
  }
  std::vector<std::uint32_t> global;
  for (int j = 0; j < k; ++j) {
    for (auto i : pick_distinct(rng, static_cast<std::uint32_t>(n), static_cast<std::size_t>(sizes[j]))) {
      global.push_back(static_cast<std::uint32_t>(j) * static_cast<std::uint32_t>(n) + i);
    }
  }
  return Subset(std::move(global));
}

}  // namespace

GkSample sample_Gk(const OrthogonalMatrix& u, int k, std::uint64_t seed) {
  check_k(k);
  const int n = u.n();
  GkSample s;
  s.X = draw_x(n, k, seed);
  for (const auto& x : s.X) {
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = column_dot(u, x, i);
    s.Y.push_back(std::move(y));
  }
  s.Z.push_back(s.X[0]);
  for (int i = 2; i <= k - 1; ++i) s.Z.push_back(s.Y[i - 2].cwiseProduct(s.X[i - 1]));
  s.Z.push_back(s.Y[k - 2]);
  return s;
}

double gk_construction_defect(const OrthogonalMatrix& u, const GkSample& s) {
  const int k = s.k();
  if (k < 2 || s.X.size() != static_cast<std::size_t>(k - 1) || s.Y.size() != s.X.size()) {
    throw std::invalid_argument("gk_construction_defect: malformed sample");
  }
  const Eigen::MatrixXd ut = u.matrix().transpose();
  double worst = 0.0;
  for (std::size_t i = 0; i < s.X.size(); ++i) {
    worst = std::max(worst, (ut * s.X[i] - s.Y[i]).cwiseAbs().maxCoeff());
  }
  worst = std::max(worst, (s.Z[0] - s.X[0]).cwiseAbs().maxCoeff());
  for (int i = 2; i <= k - 1; ++i) {
    worst = std::max(worst, (s.Z[i - 1] - s.Y[i - 2].cwiseProduct(s.X[i - 1])).cwiseAbs().maxCoeff());
  }
  worst = std::max(worst, (s.Z[k - 1] - s.Y[k - 2]).cwiseAbs().maxCoeff());
  return worst;
}

std::vector<BitVector> signs_of(const GkSample& s) {
  std::vector<BitVector> out;
  for (const auto& z : s.Z) {
    std::vector<std::int8_t> e(static_cast<std::size_t>(z.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) e[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(sgn(z(i)));
    out.emplace_back(std::move(e));
  }
  return out;
}

std::vector<BitVector> sample_DUk_vectors(const OrthogonalMatrix& u, int k, std::uint64_t seed) {
  return signs_of(sample_Gk(u, k, seed));
}

RorrelationInstance sample_DUk(const MatrixHandle& u, int k, std::uint64_t seed) {
  if (!u) throw std::invalid_argument("sample_DUk: null matrix");
  return RorrelationInstance(sample_DUk_vectors(*u, k, seed), u);
}

std::vector<BitVector> sample_uniform_vectors(int k, int n, std::uint64_t seed) {
  check_k(k);
  if (n < 1) throw std::invalid_argument("sample_uniform: N must be >= 1");
  Rng rng(seed, kUniformStream);
  std::vector<BitVector> out;
  for (int j = 0; j < k; ++j) {
    std::vector<std::int8_t> e(static_cast<std::size_t>(n));
    for (auto& x : e) x = static_cast<std::int8_t>(rng.sign());
    out.emplace_back(std::move(e));
  }
  return out;
}

RorrelationInstance sample_uniform(const MatrixHandle& u, int k, std::uint64_t seed) {
  if (!u) throw std::invalid_argument("sample_uniform: null matrix");
  return RorrelationInstance(sample_uniform_vectors(k, u->n(), seed), u);
}

LazyDUk::LazyDUk(const OrthogonalMatrix& u, int k, std::uint64_t seed, std::vector<int> flip_blocks)
    : u_(u), k_(k), n_(u.n()) {
  check_k(k);
  flip_.assign(static_cast<std::size_t>(k + 1), false);
  for (int j : flip_blocks) {
    if (j < 1 || j > k) throw std::invalid_argument("LazyDUk: flip block out of range");
    flip_[static_cast<std::size_t>(j)] = true;
  }
  x_ = draw_x(n_, k_, seed);
  y_.assign(static_cast<std::size_t>(k_ - 1), Eigen::VectorXd(n_));
  have_y_.assign(static_cast<std::size_t>(k_ - 1), std::vector<bool>(static_cast<std::size_t>(n_), false));
}

double LazyDUk::y(int block, int i) {
  auto& have = have_y_[static_cast<std::size_t>(block - 1)];
  auto& yv = y_[static_cast<std::size_t>(block - 1)];
  if (!have[static_cast<std::size_t>(i)]) {
    yv(i) = column_dot(u_, x_[static_cast<std::size_t>(block - 1)], i);
    have[static_cast<std::size_t>(i)] = true;
  }
  return yv(i);
}

int LazyDUk::value(std::uint32_t v) {
  if (v < 1 || v > static_cast<std::uint32_t>(k_ * n_)) throw std::out_of_range("LazyDUk: variable out of range");
  const int j = static_cast<int>((v - 1) / static_cast<std::uint32_t>(n_)) + 1;
  const int i = static_cast<int>((v - 1) % static_cast<std::uint32_t>(n_));
  double z;
  if (j == 1) {
    z = x_[0](i);
  } else if (j == k_) {
    z = y(k_ - 1, i);
  } else {
    z = y(j - 1, i) * x_[static_cast<std::size_t>(j - 1)](i);
  }
  const int s = sgn(z);
  return flip_[static_cast<std::size_t>(j)] ? -s : s;
}

std::vector<Subset> split_blocks(const Subset& global, int k, int n) {
  check_k(k);
  if (static_cast<std::int64_t>(global.max()) > static_cast<std::int64_t>(k) * n) {
    throw std::invalid_argument("split_blocks: index beyond kN");
  }
  std::vector<std::vector<std::uint32_t>> parts(static_cast<std::size_t>(k));
  for (auto v : global) {
    parts[(v - 1) / static_cast<std::uint32_t>(n)].push_back((v - 1) % static_cast<std::uint32_t>(n) + 1);
  }
  std::vector<Subset> out;
  for (auto& p : parts) out.emplace_back(std::move(p));
  return out;
}

Subset join_blocks(std::span<const Subset> parts, int n) {
  std::vector<std::uint32_t> g;
  for (std::size_t j = 0; j < parts.size(); ++j) {
    check_subset(parts[j], n, "join_blocks");
    for (auto i : parts[j]) g.push_back(static_cast<std::uint32_t>(j) * static_cast<std::uint32_t>(n) + i);
  }
  return Subset(std::move(g));
}

nlohmann::json MomentEstimate::to_json() const {
  return {{"value", value}, {"stderr", std_error}, {"samples", samples}, {"exact", exact}};
}

double sign_correlation(double rho) {
  return 1.0 - 2.0 * std::acos(std::clamp(rho, -1.0, 1.0)) / std::numbers::pi;
}

MomentEstimate sign_correlation_mc(double rho, std::uint64_t samples, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("sign_correlation_mc: samples must be positive");
  if (!(rho >= -1.0 && rho <= 1.0)) throw std::invalid_argument("sign_correlation_mc: rho outside [-1, 1]");
  const double c = std::sqrt(1.0 - rho * rho);
  return from_stats(sharded(samples, seed, kSignStream, [&](Rng& rng) {
    const double x = rng.normal();
    const double y = rho * x + c * rng.normal();
    return static_cast<double>(sgn(x) * sgn(y));
  }));
}

MomentEstimate u_tilde_exact_1x1(const OrthogonalMatrix& u, std::uint32_t i, std::uint32_t j) {
  if (i < 1 || j < 1 || static_cast<int>(i) > u.n() || static_cast<int>(j) > u.n()) {
    throw std::out_of_range("u_tilde_exact_1x1: index out of range");
  }
  return {sign_correlation(u(static_cast<int>(i) - 1, static_cast<int>(j) - 1)), 0.0, 0, true};
}

MomentEstimate u_tilde_mc(const OrthogonalMatrix& u, const Subset& s, const Subset& t, std::uint64_t samples,
                          std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("u_tilde_mc: samples must be positive");
  check_subset(s, u.n(), "u_tilde_mc");
  check_subset(t, u.n(), "u_tilde_mc");
  const int n = u.n();
  return from_stats(sharded(samples, seed, kUTildeStream, [&](Rng& rng) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.normal();
    int plus = 1;
    int minus = 1;
    for (auto i : s) {
      const double v = x(static_cast<int>(i) - 1);
      plus *= sgn(v);
      minus *= sgn(-v);
    }
    for (auto j : t) {
      const double y = column_dot(u, x, static_cast<int>(j) - 1);
      plus *= sgn(y);
      minus *= sgn(-y);
    }
    return 0.5 * (plus + minus);
  }));
}

MomentEstimate d_hat_product(const OrthogonalMatrix& u, std::span<const Subset> parts, MomentMethod method,
                             std::uint64_t samples, std::uint64_t seed) {
  if (parts.size() < 2) throw std::invalid_argument("d_hat_product: need k >= 2 blocks");
  for (const auto& p : parts) check_subset(p, u.n(), "d_hat_product");

  std::vector<MomentEstimate> links;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    const auto& a = parts[i];
    const auto& b = parts[i + 1];
    if ((a.size() + b.size()) % 2 == 1 || a.empty() != b.empty()) {
      return {0.0, 0.0, 0, true};
    }
    if (a.empty()) {
      links.push_back({1.0, 0.0, 0, true});
    } else if (method == MomentMethod::ExactWhen1x1 && a.size() == 1 && b.size() == 1) {
      links.push_back(u_tilde_exact_1x1(u, a.max(), b.max()));
    } else {
      links.push_back(u_tilde_mc(u, a, b, samples, derive_seed(seed, i)));
    }
  }

  MomentEstimate out{1.0, 0.0, 0, true};
  double var = 0.0;
  for (std::size_t i = 0; i < links.size(); ++i) {
    out.value *= links[i].value;
    out.exact = out.exact && links[i].exact;
    out.samples = std::max(out.samples, links[i].samples);
    double others = 1.0;
    for (std::size_t j = 0; j < links.size(); ++j) {
      if (j != i) others *= links[j].value;
    }
    var += others * others * links[i].std_error * links[i].std_error;
  }
  out.std_error = std::sqrt(var);
  return out;
}

double moment_bound(int ell, int k, int n, double c) {
  const double base = c * ell * std::log(static_cast<double>(n)) / n;
  return std::pow(base, ell * (1.0 - 1.0 / k) / 2.0);
}

std::size_t AuditReport::failures() const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(),
                                                [](const AuditEntry& e) { return !e.passed(); }));
}

double AuditReport::worst_margin() const {
  double w = std::numeric_limits<double>::infinity();
  for (const auto& e : entries) w = std::min(w, e.margin);
  return w;
}

double AuditReport::worst_ratio() const {
  double w = 0.0;
  for (const auto& e : entries) {
    if (e.estimate.value != 0.0) w = std::max(w, std::abs(e.estimate.value) / e.bound);
  }
  return w;
}

nlohmann::json AuditReport::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : entries) {
    std::vector<std::uint32_t> s;
    for (auto v : e.set) s.push_back(v - 1);
    list.push_back({{"S", s},
                    {"estimate", e.estimate.value},
                    {"stderr", e.estimate.std_error},
                    {"exact", e.estimate.exact},
                    {"bound", e.bound},
                    {"margin", e.margin}});
  }
  return {{"n", n},        {"k", k},
          {"c", c},        {"failures", failures()},
          {"worst_margin", entries.empty() ? 0.0 : worst_margin()},
          {"worst_ratio", worst_ratio()},
          {"entries", list}};
}

AuditReport moment_bound_audit_sets(const OrthogonalMatrix& u, int k, std::span<const Subset> sets,
                                    std::uint64_t seed, std::uint64_t samples_per_link, double c) {
  check_k(k);
  AuditReport report;
  report.n = u.n();
  report.k = k;
  report.c = c;
  for (std::size_t t = 0; t < sets.size(); ++t) {
    const auto parts = split_blocks(sets[t], k, u.n());
    AuditEntry e;
    e.set = sets[t];
    e.estimate = d_hat_product(u, parts, MomentMethod::ExactWhen1x1, samples_per_link, derive_seed(seed, t));
    e.bound = moment_bound(static_cast<int>(sets[t].size()), k, u.n(), c);
    e.margin = e.bound - (std::abs(e.estimate.value) - 4.0 * e.estimate.std_error);
    report.entries.push_back(std::move(e));
  }
  return report;
}

AuditReport moment_bound_audit(const OrthogonalMatrix& u, int k, int trials, int max_size, std::uint64_t seed,
                               std::uint64_t samples_per_link, double c) {
  check_k(k);
  if (trials < 1 || max_size < k) throw std::invalid_argument("moment_bound_audit: need trials >= 1, max_size >= k");
  const int n = u.n();
  const auto universe = static_cast<std::uint32_t>(k * n);
  std::vector<Subset> sets;
  for (int t = 0; t < trials; ++t) {
    Rng rng(seed, 0x4155444900000000ULL + static_cast<std::uint64_t>(t));
    const int ell = std::min<int>(k + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_size - k + 1))),
                                  static_cast<int>(universe));
    if (t % 2 == 0) {
      sets.emplace_back(pick_distinct(rng, universe, static_cast<std::size_t>(ell)));
    } else {
      sets.push_back(structured_set(rng, k, n, ell));
    }
  }
  return moment_bound_audit_sets(u, k, sets, derive_seed(seed, 0x4553544dULL), samples_per_link, c);
}

double max_chain_gap(std::span<const double> a) {
  if (a.size() < 2) throw std::invalid_argument("max_chain_gap: need at least two values");
  double lhs = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += a[i];
    if (i + 1 < a.size()) lhs += std::max(a[i], a[i + 1]);
  }
  const double k = static_cast<double>(a.size());
  return lhs - sum * (k - 1.0) / k;
}

}  // namespace rorlab::dist
