#include "rorlab/qsim.hpp"

#include <cmath>
#include <stdexcept>

#include "rorlab/rng.hpp"

namespace rorlab::qsim {

namespace {

constexpr std::uint64_t kAmpStream = 0x414d504c00000001ULL;

void apply_oracle(std::span<double> v, const BitVector& z) {
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= z[i];
}

// Dense matvec out = A in (transposed if requested) on one branch.
void apply_matrix(std::span<double> v, const OrthogonalMatrix& u, bool transpose) {
  const Eigen::Map<Eigen::VectorXd> x(v.data(), static_cast<Eigen::Index>(v.size()));
  Eigen::VectorXd y = transpose ? Eigen::VectorXd(u.matrix().transpose() * x) : Eigen::VectorXd(u.matrix() * x);
  std::copy(y.data(), y.data() + y.size(), v.begin());
}

}  // namespace

double QueryState::norm() const {
  double s = 0.0;
  for (double a : amplitudes) s += a * a;
  return std::sqrt(s);
}

std::span<double> QueryState::branch(int control) {
  return std::span<double>(amplitudes).subspan(static_cast<std::size_t>(control) * static_cast<std::size_t>(n),
                                               static_cast<std::size_t>(n));
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void hadamard_transform(std::span<double> v) {
  if (!is_power_of_two(static_cast<int>(v.size()))) {
    throw std::invalid_argument("hadamard_transform: size must be a power of two");
  }
  for (std::size_t h = 1; h < v.size(); h *= 2) {
    for (std::size_t i = 0; i < v.size(); i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(v.size()));
  for (double& x : v) x *= scale;
}

int query_count(int k) {
  if (k < 2) throw std::invalid_argument("query_count: k must be >= 2");
  return (k + 1) / 2;
}

CircuitResult run_rorrelation_circuit(const OrthogonalMatrix& u, std::span<const BitVector> z) {
  const int n = u.n();
  const int k = static_cast<int>(z.size());
  if (!is_power_of_two(n)) throw std::invalid_argument("run_rorrelation_circuit: N must be a power of two");
  if (k < 2) throw std::invalid_argument("run_rorrelation_circuit: need k >= 2 vectors");
  for (const auto& v : z) {
    if (static_cast<int>(v.size()) != n) throw std::invalid_argument("run_rorrelation_circuit: vector length mismatch");
  }

  CircuitResult result;
  QueryState state{std::vector<double>(2 * static_cast<std::size_t>(n), 0.0), n};
  auto check = [&] { result.max_norm_defect = std::max(result.max_norm_defect, std::abs(state.norm() - 1.0)); };

  // |+> on the control, |0> on the index register.
  state.amplitudes[0] = std::sqrt(0.5);
  state.amplitudes[static_cast<std::size_t>(n)] = std::sqrt(0.5);
  check();
  hadamard_transform(state.branch(0));
  hadamard_transform(state.branch(1));
  check();

  const int half = query_count(k);
  const int rest = k - half;
  QueryCounter counter;
  for (int t = 1; t <= half; ++t) {
    if (t >= 2 && t <= rest) {
      apply_matrix(state.branch(1), u, false);
      check();
    }
    apply_oracle(state.branch(0), z[static_cast<std::size_t>(t - 1)]);
    if (t <= rest) apply_oracle(state.branch(1), z[static_cast<std::size_t>(k - t)]);
    ++counter.count;
    check();
    apply_matrix(state.branch(0), u, true);
    check();
  }

  const double root2 = std::sqrt(2.0);
  auto b0 = state.branch(0);
  auto b1 = state.branch(1);
  result.a.assign(b0.begin(), b0.end());
  result.b.assign(b1.begin(), b1.end());
  double plus = 0.0;
  for (int i = 0; i < n; ++i) {
    result.a[i] *= root2;
    result.b[i] *= root2;
    result.inner += result.a[i] * result.b[i];
    const double s = result.a[i] + result.b[i];
    plus += s * s;
  }
  result.p_accept = 0.25 * plus;
  result.queries = counter.count;
  return result;
}

double amplification_threshold(int k) {
  const double yes = 0.5 * (1.0 + std::ldexp(1.0, -k));
  const double no = 0.5 * (1.0 + std::ldexp(1.0, -(k + 1)));
  return 0.5 * (yes + no);
}

std::uint64_t recommended_repetitions(int k) {
  return static_cast<std::uint64_t>(std::ceil(64.0 * std::pow(4.0, k)));
}

AmplifiedResult amplify(double p_accept, int k, std::uint64_t repetitions, std::uint64_t seed) {
  if (repetitions < 1) throw std::invalid_argument("amplify: repetitions must be >= 1");
  AmplifiedResult r;
  r.repetitions = repetitions;
  r.threshold = amplification_threshold(k);
  r.p_accept = p_accept;
  r.queries = repetitions * static_cast<std::uint64_t>(query_count(k));
  Rng rng(seed, kAmpStream);
  for (std::uint64_t i = 0; i < repetitions; ++i) {
    if (rng.uniform() < p_accept) ++r.successes;
  }
  r.accept = static_cast<double>(r.successes) > static_cast<double>(repetitions) * r.threshold;
  return r;
}

AmplifiedResult amplified_solver(const OrthogonalMatrix& u, std::span<const BitVector> z,
                                 std::uint64_t repetitions, std::uint64_t seed) {
  const auto run = run_rorrelation_circuit(u, z);
  return amplify(run.p_accept, static_cast<int>(z.size()), repetitions, seed);
}

nlohmann::json to_json(const CircuitResult& r, double phi, const AmplifiedResult* amp) {
  nlohmann::json j{{"phi", phi}, {"p_accept", r.p_accept}, {"queries", r.queries}};
  if (amp) {
    j["verdict"] = amp->accept ? "accept" : "reject";
    j["repetitions"] = amp->repetitions;
    j["successes"] = amp->successes;
    j["threshold"] = amp->threshold;
    j["total_queries"] = amp->queries;
  } else {
    j["verdict"] = nullptr;
  }
  return j;
}

}  // namespace rorlab::qsim
