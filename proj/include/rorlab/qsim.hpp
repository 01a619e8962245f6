#pragma once

// Real-amplitude state-vector simulation of the ceil(k/2)-query algorithm
// for Rorrelation and its classical amplification wrapper.

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "rorlab/boolfn.hpp"
#include "rorlab/ortho.hpp"

namespace rorlab::qsim {

using boolfn::BitVector;
using ortho::OrthogonalMatrix;

/// Control qubit (top) tensored with an n-qubit index register: amplitudes
/// [0, N) belong to control |0>, [N, 2N) to control |1>.
struct QueryState {
  std::vector<double> amplitudes;
  int n = 0;  // N, a power of two

  double norm() const;
  std::span<double> branch(int control);
};

struct QueryCounter {
  int count = 0;
};

struct CircuitResult {
  double p_accept = 0.0;       // probability of measuring the control in |+>
  double inner = 0.0;          // <a, b>
  std::vector<double> a;       // branch vectors at measurement time
  std::vector<double> b;
  int queries = 0;
  double max_norm_defect = 0.0;  // over all intermediate states
};

/// In-place normalized Walsh-Hadamard transform; size must be a power of two.
void hadamard_transform(std::span<double> v);

bool is_power_of_two(int n);

/// Branch 0: H, then for t = 1..ceil(k/2): D_{z^t}, U^T.
/// Branch 1: H, then D_{z^k}, U, D_{z^(k-1)}, ..., U, D_{z^(ceil(k/2)+1)}.
/// Query step t applies both branches' t-th oracle as one controlled query.
/// The control is measured in the {|+>, |->} basis and |+> accepts.
CircuitResult run_rorrelation_circuit(const OrthogonalMatrix& u, std::span<const BitVector> z);

/// ceil(k/2)
int query_count(int k);

/// Midpoint of (1 + 2^-k)/2 and (1 + 2^-(k+1))/2.
double amplification_threshold(int k);
/// ceil(64 * 4^k)
std::uint64_t recommended_repetitions(int k);

struct AmplifiedResult {
  bool accept = false;
  std::uint64_t successes = 0;
  std::uint64_t repetitions = 0;
  double threshold = 0.0;
  double p_accept = 0.0;
  std::uint64_t queries = 0;
};

/// Runs the circuit once for the exact acceptance probability, then draws
/// `repetitions` Bernoulli trials from it and accepts iff
/// successes > repetitions * threshold.
AmplifiedResult amplified_solver(const OrthogonalMatrix& u, std::span<const BitVector> z,
                                 std::uint64_t repetitions, std::uint64_t seed);
/// Same, from a known acceptance probability.
AmplifiedResult amplify(double p_accept, int k, std::uint64_t repetitions, std::uint64_t seed);

/// {phi, p_accept, queries, verdict}
nlohmann::json to_json(const CircuitResult& r, double phi, const AmplifiedResult* amp = nullptr);

}  // namespace rorlab::qsim
