#pragma once

// The Gaussian chain G_k, its sign discretization D_{U,k}, the uniform
// distribution U_k, and the Fourier moments of D_{U,k}.
//
// Global variable layout over kN coordinates is block-major: variable
// (j-1)*N + i (1-based) is z^(j)_i.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rorlab/boolfn.hpp"
#include "rorlab/ortho.hpp"
#include "rorlab/rorrelation.hpp"

namespace rorlab::dist {

using boolfn::BitVector;
using boolfn::Subset;
using ortho::MatrixHandle;
using ortho::OrthogonalMatrix;
using rorrelation::RorrelationInstance;

struct GkSample {
  std::vector<Eigen::VectorXd> X;  // k-1 vectors
  std::vector<Eigen::VectorXd> Y;  // Y^(i) = U^T X^(i)
  std::vector<Eigen::VectorXd> Z;  // k vectors

  int k() const { return static_cast<int>(Z.size()); }
};

/// X^(i) ~ N(0,1)^N for i = 1..k-1; Z^(1) = X^(1), Z^(i) = Y^(i-1) o X^(i),
/// Z^(k) = Y^(k-1).
GkSample sample_Gk(const OrthogonalMatrix& u, int k, std::uint64_t seed);

/// Largest deviation of a sample from its construction, recomputed from X.
double gk_construction_defect(const OrthogonalMatrix& u, const GkSample& s);

/// Entrywise signs with sgn(0) = +1.
std::vector<BitVector> signs_of(const GkSample& s);

/// sgn(Z) of sample_Gk(u, k, seed).
std::vector<BitVector> sample_DUk_vectors(const OrthogonalMatrix& u, int k, std::uint64_t seed);
RorrelationInstance sample_DUk(const MatrixHandle& u, int k, std::uint64_t seed);

std::vector<BitVector> sample_uniform_vectors(int k, int n, std::uint64_t seed);
RorrelationInstance sample_uniform(const MatrixHandle& u, int k, std::uint64_t seed);

/// D_{U,k} coordinates on demand. Draws the same Gaussians as sample_Gk
/// with the same seed, so value(v) agrees with sample_DUk_vectors, but only
/// the Y entries that are actually read are computed (O(N) each).
class LazyDUk {
 public:
  /// Every coordinate of z^(j) is negated for j in `flip_blocks`. Flipping
  /// an adjacent pair {j, j+1} is the same as negating X^(j), so the
  /// distribution is unchanged; a single block generally is not.
  LazyDUk(const OrthogonalMatrix& u, int k, std::uint64_t seed, std::vector<int> flip_blocks = {});
  /// Sign of global variable v in [1, kN].
  int value(std::uint32_t v);

 private:
  double y(int block, int i);

  const OrthogonalMatrix& u_;
  int k_;
  int n_;
  std::vector<bool> flip_;  // indexed by block, 1-based
  std::vector<Eigen::VectorXd> x_;
  std::vector<Eigen::VectorXd> y_;
  std::vector<std::vector<bool>> have_y_;
};

/// Splits a global subset of [kN] into blocks S_1..S_k of [N].
std::vector<Subset> split_blocks(const Subset& global, int k, int n);
Subset join_blocks(std::span<const Subset> parts, int n);

struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  bool exact = false;

  nlohmann::json to_json() const;
};

/// 1 - 2 arccos(rho) / pi = (2/pi) arcsin(rho): E[sgn X sgn Y] for standard
/// Gaussians with correlation rho.
double sign_correlation(double rho);

/// Direct Monte Carlo of E[sgn X sgn Y] with Y = rho X + sqrt(1-rho^2) G.
MomentEstimate sign_correlation_mc(double rho, std::uint64_t samples, std::uint64_t seed);

/// U-tilde({i}, {j}) in closed form; i, j are 1-based.
MomentEstimate u_tilde_exact_1x1(const OrthogonalMatrix& u, std::uint32_t i, std::uint32_t j);

/// E_X[sgn(prod_{i in S} X_i prod_{j in T} (U^T X)_j)] over `samples`
/// antithetic pairs (X, -X). Each pair contributes the mean of its two
/// signs, which is exactly 0 when |S| + |T| is odd. The standard error is computed
/// over the pair means.
MomentEstimate u_tilde_mc(const OrthogonalMatrix& u, const Subset& s, const Subset& t, std::uint64_t samples,
                          std::uint64_t seed);

enum class MomentMethod { ExactWhen1x1, MonteCarlo };

/// D-hat(S) = prod_i U-tilde(S_i, S_{i+1}) for S given by its blocks.
///
/// A link is exactly 0 when |S_i| + |S_{i+1}| is odd, or when exactly one of
/// S_i, S_{i+1} is empty (the non-empty side is a product of independent
/// symmetric signs). A link with both sides empty is 1. Remaining links use
/// the closed form for 1x1 links (if allowed) and u_tilde_mc otherwise; the
/// product's stderr is propagated to first order.
MomentEstimate d_hat_product(const OrthogonalMatrix& u, std::span<const Subset> parts, MomentMethod method,
                             std::uint64_t samples, std::uint64_t seed);

/// (c * ell * ln N / N)^(ell (1 - 1/k) / 2)
double moment_bound(int ell, int k, int n, double c = 100.0);

struct AuditEntry {
  Subset set;  // global, 1-based
  MomentEstimate estimate;
  double bound = 0.0;
  double margin = 0.0;  // bound - (|value| - 4 std_error)
  bool passed() const { return margin >= 0.0; }
};

struct AuditReport {
  int n = 0;
  int k = 0;
  double c = 100.0;
  std::vector<AuditEntry> entries;

  std::size_t failures() const;
  double worst_margin() const;
  /// Largest |value| / bound over entries with a non-zero value.
  double worst_ratio() const;
  nlohmann::json to_json() const;
};

/// Audits `trials` random sets of total size in [k, max_size]. Half the
/// trials draw S uniformly from [kN]; the other half draw block sizes of a
/// common parity, all non-zero, so that D-hat(S) is not forced to vanish.
AuditReport moment_bound_audit(const OrthogonalMatrix& u, int k, int trials, int max_size, std::uint64_t seed,
                               std::uint64_t samples_per_link = 2000, double c = 100.0);
/// Audits explicitly given sets.
AuditReport moment_bound_audit_sets(const OrthogonalMatrix& u, int k, std::span<const Subset> sets,
                                    std::uint64_t seed, std::uint64_t samples_per_link = 2000, double c = 100.0);

/// sum_{i<k} max(a_i, a_{i+1}) - (sum a_i)(k-1)/k, which is never negative.
double max_chain_gap(std::span<const double> a);

}  // namespace rorlab::dist
