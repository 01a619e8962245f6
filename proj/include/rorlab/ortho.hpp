#pragma once

// Random orthogonal matrices, sub-matrix spectral norms, and goodness checks.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rorlab/boolfn.hpp"

namespace rorlab::ortho {

using boolfn::Subset;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// max_ij |(M^T M - I)_ij|
double orthogonality_defect(const Matrix& m);

class OrthogonalMatrix {
 public:
  static constexpr double kTolerance = 1e-10;

  /// Throws std::invalid_argument if the matrix is not square or its
  /// orthogonality defect exceeds kTolerance.
  OrthogonalMatrix(Matrix entries, std::uint64_t seed);

  int n() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  /// 0-based entry access.
  double operator()(int i, int j) const { return m_(i, j); }
  std::uint64_t seed() const { return seed_; }
  /// FNV-1a over the little-endian row-major payload.
  std::uint64_t hash() const;

 private:
  struct Trusted {};
  OrthogonalMatrix(Matrix entries, std::uint64_t seed, Trusted) : m_(std::move(entries)), seed_(seed) {}
  friend OrthogonalMatrix identity(int n);

  Matrix m_;
  std::uint64_t seed_;
};

using MatrixHandle = std::shared_ptr<const OrthogonalMatrix>;

/// QR of an iid Gaussian matrix (filled column by column) with the columns
/// of Q multiplied by sign(R_jj). Deterministic in (n, seed).
OrthogonalMatrix sample_haar(int n, std::uint64_t seed);

/// The first column of sample_haar(n, seed), computed in O(n) as the
/// normalized first Gaussian column.
Eigen::VectorXd haar_first_column(int n, std::uint64_t seed);

/// Skips the O(n^3) orthogonality check, which matters at n in the thousands.
OrthogonalMatrix identity(int n);

/// Spectral norm. Full SVD when both sides are <= svd_limit, otherwise
/// power iteration on W^T W certified by its Rayleigh residual.
double spectral_norm(const Eigen::MatrixXd& w, int svd_limit = 512);
double spectral_norm_power(const Eigen::MatrixXd& w, double rel_tol = 1e-12);

Eigen::MatrixXd submatrix(const OrthogonalMatrix& u, const Subset& rows, const Subset& cols);
/// ||U_{S,T}||; S and T are 1-based and must be non-empty.
double submatrix_norm(const OrthogonalMatrix& u, const Subset& rows, const Subset& cols);

/// sqrt(100 (rows + cols) ln n / n)
double goodness_bound(int rows, int cols, int n);

struct Violation {
  Subset rows;
  Subset cols;
  double norm = 0.0;
  double bound = 0.0;
};

struct GoodnessReport {
  static constexpr std::size_t kMaxListed = 1000;

  int n = 0;
  std::uint64_t checked_pairs = 0;
  double worst_ratio = 0.0;
  std::uint64_t violation_count = 0;
  std::vector<Violation> violations;  // first kMaxListed, in check order

  bool good() const { return violation_count == 0; }
  nlohmann::json to_json() const;
};

/// Exhaustive over singleton pairs; exhaustive over all |S|,|T| <= 2 when
/// n <= 64; plus `sampled_pairs` random (S, T) with sizes uniform in
/// [1, max_block].
GoodnessReport check_goodness(const OrthogonalMatrix& u, int sampled_pairs, int max_block,
                              std::uint64_t seed);

/// Entry (i, j) of the normalized Sylvester-Hadamard matrix, 0-based.
double hadamard_entry(std::uint64_t i, std::uint64_t j, int log2n);

struct HadamardBlock {
  double norm = 0.0;
  double bound = 0.0;
  std::uint64_t side = 0;  // sqrt(N)
};

/// The sqrt(N) x sqrt(N) block with rows using only the low half of the
/// index bits and columns only the high half: every entry is 1/sqrt(N), so
/// its norm is exactly 1. Requires even log2n <= 40.
HadamardBlock hadamard_counterexample(int log2n);

struct TailRow {
  double t = 0.0;
  double frequency = 0.0;       // Pr[sqrt(n) x^T U y >= t]
  double sigma = 0.0;           // binomial stderr at the Gaussian-limit probability
  double stated_bound = 0.0;     // 2 exp(-t^2/8)
  double gaussian_limit = 0.0;  // 1 - Phi(t)
};

struct TailReport {
  int n = 0;
  int trials = 0;
  std::vector<TailRow> rows;
  nlohmann::json to_json() const;
};

/// Exceedance frequencies of e1^T U e1 = U_11 over `trials` Haar samples.
TailReport bilinear_tail_check(int n, int trials, std::uint64_t seed,
                               const std::vector<double>& ts = {0.0, 1.0, 2.0, 3.0});

/// Matrix file: "RORMAT01", u64 n, u64 seed, u64 payload hash, then n*n
/// little-endian f64 row-major. Loading re-checks hash and orthogonality.
void save_matrix(const std::filesystem::path& path, const OrthogonalMatrix& u);
OrthogonalMatrix load_matrix(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_matrix(const OrthogonalMatrix& u);
OrthogonalMatrix decode_matrix(std::span<const std::uint8_t> bytes);
std::string matrix_to_csv(const OrthogonalMatrix& u);

}  // namespace rorlab::ortho
