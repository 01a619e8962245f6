#pragma once

// The k-fold Rorrelation functional phi_U and the YES/NO promise problem.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rorlab/boolfn.hpp"
#include "rorlab/ortho.hpp"

namespace rorlab::rorrelation {

using boolfn::BitVector;
using ortho::MatrixHandle;
using ortho::OrthogonalMatrix;

/// k vectors z^(1)..z^(k) in {-1,+1}^N together with the matrix U.
class RorrelationInstance {
 public:
  /// Throws std::invalid_argument if k < 2, the matrix is null, or any
  /// vector length differs from U's dimension.
  RorrelationInstance(std::vector<BitVector> vectors, MatrixHandle matrix);

  int k() const { return static_cast<int>(vectors_.size()); }
  int n() const { return matrix_->n(); }
  const std::vector<BitVector>& vectors() const { return vectors_; }
  /// z^(j), j in [1, k].
  const BitVector& z(int j) const { return vectors_.at(static_cast<std::size_t>(j - 1)); }
  const OrthogonalMatrix& matrix() const { return *matrix_; }
  const MatrixHandle& matrix_handle() const { return matrix_; }

 private:
  std::vector<BitVector> vectors_;
  MatrixHandle matrix_;
};

enum class Tag { Yes, No, Ambiguous };
std::string_view tag_name(Tag t);

struct InstanceLabel {
  Tag tag = Tag::Ambiguous;
  double phi = 0.0;
};

/// (1/N) z1^T U D(z2) U ... U zk, evaluated right to left with k-1 matvecs.
double phi(const OrthogonalMatrix& u, std::span<const BitVector> z);
double phi(const RorrelationInstance& inst);

/// YES iff phi >= 2^-k, NO iff |phi| <= 2^-(k+1).
Tag tag_of(double phi, int k);
InstanceLabel classify(const OrthogonalMatrix& u, std::span<const BitVector> z);
InstanceLabel classify(const RorrelationInstance& inst);

/// E over D_{U,k} of phi: (1/N) 1^T M^(k-1) 1 with M_ij = U_ij (2/pi) asin(U_ij).
double exact_expected_phi(const OrthogonalMatrix& u, int k);
/// Variance of phi under uniform inputs: (1/N^2) 1^T (U o U)^(k-1) 1.
double exact_uniform_variance(const OrthogonalMatrix& u, int k);
/// Chebyshev guarantee max(0, 1 - 4^(k+1)/N) that a uniform instance is NO.
double uniform_no_probability_bound(int k, int n);

/// A batch of instances sharing k, N and the matrix, which is referenced by
/// path and content hash.
struct InstanceBatch {
  int k = 0;
  int n = 0;
  std::string matrix_path;
  std::uint64_t matrix_hash = 0;
  std::vector<std::vector<BitVector>> instances;
};

/// "RORINST1", u32 k, u32 N, u64 matrix hash, u32 path length, path bytes,
/// u64 count, then count * k * N sign bytes (0x01 for +1, 0xFF for -1).
std::vector<std::uint8_t> encode_batch(const InstanceBatch& batch);
InstanceBatch decode_batch(std::span<const std::uint8_t> bytes);
void save_batch(const std::filesystem::path& path, const InstanceBatch& batch);
InstanceBatch load_batch(const std::filesystem::path& path);

/// Loads the referenced matrix (or `override_path` if non-empty) and checks
/// its hash and dimension against the batch.
MatrixHandle resolve_matrix(const InstanceBatch& batch, const std::filesystem::path& override_path = {});

/// {"index", "phi", "label"}
nlohmann::json label_to_json(std::size_t index, const InstanceLabel& label);

}  // namespace rorlab::rorrelation
