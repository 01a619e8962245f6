#pragma once

// Boolean functions on {-1,+1}^n and their Fourier expansions.
//
// Variables are 1-based in the API (x_1 .. x_n). Serialized forms (truth
// table bit order, spectrum JSON) are 0-based.

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rorlab::boolfn {

/// A point of {-1,+1}^n.
class BitVector {
 public:
  BitVector() = default;
  /// Throws std::invalid_argument unless every entry is -1 or +1 and n >= 1.
  explicit BitVector(std::vector<std::int8_t> entries);
  static BitVector ones(std::size_t n);

  std::size_t size() const { return entries_.size(); }
  /// 0-based storage access.
  int operator[](std::size_t i) const { return entries_[i]; }
  /// Value of x_j, j in [1, n].
  int var(std::size_t j) const { return entries_.at(j - 1); }
  void flip(std::size_t i) { entries_[i] = static_cast<std::int8_t>(-entries_[i]); }
  std::span<const std::int8_t> entries() const { return entries_; }

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::vector<std::int8_t> entries_;
};

/// Input number `t` of a truth table: x_{i+1} = +1 when bit i of t is 0 and
/// -1 when it is 1.
BitVector input_of_index(std::uint64_t t, int n);

/// A sorted set of 1-based variable indices.
class Subset {
 public:
  Subset() = default;
  /// Sorts; throws on duplicates or a zero index.
  Subset(std::initializer_list<std::uint32_t> members);
  explicit Subset(std::vector<std::uint32_t> members);
  /// Members are the set bits of `mask` (bit i is variable i+1).
  static Subset from_mask(std::uint64_t mask);

  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  bool contains(std::uint32_t j) const;
  Subset without(std::uint32_t j) const;
  Subset with(std::uint32_t j) const;
  /// Largest member, 0 for the empty set.
  std::uint32_t max() const { return members_.empty() ? 0 : members_.back(); }
  const std::vector<std::uint32_t>& members() const { return members_; }
  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }

  friend auto operator<=>(const Subset&, const Subset&) = default;
  friend bool operator==(const Subset&, const Subset&) = default;

 private:
  std::vector<std::uint32_t> members_;
};

enum class OutputConvention { PlusMinusOne, ZeroOne };

/// Sparse map S -> f_hat(S); absent keys are zero.
class FourierSpectrum {
 public:
  static constexpr double kDropThreshold = 1e-12;

  FourierSpectrum() = default;
  explicit FourierSpectrum(int n) : n_(n) {}

  int n() const { return n_; }
  double coeff(const Subset& s) const;
  void set(const Subset& s, double value);
  void add(const Subset& s, double value) { coeffs_[s] += value; }
  /// Removes entries with |coeff| < kDropThreshold.
  void prune();

  std::size_t size() const { return coeffs_.size(); }
  auto begin() const { return coeffs_.begin(); }
  auto end() const { return coeffs_.end(); }

  double sum_squares() const;
  /// Largest level carrying a coefficient, -1 if empty.
  int degree() const;

 private:
  int n_ = 0;
  std::map<Subset, double> coeffs_;
};

inline constexpr int kMaxTruthTableVars = 24;

/// Walsh-Hadamard transform of a truth table indexed as in input_of_index.
FourierSpectrum fourier_from_truth_table(std::span<const double> values, int n);

/// L_{1,ell}: sum of |f_hat(S)| over |S| = ell.
double l1_level(const FourierSpectrum& spec, int ell);

double evaluate_multilinear(const FourierSpectrum& spec, const BitVector& x);

/// Rewrites a spectrum between output conventions using f = 1 - 2 f'.
FourierSpectrum convert(const FourierSpectrum& spec, OutputConvention from,
                        OutputConvention to);

/// Pointwise-weighted sum of spectra, e.g. a randomized tree's expansion.
FourierSpectrum convex_combination(std::span<const double> weights,
                                   std::span<const FourierSpectrum> spectra);

// Truth tables: raw bytes hold one 0/1 value per input; CSV holds ±1 values.
std::vector<double> truth_table_from_bytes(std::span<const std::uint8_t> bytes, int n);
std::vector<std::uint8_t> truth_table_to_bytes(std::span<const double> values);
std::vector<double> truth_table_from_csv(std::string_view text, int n);
std::string truth_table_to_csv(std::span<const double> values);

/// {"n": n, "coeffs": [{"S": [0-based indices], "coeff": value}, ...]}
nlohmann::json spectrum_to_json(const FourierSpectrum& spec);
FourierSpectrum spectrum_from_json(const nlohmann::json& j);

}  // namespace rorlab::boolfn
