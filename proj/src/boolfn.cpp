#include "rorlab/boolfn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rorlab::boolfn {

BitVector::BitVector(std::vector<std::int8_t> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("BitVector: length must be >= 1");
  for (auto e : entries_) {
    if (e != 1 && e != -1) throw std::invalid_argument("BitVector: entries must be -1 or +1");
  }
}

BitVector BitVector::ones(std::size_t n) {
  return BitVector(std::vector<std::int8_t>(n, 1));
}

BitVector input_of_index(std::uint64_t t, int n) {
  std::vector<std::int8_t> e(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) e[i] = ((t >> i) & 1U) ? -1 : 1;
  return BitVector(std::move(e));
}

Subset::Subset(std::initializer_list<std::uint32_t> members)
    : Subset(std::vector<std::uint32_t>(members)) {}

Subset::Subset(std::vector<std::uint32_t> members) : members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  if (!members_.empty() && members_.front() == 0) {
    throw std::invalid_argument("Subset: indices are 1-based");
  }
  if (std::adjacent_find(members_.begin(), members_.end()) != members_.end()) {
    throw std::invalid_argument("Subset: duplicate index");
  }
}

Subset Subset::from_mask(std::uint64_t mask) {
  Subset s;
  while (mask) {
    s.members_.push_back(static_cast<std::uint32_t>(std::countr_zero(mask)) + 1);
    mask &= mask - 1;
  }
  return s;
}

bool Subset::contains(std::uint32_t j) const {
  return std::binary_search(members_.begin(), members_.end(), j);
}

Subset Subset::without(std::uint32_t j) const {
  Subset s;
  s.members_.reserve(members_.size());
  for (auto m : members_) {
    if (m != j) s.members_.push_back(m);
  }
  return s;
}

Subset Subset::with(std::uint32_t j) const {
  if (contains(j)) return *this;
  Subset s = *this;
  s.members_.insert(std::upper_bound(s.members_.begin(), s.members_.end(), j), j);
  return s;
}

double FourierSpectrum::coeff(const Subset& s) const {
  auto it = coeffs_.find(s);
  return it == coeffs_.end() ? 0.0 : it->second;
}

void FourierSpectrum::set(const Subset& s, double value) {
  if (std::abs(value) < kDropThreshold) {
    coeffs_.erase(s);
  } else {
    coeffs_[s] = value;
  }
}

void FourierSpectrum::prune() {
  std::erase_if(coeffs_, [](const auto& kv) { return std::abs(kv.second) < kDropThreshold; });
}

double FourierSpectrum::sum_squares() const {
  double s = 0.0;
  for (const auto& [_, c] : coeffs_) s += c * c;
  return s;
}

int FourierSpectrum::degree() const {
  int d = -1;
  for (const auto& [s, _] : coeffs_) d = std::max(d, static_cast<int>(s.size()));
  return d;
}

FourierSpectrum fourier_from_truth_table(std::span<const double> values, int n) {
  if (n < 0 || n > kMaxTruthTableVars) {
    throw std::invalid_argument("fourier_from_truth_table: n out of range [0, 24]");
  }
  const std::size_t size = std::size_t{1} << n;
  if (values.size() != size) {
    throw std::invalid_argument("fourier_from_truth_table: expected 2^n values");
  }
  std::vector<double> a(values.begin(), values.end());
  for (std::size_t h = 1; h < size; h <<= 1) {
    for (std::size_t i = 0; i < size; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double u = a[j];
        const double v = a[j + h];
        a[j] = u + v;
        a[j + h] = u - v;
      }
    }
  }
  const double scale = std::ldexp(1.0, -n);
  FourierSpectrum spec(n);
  for (std::size_t t = 0; t < size; ++t) spec.set(Subset::from_mask(t), a[t] * scale);
  return spec;
}

double l1_level(const FourierSpectrum& spec, int ell) {
  if (ell < 0 || ell > spec.n()) throw std::invalid_argument("l1_level: ell out of range");
  double s = 0.0;
  for (const auto& [set, c] : spec) {
    if (static_cast<int>(set.size()) == ell) s += std::abs(c);
  }
  return s;
}

double evaluate_multilinear(const FourierSpectrum& spec, const BitVector& x) {
  if (static_cast<int>(x.size()) != spec.n()) {
    throw std::invalid_argument("evaluate_multilinear: dimension mismatch");
  }
  double total = 0.0;
  for (const auto& [set, c] : spec) {
    int sign = 1;
    for (auto j : set) sign *= x.var(j);
    total += sign * c;
  }
  return total;
}

FourierSpectrum convert(const FourierSpectrum& spec, OutputConvention from,
                        OutputConvention to) {
  if (from == to) return spec;
  FourierSpectrum out(spec.n());
  if (from == OutputConvention::ZeroOne) {
    // f = 1 - 2 f'
    out.set(Subset{}, 1.0 - 2.0 * spec.coeff(Subset{}));
    for (const auto& [s, c] : spec) {
      if (!s.empty()) out.set(s, -2.0 * c);
    }
  } else {
    // f' = (1 - f) / 2
    out.set(Subset{}, 0.5 * (1.0 - spec.coeff(Subset{})));
    for (const auto& [s, c] : spec) {
      if (!s.empty()) out.set(s, -0.5 * c);
    }
  }
  return out;
}

FourierSpectrum convex_combination(std::span<const double> weights,
                                   std::span<const FourierSpectrum> spectra) {
  if (weights.size() != spectra.size() || spectra.empty()) {
    throw std::invalid_argument("convex_combination: size mismatch");
  }
  FourierSpectrum out(spectra.front().n());
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    if (spectra[i].n() != out.n()) throw std::invalid_argument("convex_combination: n mismatch");
    for (const auto& [s, c] : spectra[i]) out.add(s, weights[i] * c);
  }
  out.prune();
  return out;
}

std::vector<double> truth_table_from_bytes(std::span<const std::uint8_t> bytes, int n) {
  if (n < 0 || n > kMaxTruthTableVars) throw std::invalid_argument("truth table: n out of range");
  if (bytes.size() != (std::size_t{1} << n)) {
    throw std::invalid_argument("truth table: expected 2^n bytes");
  }
  std::vector<double> v;
  v.reserve(bytes.size());
  for (auto b : bytes) {
    if (b > 1) throw std::invalid_argument("truth table: bytes must be 0 or 1");
    v.push_back(b);
  }
  return v;
}

std::vector<std::uint8_t> truth_table_to_bytes(std::span<const double> values) {
  std::vector<std::uint8_t> out;
  out.reserve(values.size());
  for (double v : values) {
    if (v != 0.0 && v != 1.0) throw std::invalid_argument("truth table: values must be 0 or 1");
    out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::vector<double> truth_table_from_csv(std::string_view text, int n) {
  std::vector<double> v;
  std::string cell;
  std::istringstream in{std::string(text)};
  while (std::getline(in, cell, ',')) {
    std::erase_if(cell, [](char c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t'; });
    if (cell.empty()) continue;
    if (cell == "1" || cell == "+1") {
      v.push_back(1.0);
    } else if (cell == "-1") {
      v.push_back(-1.0);
    } else {
      throw std::invalid_argument("truth table CSV: entries must be +1 or -1");
    }
  }
  if (n < 0 || n > kMaxTruthTableVars || v.size() != (std::size_t{1} << n)) {
    throw std::invalid_argument("truth table CSV: expected 2^n entries");
  }
  return v;
}

std::string truth_table_to_csv(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 1.0 && values[i] != -1.0) {
      throw std::invalid_argument("truth table CSV: values must be +1 or -1");
    }
    if (i) out += ',';
    out += values[i] > 0 ? "1" : "-1";
  }
  out += '\n';
  return out;
}

nlohmann::json spectrum_to_json(const FourierSpectrum& spec) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& [s, c] : spec) {
    std::vector<std::uint32_t> zero_based;
    for (auto j : s) zero_based.push_back(j - 1);
    coeffs.push_back({{"S", zero_based}, {"coeff", c}});
  }
  return {{"n", spec.n()}, {"coeffs", coeffs}};
}

FourierSpectrum spectrum_from_json(const nlohmann::json& j) {
  FourierSpectrum spec(j.at("n").get<int>());
  for (const auto& e : j.at("coeffs")) {
    std::vector<std::uint32_t> members;
    for (const auto& idx : e.at("S")) {
      const auto i = idx.get<std::uint32_t>();
      if (static_cast<int>(i) >= spec.n()) throw std::invalid_argument("spectrum JSON: index out of range");
      members.push_back(i + 1);
    }
    spec.set(Subset(std::move(members)), e.at("coeff").get<double>());
  }
  return spec;
}

}  // namespace rorlab::boolfn
