#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rorlab/boolfn.hpp"
#include "rorlab/rng.hpp"

using namespace rorlab;
using namespace rorlab::boolfn;

namespace {

std::vector<double> random_pm1_table(int n, std::uint64_t seed) {
  Rng r(seed);
  std::vector<double> v(std::size_t{1} << n);
  for (auto& x : v) x = r.sign();
  return v;
}

// Brute-force O(4^n) expansion: f_hat(S) = 2^-n sum_x f(x) prod_{i in S} x_i.
std::vector<double> brute_fourier(const std::vector<double>& values, int n) {
  std::size_t size = std::size_t{1} << n;
  std::vector<double> out(size, 0.0);
  for (std::size_t mask = 0; mask < size; ++mask) {
    double acc = 0.0;
    for (std::size_t t = 0; t < size; ++t) {
      BitVector x = input_of_index(t, n);
      double chi = 1.0;
      for (int i = 0; i < n; ++i) {
        if (mask >> i & 1) chi *= x[static_cast<std::size_t>(i)];
      }
      acc += values[t] * chi;
    }
    out[mask] = acc / static_cast<double>(size);
  }
  return out;
}

std::vector<double> majority_table(int d) {
  std::vector<double> v(std::size_t{1} << d);
  for (std::size_t t = 0; t < v.size(); ++t) {
    auto x = input_of_index(t, d);
    int s = 0;
    for (int i = 0; i < d; ++i) s += x[static_cast<std::size_t>(i)];
    v[t] = s > 0 ? 1.0 : -1.0;
  }
  return v;
}

}  // namespace

TEST_CASE("bit vectors and subsets validate") {
  CHECK_THROWS_AS(BitVector(std::vector<std::int8_t>{}), std::invalid_argument);
  CHECK_THROWS_AS(BitVector(std::vector<std::int8_t>{1, 0}), std::invalid_argument);
  BitVector x({1, -1, 1});
  CHECK(x.var(2) == -1);
  CHECK(x[0] == 1);
  x.flip(1);
  CHECK(x == BitVector::ones(3));

  CHECK_THROWS_AS(Subset({0u}), std::invalid_argument);
  CHECK_THROWS_AS(Subset({2u, 2u}), std::invalid_argument);
  Subset s{3, 1};
  CHECK(s.members() == std::vector<std::uint32_t>{1, 3});
  CHECK(s.contains(3));
  CHECK(s.max() == 3);
  CHECK(s.with(2) == Subset{1, 2, 3});
  CHECK(s.without(1) == Subset{3});
  CHECK(Subset::from_mask(0b101) == s);
  CHECK(Subset().max() == 0);
}

TEST_CASE("input indexing") {
  auto x = input_of_index(0b10, 2);
  CHECK(x.var(1) == 1);
  CHECK(x.var(2) == -1);
}

TEST_CASE("transform examples") {
  std::vector<double> one(4, 1.0);
  auto c = fourier_from_truth_table(one, 2);
  CHECK(c.size() == 1);
  CHECK(c.coeff({}) == 1.0);

  auto dict = fourier_from_truth_table(std::vector<double>{1, -1}, 1);
  CHECK(dict.size() == 1);
  CHECK(dict.coeff({1}) == 1.0);

  auto affine = fourier_from_truth_table(std::vector<double>{1, 0}, 1);
  CHECK(affine.coeff({}) == 0.5);
  CHECK(affine.coeff({1}) == 0.5);

  CHECK_THROWS_AS(fourier_from_truth_table(std::vector<double>(3, 1.0), 2), std::invalid_argument);
  CHECK_THROWS_AS(fourier_from_truth_table(std::vector<double>(1, 1.0), 25), std::invalid_argument);
}

TEST_CASE("fast transform matches the brute-force expansion") {
  for (int n = 1; n <= 8; ++n) {
    auto table = random_pm1_table(n, 100 + n);
    auto fast = fourier_from_truth_table(table, n);
    auto slow = brute_fourier(table, n);
    for (std::size_t mask = 0; mask < slow.size(); ++mask) {
      REQUIRE(std::abs(fast.coeff(Subset::from_mask(mask)) - slow[mask]) <= 1e-12);
    }
  }
}

TEST_CASE("Parseval and round trip on random functions") {
  for (int n = 1; n <= 10; ++n) {
    for (int rep = 0; rep < 3; ++rep) {
      auto table = random_pm1_table(n, 1000 * n + rep);
      auto spec = fourier_from_truth_table(table, n);
      CHECK(std::abs(spec.sum_squares() - 1.0) <= 1e-9);
      for (std::size_t t = 0; t < table.size(); ++t) {
        REQUIRE(std::abs(evaluate_multilinear(spec, input_of_index(t, n)) - table[t]) <= 1e-9);
      }
    }
  }
}

TEST_CASE("0/1 Parseval: sum of squares equals the mean") {
  auto table = random_pm1_table(7, 5);
  for (auto& v : table) v = (1 - v) / 2;
  auto spec = fourier_from_truth_table(table, 7);
  CHECK(std::abs(spec.sum_squares() - spec.coeff({})) <= 1e-9);
}

TEST_CASE("level sums") {
  auto parity = fourier_from_truth_table(std::vector<double>{1, -1, -1, 1}, 2);
  CHECK(l1_level(parity, 2) == 1.0);
  CHECK(l1_level(parity, 1) == 0.0);
  CHECK_THROWS_AS(l1_level(parity, 3), std::invalid_argument);
  CHECK_THROWS_AS(l1_level(parity, -1), std::invalid_argument);

  auto maj3 = fourier_from_truth_table(majority_table(3), 3);
  CHECK(l1_level(maj3, 1) == 1.5);
  CHECK(evaluate_multilinear(maj3, BitVector({1, 1, -1})) == doctest::Approx(1.0));

  auto maj5 = fourier_from_truth_table(majority_table(5), 5);
  CHECK(l1_level(maj5, 1) == 15.0 / 8.0);
}

TEST_CASE("multilinear evaluation") {
  FourierSpectrum one(1);
  one.set({}, 1.0);
  CHECK(evaluate_multilinear(one, BitVector({-1})) == 1.0);
  FourierSpectrum dict(1);
  dict.set({1}, 1.0);
  CHECK(evaluate_multilinear(dict, BitVector({-1})) == -1.0);
  CHECK_THROWS_AS(evaluate_multilinear(dict, BitVector({1, 1})), std::invalid_argument);
}

TEST_CASE("convention conversion halves non-empty levels") {
  for (int n = 2; n <= 8; ++n) {
    auto pm = fourier_from_truth_table(random_pm1_table(n, 77 + n), n);
    auto zo = convert(pm, OutputConvention::PlusMinusOne, OutputConvention::ZeroOne);
    CHECK(zo.coeff({}) == doctest::Approx((1 - pm.coeff({})) / 2));
    for (int ell = 1; ell <= n; ++ell) {
      CHECK(l1_level(zo, ell) * 2 == doctest::Approx(l1_level(pm, ell)).epsilon(1e-12));
    }
    auto back = convert(zo, OutputConvention::ZeroOne, OutputConvention::PlusMinusOne);
    for (const auto& [s, c] : pm) CHECK(back.coeff(s) == doctest::Approx(c).epsilon(1e-12));
  }
}

TEST_CASE("convex combination") {
  FourierSpectrum a(1), b(1);
  a.set({}, 1.0);
  b.set({1}, 1.0);
  std::vector<double> w{0.25, 0.75};
  std::vector<FourierSpectrum> specs{a, b};
  auto mix = convex_combination(w, specs);
  CHECK(mix.coeff({}) == 0.25);
  CHECK(mix.coeff({1}) == 0.75);
}

TEST_CASE("prune drops float dust only") {
  FourierSpectrum s(3);
  s.set({1}, 1e-13);
  s.set({2}, 0.5);
  s.prune();
  CHECK(s.size() == 1);
  CHECK(s.degree() == 1);
  CHECK(FourierSpectrum(2).degree() == -1);
}

TEST_CASE("truth table files") {
  std::vector<double> pm{1, -1, -1, 1};
  CHECK(truth_table_to_csv(pm) == "1,-1,-1,1\n");
  CHECK(truth_table_from_csv("1, -1,\n-1,+1", 2) == pm);
  CHECK_THROWS_AS(truth_table_from_csv("1,0,1,1", 2), std::invalid_argument);
  CHECK_THROWS_AS(truth_table_from_csv("1,1,1", 2), std::invalid_argument);
  CHECK_THROWS_AS(truth_table_to_csv(std::vector<double>{0.5}), std::invalid_argument);

  std::vector<double> zo{0, 1, 1, 0};
  auto bytes = truth_table_to_bytes(zo);
  CHECK(bytes == std::vector<std::uint8_t>{0, 1, 1, 0});
  CHECK(truth_table_from_bytes(bytes, 2) == zo);
  CHECK_THROWS_AS(truth_table_from_bytes(std::vector<std::uint8_t>{0, 2, 1, 0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(truth_table_from_bytes(std::vector<std::uint8_t>{0, 1}, 2), std::invalid_argument);
}

TEST_CASE("spectrum JSON uses 0-based indices") {
  auto spec = fourier_from_truth_table(majority_table(3), 3);
  auto j = spectrum_to_json(spec);
  CHECK(j["n"] == 3);
  bool saw = false;
  for (const auto& e : j["coeffs"]) {
    if (e["S"] == nlohmann::json::array({0})) {
      saw = true;
      CHECK(e["coeff"] == 0.5);
    }
  }
  CHECK(saw);
  auto back = spectrum_from_json(j);
  CHECK(back.n() == 3);
  for (const auto& [s, c] : spec) CHECK(back.coeff(s) == c);

  j["coeffs"][0]["S"] = {3};
  CHECK_THROWS(spectrum_from_json(j));
}
