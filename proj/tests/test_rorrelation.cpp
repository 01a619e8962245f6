#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>
#include <numbers>
#include <vector>

#include "rorlab/ortho.hpp"
#include "rorlab/rng.hpp"
#include "rorlab/rorrelation.hpp"
#include "rorlab/stats.hpp"

using namespace rorlab;
using namespace rorlab::rorrelation;
using ortho::identity;
using ortho::sample_haar;

namespace {

std::vector<BitVector> random_vectors(int k, int n, Rng& r) {
  std::vector<BitVector> out;
  for (int j = 0; j < k; ++j) {
    std::vector<std::int8_t> e(static_cast<std::size_t>(n));
    for (auto& v : e) v = static_cast<std::int8_t>(r.sign());
    out.emplace_back(e);
  }
  return out;
}

using Real = std::vector<std::vector<double>>;

// O(N^k) sum over index chains i_1..i_k of
// z1[i1] U[i1,i2] z2[i2] U[i2,i3] ... zk[ik], divided by N.
double chain_sum(const OrthogonalMatrix& u, const Real& z, std::size_t level, int prev, double acc) {
  const int n = u.n();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double w = acc * z[level][static_cast<std::size_t>(i)];
    if (level > 0) w *= u(prev, i);
    if (w == 0.0) continue;
    total += level + 1 == z.size() ? w : chain_sum(u, z, level + 1, i, w);
  }
  return total;
}

double brute_phi(const OrthogonalMatrix& u, const Real& z) { return chain_sum(u, z, 0, 0, 1.0) / u.n(); }

Real to_real(const std::vector<BitVector>& z) {
  Real out;
  for (const auto& v : z) {
    std::vector<double> row;
    for (std::size_t i = 0; i < v.size(); ++i) row.push_back(v[i]);
    out.push_back(row);
  }
  return out;
}

std::filesystem::path temp_dir() {
  auto d = std::filesystem::temp_directory_path() / "rorlab_rorrelation_test";
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("trivial values") {
  auto id = identity(8);
  for (int k = 2; k <= 5; ++k) {
    std::vector<BitVector> ones(static_cast<std::size_t>(k), BitVector::ones(8));
    CHECK(phi(id, ones) == 1.0);
    CHECK(classify(id, ones).tag == Tag::Yes);
  }
  Rng r(1);
  auto z = random_vectors(1, 8, r);
  auto neg = z[0];
  for (std::size_t i = 0; i < 8; ++i) neg.flip(i);
  std::vector<BitVector> pair{z[0], neg};
  CHECK(phi(id, pair) == -1.0);
}

TEST_CASE("phi matches the brute-force chain sum") {
  Rng r(2);
  for (int n : {4, 8}) {
    auto u = sample_haar(n, 31 + n);
    for (int k = 2; k <= 4; ++k) {
      for (int rep = 0; rep < 5; ++rep) {
        auto z = random_vectors(k, n, r);
        REQUIRE(std::abs(phi(u, z) - brute_phi(u, to_real(z))) <= 1e-9);
      }
    }
  }
  auto u16 = sample_haar(16, 5);
  auto z = random_vectors(3, 16, r);
  CHECK(std::abs(phi(u16, z) - brute_phi(u16, to_real(z))) <= 1e-9);
}

TEST_CASE("phi is bounded by 1") {
  Rng r(3);
  for (int n : {8, 32}) {
    auto u = sample_haar(n, 70 + n);
    for (int k = 2; k <= 5; ++k) {
      for (int rep = 0; rep < 2000; ++rep) REQUIRE(std::abs(phi(u, random_vectors(k, n, r))) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("phi is multilinear") {
  // flipping z^(j)_i changes phi by -2 z^(j)_i times the partial derivative,
  // which is phi with z^(j) replaced by the unit vector e_i
  Rng r(4);
  const int n = 8, k = 3;
  auto u = sample_haar(n, 12);
  auto z = random_vectors(k, n, r);
  double base = phi(u, z);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < n; ++i) {
      auto real = to_real(z);
      std::vector<double> e(n, 0.0);
      e[static_cast<std::size_t>(i)] = 1.0;
      real[static_cast<std::size_t>(j)] = e;
      double partial = brute_phi(u, real);
      auto flipped = z;
      flipped[static_cast<std::size_t>(j)].flip(static_cast<std::size_t>(i));
      int zi = z[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      REQUIRE(std::abs(phi(u, flipped) - base + 2 * zi * partial) <= 1e-12);
    }
  }
}

TEST_CASE("classification thresholds") {
  for (int k = 2; k <= 6; ++k) {
    double yes = std::ldexp(1.0, -k);
    CHECK(tag_of(yes, k) == Tag::Yes);
    CHECK(tag_of(1.0, k) == Tag::Yes);
    CHECK(tag_of(0.0, k) == Tag::No);
    CHECK(tag_of(yes / 2, k) == Tag::No);
    CHECK(tag_of(-yes / 2, k) == Tag::No);
    CHECK(tag_of(0.75 * yes, k) == Tag::Ambiguous);
    CHECK(tag_of(-yes, k) == Tag::Ambiguous);
  }
  CHECK(tag_name(Tag::Ambiguous) == "AMBIGUOUS");

  // phi = 0: z^(1) orthogonal to U D(z2) z3 with U = I
  auto id = identity(4);
  std::vector<BitVector> z{BitVector({1, 1, -1, -1}), BitVector({1, 1, 1, 1}), BitVector({1, -1, 1, -1})};
  auto lab = classify(id, z);
  CHECK(lab.phi == 0.0);
  CHECK(lab.tag == Tag::No);
}

TEST_CASE("instances validate") {
  auto u = std::make_shared<const OrthogonalMatrix>(sample_haar(8, 1));
  Rng r(5);
  CHECK_THROWS_AS(RorrelationInstance(random_vectors(1, 8, r), u), std::invalid_argument);
  CHECK_THROWS_AS(RorrelationInstance(random_vectors(3, 7, r), u), std::invalid_argument);
  CHECK_THROWS_AS(RorrelationInstance(random_vectors(3, 8, r), nullptr), std::invalid_argument);
  RorrelationInstance inst(random_vectors(3, 8, r), u);
  CHECK(inst.k() == 3);
  CHECK(inst.n() == 8);
  CHECK(phi(inst) == phi(*u, inst.vectors()));
  CHECK_THROWS(phi(*u, random_vectors(1, 8, r)));
}

TEST_CASE("expected phi") {
  for (int k = 2; k <= 5; ++k) CHECK(exact_expected_phi(identity(16), k) == doctest::Approx(1.0).epsilon(1e-15));
  for (int seed = 0; seed < 20; ++seed) {
    for (int n : {64, 128}) {
      auto u = sample_haar(n, 900 + seed);
      for (int k = 2; k <= 4; ++k) {
        double e = exact_expected_phi(u, k);
        REQUIRE(e >= std::pow(2 / std::numbers::pi, k - 1));
        REQUIRE(e <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("expected phi matches a direct sum for k = 2") {
  auto u = sample_haar(16, 3);
  double direct = 0.0;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) direct += u(i, j) * std::asin(u(i, j)) * 2 / std::numbers::pi;
  CHECK(exact_expected_phi(u, 2) == doctest::Approx(direct / 16).epsilon(1e-13));
}

TEST_CASE("uniform variance is 1/N") {
  CHECK(exact_uniform_variance(identity(32), 2) == doctest::Approx(1.0 / 32).epsilon(1e-15));
  for (int k : {2, 3, 4}) {
    auto u = sample_haar(64, 40 + k);
    CHECK(std::abs(exact_uniform_variance(u, k) - 1.0 / 64) <= 1e-9);
  }
}

TEST_CASE("uniform instances: mean 0, variance 1/N, mostly NO") {
  const int n = 64, k = 2, samples = 20000;
  auto u = sample_haar(n, 8);
  Rng r(6);
  RunningStats s, sq;
  int no = 0;
  for (int t = 0; t < samples; ++t) {
    double p = phi(u, random_vectors(k, n, r));
    s.add(p);
    sq.add(p * p * n);
    no += tag_of(p, k) == Tag::No;
  }
  CHECK(std::abs(s.mean()) <= 4 * std::sqrt(1.0 / (n * samples)));
  CHECK(std::abs(sq.mean() - 1.0) <= 4 * sq.stderr_mean());
  CHECK(no > samples / 2);
}

TEST_CASE("no-probability bound") {
  CHECK(uniform_no_probability_bound(2, 1024) == 0.9375);
  CHECK(uniform_no_probability_bound(2, 64) == 0.0);
  CHECK(uniform_no_probability_bound(3, 1 << 20) == 1.0 - 256.0 / (1 << 20));

  const int n = 1024, samples = 3000;
  auto u = sample_haar(n, 2);
  Rng r(7);
  int no = 0;
  for (int t = 0; t < samples; ++t) no += classify(u, random_vectors(2, n, r)).tag == Tag::No;
  double freq = static_cast<double>(no) / samples;
  double sigma = std::sqrt(0.9375 * 0.0625 / samples);
  CHECK(freq >= 0.9375 - 3 * sigma);
}

TEST_CASE("batch files") {
  auto dir = temp_dir();
  auto u = sample_haar(8, 21);
  ortho::save_matrix(dir / "u.bin", u);
  Rng r(8);
  InstanceBatch b;
  b.k = 3;
  b.n = 8;
  b.matrix_path = (dir / "u.bin").string();
  b.matrix_hash = u.hash();
  for (int i = 0; i < 5; ++i) b.instances.push_back(random_vectors(3, 8, r));
  save_batch(dir / "b.bin", b);

  auto back = load_batch(dir / "b.bin");
  CHECK(back.k == 3);
  CHECK(back.n == 8);
  CHECK(back.matrix_path == b.matrix_path);
  CHECK(back.matrix_hash == b.matrix_hash);
  REQUIRE(back.instances.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(back.instances[i] == b.instances[i]);

  auto bytes = encode_batch(b);
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "RORINST1");
  CHECK(bytes.back() == (b.instances.back().back()[7] > 0 ? 0x01 : 0xFF));

  auto handle = resolve_matrix(back);
  CHECK(handle->hash() == u.hash());

  auto wrong = back;
  wrong.matrix_hash ^= 1;
  CHECK_THROWS(resolve_matrix(wrong));
  ortho::save_matrix(dir / "other.bin", sample_haar(8, 22));
  CHECK_THROWS(resolve_matrix(back, dir / "other.bin"));

  auto bad = bytes;
  bad[bad.size() - 1] = 0x02;
  CHECK_THROWS(decode_batch(bad));
  bad = bytes;
  bad.pop_back();
  CHECK_THROWS(decode_batch(bad));

  auto j = label_to_json(4, InstanceLabel{Tag::Yes, 0.5});
  CHECK(j["index"] == 4);
  CHECK(j["label"] == "YES");
  CHECK(j["phi"] == 0.5);
  std::filesystem::remove_all(dir);
}
