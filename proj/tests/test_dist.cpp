#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "rorlab/dist.hpp"
#include "rorlab/ortho.hpp"
#include "rorlab/rng.hpp"
#include "rorlab/rorrelation.hpp"
#include "rorlab/stats.hpp"

using namespace rorlab;
using namespace rorlab::dist;
using ortho::identity;
using ortho::sample_haar;

namespace {

double arcsine_law(double rho) { return 2 / std::numbers::pi * std::asin(rho); }

}  // namespace

TEST_CASE("G_k construction") {
  auto u = sample_haar(16, 1);
  for (int k = 2; k <= 5; ++k) {
    auto s = sample_Gk(u, k, 10 + k);
    CHECK(s.k() == k);
    CHECK(s.X.size() == static_cast<std::size_t>(k - 1));
    CHECK(gk_construction_defect(u, s) <= 1e-12);
    // independent recomputation
    Eigen::VectorXd y = u.matrix().transpose() * s.X[0];
    CHECK((s.Z[0] - s.X[0]).norm() == 0.0);
    CHECK((s.Y[0] - y).norm() <= 1e-12);
    CHECK((s.Z[static_cast<std::size_t>(k - 1)] - s.Y[static_cast<std::size_t>(k - 2)]).norm() == 0.0);
  }
  auto a = sample_Gk(u, 3, 5), b = sample_Gk(u, 3, 5);
  CHECK(a.Z[2] == b.Z[2]);

  auto id = identity(8);
  auto s = sample_Gk(id, 3, 2);
  CHECK((s.Z[1] - s.X[0].cwiseProduct(s.X[1])).norm() == 0.0);

  s.Z[1](3) += 1.0;
  CHECK(gk_construction_defect(id, s) >= 1.0);
  CHECK_THROWS(sample_Gk(id, 1, 0));
}

TEST_CASE("first coordinate of G_k is standard normal") {
  auto u = sample_haar(4, 2);
  std::vector<double> xs;
  for (std::uint64_t seed = 0; seed < 100000; ++seed) xs.push_back(sample_Gk(u, 2, seed).Z[0](0));
  CHECK(ks_pvalue(ks_statistic(xs, normal_cdf), xs.size()) > 0.01);
}

TEST_CASE("D_{U,k} samples are signs of G_k") {
  auto u = sample_haar(16, 3);
  for (int k = 2; k <= 4; ++k) {
    auto g = sample_Gk(u, k, 77);
    auto v = sample_DUk_vectors(u, k, 77);
    auto s = signs_of(g);
    CHECK(v == s);
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < 16; ++i) {
        double zij = g.Z[static_cast<std::size_t>(j)](i);
        REQUIRE(v[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] == (zij >= 0 ? 1 : -1));
      }
  }
  GkSample zero;
  zero.Z.push_back(Eigen::VectorXd::Zero(2));
  CHECK(signs_of(zero)[0] == BitVector::ones(2));

  auto handle = std::make_shared<const OrthogonalMatrix>(u);
  auto inst = sample_DUk(handle, 3, 77);
  CHECK(inst.vectors() == sample_DUk_vectors(u, 3, 77));
}

TEST_CASE("lazy sampler agrees with the eager one") {
  auto u = sample_haar(32, 4);
  for (int k = 2; k <= 5; ++k) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto eager = sample_DUk_vectors(u, k, seed);
      LazyDUk lazy(u, k, seed);
      // read in a scrambled order
      for (std::uint32_t t = 0; t < static_cast<std::uint32_t>(k * 32); ++t) {
        std::uint32_t v = (t * 37) % static_cast<std::uint32_t>(k * 32) + 1;
        int block = static_cast<int>((v - 1) / 32);
        int i = static_cast<int>((v - 1) % 32);
        REQUIRE(lazy.value(v) == eager[static_cast<std::size_t>(block)][static_cast<std::size_t>(i)]);
      }
      LazyDUk flipped(u, k, seed, {2});
      CHECK(flipped.value(33) == -eager[1][0]);
      CHECK(flipped.value(1) == eager[0][0]);
      CHECK_THROWS(lazy.value(0));
      CHECK_THROWS(lazy.value(static_cast<std::uint32_t>(k * 32 + 1)));
    }
  }
  CHECK_THROWS(LazyDUk(u, 3, 0, {4}));
}

TEST_CASE("marginals are uniform") {
  const int n = 16, samples = 20000;
  auto u = sample_haar(n, 5);
  int plus_d = 0, plus_u = 0;
  for (int s = 0; s < samples; ++s) {
    plus_d += sample_DUk_vectors(u, 3, s)[1][4] > 0;
    plus_u += sample_uniform_vectors(3, n, s)[2][7] > 0;
  }
  double sigma = std::sqrt(0.25 / samples);
  CHECK(std::abs(static_cast<double>(plus_d) / samples - 0.5) <= 3 * sigma);
  CHECK(std::abs(static_cast<double>(plus_u) / samples - 0.5) <= 3 * sigma);
}

TEST_CASE("D_{U,k} mean of phi matches the exact formula") {
  const int n = 16, samples = 50000;
  auto u = sample_haar(n, 6);
  for (int k : {2, 3}) {
    RunningStats s;
    for (int t = 0; t < samples; ++t) s.add(rorrelation::phi(u, sample_DUk_vectors(u, k, 1000000 + t)));
    CHECK(std::abs(s.mean() - rorrelation::exact_expected_phi(u, k)) <= 4 * s.stderr_mean());
  }
}

TEST_CASE("block layout") {
  Subset g{1, 5, 8, 9, 12};
  auto parts = split_blocks(g, 3, 4);
  REQUIRE(parts.size() == 3);
  CHECK(parts[0] == Subset{1});
  CHECK(parts[1] == Subset{1, 4});
  CHECK(parts[2] == Subset{1, 4});
  CHECK(join_blocks(parts, 4) == g);
  CHECK_THROWS(split_blocks(Subset{13}, 3, 4));
}

TEST_CASE("sign correlation") {
  CHECK(sign_correlation(0.0) == 0.0);
  CHECK(sign_correlation(1.0) == 1.0);
  CHECK(sign_correlation(-1.0) == -1.0);
  CHECK(sign_correlation(0.5) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  for (double rho = -0.9; rho <= 0.9 + 1e-9; rho += 0.1) {
    CHECK(sign_correlation(rho) == doctest::Approx(arcsine_law(rho)).epsilon(1e-14));
    CHECK(rho * sign_correlation(rho) >= 2 / std::numbers::pi * rho * rho - 1e-12);
  }
  for (double rho : {0.0, 0.3, -0.7, 0.95}) {
    auto m = sign_correlation_mc(rho, 200000, 3);
    CHECK_FALSE(m.exact);
    CHECK(std::abs(m.value - sign_correlation(rho)) <= 4 * m.std_error + 1e-12);
  }
  CHECK_THROWS(sign_correlation_mc(0.2, 0, 1));
  CHECK_THROWS(sign_correlation_mc(1.5, 10, 1));
}

TEST_CASE("1x1 links") {
  ortho::Matrix m(2, 2);
  const double c = 0.5, s = std::sqrt(0.75);
  m << c, -s, s, c;
  OrthogonalMatrix rot(m, 0);
  auto e = u_tilde_exact_1x1(rot, 1, 1);
  CHECK(e.exact);
  CHECK(e.std_error == 0.0);
  CHECK(e.value == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(u_tilde_exact_1x1(identity(3), 1, 1).value == 1.0);
  CHECK(u_tilde_exact_1x1(identity(3), 1, 2).value == 0.0);
  CHECK_THROWS(u_tilde_exact_1x1(identity(3), 4, 1));
  CHECK_THROWS(u_tilde_exact_1x1(identity(3), 0, 1));

  auto u = sample_haar(8, 9);
  for (std::uint32_t i = 1; i <= 3; ++i) {
    auto mc = u_tilde_mc(u, {i}, {i + 1}, 50000, i);
    auto ex = u_tilde_exact_1x1(u, i, i + 1);
    CHECK(std::abs(mc.value - ex.value) <= 4 * mc.std_error);
  }
}

TEST_CASE("antithetic pairing zeroes odd links exactly") {
  auto u = sample_haar(16, 10);
  Rng r(1);
  for (int t = 0; t < 200; ++t) {
    Subset s, tt;
    int a = static_cast<int>(r.below(4)), b = static_cast<int>(r.below(4));
    if ((a + b) % 2 == 0) ++b;
    for (int i = 0; i < a; ++i) s = s.with(static_cast<std::uint32_t>(1 + (7 * i + t) % 16));
    for (int i = 0; i < b; ++i) tt = tt.with(static_cast<std::uint32_t>(1 + (5 * i + 3 * t) % 16));
    if ((s.size() + tt.size()) % 2 == 0) continue;
    auto m = u_tilde_mc(u, s, tt, 100, t);
    REQUIRE(m.value == 0.0);
    REQUIRE(m.std_error == 0.0);
  }
  CHECK(u_tilde_mc(identity(4), {1, 2}, {1, 2}, 1000, 0).value == 1.0);
  CHECK_THROWS(u_tilde_mc(u, {1}, {2}, 0, 0));
}

TEST_CASE("D-hat products") {
  auto u = sample_haar(16, 11);
  // fewer than k elements: some adjacent pair is odd or one-sided
  Rng r(2);
  for (int k = 2; k <= 5; ++k) {
    for (int t = 0; t < 100; ++t) {
      int size = 1 + static_cast<int>(r.below(static_cast<std::uint64_t>(k - 1)));
      Subset g;
      while (static_cast<int>(g.size()) < size) {
        g = g.with(static_cast<std::uint32_t>(1 + r.below(static_cast<std::uint64_t>(16 * k))));
      }
      auto parts = split_blocks(g, k, 16);
      auto m = d_hat_product(u, parts, MomentMethod::MonteCarlo, 50, t);
      REQUIRE(m.value == 0.0);
      REQUIRE(m.exact);
    }
  }
  // all-even parities with an empty block next to a non-empty one
  std::vector<Subset> one_sided{{1, 2}, {}, {}};
  CHECK(d_hat_product(u, one_sided, MomentMethod::MonteCarlo, 1000, 1).value == 0.0);

  std::vector<Subset> empty{{}, {}};
  CHECK(d_hat_product(u, empty, MomentMethod::MonteCarlo, 10, 1).value == 1.0);

  std::vector<Subset> link{{3}, {5}};
  auto ex = d_hat_product(u, link, MomentMethod::ExactWhen1x1, 10, 1);
  CHECK(ex.exact);
  CHECK(ex.value == u_tilde_exact_1x1(u, 3, 5).value);

  std::vector<Subset> bad{{17}, {1}};
  CHECK_THROWS(d_hat_product(u, bad, MomentMethod::MonteCarlo, 10, 1));
  std::vector<Subset> single{{1}};
  CHECK_THROWS(d_hat_product(u, single, MomentMethod::MonteCarlo, 10, 1));
}

TEST_CASE("singleton products match direct sampling") {
  const int n = 16, samples = 100000;
  auto u = sample_haar(n, 12);
  SUBCASE("k = 2") {
    std::vector<Subset> parts{{2}, {7}};
    auto ex = d_hat_product(u, parts, MomentMethod::ExactWhen1x1, 0, 0);
    RunningStats s;
    for (int t = 0; t < samples; ++t) {
      auto z = sample_DUk_vectors(u, 2, 500000 + t);
      s.add(z[0][1] * z[1][6]);
    }
    CHECK(std::abs(s.mean() - ex.value) <= 4 * s.stderr_mean());
  }
  SUBCASE("k = 3") {
    // pick a strongly correlated chain so the product is visibly non-zero
    std::vector<Subset> parts{{1}, {1}, {1}};
    auto ex = d_hat_product(u, parts, MomentMethod::ExactWhen1x1, 0, 0);
    CHECK(ex.value == doctest::Approx(arcsine_law(u(0, 0)) * arcsine_law(u(0, 0))).epsilon(1e-14));
    RunningStats s;
    for (int t = 0; t < samples; ++t) {
      LazyDUk lazy(u, 3, 900000 + t);
      s.add(lazy.value(1) * lazy.value(17) * lazy.value(33));
    }
    CHECK(std::abs(s.mean() - ex.value) <= 4 * s.stderr_mean());
  }
}

TEST_CASE("moment bound") {
  CHECK(moment_bound(2, 2, 256) == doctest::Approx(std::sqrt(100 * 2 * std::log(256.0) / 256)));
  CHECK(moment_bound(3, 3, 1024, 1.0) ==
        doctest::Approx(std::pow(3 * std::log(1024.0) / 1024, 3 * (2.0 / 3) / 2)));
}

TEST_CASE("audit flags the identity") {
  const int n = 2048;
  auto id = identity(n);
  std::vector<Subset> sets{join_blocks(std::vector<Subset>{{1}, {1}}, n)};
  auto rep = moment_bound_audit_sets(id, 2, sets, 1);
  REQUIRE(rep.entries.size() == 1);
  CHECK(rep.entries[0].estimate.value == 1.0);
  CHECK(rep.failures() == 1);
  CHECK(rep.worst_margin() < 0.0);
  CHECK(rep.worst_ratio() > 1.0);
}

TEST_CASE("audit passes on a Haar matrix") {
  auto u = sample_haar(128, 13);
  for (int k : {2, 3}) {
    auto rep = moment_bound_audit(u, k, 40, 6, 5, 500);
    CHECK(rep.entries.size() == 40);
    CHECK(rep.failures() == 0);
    for (const auto& e : rep.entries) {
      CHECK(e.set.size() >= static_cast<std::size_t>(k));
      CHECK(e.set.size() <= 6);
    }
    auto j = rep.to_json();
    CHECK(j["entries"].size() == 40);
    CHECK(j["entries"][0].contains("stderr"));
  }
  CHECK_THROWS(moment_bound_audit(u, 3, 10, 2, 1));
}

TEST_CASE("chain gap is never negative") {
  Rng r(14);
  for (int t = 0; t < 100000; ++t) {
    int k = 2 + static_cast<int>(r.below(6));
    std::vector<double> a(static_cast<std::size_t>(k));
    for (auto& x : a) x = r.uniform() * 10;
    REQUIRE(max_chain_gap(a) >= -1e-12);
  }
  std::vector<double> flat{2.0, 2.0, 2.0};
  CHECK(max_chain_gap(flat) == doctest::Approx(0.0).scale(1.0));
  CHECK_THROWS(max_chain_gap(std::vector<double>{1.0}));
}

TEST_CASE("uniform sampler") {
  auto a = sample_uniform_vectors(3, 10, 4), b = sample_uniform_vectors(3, 10, 4);
  CHECK(a == b);
  CHECK(a != sample_uniform_vectors(3, 10, 5));
  CHECK_THROWS(sample_uniform_vectors(3, 0, 1));
}
