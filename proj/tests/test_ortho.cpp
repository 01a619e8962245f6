#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "rorlab/binio.hpp"
#include "rorlab/ortho.hpp"
#include "rorlab/rng.hpp"
#include "rorlab/stats.hpp"

using namespace rorlab;
using namespace rorlab::ortho;

namespace {

// Largest eigenvalue of W^T W, independent of the SVD path.
double eigen_norm(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w.transpose() * w);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

Eigen::MatrixXd random_matrix(int r, int c, std::uint64_t seed) {
  Rng g(seed);
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = g.normal();
  return m;
}

std::filesystem::path temp_dir() {
  auto d = std::filesystem::temp_directory_path() / "rorlab_ortho_test";
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("Haar samples are orthogonal and reproducible") {
  for (int n : {1, 2, 8, 64, 200}) {
    auto u = sample_haar(n, 5);
    CHECK(orthogonality_defect(u.matrix()) < 1e-12);
    CHECK(u.n() == n);
  }
  auto a = sample_haar(32, 9), b = sample_haar(32, 9), c = sample_haar(32, 10);
  CHECK(a.matrix() == b.matrix());
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
  CHECK(a.seed() == 9);
}

TEST_CASE("first column shortcut matches the full sample") {
  for (int n : {4, 33, 128}) {
    auto u = sample_haar(n, 17);
    auto col = haar_first_column(n, 17);
    for (int i = 0; i < n; ++i) CHECK(std::abs(col(i) - u(i, 0)) < 1e-12);
  }
}

TEST_CASE("Haar entries have the right second moment") {
  // E[U_ij^2] = 1/N
  RunningStats s;
  for (int seed = 0; seed < 50; ++seed) {
    auto u = sample_haar(16, 300 + seed);
    for (int i = 0; i < 16; ++i) s.add(u(i, 3) * u(i, 3) * 16);
  }
  CHECK(std::abs(s.mean() - 1.0) < 4 * s.stderr_mean());
}

TEST_CASE("orthogonality is enforced") {
  Matrix m = Matrix::Identity(3, 3);
  m(0, 1) = 0.1;
  CHECK_THROWS_AS(OrthogonalMatrix(m, 0), std::invalid_argument);
  CHECK_THROWS_AS(OrthogonalMatrix(Matrix::Identity(2, 3), 0), std::invalid_argument);
  auto id = identity(5);
  CHECK(orthogonality_defect(id.matrix()) == 0.0);
}

TEST_CASE("spectral norm agrees with an eigenvalue oracle") {
  for (int t = 0; t < 20; ++t) {
    int r = 1 + t % 7, c = 1 + (t * 3) % 11;
    auto w = random_matrix(r, c, 40 + t);
    CHECK(spectral_norm(w) == doctest::Approx(eigen_norm(w)).epsilon(1e-10));
    CHECK(spectral_norm_power(w) == doctest::Approx(eigen_norm(w)).epsilon(1e-8));
  }
  auto big = random_matrix(40, 30, 7);
  CHECK(spectral_norm(big, 10) == doctest::Approx(spectral_norm(big)).epsilon(1e-8));
}

TEST_CASE("submatrix norms") {
  auto u = sample_haar(16, 3);
  CHECK(submatrix_norm(u, {2}, {5}) == doctest::Approx(std::abs(u(1, 4))));
  Subset all;
  for (std::uint32_t i = 1; i <= 16; ++i) all = all.with(i);
  CHECK(submatrix_norm(u, all, all) == doctest::Approx(1.0).epsilon(1e-12));
  auto w = submatrix(u, {1, 3}, {2});
  CHECK(w.rows() == 2);
  CHECK(w(1, 0) == u(2, 1));
  CHECK_THROWS(submatrix_norm(u, {}, {1}));
  CHECK_THROWS(submatrix_norm(u, {17}, {1}));
}

TEST_CASE("goodness bound formula") {
  CHECK(goodness_bound(1, 1, 64) == doctest::Approx(std::sqrt(200 * std::log(64.0) / 64)));
  CHECK(goodness_bound(3, 5, 100) == doctest::Approx(std::sqrt(800 * std::log(100.0) / 100)));
}

TEST_CASE("Haar matrices are good, the identity is not") {
  for (int n : {64, 128}) {
    auto rep = check_goodness(sample_haar(n, 11), 2000, 16, 1);
    CHECK(rep.good());
    CHECK(rep.worst_ratio < 1.0);
    CHECK(rep.checked_pairs >= static_cast<std::uint64_t>(n) * n);
  }
  auto rep = check_goodness(identity(2048), 200, 16, 1);
  CHECK_FALSE(rep.good());
  CHECK(rep.violation_count > 0);
  CHECK(rep.violations.size() <= GoodnessReport::kMaxListed);
  CHECK(rep.violations.front().norm == 1.0);
  CHECK(rep.to_json()["good"] == false);
}

TEST_CASE("goodness check is deterministic") {
  auto u = sample_haar(32, 2);
  auto a = check_goodness(u, 500, 8, 3).to_json();
  set_worker_override(1);
  auto b = check_goodness(u, 500, 8, 3).to_json();
  set_worker_override(0);
  CHECK(a == b);
}

TEST_CASE("Hadamard entries match the Sylvester construction") {
  const int log2n = 4, n = 16;
  Eigen::MatrixXd h(1, 1);
  h(0, 0) = 1.0;
  for (int s = 0; s < log2n; ++s) {
    Eigen::MatrixXd next(2 * h.rows(), 2 * h.cols());
    next << h, h, h, -h;
    h = next;
  }
  h /= std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) REQUIRE(hadamard_entry(i, j, log2n) == h(i, j));
}

TEST_CASE("Hadamard counterexample") {
  auto b26 = hadamard_counterexample(26);
  CHECK(b26.norm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b26.side == 8192);
  CHECK(b26.bound == doctest::Approx(0.6633).epsilon(1e-3));
  CHECK(b26.norm > b26.bound);

  auto b12 = hadamard_counterexample(12);
  CHECK(b12.bound == doctest::Approx(5.1).epsilon(1e-2));
  CHECK(b12.norm < b12.bound);

  CHECK_THROWS(hadamard_counterexample(7));
}

TEST_CASE("matrix files") {
  auto dir = temp_dir();
  auto u = sample_haar(12, 44);
  save_matrix(dir / "u.bin", u);
  auto back = load_matrix(dir / "u.bin");
  CHECK(back.matrix() == u.matrix());
  CHECK(back.seed() == 44);
  CHECK(back.hash() == u.hash());

  auto bytes = encode_matrix(u);
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "RORMAT01");
  CHECK(bytes.size() == 32 + 12 * 12 * 8);

  auto corrupt = bytes;
  corrupt[40] ^= 0x01;
  CHECK_THROWS(decode_matrix(corrupt));
  auto truncated = bytes;
  truncated.resize(100);
  CHECK_THROWS(decode_matrix(truncated));
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS(decode_matrix(magic));

  // a non-orthogonal payload with a matching hash is still rejected
  binio::Writer w;
  w.text("RORMAT01");
  w.u64(2);
  w.u64(0);
  binio::Writer payload;
  for (double v : {1.0, 0.5, 0.0, 1.0}) payload.f64(v);
  w.u64(binio::fnv1a64(payload.data()));
  w.bytes(payload.data());
  CHECK_THROWS(decode_matrix(w.data()));

  CHECK_THROWS(load_matrix(dir / "absent.bin"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("matrix CSV") {
  auto csv = matrix_to_csv(identity(2));
  CHECK(csv == "1,0\n0,1\n");
}

TEST_CASE("bilinear tail check") {
  auto rep = bilinear_tail_check(64, 4000, 8);
  CHECK(rep.n == 64);
  REQUIRE(rep.rows.size() == 4);
  CHECK(rep.rows[0].t == 0.0);
  CHECK(rep.rows[0].gaussian_limit == 0.5);
  for (const auto& row : rep.rows) {
    CHECK(row.stated_bound == doctest::Approx(2 * std::exp(-row.t * row.t / 8)));
    CHECK(row.frequency <= row.stated_bound);
  }
  // t = 1: close to the Gaussian limit
  CHECK(std::abs(rep.rows[1].frequency - rep.rows[1].gaussian_limit) <= 4 * rep.rows[1].sigma + 0.01);
  CHECK(rep.to_json()["rows"].size() == 4);
}
