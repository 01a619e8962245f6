#include "rorlab/ortho.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <stdexcept>

#include "rorlab/binio.hpp"
#include "rorlab/rng.hpp"
#include "rorlab/stats.hpp"

namespace rorlab::ortho {

namespace {

constexpr std::uint64_t kHaarStream = 0x4841415200000001ULL;
constexpr char kMagic[] = "RORMAT01";

Eigen::MatrixXd gaussian_matrix(int n, std::uint64_t seed) {
  Rng rng(seed, kHaarStream);
  Eigen::MatrixXd g(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) g(i, j) = rng.normal();
  }
  return g;
}

std::uint64_t payload_hash(const Matrix& m) {
  binio::Writer w;
  for (Eigen::Index i = 0; i < m.size(); ++i) w.f64(m.data()[i]);
  return binio::fnv1a64(w.data());
}

// Largest singular value of a 2x2 block [[a, b], [c, d]].
double norm2x2(double a, double b, double c, double d) {
  const double f = a * a + b * b + c * c + d * d;
  const double det = a * d - b * c;
  return std::sqrt(0.5 * (f + std::sqrt(std::max(0.0, f * f - 4.0 * det * det))));
}

Subset random_subset(Rng& rng, int n, int size, std::vector<std::uint32_t>& scratch) {
  scratch.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) scratch[i] = static_cast<std::uint32_t>(i + 1);
  for (int i = 0; i < size; ++i) {
    const auto pick = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(scratch[i], scratch[pick]);
  }
  return Subset(std::vector<std::uint32_t>(scratch.begin(), scratch.begin() + size));
}

struct Tally {
  std::uint64_t checked = 0;
  double worst = 0.0;
  std::uint64_t violations = 0;
  std::vector<Violation> listed;

  void record(const Subset& s, const Subset& t, double norm, double bound) {
    ++checked;
    const double ratio = norm / bound;
    worst = std::max(worst, ratio);
    if (ratio > 1.0) {
      ++violations;
      if (listed.size() < GoodnessReport::kMaxListed) listed.push_back({s, t, norm, bound});
    }
  }
};

}  // namespace

double orthogonality_defect(const Matrix& m) {
  const Eigen::MatrixXd g = m.transpose() * m;
  return (g - Eigen::MatrixXd::Identity(m.cols(), m.cols())).cwiseAbs().maxCoeff();
}

OrthogonalMatrix::OrthogonalMatrix(Matrix entries, std::uint64_t seed)
    : m_(std::move(entries)), seed_(seed) {
  if (m_.rows() == 0 || m_.rows() != m_.cols()) {
    throw std::invalid_argument("OrthogonalMatrix: must be square and non-empty");
  }
  const double defect = orthogonality_defect(m_);
  if (!(defect <= kTolerance)) {
    throw std::invalid_argument("OrthogonalMatrix: orthogonality defect " + std::to_string(defect));
  }
}

std::uint64_t OrthogonalMatrix::hash() const { return payload_hash(m_); }

OrthogonalMatrix sample_haar(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_haar: n must be >= 1");
  const Eigen::MatrixXd g = gaussian_matrix(n, seed);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const auto& r = qr.matrixQR();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return OrthogonalMatrix(Matrix(q), seed);
}

Eigen::VectorXd haar_first_column(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("haar_first_column: n must be >= 1");
  Rng rng(seed, kHaarStream);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal();
  return v / v.norm();
}

OrthogonalMatrix identity(int n) {
  if (n < 1) throw std::invalid_argument("identity: n must be >= 1");
  return OrthogonalMatrix(Matrix::Identity(n, n), 0, OrthogonalMatrix::Trusted{});
}

double spectral_norm_power(const Eigen::MatrixXd& w, double rel_tol) {
  const Eigen::MatrixXd g = w.transpose() * w;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(g.rows());
  // Break symmetry so the start is not orthogonal to the top eigenvector
  // for structured inputs.
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += 1e-3 * static_cast<double>(i % 7);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 100000; ++it) {
    Eigen::VectorXd gv = g * v;
    const double next = v.dot(gv);
    const double nrm = gv.norm();
    if (nrm == 0.0) return 0.0;
    const double residual = (gv - next * v).norm();
    v = gv / nrm;
    if (std::abs(next - lambda) <= rel_tol * next && residual <= std::sqrt(rel_tol) * next) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

double spectral_norm(const Eigen::MatrixXd& w, int svd_limit) {
  if (w.size() == 0) return 0.0;
  if (w.rows() <= svd_limit && w.cols() <= svd_limit) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(w);
    return svd.singularValues()(0);
  }
  return spectral_norm_power(w);
}

Eigen::MatrixXd submatrix(const OrthogonalMatrix& u, const Subset& rows, const Subset& cols) {
  if (rows.empty() || cols.empty()) throw std::invalid_argument("submatrix: empty index set");
  if (static_cast<int>(rows.max()) > u.n() || static_cast<int>(cols.max()) > u.n()) {
    throw std::invalid_argument("submatrix: index out of range");
  }
  Eigen::MatrixXd w(rows.size(), cols.size());
  Eigen::Index r = 0;
  for (auto i : rows) {
    Eigen::Index c = 0;
    for (auto j : cols) w(r, c++) = u(static_cast<int>(i) - 1, static_cast<int>(j) - 1);
    ++r;
  }
  return w;
}

double submatrix_norm(const OrthogonalMatrix& u, const Subset& rows, const Subset& cols) {
  return spectral_norm(submatrix(u, rows, cols));
}

double goodness_bound(int rows, int cols, int n) {
  return std::sqrt(100.0 * (rows + cols) * std::log(static_cast<double>(n)) / n);
}

nlohmann::json GoodnessReport::to_json() const {
  nlohmann::json v = nlohmann::json::array();
  auto zero_based = [](const Subset& s) {
    std::vector<std::uint32_t> out;
    for (auto i : s) out.push_back(i - 1);
    return out;
  };
  for (const auto& x : violations) {
    v.push_back({{"S", zero_based(x.rows)}, {"T", zero_based(x.cols)}, {"norm", x.norm}, {"bound", x.bound}});
  }
  return {{"n", n},
          {"checked_pairs", checked_pairs},
          {"worst_ratio", worst_ratio},
          {"violation_count", violation_count},
          {"good", good()},
          {"violations", v}};
}

GoodnessReport check_goodness(const OrthogonalMatrix& u, int sampled_pairs, int max_block,
                              std::uint64_t seed) {
  const int n = u.n();
  if (n < 2) throw std::invalid_argument("check_goodness: n must be >= 2");
  if (sampled_pairs < 0 || max_block < 1) throw std::invalid_argument("check_goodness: bad sampling parameters");
  const auto& m = u.matrix();
  Tally tally;

  const double b11 = goodness_bound(1, 1, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto ui = static_cast<std::uint32_t>(i + 1);
      const auto uj = static_cast<std::uint32_t>(j + 1);
      tally.record(Subset{ui}, Subset{uj}, std::abs(m(i, j)), b11);
    }
  }

  if (n <= 64) {
    const double b12 = goodness_bound(1, 2, n);
    const double b22 = goodness_bound(2, 2, n);
    for (int i = 0; i < n; ++i) {
      for (int j1 = 0; j1 < n; ++j1) {
        for (int j2 = j1 + 1; j2 < n; ++j2) {
          const Subset one{static_cast<std::uint32_t>(i + 1)};
          const Subset two{static_cast<std::uint32_t>(j1 + 1), static_cast<std::uint32_t>(j2 + 1)};
          tally.record(one, two, std::hypot(m(i, j1), m(i, j2)), b12);
          tally.record(two, one, std::hypot(m(j1, i), m(j2, i)), b12);
        }
      }
    }
    for (int i1 = 0; i1 < n; ++i1) {
      for (int i2 = i1 + 1; i2 < n; ++i2) {
        for (int j1 = 0; j1 < n; ++j1) {
          for (int j2 = j1 + 1; j2 < n; ++j2) {
            const double norm = norm2x2(m(i1, j1), m(i1, j2), m(i2, j1), m(i2, j2));
            if (norm > b22) {
              tally.record(Subset{static_cast<std::uint32_t>(i1 + 1), static_cast<std::uint32_t>(i2 + 1)},
                           Subset{static_cast<std::uint32_t>(j1 + 1), static_cast<std::uint32_t>(j2 + 1)},
                           norm, b22);
            } else {
              ++tally.checked;
              tally.worst = std::max(tally.worst, norm / b22);
            }
          }
        }
      }
    }
  }

  // Fixed shard count keeps the sampled pairs independent of the worker count.
  constexpr std::size_t kShards = 16;
  std::vector<Tally> shard_tallies(kShards);
  const int block = std::min(max_block, n);
  parallel_shards(kShards, [&](std::size_t shard) {
    Rng rng(seed, 0x474f4f4400000000ULL + shard);
    std::vector<std::uint32_t> scratch;
    const auto lo = static_cast<std::size_t>(sampled_pairs) * shard / kShards;
    const auto hi = static_cast<std::size_t>(sampled_pairs) * (shard + 1) / kShards;
    for (std::size_t p = lo; p < hi; ++p) {
      const int rs = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(block)));
      const int cs = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(block)));
      Subset s = random_subset(rng, n, rs, scratch);
      Subset t = random_subset(rng, n, cs, scratch);
      const double norm = submatrix_norm(u, s, t);
      shard_tallies[shard].record(s, t, norm, goodness_bound(rs, cs, n));
    }
  });
  for (auto& st : shard_tallies) {
    tally.checked += st.checked;
    tally.worst = std::max(tally.worst, st.worst);
    tally.violations += st.violations;
    for (auto& v : st.listed) {
      if (tally.listed.size() < GoodnessReport::kMaxListed) tally.listed.push_back(std::move(v));
    }
  }

  GoodnessReport report;
  report.n = n;
  report.checked_pairs = tally.checked;
  report.worst_ratio = tally.worst;
  report.violation_count = tally.violations;
  report.violations = std::move(tally.listed);
  return report;
}

double hadamard_entry(std::uint64_t i, std::uint64_t j, int log2n) {
  const double sign = (std::popcount(i & j) % 2) ? -1.0 : 1.0;
  return sign * std::ldexp(1.0, -log2n / 2) * (log2n % 2 ? std::sqrt(0.5) : 1.0);
}

HadamardBlock hadamard_counterexample(int log2n) {
  if (log2n < 2 || log2n % 2 != 0 || log2n > 40) {
    throw std::invalid_argument("hadamard_counterexample: log2n must be even in [2, 40]");
  }
  const int half = log2n / 2;
  const std::uint64_t side = std::uint64_t{1} << half;
  // Rows r < side touch only the low half of the bits; columns c << half
  // touch only the high half, so r & c == 0 and every entry is +1/sqrt(N).
  // The norm of a constant a x b block with entry e is sqrt(a b) * e.
  const double entry = std::ldexp(1.0, -half);
  HadamardBlock out;
  out.side = side;
  out.norm = std::sqrt(static_cast<double>(side) * static_cast<double>(side)) * entry;
  const double n = std::ldexp(1.0, log2n);
  out.bound = std::sqrt(100.0 * 2.0 * static_cast<double>(side) * log2n * std::log(2.0) / n);
  return out;
}

nlohmann::json TailReport::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows) {
    rs.push_back({{"t", r.t},
                  {"frequency", r.frequency},
                  {"sigma", r.sigma},
                  {"stated_bound", r.stated_bound},
                  {"gaussian_limit", r.gaussian_limit}});
  }
  return {{"n", n}, {"trials", trials}, {"rows", rs}};
}

TailReport bilinear_tail_check(int n, int trials, std::uint64_t seed, const std::vector<double>& ts) {
  if (n < 1 || trials < 1) throw std::invalid_argument("bilinear_tail_check: bad parameters");
  std::vector<double> scaled(static_cast<std::size_t>(trials));
  const double root_n = std::sqrt(static_cast<double>(n));
  for (int t = 0; t < trials; ++t) {
    scaled[t] = root_n * haar_first_column(n, derive_seed(seed, static_cast<std::uint64_t>(t)))(0);
  }
  TailReport report;
  report.n = n;
  report.trials = trials;
  for (double t : ts) {
    TailRow row;
    row.t = t;
    const auto hits = std::count_if(scaled.begin(), scaled.end(), [t](double v) { return v >= t; });
    row.frequency = static_cast<double>(hits) / trials;
    row.gaussian_limit = normal_sf(t);
    row.sigma = std::sqrt(row.gaussian_limit * (1.0 - row.gaussian_limit) / trials);
    row.stated_bound = 2.0 * std::exp(-t * t / 8.0);
    report.rows.push_back(row);
  }
  return report;
}

std::vector<std::uint8_t> encode_matrix(const OrthogonalMatrix& u) {
  binio::Writer w;
  w.text(std::string_view(kMagic, 8));
  w.u64(static_cast<std::uint64_t>(u.n()));
  w.u64(u.seed());
  w.u64(u.hash());
  const auto& m = u.matrix();
  for (Eigen::Index i = 0; i < m.size(); ++i) w.f64(m.data()[i]);
  return w.data();
}

OrthogonalMatrix decode_matrix(std::span<const std::uint8_t> bytes) {
  binio::Reader r(bytes);
  if (r.text(8) != std::string_view(kMagic, 8)) throw std::runtime_error("matrix file: bad magic");
  const auto n = r.u64();
  const auto seed = r.u64();
  const auto hash = r.u64();
  if (n == 0 || n > 65536) throw std::runtime_error("matrix file: bad dimension");
  if (r.remaining() != n * n * 8) throw std::runtime_error("matrix file: payload size mismatch");
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.f64();
  if (payload_hash(m) != hash) throw std::runtime_error("matrix file: hash mismatch");
  try {
    return OrthogonalMatrix(std::move(m), seed);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("matrix file: ") + e.what());
  }
}

void save_matrix(const std::filesystem::path& path, const OrthogonalMatrix& u) {
  binio::write_file_atomic(path, encode_matrix(u));
}

OrthogonalMatrix load_matrix(const std::filesystem::path& path) {
  return decode_matrix(binio::read_file(path));
}

std::string matrix_to_csv(const OrthogonalMatrix& u) {
  std::string out;
  char buf[32];
  for (int i = 0; i < u.n(); ++i) {
    for (int j = 0; j < u.n(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", u(i, j));
      if (j) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace rorlab::ortho
