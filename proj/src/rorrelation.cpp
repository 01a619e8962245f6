#include "rorlab/rorrelation.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rorlab/binio.hpp"

namespace rorlab::rorrelation {

namespace {

constexpr char kMagic[] = "RORINST1";

void check_dims(const OrthogonalMatrix& u, std::span<const BitVector> z) {
  if (z.size() < 2) throw std::invalid_argument("rorrelation: need k >= 2 vectors");
  for (const auto& v : z) {
    if (static_cast<int>(v.size()) != u.n()) {
      throw std::invalid_argument("rorrelation: vector length " + std::to_string(v.size()) +
                                  " does not match N = " + std::to_string(u.n()));
    }
  }
}

Eigen::VectorXd as_vector(const BitVector& z) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(z.size()));
  for (std::size_t i = 0; i < z.size(); ++i) v(static_cast<Eigen::Index>(i)) = z[i];
  return v;
}

// 1^T A^(k-1) 1 by repeated matvecs.
double chain_sum(const Eigen::MatrixXd& a, int k) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(a.rows());
  for (int step = 0; step < k - 1; ++step) w = a * w;
  return w.sum();
}

}  // namespace

RorrelationInstance::RorrelationInstance(std::vector<BitVector> vectors, MatrixHandle matrix)
    : vectors_(std::move(vectors)), matrix_(std::move(matrix)) {
  if (!matrix_) throw std::invalid_argument("RorrelationInstance: null matrix");
  check_dims(*matrix_, vectors_);
}

std::string_view tag_name(Tag t) {
  switch (t) {
    case Tag::Yes: return "YES";
    case Tag::No: return "NO";
    case Tag::Ambiguous: return "AMBIGUOUS";
  }
  return "?";
}

double phi(const OrthogonalMatrix& u, std::span<const BitVector> z) {
  check_dims(u, z);
  const auto& m = u.matrix();
  Eigen::VectorXd w = as_vector(z.back());
  for (std::size_t j = z.size() - 1; j-- > 0;) {
    Eigen::VectorXd next = m * w;
    for (Eigen::Index i = 0; i < next.size(); ++i) next(i) *= z[j][static_cast<std::size_t>(i)];
    w = std::move(next);
  }
  return w.sum() / u.n();
}

double phi(const RorrelationInstance& inst) { return phi(inst.matrix(), inst.vectors()); }

Tag tag_of(double phi, int k) {
  if (phi >= std::ldexp(1.0, -k)) return Tag::Yes;
  if (std::abs(phi) <= std::ldexp(1.0, -(k + 1))) return Tag::No;
  return Tag::Ambiguous;
}

InstanceLabel classify(const OrthogonalMatrix& u, std::span<const BitVector> z) {
  const double p = phi(u, z);
  return {tag_of(p, static_cast<int>(z.size())), p};
}

InstanceLabel classify(const RorrelationInstance& inst) {
  return classify(inst.matrix(), inst.vectors());
}

double exact_expected_phi(const OrthogonalMatrix& u, int k) {
  if (k < 2) throw std::invalid_argument("exact_expected_phi: k must be >= 2");
  const Eigen::MatrixXd um = u.matrix();
  const Eigen::MatrixXd m = um.unaryExpr([](double x) {
    return x * (2.0 / std::numbers::pi) * std::asin(std::clamp(x, -1.0, 1.0));
  });
  return chain_sum(m, k) / u.n();
}

double exact_uniform_variance(const OrthogonalMatrix& u, int k) {
  if (k < 2) throw std::invalid_argument("exact_uniform_variance: k must be >= 2");
  const Eigen::MatrixXd sq = u.matrix().array().square().matrix();
  const double n = u.n();
  return chain_sum(sq, k) / (n * n);
}

double uniform_no_probability_bound(int k, int n) {
  if (k < 1 || n < 1) throw std::invalid_argument("uniform_no_probability_bound: bad arguments");
  return std::max(0.0, 1.0 - std::pow(4.0, k + 1) / n);
}

std::vector<std::uint8_t> encode_batch(const InstanceBatch& batch) {
  binio::Writer w;
  w.text(std::string_view(kMagic, 8));
  w.u32(static_cast<std::uint32_t>(batch.k));
  w.u32(static_cast<std::uint32_t>(batch.n));
  w.u64(batch.matrix_hash);
  w.u32(static_cast<std::uint32_t>(batch.matrix_path.size()));
  w.text(batch.matrix_path);
  w.u64(batch.instances.size());
  for (const auto& inst : batch.instances) {
    if (static_cast<int>(inst.size()) != batch.k) throw std::invalid_argument("encode_batch: wrong vector count");
    for (const auto& v : inst) {
      if (static_cast<int>(v.size()) != batch.n) throw std::invalid_argument("encode_batch: wrong vector length");
      for (auto e : v.entries()) w.u8(e > 0 ? 0x01 : 0xFF);
    }
  }
  return w.data();
}

InstanceBatch decode_batch(std::span<const std::uint8_t> bytes) {
  binio::Reader r(bytes);
  if (r.text(8) != std::string_view(kMagic, 8)) throw std::runtime_error("instance file: bad magic");
  InstanceBatch b;
  b.k = static_cast<int>(r.u32());
  b.n = static_cast<int>(r.u32());
  if (b.k < 2 || b.n < 1) throw std::runtime_error("instance file: bad k or N");
  b.matrix_hash = r.u64();
  b.matrix_path = r.text(r.u32());
  const auto count = r.u64();
  const auto per = static_cast<std::uint64_t>(b.k) * static_cast<std::uint64_t>(b.n);
  if (count > 0 && r.remaining() / count != per) throw std::runtime_error("instance file: payload size mismatch");
  if (r.remaining() != count * per) throw std::runtime_error("instance file: payload size mismatch");
  b.instances.reserve(count);
  for (std::uint64_t c = 0; c < count; ++c) {
    std::vector<BitVector> inst;
    for (int j = 0; j < b.k; ++j) {
      std::vector<std::int8_t> e(static_cast<std::size_t>(b.n));
      for (auto& x : e) {
        const auto byte = r.u8();
        if (byte == 0x01) {
          x = 1;
        } else if (byte == 0xFF) {
          x = -1;
        } else {
          throw std::runtime_error("instance file: sign byte is neither 0x01 nor 0xFF");
        }
      }
      inst.emplace_back(std::move(e));
    }
    b.instances.push_back(std::move(inst));
  }
  return b;
}

void save_batch(const std::filesystem::path& path, const InstanceBatch& batch) {
  binio::write_file_atomic(path, encode_batch(batch));
}

InstanceBatch load_batch(const std::filesystem::path& path) { return decode_batch(binio::read_file(path)); }

MatrixHandle resolve_matrix(const InstanceBatch& batch, const std::filesystem::path& override_path) {
  const std::filesystem::path p = override_path.empty() ? std::filesystem::path(batch.matrix_path) : override_path;
  auto m = std::make_shared<const OrthogonalMatrix>(ortho::load_matrix(p));
  if (m->hash() != batch.matrix_hash) {
    throw std::runtime_error("matrix " + p.string() + " does not match the hash recorded in the instance file");
  }
  if (m->n() != batch.n) throw std::runtime_error("matrix dimension does not match instance file");
  return m;
}

nlohmann::json label_to_json(std::size_t index, const InstanceLabel& label) {
  return {{"index", index}, {"phi", label.phi}, {"label", std::string(tag_name(label.tag))}};
}

}  // namespace rorlab::rorrelation
