#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rorlab::binio {

/// FNV-1a, 64 bit. Used for content hashes that must be stable across
/// platforms (matrix and config hashes).
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text);

std::string hex64(std::uint64_t v);

/// Little-endian append-only byte writer.
class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void text(std::string_view s) {
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  const std::vector<std::uint8_t>& data() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Little-endian reader over a byte buffer; throws std::runtime_error on
/// truncation.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> buf) : buf_(buf) {}
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::span<const std::uint8_t> bytes(std::size_t n);
  std::string text(std::size_t n);
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  void need(std::size_t n) const;
  std::span<const std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename, so readers never observe a
/// partial file.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace rorlab::binio
