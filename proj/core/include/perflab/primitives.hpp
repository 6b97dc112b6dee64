#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace perflab::faults {

using Bytes = std::vector<std::uint8_t>;

/// A cryptographic digest function. Implementations must be thread-safe.
class Hasher {
 public:
  virtual ~Hasher() = default;
  virtual Bytes digest(std::span<const std::uint8_t> data) const = 0;
};

/// SHA-512 backed by OpenSSL.
class Sha512Hasher final : public Hasher {
 public:
  Bytes digest(std::span<const std::uint8_t> data) const override;
};

/// SHA-1 backed by OpenSSL.
class Sha1Hasher final : public Hasher {
 public:
  Bytes digest(std::span<const std::uint8_t> data) const override;
};

/// Wraps another hasher and counts invocations.
class CountingHasher final : public Hasher {
 public:
  explicit CountingHasher(const Hasher& inner) : inner_(inner) {}
  Bytes digest(std::span<const std::uint8_t> data) const override;
  [[nodiscard]] std::uint64_t calls() const noexcept { return calls_.load(); }
  void reset() noexcept { calls_ = 0; }

 private:
  const Hasher& inner_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

/// Source of random bytes.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  /// Fills `out` completely or throws std::system_error.
  virtual void fill(std::span<std::uint8_t> out) = 0;
};

/// The operating system's randomness device (getrandom(2)).
class OsRandomSource final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

/// Deterministic source for tests; also counts bytes handed out.
class SeededRandomSource final : public RandomSource {
 public:
  explicit SeededRandomSource(std::uint64_t seed) : state_(seed) {}
  void fill(std::span<std::uint8_t> out) override;
  [[nodiscard]] std::uint64_t bytes_read() const noexcept { return bytes_read_.load(); }

 private:
  std::atomic<std::uint64_t> state_;
  std::atomic<std::uint64_t> bytes_read_{0};
};

/// Always fails; used to exercise the error path of request-ID generation.
class FailingRandomSource final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

/// Process-wide default primitives.
const Hasher& default_sha512();
const Hasher& default_sha1();
RandomSource& default_random_source();

std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace perflab::faults
