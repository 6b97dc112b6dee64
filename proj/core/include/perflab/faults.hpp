#pragma once

// Severity-parameterized replacements for three middleware steps. Each one
// is functionally identical to its baseline for every severity; only the
// amount of CPU work grows with s. At s = 0 each runs exactly the baseline
// code path, so (None) vs (issue, 0) is a true A/A comparison.

#include <atomic>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>

#include "perflab/primitives.hpp"

namespace perflab::faults {

struct Credentials {
  std::string user;
  std::string password;

  friend bool operator==(const Credentials&, const Credentials&) = default;
};

/// Issue A: basic-auth credential check.
///
/// s = 0: constant-time comparison of the raw user and password bytes.
/// s >= 1: each password is hashed s times (iterated digest-of-digest),
/// then the two digests are compared in constant time. Returns true iff
/// the credentials match, independent of s.
bool degraded_validate_credentials(const Credentials& provided,
                                   const Credentials& expected,
                                   std::uint32_t severity,
                                   const Hasher& hasher = default_sha512());

/// Lexical path normalizer with the semantics of Go's path.Clean: collapse
/// repeated slashes, drop "." elements, resolve ".." against the preceding
/// element, strip a trailing slash, and map "" to ".".
class PathCleaner {
 public:
  virtual ~PathCleaner() = default;
  [[nodiscard]] virtual std::string clean(std::string_view path) const;
};

class CountingPathCleaner final : public PathCleaner {
 public:
  [[nodiscard]] std::string clean(std::string_view path) const override;
  [[nodiscard]] std::uint64_t passes() const noexcept { return passes_.load(); }

 private:
  mutable std::atomic<std::uint64_t> passes_{0};
};

std::string clean_path(std::string_view path);

const PathCleaner& default_path_cleaner();

/// Issue B: 1 functional pass plus `severity` redundant passes.
std::string degraded_clean_path(std::string_view path, std::uint32_t severity,
                                const PathCleaner& cleaner = default_path_cleaner());

/// Raised when the random source cannot deliver bytes for a request ID.
class RandomSourceError : public std::system_error {
 public:
  using std::system_error::system_error;
};

/// Issue C: request-ID generation.
///
/// s = 0: next value of `counter` rendered in decimal ("1", "2", ...).
/// s >= 1: reads 512*s bytes from `rng` and returns the lowercase hex SHA-1
/// of them (40 characters).
std::string degraded_request_id(std::uint32_t severity, RandomSource& rng,
                                std::atomic<std::uint64_t>& counter,
                                const Hasher& sha1 = default_sha1());

inline constexpr std::size_t kRequestIdBytesPerSeverity = 512;

}  // namespace perflab::faults
