#include "perflab/faults.hpp"

#include <openssl/crypto.h>

#include <vector>

namespace perflab::faults {
namespace {

std::span<const std::uint8_t> as_bytes(std::string_view text) {
  return {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()};
}

bool constant_time_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) return false;
  if (a.empty()) return true;
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

Bytes iterated_digest(std::string_view input, std::uint32_t rounds, const Hasher& hasher) {
  Bytes digest = hasher.digest(as_bytes(input));
  for (std::uint32_t i = 1; i < rounds; ++i) digest = hasher.digest(digest);
  return digest;
}

// Keeps redundant normalization passes observable to the optimizer.
volatile std::size_t g_clean_sink = 0;

}  // namespace

bool degraded_validate_credentials(const Credentials& provided, const Credentials& expected,
                                   std::uint32_t severity, const Hasher& hasher) {
  bool user_ok = constant_time_equal(as_bytes(provided.user), as_bytes(expected.user));
  if (severity == 0) {
    bool pass_ok = constant_time_equal(as_bytes(provided.password), as_bytes(expected.password));
    return user_ok && pass_ok;
  }
  Bytes provided_digest = iterated_digest(provided.password, severity, hasher);
  Bytes expected_digest = iterated_digest(expected.password, severity, hasher);
  return user_ok && constant_time_equal(provided_digest, expected_digest);
}

std::string PathCleaner::clean(std::string_view path) const { return clean_path(path); }

std::string CountingPathCleaner::clean(std::string_view path) const {
  passes_.fetch_add(1, std::memory_order_relaxed);
  return clean_path(path);
}

std::string clean_path(std::string_view path) {
  if (path.empty()) return ".";
  const bool rooted = path.front() == '/';
  const std::size_t n = path.size();

  std::string out;
  out.reserve(n);
  std::size_t r = 0;
  std::size_t dotdot = 0;
  if (rooted) {
    out.push_back('/');
    r = 1;
    dotdot = 1;
  }

  while (r < n) {
    if (path[r] == '/') {
      ++r;
    } else if (path[r] == '.' && (r + 1 == n || path[r + 1] == '/')) {
      ++r;
    } else if (path[r] == '.' && path[r + 1] == '.' && (r + 2 == n || path[r + 2] == '/')) {
      r += 2;
      if (out.size() > dotdot) {
        std::size_t w = out.size() - 1;
        while (w > dotdot && out[w] != '/') --w;
        out.resize(w);
      } else if (!rooted) {
        if (!out.empty()) out.push_back('/');
        out.append("..");
        dotdot = out.size();
      }
    } else {
      if ((rooted && out.size() != 1) || (!rooted && !out.empty())) out.push_back('/');
      while (r < n && path[r] != '/') out.push_back(path[r++]);
    }
  }

  if (out.empty()) return ".";
  return out;
}

const PathCleaner& default_path_cleaner() {
  static const PathCleaner cleaner;
  return cleaner;
}

std::string degraded_clean_path(std::string_view path, std::uint32_t severity,
                                const PathCleaner& cleaner) {
  std::string cleaned = cleaner.clean(path);
  std::size_t sink = 0;
  for (std::uint32_t i = 0; i < severity; ++i) sink += cleaner.clean(path).size();
  g_clean_sink = g_clean_sink + sink;
  return cleaned;
}

std::string degraded_request_id(std::uint32_t severity, RandomSource& rng,
                                std::atomic<std::uint64_t>& counter, const Hasher& sha1) {
  if (severity == 0) {
    return std::to_string(counter.fetch_add(1, std::memory_order_relaxed) + 1);
  }
  std::vector<std::uint8_t> noise(kRequestIdBytesPerSeverity * severity);
  rng.fill(noise);
  return to_hex(sha1.digest(noise));
}

}  // namespace perflab::faults
