#include "perflab/primitives.hpp"

#include <openssl/evp.h>
#include <sys/random.h>

#include <cerrno>
#include <memory>
#include <system_error>

#include "perflab/faults.hpp"

namespace perflab::faults {
namespace {

Bytes evp_digest(const EVP_MD* md, std::span<const std::uint8_t> data) {
  Bytes out(static_cast<std::size_t>(EVP_MD_size(md)));
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr) != 1) {
    throw std::runtime_error("EVP_Digest failed");
  }
  out.resize(len);
  return out;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Bytes Sha512Hasher::digest(std::span<const std::uint8_t> data) const {
  return evp_digest(EVP_sha512(), data);
}

Bytes Sha1Hasher::digest(std::span<const std::uint8_t> data) const {
  return evp_digest(EVP_sha1(), data);
}

Bytes CountingHasher::digest(std::span<const std::uint8_t> data) const {
  calls_.fetch_add(1, std::memory_order_relaxed);
  return inner_.digest(data);
}

void OsRandomSource::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    ssize_t n = ::getrandom(out.data() + done, out.size() - done, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw RandomSourceError(errno, std::generic_category(), "getrandom");
    }
    done += static_cast<std::size_t>(n);
  }
}

void SeededRandomSource::fill(std::span<std::uint8_t> out) {
  std::uint64_t state = state_.fetch_add(0x632BE59BD9B4E019ULL * (out.size() + 1));
  for (std::size_t i = 0; i < out.size(); i += 8) {
    std::uint64_t word = splitmix64(state);
    for (std::size_t b = 0; b < 8 && i + b < out.size(); ++b) {
      out[i + b] = static_cast<std::uint8_t>(word >> (8 * b));
    }
  }
  bytes_read_.fetch_add(out.size(), std::memory_order_relaxed);
}

void FailingRandomSource::fill(std::span<std::uint8_t>) {
  throw RandomSourceError(std::make_error_code(std::errc::io_error), "random source unavailable");
}

const Hasher& default_sha512() {
  static const Sha512Hasher hasher;
  return hasher;
}

const Hasher& default_sha1() {
  static const Sha1Hasher hasher;
  return hasher;
}

RandomSource& default_random_source() {
  static OsRandomSource source;
  return source;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0F]);
  }
  return out;
}

}  // namespace perflab::faults
