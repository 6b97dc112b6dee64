#include <gtest/gtest.h>

#include <array>
#include <atomic>
#include <set>
#include <thread>

#include "perflab/faults.hpp"
#include "perflab/primitives.hpp"

namespace perflab::faults {
namespace {

// SHA-512 applied n times, digest of digest, starting from the raw bytes.
Bytes iterate(const Hasher& h, std::string_view text, std::uint32_t n) {
  Bytes value(text.begin(), text.end());
  for (std::uint32_t i = 0; i < n; ++i) value = h.digest(value);
  return value;
}

TEST(Primitives, KnownDigests) {
  const std::string abc = "abc";
  const Bytes data(abc.begin(), abc.end());
  EXPECT_EQ(to_hex(Sha1Hasher().digest(data)), "a9993e364706816aba3e25717850c26c9cd0d89d");
  EXPECT_EQ(to_hex(Sha512Hasher().digest(data)),
            "ddaf35a193617abacc417349ae20413112e6fa4e89a97ea20a9eeee64b55d39a"
            "2192992a274fc1a836ba3c23a3feebbd454d4423643ce80e2a9ac94fa54ca49f");
}

TEST(Primitives, SeededSourceIsDeterministicAndCounts) {
  SeededRandomSource a(7), b(7), c(8);
  std::array<std::uint8_t, 100> x{}, y{}, z{};
  a.fill(x);
  b.fill(y);
  c.fill(z);
  EXPECT_EQ(x, y);
  EXPECT_NE(x, z);
  EXPECT_EQ(a.bytes_read(), 100u);
}

TEST(BasicAuth, CorrectnessIndependentOfSeverity) {
  const Credentials good{"user1", "password1"};
  for (std::uint32_t s : {0u, 1u, 2u, 7u, 64u}) {
    EXPECT_TRUE(degraded_validate_credentials(good, good, s)) << s;
    EXPECT_FALSE(degraded_validate_credentials({"user1", "password2"}, good, s)) << s;
    EXPECT_FALSE(degraded_validate_credentials({"user1", ""}, good, s)) << s;
    EXPECT_FALSE(degraded_validate_credentials({"user2", "password1"}, good, s)) << s;
  }
}

TEST(BasicAuth, HashCallsPerSide) {
  CountingHasher hasher(default_sha512());
  const Credentials c{"user1", "password1"};
  for (std::uint32_t s : {0u, 1u, 7u, 2048u}) {
    hasher.reset();
    degraded_validate_credentials(c, c, s, hasher);
    EXPECT_EQ(hasher.calls(), 2ull * s) << s;
  }
}

TEST(BasicAuth, HashesAreIterated) {
  // A hasher that records its inputs shows digest-of-digest chaining.
  struct Recording final : Hasher {
    mutable std::vector<Bytes> inputs;
    Bytes digest(std::span<const std::uint8_t> data) const override {
      inputs.emplace_back(data.begin(), data.end());
      return default_sha512().digest(data);
    }
  } rec;
  const Credentials c{"u", "pw"};
  degraded_validate_credentials(c, c, 3, rec);
  ASSERT_EQ(rec.inputs.size(), 6u);
  EXPECT_EQ(rec.inputs[0], iterate(default_sha512(), "pw", 0));
  EXPECT_EQ(rec.inputs[1], iterate(default_sha512(), "pw", 1));
  EXPECT_EQ(rec.inputs[2], iterate(default_sha512(), "pw", 2));
}

TEST(CleanPath, GoSemantics) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"", "."},
      {"/", "/"},
      {"abc", "abc"},
      {"abc/def", "abc/def"},
      {"a/b/c", "a/b/c"},
      {".", "."},
      {"..", ".."},
      {"../..", "../.."},
      {"../../abc", "../../abc"},
      {"/abc", "/abc"},
      {"/abc/", "/abc"},
      {"abc/", "abc"},
      {"abc//def//ghi", "abc/def/ghi"},
      {"//abc", "/abc"},
      {"///abc///", "/abc"},
      {"abc/./def", "abc/def"},
      {"/./abc/def", "/abc/def"},
      {"abc/.", "abc"},
      {"abc/def/ghi/../jkl", "abc/def/jkl"},
      {"abc/def/../ghi/../jkl", "abc/jkl"},
      {"abc/def/..", "abc"},
      {"abc/def/../..", "."},
      {"/abc/def/../..", "/"},
      {"abc/def/../../..", ".."},
      {"/abc/def/../../..", "/"},
      {"abc/def/../../../ghi/jkl/../../../mno", "../../mno"},
      {"abc/./../def", "def"},
      {"abc//./../def", "def"},
      {"abc/../../././../def", "../../def"},
      {"/flights//FL00001/./seats/", "/flights/FL00001/seats"},
  };
  for (const auto& [in, want] : cases) EXPECT_EQ(clean_path(in), want) << in;
}

TEST(CleanPath, PassesAreOnePlusSeverity) {
  CountingPathCleaner cleaner;
  for (std::uint32_t s : {0u, 1u, 7u, 2048u}) {
    const auto before = cleaner.passes();
    EXPECT_EQ(degraded_clean_path("/flights//x/../FL1", s, cleaner), "/flights/FL1");
    EXPECT_EQ(cleaner.passes() - before, 1ull + s) << s;
  }
}

TEST(RequestId, CounterAtSeverityZero) {
  std::atomic<std::uint64_t> counter{0};
  SeededRandomSource rng(1);
  EXPECT_EQ(degraded_request_id(0, rng, counter), "1");
  EXPECT_EQ(degraded_request_id(0, rng, counter), "2");
  EXPECT_EQ(rng.bytes_read(), 0u);
}

TEST(RequestId, BytesReadAndDigest) {
  std::atomic<std::uint64_t> counter{0};
  for (std::uint32_t s : {0u, 1u, 7u, 2048u}) {
    SeededRandomSource rng(s);
    const auto id = degraded_request_id(s, rng, counter);
    EXPECT_EQ(rng.bytes_read(), 512ull * s) << s;
    if (s > 0) {
      EXPECT_EQ(id.size(), 40u);
      // Same bytes from an identically seeded source give the same digest.
      SeededRandomSource replay(s);
      Bytes bytes(512 * s);
      replay.fill(bytes);
      EXPECT_EQ(id, to_hex(default_sha1().digest(bytes)));
    }
  }
  EXPECT_EQ(counter.load(), 1u);
}

TEST(RequestId, RandomSourceFailurePropagates) {
  std::atomic<std::uint64_t> counter{0};
  FailingRandomSource rng;
  EXPECT_THROW(degraded_request_id(1, rng, counter), std::system_error);
  EXPECT_NO_THROW(degraded_request_id(0, rng, counter));
}

TEST(RequestId, CounterIsAtomicUnderConcurrency) {
  std::atomic<std::uint64_t> counter{0};
  SeededRandomSource rng(1);
  std::vector<std::thread> threads;
  std::vector<std::vector<std::string>> ids(4);
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 1000; ++i) ids[t].push_back(degraded_request_id(0, rng, counter));
    });
  }
  for (auto& t : threads) t.join();
  std::set<std::string> all;
  for (const auto& v : ids) all.insert(v.begin(), v.end());
  EXPECT_EQ(all.size(), 4000u);
  EXPECT_EQ(counter.load(), 4000u);
}

}  // namespace
}  // namespace perflab::faults
