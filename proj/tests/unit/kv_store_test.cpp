#include <gtest/gtest.h>

#include <thread>

#include "perflab/kv_store.hpp"

namespace perflab::store {
namespace {

TEST(KvStore, PutGetOverwrite) {
  KvStore s;
  EXPECT_EQ(s.get("a"), std::nullopt);
  s.put("a", "1");
  s.put("b", "");
  EXPECT_EQ(s.get("a"), "1");
  EXPECT_EQ(s.get("b"), "");
  s.put("a", "2");
  EXPECT_EQ(s.get("a"), "2");
  EXPECT_EQ(s.size(), 2u);
  EXPECT_THROW(s.put("", "x"), std::invalid_argument);
}

TEST(KvStore, ScanPrefixIsOrderedAndBounded) {
  KvStore s;
  for (const char* k : {"flight/2", "flight/1", "flights", "airport/A", "flight/10"}) s.put(k, k);
  auto hits = s.scan_prefix("flight/");
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].first, "flight/1");
  EXPECT_EQ(hits[1].first, "flight/10");
  EXPECT_EQ(hits[2].first, "flight/2");
  EXPECT_TRUE(s.scan_prefix("zzz").empty());
  EXPECT_EQ(s.scan_prefix("").size(), 5u);
}

TEST(KvStore, CompareAndSwap) {
  KvStore s;
  EXPECT_TRUE(s.compare_and_swap("k", std::nullopt, "v1"));
  EXPECT_FALSE(s.compare_and_swap("k", std::nullopt, "v2"));
  EXPECT_FALSE(s.compare_and_swap("k", std::string("other"), "v2"));
  EXPECT_TRUE(s.compare_and_swap("k", std::string("v1"), "v2"));
  EXPECT_EQ(s.get("k"), "v2");
}

TEST(KvStore, CopiesAreIndependent) {
  KvStore a;
  a.put("k", "1");
  KvStore b = a;
  b.put("k", "2");
  EXPECT_EQ(a.get("k"), "1");
  EXPECT_EQ(b.get("k"), "2");
  KvStore c = std::move(b);
  EXPECT_EQ(c.get("k"), "2");
  EXPECT_EQ(a.serialize(), "k\t1\n");
}

TEST(KvStore, ConcurrentCasIncrementsAreLinearizable) {
  KvStore s;
  s.put("n", "0");
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 500; ++i) {
        while (true) {
          auto cur = s.get("n");
          if (s.compare_and_swap("n", cur, std::to_string(std::stoi(*cur) + 1))) break;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(s.get("n"), "2000");
}

}  // namespace
}  // namespace perflab::store
