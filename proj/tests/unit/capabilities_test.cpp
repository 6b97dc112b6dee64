#include <gtest/gtest.h>

#include "perflab/capabilities.hpp"

namespace perflab {
namespace {

// Rows transcribed by hand: target, then A (Basic Auth), B (Clean Path),
// C (Request ID).
struct Row {
  const char* target;
  bool a, b, c;
};

constexpr Row kRows[] = {
    {"M1", true, false, true},  {"M2", true, false, true},  {"M3", false, false, true},
    {"M4", false, true, true},  {"M5", false, true, true},  {"M6", false, true, true},
    {"M7", false, true, true},  {"E1", true, false, true},  {"E2", false, false, true},
    {"E3", false, true, true},  {"E4", false, true, true},
};

TEST(Capabilities, MatchesHandTranscribedTable) {
  for (const auto& row : kRows) {
    const auto set = expected_detects(row.target);
    EXPECT_EQ(set.contains(IssueKind::BasicAuth), row.a) << row.target;
    EXPECT_EQ(set.contains(IssueKind::CleanPath), row.b) << row.target;
    EXPECT_EQ(set.contains(IssueKind::RequestId), row.c) << row.target;
    EXPECT_FALSE(set.contains(IssueKind::None));
  }
  EXPECT_TRUE(expected_detects("D1").empty());
  EXPECT_TRUE(expected_detects("").empty());
}

TEST(Capabilities, TargetsAndLevels) {
  EXPECT_EQ(table_targets().size(), 11u);
  EXPECT_EQ(table_targets().front(), "M1");
  EXPECT_EQ(table_targets().back(), "E4");
  const auto levels = default_severity_levels();
  EXPECT_EQ(levels.front(), 0u);
  EXPECT_EQ(levels.back(), 2048u);
  EXPECT_TRUE(std::is_sorted(levels.begin(), levels.end()));
}

TEST(Capabilities, IssueSetBasics) {
  IssueSet s{IssueKind::RequestId, IssueKind::BasicAuth, IssueKind::None};
  EXPECT_EQ(s.to_string(), "A,C");
  EXPECT_EQ(IssueSet{}.to_string(), "");
  EXPECT_NE(s, IssueSet{IssueKind::BasicAuth});
}

}  // namespace
}  // namespace perflab
