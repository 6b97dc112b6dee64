#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "perflab/issue_config.hpp"

namespace perflab {

/// Small set of issue kinds (None is never a member).
class IssueSet {
 public:
  constexpr IssueSet() = default;
  constexpr IssueSet(std::initializer_list<IssueKind> kinds) {
    for (IssueKind k : kinds) insert(k);
  }
  constexpr void insert(IssueKind k) {
    if (k != IssueKind::None) bits_ |= bit(k);
  }
  [[nodiscard]] constexpr bool contains(IssueKind k) const { return k != IssueKind::None && (bits_ & bit(k)); }
  [[nodiscard]] constexpr bool empty() const { return bits_ == 0; }
  /// "A,C" style; "" when empty.
  [[nodiscard]] std::string to_string() const;

  friend constexpr bool operator==(IssueSet, IssueSet) = default;

 private:
  static constexpr std::uint8_t bit(IssueKind k) { return static_cast<std::uint8_t>(1u << static_cast<int>(k)); }
  std::uint8_t bits_ = 0;
};

/// Detection capability of each table column: which issues can in
/// principle change the target's latency. Group-3 microbenchmarks M1..M7
/// and application endpoints E1..E4.
IssueSet expected_detects(std::string_view target);

/// M1..M7 then E1..E4.
const std::vector<std::string>& table_targets();

inline const std::vector<IssueKind>& all_issues() {
  static const std::vector<IssueKind> kinds{IssueKind::BasicAuth, IssueKind::CleanPath, IssueKind::RequestId};
  return kinds;
}

/// 0 followed by powers of two up to 2048 (13 levels).
std::vector<std::uint32_t> default_severity_levels();

}  // namespace perflab
