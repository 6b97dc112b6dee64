#include "perflab/capabilities.hpp"

#include <map>

namespace perflab {

std::string IssueSet::to_string() const {
  std::string out;
  for (IssueKind k : all_issues()) {
    if (!contains(k)) continue;
    if (!out.empty()) out.push_back(',');
    out.append(issue_letter(k));
  }
  return out;
}

IssueSet expected_detects(std::string_view target) {
  using K = IssueKind;
  static const std::map<std::string, IssueSet, std::less<>> kTable{
      {"M1", {K::BasicAuth, K::RequestId}}, {"M2", {K::BasicAuth, K::RequestId}},
      {"M3", {K::RequestId}},               {"M4", {K::CleanPath, K::RequestId}},
      {"M5", {K::CleanPath, K::RequestId}}, {"M6", {K::CleanPath, K::RequestId}},
      {"M7", {K::CleanPath, K::RequestId}}, {"E1", {K::BasicAuth, K::RequestId}},
      {"E2", {K::RequestId}},               {"E3", {K::CleanPath, K::RequestId}},
      {"E4", {K::CleanPath, K::RequestId}},
  };
  auto it = kTable.find(target);
  return it == kTable.end() ? IssueSet{} : it->second;
}

const std::vector<std::string>& table_targets() {
  static const std::vector<std::string> kTargets{"M1", "M2", "M3", "M4", "M5", "M6",
                                                 "M7", "E1", "E2", "E3", "E4"};
  return kTargets;
}

std::vector<std::uint32_t> default_severity_levels() {
  std::vector<std::uint32_t> levels{0};
  for (std::uint32_t s = 1; s <= 2048; s *= 2) levels.push_back(s);
  return levels;
}

}  // namespace perflab
