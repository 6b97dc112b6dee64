#include "perflab/issue_config.hpp"

#include <charconv>
#include <cstdlib>

namespace perflab {

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::None: return "none";
    case IssueKind::BasicAuth: return "basic-auth";
    case IssueKind::CleanPath: return "clean-path";
    case IssueKind::RequestId: return "request-id";
  }
  return "none";
}

IssueKind parse_issue_kind(std::string_view text) {
  if (text == "none" || text.empty()) return IssueKind::None;
  if (text == "basic-auth" || text == "A" || text == "a") return IssueKind::BasicAuth;
  if (text == "clean-path" || text == "B" || text == "b") return IssueKind::CleanPath;
  if (text == "request-id" || text == "C" || text == "c") return IssueKind::RequestId;
  throw ConfigError("unknown issue kind '" + std::string(text) +
                    "' (expected none, basic-auth, clean-path or request-id)");
}

std::string_view issue_letter(IssueKind kind) {
  switch (kind) {
    case IssueKind::BasicAuth: return "A";
    case IssueKind::CleanPath: return "B";
    case IssueKind::RequestId: return "C";
    case IssueKind::None: break;
  }
  return "-";
}

IssueConfig issue_config_from_env(IssueConfig fallback) {
  IssueConfig config = fallback;
  if (const char* kind = std::getenv(kIssueKindEnv)) config.kind = parse_issue_kind(kind);
  if (const char* sev = std::getenv(kIssueSeverityEnv)) {
    std::string_view text(sev);
    std::uint32_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
      throw ConfigError(std::string(kIssueSeverityEnv) + " must be a non-negative integer, got '" +
                        std::string(text) + "'");
    }
    config.severity = value;
  }
  return config;
}

}  // namespace perflab
