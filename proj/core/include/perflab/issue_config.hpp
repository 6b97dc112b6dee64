#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace perflab {

/// Raised for invalid user-supplied configuration (counts, severities, names).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class IssueKind { None, BasicAuth, CleanPath, RequestId };

/// Which injected performance issue is active and how hard it bites.
///
/// The severity is the number of extra iterations of the issue's
/// compute-heavy primitive. It is ignored when kind is None.
struct IssueConfig {
  IssueKind kind = IssueKind::None;
  std::uint32_t severity = 0;

  /// Severity that the given middleware should apply; 0 unless this
  /// config targets exactly that issue.
  [[nodiscard]] std::uint32_t severity_for(IssueKind which) const noexcept {
    return kind == which ? severity : 0;
  }

  friend bool operator==(const IssueConfig&, const IssueConfig&) = default;
};

/// Stable lowercase names: "none", "basic-auth", "clean-path", "request-id".
std::string_view to_string(IssueKind kind);
IssueKind parse_issue_kind(std::string_view text);

/// Short letter used in capability tables: A, B, C (and "-" for None).
std::string_view issue_letter(IssueKind kind);

/// Reads ISSUE_KIND and ISSUE_SEVERITY. Missing variables fall back to
/// `fallback`; malformed values throw ConfigError.
IssueConfig issue_config_from_env(IssueConfig fallback = {});

inline constexpr const char* kIssueKindEnv = "ISSUE_KIND";
inline constexpr const char* kIssueSeverityEnv = "ISSUE_SEVERITY";

}  // namespace perflab
