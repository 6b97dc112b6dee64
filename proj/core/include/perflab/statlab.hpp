#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "perflab/issue_config.hpp"
#include "perflab/loadgen.hpp"

namespace perflab::stats {

class StatsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Median; even-length inputs use the midpoint of the central pair.
/// Throws StatsError on empty input.
double median(std::span<const double> values);

/// Linear-interpolation quantile (R type 7) of already sorted values.
double sorted_quantile(std::span<const double> sorted, double q);

struct ConfidenceInterval {
  double lo = 0;
  double hi = 0;
  double level = 0.99;
  int iterations = 0;

  friend bool operator==(const ConfidenceInterval&, const ConfidenceInterval&) = default;
};

enum class ChangeClass { NoChange, SmallRegression, RelevantRegression, SmallImprovement, RelevantImprovement };

std::string_view to_string(ChangeClass change);
ChangeClass parse_change_class(std::string_view text);
/// One-character table symbol.
char symbol(ChangeClass change);
/// Legend lines, one per class.
std::vector<std::string> legend();

struct StatsConfig {
  int bootstrap_iterations = 10000;
  double level = 0.99;
  double small_threshold = 0.03;

  void validate() const;

  friend bool operator==(const StatsConfig&, const StatsConfig&) = default;
};

struct ChangeReport {
  std::string target;
  double ratio = 0;
  ConfidenceInterval ci;
  ChangeClass change = ChangeClass::NoChange;
  std::size_t n1 = 0;
  std::size_t n2 = 0;

  friend bool operator==(const ChangeReport&, const ChangeReport&) = default;
};

struct RciwStat {
  std::string target;
  std::string version;
  double rciw = 0;
  double median = 0;
  ConfidenceInterval ci;

  friend bool operator==(const RciwStat&, const RciwStat&) = default;
};

// ---------------------------------------------------------------------------
// Application-benchmark preprocessing

using VersionedRecords = std::map<std::string, std::vector<load::RequestRecord>>;

struct TrimWindow {
  double begin_s = 0;
  double end_s = 0;
};

/// [warmup, firstFinish - cooldown], where firstFinish is the earliest of
/// the versions' last start times. Throws StatsError when the window is
/// empty.
TrimWindow trim_window(const VersionedRecords& records, double warmup_s, double cooldown_s);

/// Keeps records with begin <= start <= end, identically for every version.
VersionedRecords trim_records(const VersionedRecords& records, double warmup_s, double cooldown_s);

struct SecondMedian {
  std::int64_t second = 0;
  double median_ns = 0;
  friend bool operator==(const SecondMedian&, const SecondMedian&) = default;
};

/// Median latency per floor(start) bucket, ascending; empty seconds are skipped.
std::vector<SecondMedian> per_second_medians(std::span<const load::RequestRecord> records);

// ---------------------------------------------------------------------------
// Change detection

/// median(v2) / median(v1). Throws StatsError on empty input, a
/// non-positive sample or a zero median.
double median_ratio(std::span<const double> v1, std::span<const double> v2);

/// Percentile bootstrap of the median ratio: both samples are resampled
/// independently with replacement at their own sizes.
ConfidenceInterval bootstrap_ci_median_ratio(std::span<const double> v1, std::span<const double> v2,
                                             int iterations, double level, std::mt19937_64& rng);

/// NoChange when lo <= 1 <= hi; otherwise the direction comes from r and
/// the magnitude from |r - 1| against the (inclusive) small band.
ChangeClass classify_change(double ratio, const ConfidenceInterval& ci, double small_threshold = 0.03);

/// median_ratio + bootstrap + classify in one go.
ChangeReport analyze_change(const std::string& target, std::span<const double> v1, std::span<const double> v2,
                            const StatsConfig& config, std::uint64_t seed);

/// Bootstrap CI of the median divided by the median.
RciwStat compute_rciw(std::span<const double> samples, int iterations, double level, std::mt19937_64& rng);

/// Seed for one target's bootstrap, derived from an experiment seed.
std::uint64_t target_seed(std::uint64_t seed, std::string_view target);

// ---------------------------------------------------------------------------
// Detection matrix

struct MatrixKey {
  IssueKind issue = IssueKind::None;
  std::uint32_t severity = 0;
  std::string target;

  auto operator<=>(const MatrixKey&) const = default;
};

struct MatrixEntry {
  IssueKind issue = IssueKind::None;
  std::uint32_t severity = 0;
  ChangeReport report;
};

/// Classification per (issue, severity, target). Cells that were never
/// filled are absent; cells can also be explicitly marked absent (failed).
class DetectionMatrix {
 public:
  /// Throws StatsError when the cell is already present.
  void add(IssueKind issue, std::uint32_t severity, const ChangeReport& report);
  void mark_absent(IssueKind issue, std::uint32_t severity, const std::string& target);

  [[nodiscard]] std::optional<ChangeClass> at(IssueKind issue, std::uint32_t severity,
                                              const std::string& target) const;
  [[nodiscard]] const ChangeReport* report(IssueKind issue, std::uint32_t severity, const std::string& target) const;
  [[nodiscard]] bool explicitly_absent(IssueKind issue, std::uint32_t severity, const std::string& target) const;

  [[nodiscard]] std::vector<std::uint32_t> severities(IssueKind issue) const;
  [[nodiscard]] std::vector<std::string> targets(IssueKind issue) const;
  [[nodiscard]] std::vector<IssueKind> issues() const;
  [[nodiscard]] std::size_t size() const noexcept { return cells_.size(); }
  [[nodiscard]] bool empty() const noexcept { return cells_.empty() && absent_.empty(); }
  [[nodiscard]] std::size_t absent_count() const noexcept { return absent_.size(); }

  /// Merges another matrix; duplicate cells throw StatsError.
  void merge(const DetectionMatrix& other);

 private:
  std::map<MatrixKey, ChangeReport> cells_;
  std::map<MatrixKey, bool> absent_;
};

DetectionMatrix build_detection_matrix(const std::vector<MatrixEntry>& entries);

}  // namespace perflab::stats
