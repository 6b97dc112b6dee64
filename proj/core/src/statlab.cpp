#include "perflab/statlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace perflab::stats {
namespace {

double median_in_place(std::vector<double>& values) {
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return lower + (upper - lower) / 2.0;
}

void resample(std::span<const double> data, std::vector<double>& out, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> index(0, data.size() - 1);
  out.resize(data.size());
  for (double& x : out) x = data[index(rng)];
}

void require_samples(std::span<const double> values, const char* what) {
  if (values.empty()) throw StatsError(std::string(what) + " must not be empty");
  for (double v : values) {
    if (!(v > 0) || !std::isfinite(v)) throw StatsError(std::string(what) + " must contain positive finite values");
  }
}

void require_bootstrap(int iterations, double level) {
  if (iterations < 1) throw StatsError("bootstrap iterations must be at least 1");
  if (!(level > 0 && level < 1)) throw StatsError("confidence level must lie in (0, 1)");
}

ConfidenceInterval percentile_interval(std::vector<double>& distribution, double level, int iterations) {
  std::sort(distribution.begin(), distribution.end());
  const double tail = (1.0 - level) / 2.0;
  return {sorted_quantile(distribution, tail), sorted_quantile(distribution, 1.0 - tail), level, iterations};
}

std::uint64_t mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

double median(std::span<const double> values) {
  if (values.empty()) throw StatsError("median of an empty sample");
  std::vector<double> copy(values.begin(), values.end());
  return median_in_place(copy);
}

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw StatsError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::string_view to_string(ChangeClass change) {
  switch (change) {
    case ChangeClass::NoChange: return "no-change";
    case ChangeClass::SmallRegression: return "small-regression";
    case ChangeClass::RelevantRegression: return "relevant-regression";
    case ChangeClass::SmallImprovement: return "small-improvement";
    case ChangeClass::RelevantImprovement: return "relevant-improvement";
  }
  return "no-change";
}

ChangeClass parse_change_class(std::string_view text) {
  for (auto c : {ChangeClass::NoChange, ChangeClass::SmallRegression, ChangeClass::RelevantRegression,
                 ChangeClass::SmallImprovement, ChangeClass::RelevantImprovement}) {
    if (to_string(c) == text) return c;
  }
  throw StatsError("unknown change class '" + std::string(text) + "'");
}

char symbol(ChangeClass change) {
  switch (change) {
    case ChangeClass::NoChange: return '.';
    case ChangeClass::SmallRegression: return 'r';
    case ChangeClass::RelevantRegression: return 'R';
    case ChangeClass::SmallImprovement: return 'i';
    case ChangeClass::RelevantImprovement: return 'I';
  }
  return '?';
}

std::vector<std::string> legend() {
  return {
      ". no performance change",
      "r <=3% performance regression (small)",
      "R >3% performance regression (relevant)",
      "i <=3% performance improvement (small)",
      "I >3% performance improvement (relevant)",
  };
}

void StatsConfig::validate() const {
  require_bootstrap(bootstrap_iterations, level);
  if (!(small_threshold >= 0 && small_threshold < 1)) throw StatsError("small threshold must lie in [0, 1)");
}

// ---------------------------------------------------------------------------

TrimWindow trim_window(const VersionedRecords& records, double warmup_s, double cooldown_s) {
  if (warmup_s < 0 || cooldown_s < 0) throw StatsError("warmup and cooldown must be non-negative");
  if (records.empty()) throw StatsError("no versions to trim");
  double first_finish = std::numeric_limits<double>::infinity();
  for (const auto& [version, list] : records) {
    if (list.empty()) throw StatsError("version '" + version + "' has no records");
    double last = -std::numeric_limits<double>::infinity();
    for (const auto& r : list) last = std::max(last, r.start_s);
    first_finish = std::min(first_finish, last);
  }
  TrimWindow window{warmup_s, first_finish - cooldown_s};
  if (window.end_s < window.begin_s) {
    throw StatsError("trimming leaves an empty window: [" + std::to_string(window.begin_s) + ", " +
                     std::to_string(window.end_s) + "]");
  }
  return window;
}

VersionedRecords trim_records(const VersionedRecords& records, double warmup_s, double cooldown_s) {
  const TrimWindow window = trim_window(records, warmup_s, cooldown_s);
  VersionedRecords out;
  for (const auto& [version, list] : records) {
    auto& kept = out[version];
    for (const auto& r : list) {
      if (r.start_s >= window.begin_s && r.start_s <= window.end_s) kept.push_back(r);
    }
    if (kept.empty()) throw StatsError("trimming removed every record of version '" + version + "'");
  }
  return out;
}

std::vector<SecondMedian> per_second_medians(std::span<const load::RequestRecord> records) {
  std::map<std::int64_t, std::vector<double>> buckets;
  for (const auto& r : records) buckets[static_cast<std::int64_t>(std::floor(r.start_s))].push_back(r.latency_ns);
  std::vector<SecondMedian> out;
  out.reserve(buckets.size());
  for (auto& [second, latencies] : buckets) out.push_back({second, median_in_place(latencies)});
  return out;
}

// ---------------------------------------------------------------------------

double median_ratio(std::span<const double> v1, std::span<const double> v2) {
  require_samples(v1, "v1 samples");
  require_samples(v2, "v2 samples");
  const double m1 = median(v1);
  if (m1 == 0) throw StatsError("baseline median is zero");
  return median(v2) / m1;
}

ConfidenceInterval bootstrap_ci_median_ratio(std::span<const double> v1, std::span<const double> v2,
                                             int iterations, double level, std::mt19937_64& rng) {
  require_samples(v1, "v1 samples");
  require_samples(v2, "v2 samples");
  require_bootstrap(iterations, level);

  std::vector<double> distribution;
  distribution.reserve(static_cast<std::size_t>(iterations));
  std::vector<double> b1, b2;
  for (int i = 0; i < iterations; ++i) {
    resample(v1, b1, rng);
    resample(v2, b2, rng);
    distribution.push_back(median_in_place(b2) / median_in_place(b1));
  }
  return percentile_interval(distribution, level, iterations);
}

ChangeClass classify_change(double ratio, const ConfidenceInterval& ci, double small_threshold) {
  if (ci.lo <= 1.0 && 1.0 <= ci.hi) return ChangeClass::NoChange;
  const bool regression = ratio > 1.0 || (ratio == 1.0 && ci.lo > 1.0);
  if (regression) {
    return ratio > 1.0 + small_threshold ? ChangeClass::RelevantRegression : ChangeClass::SmallRegression;
  }
  return ratio < 1.0 - small_threshold ? ChangeClass::RelevantImprovement : ChangeClass::SmallImprovement;
}

ChangeReport analyze_change(const std::string& target, std::span<const double> v1, std::span<const double> v2,
                            const StatsConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ChangeReport report;
  report.target = target;
  report.ratio = median_ratio(v1, v2);
  report.ci = bootstrap_ci_median_ratio(v1, v2, config.bootstrap_iterations, config.level, rng);
  report.change = classify_change(report.ratio, report.ci, config.small_threshold);
  report.n1 = v1.size();
  report.n2 = v2.size();
  return report;
}

RciwStat compute_rciw(std::span<const double> samples, int iterations, double level, std::mt19937_64& rng) {
  if (samples.empty()) throw StatsError("RCIW of an empty sample");
  require_bootstrap(iterations, level);
  const double m = median(samples);
  if (m == 0) throw StatsError("RCIW undefined for a zero median");

  std::vector<double> distribution;
  distribution.reserve(static_cast<std::size_t>(iterations));
  std::vector<double> buffer;
  for (int i = 0; i < iterations; ++i) {
    resample(samples, buffer, rng);
    distribution.push_back(median_in_place(buffer));
  }
  RciwStat stat;
  stat.ci = percentile_interval(distribution, level, iterations);
  stat.median = m;
  stat.rciw = (stat.ci.hi - stat.ci.lo) / std::abs(m);
  return stat;
}

std::uint64_t target_seed(std::uint64_t seed, std::string_view target) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : target) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix(seed ^ mix(h));
}

// ---------------------------------------------------------------------------

void DetectionMatrix::add(IssueKind issue, std::uint32_t severity, const ChangeReport& report) {
  MatrixKey key{issue, severity, report.target};
  if (cells_.contains(key) || absent_.contains(key)) {
    throw StatsError("duplicate detection cell (" + std::string(perflab::to_string(issue)) + ", " +
                     std::to_string(severity) + ", " + report.target + ")");
  }
  cells_.emplace(std::move(key), report);
}

void DetectionMatrix::mark_absent(IssueKind issue, std::uint32_t severity, const std::string& target) {
  MatrixKey key{issue, severity, target};
  if (cells_.contains(key) || absent_.contains(key)) {
    throw StatsError("duplicate detection cell (" + std::string(perflab::to_string(issue)) + ", " +
                     std::to_string(severity) + ", " + target + ")");
  }
  absent_.emplace(std::move(key), true);
}

std::optional<ChangeClass> DetectionMatrix::at(IssueKind issue, std::uint32_t severity,
                                               const std::string& target) const {
  const ChangeReport* r = report(issue, severity, target);
  if (!r) return std::nullopt;
  return r->change;
}

const ChangeReport* DetectionMatrix::report(IssueKind issue, std::uint32_t severity, const std::string& target) const {
  auto it = cells_.find(MatrixKey{issue, severity, target});
  return it == cells_.end() ? nullptr : &it->second;
}

bool DetectionMatrix::explicitly_absent(IssueKind issue, std::uint32_t severity, const std::string& target) const {
  return absent_.contains(MatrixKey{issue, severity, target});
}

std::vector<std::uint32_t> DetectionMatrix::severities(IssueKind issue) const {
  std::vector<std::uint32_t> out;
  auto collect = [&](const MatrixKey& k) {
    if (k.issue == issue && std::find(out.begin(), out.end(), k.severity) == out.end()) out.push_back(k.severity);
  };
  for (const auto& [k, v] : cells_) collect(k);
  for (const auto& [k, v] : absent_) collect(k);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> DetectionMatrix::targets(IssueKind issue) const {
  std::vector<std::string> out;
  auto collect = [&](const MatrixKey& k) {
    if (k.issue == issue && std::find(out.begin(), out.end(), k.target) == out.end()) out.push_back(k.target);
  };
  for (const auto& [k, v] : cells_) collect(k);
  for (const auto& [k, v] : absent_) collect(k);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<IssueKind> DetectionMatrix::issues() const {
  std::vector<IssueKind> out;
  auto collect = [&](const MatrixKey& k) {
    if (std::find(out.begin(), out.end(), k.issue) == out.end()) out.push_back(k.issue);
  };
  for (const auto& [k, v] : cells_) collect(k);
  for (const auto& [k, v] : absent_) collect(k);
  std::sort(out.begin(), out.end());
  return out;
}

void DetectionMatrix::merge(const DetectionMatrix& other) {
  for (const auto& [k, report] : other.cells_) add(k.issue, k.severity, report);
  for (const auto& [k, v] : other.absent_) mark_absent(k.issue, k.severity, k.target);
}

DetectionMatrix build_detection_matrix(const std::vector<MatrixEntry>& entries) {
  DetectionMatrix matrix;
  for (const auto& e : entries) matrix.add(e.issue, e.severity, e.report);
  return matrix;
}

}  // namespace perflab::stats
