#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "perflab/booking.hpp"
#include "perflab/issue_config.hpp"
#include "perflab/loadgen.hpp"
#include "perflab/microharness.hpp"
#include "perflab/statlab.hpp"

namespace perflab::conductor {

enum class BenchType { Micro, App };

std::string_view to_string(BenchType type);
BenchType parse_bench_type(std::string_view text);

/// Version labels used by every experiment: v1 is the baseline, v2 carries
/// the issue.
inline constexpr const char* kBaselineVersion = "v1";
inline constexpr const char* kTreatmentVersion = "v2";

struct RmitConfig {
  int instance_runs = 2;
  int suite_runs = 2;
  int iterations = 3;
  double budget_s = 0.2;

  static RmitConfig paper() { return {3, 3, 5, 1.0}; }
  friend bool operator==(const RmitConfig&, const RmitConfig&) = default;
};

struct TrimConfig {
  double warmup_s = 5;
  double cooldown_s = 5;

  static TrimConfig paper() { return {60, 60}; }
  friend bool operator==(const TrimConfig&, const TrimConfig&) = default;
};

enum class Profile { Desk, Paper };

std::string_view to_string(Profile profile);
Profile parse_profile(std::string_view text);

struct ExperimentConfig {
  IssueConfig issue;
  BenchType bench = BenchType::Micro;
  RmitConfig rmit;
  load::WorkloadConfig workload = load::WorkloadConfig::desk();
  TrimConfig trim;
  stats::StatsConfig stats;
  booking::DatasetConfig dataset;
  /// Credentials the S2 scenario books with; must exist in the dataset.
  faults::Credentials credentials{"user1", "password1"};
  std::uint64_t seed = 1;
  /// Where raw data and reports go; empty keeps everything in memory.
  std::string output_dir;

  /// Throws ConfigError.
  void validate() const;

  static ExperimentConfig for_profile(Profile profile, IssueConfig issue, BenchType bench);

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Baseline and treatment issue configs keyed by version label.
micro::VersionMap version_map(const ExperimentConfig& config);

/// Targets an experiment reports on: the 21 suite ids or E1..E4.
std::vector<std::string> expected_targets(BenchType bench);

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<stats::ChangeReport> reports;
  std::vector<stats::RciwStat> rciw;
  /// Raw data; only the part matching config.bench is filled.
  std::vector<micro::MeasurementSample> samples;
  stats::VersionedRecords records;
  /// Raw files relative to config.output_dir.
  std::vector<std::string> raw_files;
  /// Expected targets without a report.
  std::vector<std::string> failed_targets;
  std::uint64_t failed_samples = 0;
  std::uint64_t transport_failures = 0;
  bool partial = false;
  std::string error;

  [[nodiscard]] bool complete() const { return !partial && failed_targets.empty(); }
  [[nodiscard]] const stats::ChangeReport* report(const std::string& target) const;

  friend bool operator==(const ExperimentResult&, const ExperimentResult&) = default;
};

// ---------------------------------------------------------------------------
// Launchers

/// Runs the slots of one RMIT instance run somewhere and returns its samples.
class MicroLauncher {
 public:
  virtual ~MicroLauncher() = default;
  virtual std::vector<micro::MeasurementSample> run_instance(const ExperimentConfig& config, int instance_run) = 0;
};

/// A running service version. Destroying the handle stops it.
class ServiceHandle {
 public:
  virtual ~ServiceHandle() = default;
  [[nodiscard]] virtual load::ServiceInstance instance() const = 0;
  /// False once the service is known to have died.
  [[nodiscard]] virtual bool alive() { return true; }
};

class ServiceLauncher {
 public:
  virtual ~ServiceLauncher() = default;
  virtual std::unique_ptr<ServiceHandle> start(const std::string& version, const IssueConfig& issue,
                                               const booking::DatasetConfig& dataset) = 0;
};

/// Executes instance runs in the calling process.
class InProcessMicroLauncher final : public MicroLauncher {
 public:
  std::vector<micro::MeasurementSample> run_instance(const ExperimentConfig& config, int instance_run) override;
};

/// Executes each instance run as `<executable> micro-instance ...`.
class SubprocessMicroLauncher final : public MicroLauncher {
 public:
  explicit SubprocessMicroLauncher(std::filesystem::path executable) : executable_(std::move(executable)) {}
  std::vector<micro::MeasurementSample> run_instance(const ExperimentConfig& config, int instance_run) override;

 private:
  std::filesystem::path executable_;
};

/// Serves each version from a thread of the calling process.
class InProcessServiceLauncher final : public ServiceLauncher {
 public:
  std::unique_ptr<ServiceHandle> start(const std::string& version, const IssueConfig& issue,
                                       const booking::DatasetConfig& dataset) override;
};

/// Starts each version as `<executable> serve --port 0 --port-file ...`.
class SubprocessServiceLauncher final : public ServiceLauncher {
 public:
  explicit SubprocessServiceLauncher(std::filesystem::path executable, double startup_timeout_s = 30.0)
      : executable_(std::move(executable)), startup_timeout_s_(startup_timeout_s) {}
  std::unique_ptr<ServiceHandle> start(const std::string& version, const IssueConfig& issue,
                                       const booking::DatasetConfig& dataset) override;

 private:
  std::filesystem::path executable_;
  double startup_timeout_s_;
};

/// Placeholder for running instances on other hosts; every call throws.
class RemoteMicroLauncher final : public MicroLauncher {
 public:
  explicit RemoteMicroLauncher(std::string host) : host_(std::move(host)) {}
  std::vector<micro::MeasurementSample> run_instance(const ExperimentConfig& config, int instance_run) override;

 private:
  std::string host_;
};

struct Launchers {
  std::shared_ptr<MicroLauncher> micro;
  std::shared_ptr<ServiceLauncher> service;
};

Launchers in_process_launchers();
Launchers subprocess_launchers(const std::filesystem::path& executable);

// ---------------------------------------------------------------------------
// Experiments

/// The plan every instance run of this experiment follows.
micro::RmitPlan make_rmit_plan(const ExperimentConfig& config);

/// Runs one instance run of the plan in this process.
std::vector<micro::MeasurementSample> run_micro_instance(const ExperimentConfig& config, int instance_run);

/// Statistics over raw data; fills reports, rciw, failed_targets and
/// failed_samples of `result` from result.samples / result.records.
void analyze(ExperimentResult& result);

/// Runs the experiment, persists raw data (when output_dir is set) and
/// then the analysis. Failures are reported in the result, not thrown;
/// ConfigError is thrown for an invalid config.
ExperimentResult run_experiment(const ExperimentConfig& config, const Launchers& launchers);

struct SweepResult {
  stats::DetectionMatrix matrix;
  std::vector<ExperimentResult> experiments;

  [[nodiscard]] bool complete() const;
};

/// One experiment per level with output in `<output_dir>/s<level>`. A failed
/// experiment leaves its cells absent and the sweep continues.
SweepResult run_severity_sweep(const ExperimentConfig& base, const std::vector<std::uint32_t>& levels,
                               const Launchers& launchers);

/// Adds an experiment's reports to a matrix; missing targets become absent.
void add_to_matrix(stats::DetectionMatrix& matrix, const ExperimentResult& result);

// ---------------------------------------------------------------------------
// Reporting

/// Rows are severities, columns are `columns` (default: the M1..M7 and
/// E1..E4 targets present for the issue). Capable columns carry a '*'.
std::string render_detection_table(const stats::DetectionMatrix& matrix, IssueKind issue,
                                   const std::vector<std::string>& columns = {});

struct RciwSummary {
  std::string target;
  std::string version;
  std::size_t count = 0;
  double min = 0;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double max = 0;
};

/// Five-number summary of the RCIW values per (target, version).
std::vector<RciwSummary> summarize_rciw(const std::vector<stats::RciwStat>& stats);

// ---------------------------------------------------------------------------
// Persistence

class PersistError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kSchemaVersion = 1;

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kSamplesFile = "samples.jsonl";
inline constexpr const char* kRecordsFile = "records.jsonl";
inline constexpr const char* kReportsFile = "reports.jsonl";
inline constexpr const char* kRciwFile = "rciw.jsonl";
inline constexpr const char* kPlanFile = "plan.json";

std::string config_to_json(const ExperimentConfig& config);
/// Throws ConfigError on malformed input.
ExperimentConfig config_from_json(std::string_view text);
/// SHA-256 hex of the canonical config JSON.
std::string config_hash(const ExperimentConfig& config);

void write_samples(const std::filesystem::path& path, const std::vector<micro::MeasurementSample>& samples);
std::vector<micro::MeasurementSample> read_samples(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, const stats::VersionedRecords& records);
stats::VersionedRecords read_records(const std::filesystem::path& path);
void write_reports(const std::filesystem::path& path, const std::vector<stats::ChangeReport>& reports);
std::vector<stats::ChangeReport> read_reports(const std::filesystem::path& path);
void write_plan(const std::filesystem::path& path, const micro::RmitPlan& plan);

/// Raw data only (samples or records).
void persist_raw(const ExperimentResult& result, const std::filesystem::path& dir);
/// Raw data, reports, RCIW and the manifest.
void persist_results(const ExperimentResult& result, const std::filesystem::path& dir);
/// Throws PersistError when the manifest is missing or has another schema
/// version. A config hash mismatch only adds a warning.
ExperimentResult load_results(const std::filesystem::path& dir, std::vector<std::string>* warnings = nullptr);

}  // namespace perflab::conductor
