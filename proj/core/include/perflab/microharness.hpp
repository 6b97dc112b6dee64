#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perflab/booking.hpp"
#include "perflab/capabilities.hpp"
#include "perflab/issue_config.hpp"

namespace perflab::micro {

enum class Group { Store, Handler, Router };

std::string_view to_string(Group group);

/// The timed body of one iteration. It owns whatever state it needs.
using Operation = std::function<void()>;

/// Builds the per-iteration state for one version (outside the timed region)
/// and returns the operation to time.
using Prepare = std::function<Operation(const IssueConfig&)>;

struct Microbenchmark {
  std::string id;    // "M1".."M7" for the router group, "store.*" / "handler.*" otherwise
  std::string name;  // descriptive name, e.g. "RequestCreateBooking"
  Group group = Group::Store;
  IssueSet expected_detects;
  Prepare prepare;
};

/// Creates an independent, freshly seeded service for an issue config.
using ServiceFactory = std::function<std::shared_ptr<booking::BookingService>(const IssueConfig&)>;

/// Seeds the dataset once and hands out copies of the store.
ServiceFactory default_service_factory(const booking::DatasetConfig& dataset = {});

/// The 21-benchmark suite: 7 store, 7 handler and 7 router benchmarks.
std::vector<Microbenchmark> register_suite(ServiceFactory factory);

// ---------------------------------------------------------------------------
// Timing

struct TimedRun {
  double mean_ns = 0;
  std::uint64_t ops = 0;
  double elapsed_ns = 0;
};

/// Runs `op` in geometrically growing batches until the accumulated batch
/// time reaches `budget_seconds`. Exceptions from `op` propagate.
TimedRun time_operation(const Operation& op, double budget_seconds);

struct MeasurementSample {
  std::string bench_id;
  std::string version;
  int instance_run = 0;
  int suite_run = 0;
  int iteration = 0;
  double mean_ns = 0;
  std::uint64_t ops = 0;
  double budget_s = 0;
  bool failed = false;
  std::string error;

  friend bool operator==(const MeasurementSample&, const MeasurementSample&) = default;
};

/// One timed iteration of `bench` against the version configured by
/// `issue`. Failures are reported in the sample, not thrown.
MeasurementSample run_timed_iteration(const Microbenchmark& bench, const IssueConfig& issue,
                                      double budget_seconds);

// ---------------------------------------------------------------------------
// Randomized multiple interleaved trials

struct RmitSlot {
  int instance_run = 0;
  int suite_run = 0;
  std::string bench_id;
  std::string version;
  int iteration = 0;

  friend bool operator==(const RmitSlot&, const RmitSlot&) = default;
};

struct RmitPlan {
  std::vector<std::string> bench_ids;
  std::array<std::string, 2> versions;
  int instance_runs = 0;
  int suite_runs = 0;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::vector<RmitSlot> slots;

  /// Slots belonging to one instance run, in plan order.
  [[nodiscard]] std::vector<RmitSlot> slots_for_instance(int instance_run) const;

  friend bool operator==(const RmitPlan&, const RmitPlan&) = default;
};

/// Per (instance run, suite run) the benchmark order is shuffled; for each
/// benchmark the two versions run as adjacent blocks of `iterations`, in a
/// random order. Throws ConfigError for counts < 1 or duplicate ids/versions.
RmitPlan build_rmit_plan(std::span<const std::string> bench_ids, std::array<std::string, 2> versions,
                         int instance_runs, int suite_runs, int iterations, std::uint64_t seed);

using VersionMap = std::map<std::string, IssueConfig>;

using SampleCallback = std::function<void(const MeasurementSample&)>;

/// Executes the slots in plan order (only `instance_run`'s slots if given),
/// one sample per slot. Never runs two iterations concurrently.
std::vector<MeasurementSample> execute_plan(const RmitPlan& plan, std::span<const Microbenchmark> suite,
                                            const VersionMap& versions, double budget_seconds,
                                            std::optional<int> instance_run = {},
                                            const SampleCallback& on_sample = {});

/// Busy-waits for roughly `duration_ns` on the monotonic clock.
void spin_for_ns(double duration_ns);

}  // namespace perflab::micro
