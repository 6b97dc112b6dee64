#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "perflab/faults.hpp"
#include "perflab/issue_config.hpp"
#include "perflab/server.hpp"

namespace perflab::load {

enum class Endpoint {
  BookingsPost = 1,  // E1  POST /bookings
  Destinations = 2,  // E2  GET /destinations
  FlightsQuery = 3,  // E3  GET /flights?from=
  Seats = 4,         // E4  GET /flights/{id}/seats
};

/// "E1".."E4"
std::string endpoint_id(Endpoint endpoint);
Endpoint parse_endpoint(std::string_view id);

/// Status used for requests that got no HTTP response at all.
inline constexpr int kTransportFailure = 0;

struct RequestRecord {
  Endpoint endpoint = Endpoint::Destinations;
  std::string version;
  double start_s = 0;     // since the shared experiment epoch
  double latency_ns = 0;  // always > 0
  int status = 0;

  friend bool operator==(const RequestRecord&, const RequestRecord&) = default;
};

struct WorkloadConfig {
  int s1_vus = 5;
  int s1_iterations = 100;
  int s2_vus = 2;
  int s2_iterations = 20;
  std::uint64_t seed = 1;

  /// Throws ConfigError.
  void validate() const;

  /// 50 x 2000 flight searches and 10 x 380 search-and-book iterations.
  static WorkloadConfig paper();
  /// Single-host profile: 5 x 1000 and 2 x 400, about 30 s per A/A duet
  /// on one core, long enough for a 5 s warmup and cooldown.
  static WorkloadConfig desk();

  friend bool operator==(const WorkloadConfig&, const WorkloadConfig&) = default;
};

using Clock = std::chrono::steady_clock;

/// Per-VU state handed to the scenario functions.
struct VuContext {
  std::string version;
  Clock::time_point epoch;
  faults::Credentials credentials;
  /// Airports seen in the last successful /destinations response.
  std::vector<std::string> known_airports;
};

/// S1: GET /destinations, then GET /flights?from=<random airport>.
std::vector<RequestRecord> run_iteration_s1(ServiceClient& client, std::mt19937_64& rng, VuContext& vu);

/// S2: S1, then GET /flights/{random flight}/seats, then POST /bookings with
/// two random available seats. Stops early when there is nothing to pick.
std::vector<RequestRecord> run_iteration_s2(ServiceClient& client, std::mt19937_64& rng, VuContext& vu);

/// One side of a duet: how to reach a version of the service.
struct WorkloadTarget {
  std::string version;
  std::function<std::unique_ptr<ServiceClient>()> make_client;
};

struct VersionTotals {
  std::uint64_t s1_iterations = 0;
  std::uint64_t s2_iterations = 0;
  std::uint64_t search_iterations = 0;  // every iteration of either scenario
  std::uint64_t booking_attempts = 0;   // iterations that issued POST /bookings
  std::uint64_t transport_failures = 0;
};

struct WorkloadResult {
  std::map<std::string, std::vector<RequestRecord>> records;
  std::map<std::string, VersionTotals> totals;
  bool partial = false;
  std::string error;
};

/// Seed of one VU's private random stream.
std::uint64_t vu_seed(std::uint64_t seed, std::string_view version, int vu_index);

/// Runs the closed workload against all targets at once. Each target gets
/// s1_vus + s2_vus workers; every worker waits for a common start signal.
WorkloadResult run_workload(const std::vector<WorkloadTarget>& targets, const WorkloadConfig& config,
                            const faults::Credentials& credentials);

struct ServiceInstance {
  std::string version;
  std::string host = "127.0.0.1";
  int port = 0;
  std::optional<double> cpu_quota;  // cores; informational, enforced by the launcher
};

struct DuetDeployment {
  ServiceInstance first;
  ServiceInstance second;
};

/// Probes both instances, then drives them simultaneously over HTTP.
/// Throws std::runtime_error when a readiness probe fails.
WorkloadResult run_duet_workload(const DuetDeployment& deployment, const WorkloadConfig& config,
                                 const faults::Credentials& credentials, double probe_timeout_s = 10.0);

/// Canned-response client for counting runs; never touches the network.
class StubServiceClient final : public ServiceClient {
 public:
  HttpResponse send(const HttpRequest& request) override;
};

/// Runs the workload against two stub versions and returns per-version
/// totals; used to verify iteration accounting without timing anything.
std::map<std::string, VersionTotals> dry_run_counts(const WorkloadConfig& config);

}  // namespace perflab::load
