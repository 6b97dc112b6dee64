#include "perflab/loadgen.hpp"

#include <algorithm>
#include <latch>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "perflab/booking.hpp"

namespace perflab::load {
namespace {

using nlohmann::json;

struct Exchange {
  std::optional<HttpResponse> response;
};

Exchange send_timed(ServiceClient& client, const HttpRequest& request, Endpoint endpoint, VuContext& vu,
                    std::vector<RequestRecord>& records) {
  Exchange exchange;
  auto start = Clock::now();
  int status = kTransportFailure;
  try {
    exchange.response = client.send(request);
    status = exchange.response->status;
  } catch (const TransportError&) {
  }
  auto end = Clock::now();
  double latency = std::chrono::duration<double, std::nano>(end - start).count();
  records.push_back({endpoint, vu.version, std::chrono::duration<double>(start - vu.epoch).count(),
                     std::max(latency, 1.0), status});
  return exchange;
}

std::optional<json> json_body(const Exchange& exchange) {
  if (!exchange.response || exchange.response->status != 200) return std::nullopt;
  json body = json::parse(exchange.response->body, nullptr, false);
  if (body.is_discarded() || !body.is_array()) return std::nullopt;
  return body;
}

template <typename T>
const T& pick(const std::vector<T>& values, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, values.size() - 1);
  return values[dist(rng)];
}

/// The S1 steps; returns the flight ids listed by the E3 response.
std::vector<std::string> search(ServiceClient& client, std::mt19937_64& rng, VuContext& vu,
                                std::vector<RequestRecord>& records) {
  Exchange destinations = send_timed(client, {"GET", "/destinations", {}, {}}, Endpoint::Destinations, vu, records);
  if (auto body = json_body(destinations)) {
    std::vector<std::string> codes;
    for (const auto& airport : *body) {
      if (airport.contains("code") && airport["code"].is_string()) codes.push_back(airport["code"].get<std::string>());
    }
    if (!codes.empty()) vu.known_airports = std::move(codes);
  }

  std::string target = "/flights";
  if (!vu.known_airports.empty()) target += "?from=" + pick(vu.known_airports, rng);
  Exchange flights = send_timed(client, {"GET", target, {}, {}}, Endpoint::FlightsQuery, vu, records);

  std::vector<std::string> ids;
  if (auto body = json_body(flights)) {
    for (const auto& flight : *body) {
      if (flight.contains("id") && flight["id"].is_string()) ids.push_back(flight["id"].get<std::string>());
    }
  }
  return ids;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string endpoint_id(Endpoint endpoint) { return "E" + std::to_string(static_cast<int>(endpoint)); }

Endpoint parse_endpoint(std::string_view id) {
  if (id == "E1") return Endpoint::BookingsPost;
  if (id == "E2") return Endpoint::Destinations;
  if (id == "E3") return Endpoint::FlightsQuery;
  if (id == "E4") return Endpoint::Seats;
  throw ConfigError("unknown endpoint '" + std::string(id) + "'");
}

void WorkloadConfig::validate() const {
  if (s1_vus < 0 || s1_iterations < 0 || s2_vus < 0 || s2_iterations < 0) {
    throw ConfigError("workload counts must be non-negative");
  }
  if (s1_vus * s1_iterations == 0 && s2_vus * s2_iterations == 0) {
    throw ConfigError("at least one scenario must have VUs and iterations");
  }
}

WorkloadConfig WorkloadConfig::paper() { return {50, 2000, 10, 380, 1}; }

WorkloadConfig WorkloadConfig::desk() { return {5, 1000, 2, 400, 1}; }

std::vector<RequestRecord> run_iteration_s1(ServiceClient& client, std::mt19937_64& rng, VuContext& vu) {
  std::vector<RequestRecord> records;
  search(client, rng, vu, records);
  return records;
}

std::vector<RequestRecord> run_iteration_s2(ServiceClient& client, std::mt19937_64& rng, VuContext& vu) {
  std::vector<RequestRecord> records;
  std::vector<std::string> flights = search(client, rng, vu, records);
  if (flights.empty()) return records;

  const std::string& flight = pick(flights, rng);
  Exchange seats = send_timed(client, {"GET", "/flights/" + flight + "/seats", {}, {}}, Endpoint::Seats, vu, records);
  std::vector<std::string> available;
  if (auto body = json_body(seats)) {
    for (const auto& seat : *body) {
      if (seat.contains("seatId") && seat["seatId"].is_string()) available.push_back(seat["seatId"].get<std::string>());
    }
  }
  if (available.empty()) return records;

  std::vector<std::string> chosen;
  std::sample(available.begin(), available.end(), std::back_inserter(chosen), 2, rng);
  std::shuffle(chosen.begin(), chosen.end(), rng);

  HttpRequest request{"POST", "/bookings", {}, booking::handlers::booking_request_body(flight, chosen)};
  request.headers.set("Authorization", basic_auth_header(vu.credentials.user, vu.credentials.password));
  request.headers.set("Content-Type", "application/json");
  send_timed(client, request, Endpoint::BookingsPost, vu, records);
  return records;
}

std::uint64_t vu_seed(std::uint64_t seed, std::string_view version, int vu_index) {
  return mix(mix(seed + 0x9E3779B97F4A7C15ULL) ^ fnv1a(version) ^ mix(static_cast<std::uint64_t>(vu_index) + 1));
}

WorkloadResult run_workload(const std::vector<WorkloadTarget>& targets, const WorkloadConfig& config,
                            const faults::Credentials& credentials) {
  config.validate();
  if (targets.empty()) throw ConfigError("workload needs at least one target");
  std::set<std::string> labels;
  for (const auto& t : targets) {
    if (!labels.insert(t.version).second) throw ConfigError("duplicate version label '" + t.version + "'");
  }

  struct Worker {
    std::string version;
    int index = 0;
    bool booking_scenario = false;
    std::vector<RequestRecord> records;
    VersionTotals totals;
    std::string error;
  };
  const int vus_per_target = config.s1_vus + config.s2_vus;
  std::vector<Worker> workers;
  for (const auto& t : targets) {
    for (int vu = 0; vu < vus_per_target; ++vu) {
      workers.push_back({t.version, vu, vu >= config.s1_vus, {}, {}, {}});
    }
  }

  std::latch ready(static_cast<std::ptrdiff_t>(workers.size()));
  std::latch go(1);
  Clock::time_point epoch;
  std::vector<std::thread> threads;
  threads.reserve(workers.size());
  for (std::size_t w = 0; w < workers.size(); ++w) {
    const WorkloadTarget& target = targets[w / static_cast<std::size_t>(vus_per_target)];
    threads.emplace_back([&, w] {
      Worker& worker = workers[w];
      std::unique_ptr<ServiceClient> client;
      try {
        client = target.make_client();
      } catch (const std::exception& e) {
        worker.error = e.what();
      }
      ready.count_down();
      go.wait();
      if (!client) return;

      VuContext vu{worker.version, epoch, credentials, {}};
      std::mt19937_64 rng(vu_seed(config.seed, worker.version, worker.index));
      const int iterations = worker.booking_scenario ? config.s2_iterations : config.s1_iterations;
      for (int i = 0; i < iterations; ++i) {
        std::vector<RequestRecord> batch;
        try {
          batch = worker.booking_scenario ? run_iteration_s2(*client, rng, vu) : run_iteration_s1(*client, rng, vu);
        } catch (const std::exception& e) {
          worker.error = e.what();
          break;
        }
        ++(worker.booking_scenario ? worker.totals.s2_iterations : worker.totals.s1_iterations);
        ++worker.totals.search_iterations;
        for (const auto& r : batch) {
          if (r.status == kTransportFailure) ++worker.totals.transport_failures;
          if (r.endpoint == Endpoint::BookingsPost) ++worker.totals.booking_attempts;
        }
        worker.records.insert(worker.records.end(), batch.begin(), batch.end());
      }
    });
  }

  ready.wait();
  epoch = Clock::now();
  go.count_down();
  for (auto& t : threads) t.join();

  WorkloadResult result;
  for (const auto& t : targets) {
    result.records[t.version];
    result.totals[t.version];
  }
  for (auto& worker : workers) {
    auto& records = result.records[worker.version];
    records.insert(records.end(), worker.records.begin(), worker.records.end());
    auto& totals = result.totals[worker.version];
    totals.s1_iterations += worker.totals.s1_iterations;
    totals.s2_iterations += worker.totals.s2_iterations;
    totals.search_iterations += worker.totals.search_iterations;
    totals.booking_attempts += worker.totals.booking_attempts;
    totals.transport_failures += worker.totals.transport_failures;
    if (!worker.error.empty()) {
      result.partial = true;
      if (result.error.empty()) result.error = worker.version + "/vu" + std::to_string(worker.index) + ": " + worker.error;
    }
  }
  for (auto& [version, records] : result.records) {
    std::stable_sort(records.begin(), records.end(),
                     [](const RequestRecord& a, const RequestRecord& b) { return a.start_s < b.start_s; });
  }
  return result;
}

WorkloadResult run_duet_workload(const DuetDeployment& deployment, const WorkloadConfig& config,
                                 const faults::Credentials& credentials, double probe_timeout_s) {
  if (deployment.first.version == deployment.second.version) {
    throw ConfigError("duet versions must have distinct labels");
  }
  if (deployment.first.port == deployment.second.port && deployment.first.host == deployment.second.host) {
    throw ConfigError("duet instances must listen on distinct ports");
  }
  for (const auto* instance : {&deployment.first, &deployment.second}) {
    if (!wait_until_ready(instance->host, instance->port, probe_timeout_s)) {
      throw std::runtime_error("readiness probe failed for " + instance->version + " at " + instance->host + ":" +
                               std::to_string(instance->port));
    }
  }
  std::vector<WorkloadTarget> targets;
  for (const auto* instance : {&deployment.first, &deployment.second}) {
    targets.push_back({instance->version, [host = instance->host, port = instance->port] {
                         return std::make_unique<HttpServiceClient>(host, port);
                       }});
  }
  return run_workload(targets, config, credentials);
}

HttpResponse StubServiceClient::send(const HttpRequest& request) {
  HttpResponse response;
  response.headers.set("Content-Type", "application/json");
  std::string_view target = request.target;
  if (request.method == "POST") {
    response.status = 201;
    response.body = R"({"bookingId":"BK00000001","flightId":"FL00001","seatIds":["1A","1B"]})";
  } else if (target == "/destinations") {
    response.body = R"([{"code":"AAA","name":"Airport AAA"},{"code":"BBB","name":"Airport BBB"}])";
  } else if (target.ends_with("/seats")) {
    response.body = R"([{"seatId":"1A"},{"seatId":"1B"},{"seatId":"1C"}])";
  } else {
    response.body = R"([{"id":"FL00001","from":"AAA","to":"BBB","departure":"2026-11-01T00:00:00Z"}])";
  }
  return response;
}

std::map<std::string, VersionTotals> dry_run_counts(const WorkloadConfig& config) {
  std::vector<WorkloadTarget> targets;
  for (const char* label : {"v1", "v2"}) {
    targets.push_back({label, [] { return std::make_unique<StubServiceClient>(); }});
  }
  return run_workload(targets, config, {"user1", "password1"}).totals;
}

}  // namespace perflab::load
