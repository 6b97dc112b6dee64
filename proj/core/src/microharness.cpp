#include "perflab/microharness.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>
#include <random>
#include <set>
#include <stdexcept>

namespace perflab::micro {
namespace {

using Clock = std::chrono::steady_clock;
using booking::BookingService;

constexpr std::uint64_t kInputSeed = 0x5eed;
constexpr std::size_t kInputCount = 4096;

/// Memoizes one service per issue config for read-only benchmarks.
class ServiceCache {
 public:
  ServiceCache(ServiceFactory factory, std::function<void(BookingService&)> customize = {})
      : factory_(std::move(factory)), customize_(std::move(customize)) {}

  std::shared_ptr<BookingService> get(const IssueConfig& issue) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(static_cast<int>(issue.kind), issue.severity);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto service = factory_(issue);
    if (customize_) customize_(*service);
    cache_.emplace(key, service);
    return service;
  }

  std::shared_ptr<BookingService> fresh(const IssueConfig& issue) { return factory_(issue); }

 private:
  ServiceFactory factory_;
  std::function<void(BookingService&)> customize_;
  std::mutex mutex_;
  std::map<std::pair<int, std::uint32_t>, std::shared_ptr<BookingService>> cache_;
};

struct Inputs {
  std::vector<std::string> flight_ids;
  std::vector<std::string> airport_codes;
};

Inputs sample_inputs(const BookingService& service) {
  std::vector<std::string> flights;
  for (const auto& f : service.catalog().flights()) flights.push_back(f.id);
  std::vector<std::string> airports;
  for (const auto& a : service.catalog().destinations()) airports.push_back(a.code);

  std::mt19937_64 rng(kInputSeed);
  Inputs inputs;
  std::uniform_int_distribution<std::size_t> pick_flight(0, flights.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_airport(0, airports.size() - 1);
  for (std::size_t i = 0; i < kInputCount; ++i) {
    inputs.flight_ids.push_back(flights[pick_flight(rng)]);
    inputs.airport_codes.push_back(airports[pick_airport(rng)]);
  }
  return inputs;
}

/// Cycles through pre-generated random inputs.
class Cursor {
 public:
  explicit Cursor(std::shared_ptr<const std::vector<std::string>> values) : values_(std::move(values)) {}
  const std::string& next() {
    const std::string& v = (*values_)[pos_];
    pos_ = (pos_ + 1) % values_->size();
    return v;
  }

 private:
  std::shared_ptr<const std::vector<std::string>> values_;
  std::size_t pos_ = 0;
};

/// Walks seat pairs flight by flight so consecutive bookings never conflict.
class SeatPairCursor {
 public:
  SeatPairCursor(std::vector<std::string> flight_ids, std::uint32_t seats_per_flight)
      : flight_ids_(std::move(flight_ids)), pairs_per_flight_(seats_per_flight / 2) {}

  std::pair<std::string, std::vector<std::string>> next() {
    if (pairs_per_flight_ == 0 || flight_ >= flight_ids_.size()) {
      throw std::runtime_error("seat inventory exhausted; increase the dataset or shorten the budget");
    }
    std::pair<std::string, std::vector<std::string>> out{
        flight_ids_[flight_], {booking::seat_label(2 * pair_), booking::seat_label(2 * pair_ + 1)}};
    if (++pair_ == pairs_per_flight_) {
      pair_ = 0;
      ++flight_;
    }
    return out;
  }

 private:
  std::vector<std::string> flight_ids_;
  std::uint32_t pairs_per_flight_;
  std::size_t flight_ = 0;
  std::uint32_t pair_ = 0;
};

SeatPairCursor seat_cursor(const BookingService& service) {
  std::vector<std::string> ids;
  for (const auto& f : service.catalog().flights()) ids.push_back(f.id);
  auto seats = ids.empty() ? 0u : static_cast<std::uint32_t>(service.catalog().all_seats(ids.front()).size());
  return SeatPairCursor(std::move(ids), seats);
}

void must_succeed(const HttpResponse& response) {
  if (response.status >= 300) {
    throw std::runtime_error("unexpected status " + std::to_string(response.status) + ": " + response.body);
  }
}

HttpRequest get(std::string target) { return {"GET", std::move(target), {}, {}}; }

HttpRequest authorized(HttpRequest request, const booking::User& user) {
  request.headers.set("Authorization", basic_auth_header(user.username, user.password));
  return request;
}

// Dataset used by the bookings-listing benchmarks: a handful of bookings per user.
void add_sample_bookings(BookingService& service) {
  auto cursor = seat_cursor(service);
  for (std::uint32_t u = 0; u < 10; ++u) {
    booking::User user = booking::seeded_user(u);
    if (!service.store().get(std::string(booking::keys::kUser) + user.username)) break;
    for (int b = 0; b < 5; ++b) {
      auto [flight, seats] = cursor.next();
      service.catalog().create_booking(user.username, flight, seats);
    }
  }
}

}  // namespace

std::string_view to_string(Group group) {
  switch (group) {
    case Group::Store: return "store";
    case Group::Handler: return "handler";
    case Group::Router: return "router";
  }
  return "store";
}

ServiceFactory default_service_factory(const booking::DatasetConfig& dataset) {
  auto seeded = std::make_shared<const store::KvStore>(booking::seed_store(dataset));
  return [seeded](const IssueConfig& issue) {
    return std::make_shared<BookingService>(store::KvStore(*seeded), issue);
  };
}

std::vector<Microbenchmark> register_suite(ServiceFactory factory) {
  auto plain = std::make_shared<ServiceCache>(factory);
  auto with_bookings = std::make_shared<ServiceCache>(factory, add_sample_bookings);
  auto inputs = std::make_shared<Inputs>();
  auto flights = std::make_shared<std::vector<std::string>>();
  auto airports = std::make_shared<std::vector<std::string>>();
  auto ensure_inputs = [plain, flights, airports, once = std::make_shared<std::once_flag>()] {
    std::call_once(*once, [&] {
      Inputs in = sample_inputs(*plain->get({}));
      *flights = std::move(in.flight_ids);
      *airports = std::move(in.airport_codes);
    });
  };
  const booking::User user = booking::seeded_user(0);

  std::vector<Microbenchmark> suite;
  auto add = [&](std::string id, std::string name, Group group, IssueSet detects, Prepare prepare) {
    suite.push_back({std::move(id), std::move(name), group, detects, std::move(prepare)});
  };
  using K = IssueKind;

  // Store: raw key-value operations only.
  add("store.PutFlight", "StorePutFlight", Group::Store, {}, [plain](const IssueConfig& issue) -> Operation {
    auto service = plain->fresh(issue);
    auto seq = std::make_shared<std::uint64_t>(0);
    return [service, seq] {
      std::string key = "flight/XX" + std::to_string(++*seq);
      service->store().put(key, R"({"id":"XX","from":"AAA","to":"BBB","departure":"2026-11-01T00:00:00Z"})");
    };
  });
  add("store.GetFlight", "StoreGetFlight", Group::Store, {}, [=](const IssueConfig& issue) -> Operation {
    ensure_inputs();
    auto service = plain->get(issue);
    return [service, cursor = Cursor(flights)]() mutable {
      if (!service->store().get(std::string(booking::keys::kFlight) + cursor.next())) {
        throw std::runtime_error("flight missing");
      }
    };
  });
  add("store.GetSeatMap", "StoreGetSeatMap", Group::Store, {}, [=](const IssueConfig& issue) -> Operation {
    ensure_inputs();
    auto service = plain->get(issue);
    return [service, cursor = Cursor(flights)]() mutable {
      if (!service->store().get(std::string(booking::keys::kSeatMap) + cursor.next())) {
        throw std::runtime_error("seat map missing");
      }
    };
  });
  add("store.ScanAirports", "StoreScanAirports", Group::Store, {}, [plain](const IssueConfig& issue) -> Operation {
    auto service = plain->get(issue);
    return [service] {
      if (service->store().scan_prefix(booking::keys::kAirport).empty()) throw std::runtime_error("no airports");
    };
  });
  add("store.ScanFlights", "StoreScanFlights", Group::Store, {}, [plain](const IssueConfig& issue) -> Operation {
    auto service = plain->get(issue);
    return [service] {
      if (service->store().scan_prefix(booking::keys::kFlight).empty()) throw std::runtime_error("no flights");
    };
  });
  add("store.SearchFlightsFrom", "StoreSearchFlightsFrom", Group::Store, {},
      [=](const IssueConfig& issue) -> Operation {
        ensure_inputs();
        auto service = plain->get(issue);
        return [service, cursor = Cursor(airports)]() mutable {
          std::string needle = "\"from\":\"" + cursor.next() + "\"";
          std::size_t hits = 0;
          service->store().for_each_prefix(booking::keys::kFlight, [&](std::string_view, std::string_view v) {
            if (v.find(needle) != std::string_view::npos) ++hits;
          });
          static_cast<void>(hits);
        };
      });
  add("store.PutBooking", "StorePutBooking", Group::Store, {}, [plain](const IssueConfig& issue) -> Operation {
    auto service = plain->fresh(issue);
    auto seq = std::make_shared<std::uint64_t>(0);
    return [service, seq] {
      std::string id = "BKX" + std::to_string(++*seq);
      service->store().put(std::string(booking::keys::kBooking) + id,
                           R"({"id":")" + id +
                               R"(","username":"user1","flightId":"FL00001","seatIds":["1A","1B"],"createdAt":"2026-11-01T00:00:00Z"})");
    };
  });

  // Handler: business logic plus JSON rendering, no router or middleware.
  add("handler.Destinations", "HandlerDestinations", Group::Handler, {},
      [plain](const IssueConfig& issue) -> Operation {
        auto service = plain->get(issue);
        return [service] { must_succeed(booking::handlers::destinations(service->catalog())); };
      });
  add("handler.Flights", "HandlerFlights", Group::Handler, {}, [plain](const IssueConfig& issue) -> Operation {
    auto service = plain->get(issue);
    return [service] { must_succeed(booking::handlers::flights(service->catalog(), std::nullopt)); };
  });
  add("handler.FlightsQuery", "HandlerFlightsQuery", Group::Handler, {},
      [=](const IssueConfig& issue) -> Operation {
        ensure_inputs();
        auto service = plain->get(issue);
        return [service, cursor = Cursor(airports)]() mutable {
          must_succeed(booking::handlers::flights(service->catalog(), std::string_view(cursor.next())));
        };
      });
  add("handler.Flight", "HandlerFlight", Group::Handler, {}, [=](const IssueConfig& issue) -> Operation {
    ensure_inputs();
    auto service = plain->get(issue);
    return [service, cursor = Cursor(flights)]() mutable {
      must_succeed(booking::handlers::flight(service->catalog(), cursor.next()));
    };
  });
  add("handler.Seats", "HandlerSeats", Group::Handler, {}, [=](const IssueConfig& issue) -> Operation {
    ensure_inputs();
    auto service = plain->get(issue);
    return [service, cursor = Cursor(flights)]() mutable {
      must_succeed(booking::handlers::seats(service->catalog(), cursor.next()));
    };
  });
  add("handler.CreateBooking", "HandlerCreateBooking", Group::Handler, {},
      [plain, user](const IssueConfig& issue) -> Operation {
        auto service = plain->fresh(issue);
        auto cursor = std::make_shared<SeatPairCursor>(seat_cursor(*service));
        return [service, cursor, user] {
          auto [flight, seats] = cursor->next();
          must_succeed(booking::handlers::create_booking(service->catalog(), user.username,
                                                         booking::handlers::booking_request_body(flight, seats)));
        };
      });
  add("handler.Bookings", "HandlerBookings", Group::Handler, {},
      [with_bookings, user](const IssueConfig& issue) -> Operation {
        auto service = with_bookings->get(issue);
        return [service, user] { must_succeed(booking::handlers::bookings(service->catalog(), user.username)); };
      });

  // Router: the full request path through BookingService::dispatch.
  add("M1", "RequestBookings", Group::Router, {K::BasicAuth, K::RequestId},
      [with_bookings, user](const IssueConfig& issue) -> Operation {
        auto service = with_bookings->get(issue);
        auto request = authorized(get("/bookings"), user);
        return [service, request] { must_succeed(service->dispatch(request)); };
      });
  add("M2", "RequestCreateBooking", Group::Router, {K::BasicAuth, K::RequestId},
      [plain, user](const IssueConfig& issue) -> Operation {
        auto service = plain->fresh(issue);
        auto cursor = std::make_shared<SeatPairCursor>(seat_cursor(*service));
        return [service, cursor, user] {
          auto [flight, seats] = cursor->next();
          HttpRequest request = authorized({"POST", "/bookings", {}, {}}, user);
          request.body = booking::handlers::booking_request_body(flight, seats);
          must_succeed(service->dispatch(request));
        };
      });
  add("M3", "RequestDestinations", Group::Router, {K::RequestId}, [plain](const IssueConfig& issue) -> Operation {
    auto service = plain->get(issue);
    return [service, request = get("/destinations")] { must_succeed(service->dispatch(request)); };
  });
  add("M4", "RequestFlight", Group::Router, {K::CleanPath, K::RequestId},
      [=](const IssueConfig& issue) -> Operation {
        ensure_inputs();
        auto service = plain->get(issue);
        return [service, cursor = Cursor(flights)]() mutable {
          must_succeed(service->dispatch(get("/flights/" + cursor.next())));
        };
      });
  add("M5", "RequestFlights", Group::Router, {K::CleanPath, K::RequestId},
      [plain](const IssueConfig& issue) -> Operation {
        auto service = plain->get(issue);
        return [service, request = get("/flights")] { must_succeed(service->dispatch(request)); };
      });
  add("M6", "RequestFlightsQuery", Group::Router, {K::CleanPath, K::RequestId},
      [=](const IssueConfig& issue) -> Operation {
        ensure_inputs();
        auto service = plain->get(issue);
        return [service, cursor = Cursor(airports)]() mutable {
          must_succeed(service->dispatch(get("/flights?from=" + cursor.next())));
        };
      });
  add("M7", "RequestSeats", Group::Router, {K::CleanPath, K::RequestId},
      [=](const IssueConfig& issue) -> Operation {
        ensure_inputs();
        auto service = plain->get(issue);
        return [service, cursor = Cursor(flights)]() mutable {
          must_succeed(service->dispatch(get("/flights/" + cursor.next() + "/seats")));
        };
      });

  return suite;
}

// ---------------------------------------------------------------------------

TimedRun time_operation(const Operation& op, double budget_seconds) {
  if (!(budget_seconds > 0)) throw ConfigError("budget must be positive");
  const double budget_ns = budget_seconds * 1e9;
  // Batches stop doubling once a single batch takes this long.
  const double max_batch_ns = std::max(budget_ns / 20.0, 1e6);

  TimedRun run;
  std::uint64_t batch = 1;
  while (run.elapsed_ns < budget_ns) {
    auto start = Clock::now();
    for (std::uint64_t i = 0; i < batch; ++i) op();
    double batch_ns = std::chrono::duration<double, std::nano>(Clock::now() - start).count();
    run.elapsed_ns += batch_ns;
    run.ops += batch;

    double per_op = run.elapsed_ns / static_cast<double>(run.ops);
    double remaining = budget_ns - run.elapsed_ns;
    std::uint64_t next = batch_ns < max_batch_ns ? batch * 2 : batch;
    if (per_op > 0) {
      auto fit = static_cast<std::uint64_t>(remaining / per_op) + 1;
      next = std::min(next, fit);
    }
    batch = std::max<std::uint64_t>(next, 1);
  }
  run.mean_ns = run.elapsed_ns / static_cast<double>(run.ops);
  return run;
}

MeasurementSample run_timed_iteration(const Microbenchmark& bench, const IssueConfig& issue,
                                      double budget_seconds) {
  MeasurementSample sample;
  sample.bench_id = bench.id;
  sample.budget_s = budget_seconds;
  try {
    Operation op = bench.prepare(issue);
    TimedRun run = time_operation(op, budget_seconds);
    sample.mean_ns = run.mean_ns;
    sample.ops = run.ops;
  } catch (const std::exception& e) {
    sample.failed = true;
    sample.error = e.what();
    sample.mean_ns = 0;
    sample.ops = 0;
  }
  return sample;
}

void spin_for_ns(double duration_ns) {
  auto deadline = Clock::now() + std::chrono::nanoseconds(static_cast<std::int64_t>(duration_ns));
  while (Clock::now() < deadline) {
  }
}

// ---------------------------------------------------------------------------

std::vector<RmitSlot> RmitPlan::slots_for_instance(int instance_run) const {
  std::vector<RmitSlot> out;
  for (const auto& slot : slots) {
    if (slot.instance_run == instance_run) out.push_back(slot);
  }
  return out;
}

RmitPlan build_rmit_plan(std::span<const std::string> bench_ids, std::array<std::string, 2> versions,
                         int instance_runs, int suite_runs, int iterations, std::uint64_t seed) {
  if (instance_runs < 1 || suite_runs < 1 || iterations < 1) {
    throw ConfigError("instance runs, suite runs and iterations must all be at least 1");
  }
  if (bench_ids.empty()) throw ConfigError("benchmark list must not be empty");
  if (versions[0] == versions[1]) throw ConfigError("the two version labels must differ");
  if (std::set<std::string>(bench_ids.begin(), bench_ids.end()).size() != bench_ids.size()) {
    throw ConfigError("benchmark ids must be unique");
  }

  RmitPlan plan;
  plan.bench_ids.assign(bench_ids.begin(), bench_ids.end());
  plan.versions = versions;
  plan.instance_runs = instance_runs;
  plan.suite_runs = suite_runs;
  plan.iterations = iterations;
  plan.seed = seed;

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::string> order(bench_ids.begin(), bench_ids.end());
  for (int instance = 0; instance < instance_runs; ++instance) {
    for (int suite = 0; suite < suite_runs; ++suite) {
      std::shuffle(order.begin(), order.end(), rng);
      for (const auto& bench : order) {
        bool swap = coin(rng);
        for (int v = 0; v < 2; ++v) {
          const std::string& version = versions[static_cast<std::size_t>(swap ? 1 - v : v)];
          for (int it = 0; it < iterations; ++it) {
            plan.slots.push_back({instance, suite, bench, version, it});
          }
        }
      }
    }
  }
  return plan;
}

std::vector<MeasurementSample> execute_plan(const RmitPlan& plan, std::span<const Microbenchmark> suite,
                                            const VersionMap& versions, double budget_seconds,
                                            std::optional<int> instance_run, const SampleCallback& on_sample) {
  std::map<std::string, const Microbenchmark*> by_id;
  for (const auto& bench : suite) by_id.emplace(bench.id, &bench);
  for (const auto& id : plan.bench_ids) {
    if (!by_id.contains(id)) throw ConfigError("plan references unknown benchmark '" + id + "'");
  }
  for (const auto& label : plan.versions) {
    if (!versions.contains(label)) throw ConfigError("no configuration for version '" + label + "'");
  }

  std::vector<MeasurementSample> samples;
  for (const auto& slot : plan.slots) {
    if (instance_run && slot.instance_run != *instance_run) continue;
    MeasurementSample sample = run_timed_iteration(*by_id.at(slot.bench_id), versions.at(slot.version), budget_seconds);
    sample.version = slot.version;
    sample.instance_run = slot.instance_run;
    sample.suite_run = slot.suite_run;
    sample.iteration = slot.iteration;
    if (on_sample) on_sample(sample);
    samples.push_back(std::move(sample));
  }
  return samples;
}

}  // namespace perflab::micro
