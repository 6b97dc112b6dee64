#include <gtest/gtest.h>

#include <map>
#include <thread>

#include "json.hpp"
#include "perflab/booking.hpp"
#include "perflab/primitives.hpp"
#include "request_mix.hpp"

namespace perflab::booking {
namespace {

using nlohmann::json;

DatasetConfig small_dataset() { return {12, 60, 12, 3, 5}; }

HttpRequest get(std::string target) { return {"GET", std::move(target), {}, {}}; }

HttpRequest post_booking(std::string_view flight, std::vector<std::string> seats, std::string_view user = "user1",
                         std::string_view password = "password1") {
  HttpRequest r{"POST", "/bookings", {}, handlers::booking_request_body(flight, seats)};
  r.headers.set("Authorization", basic_auth_header(user, password));
  return r;
}

TEST(Dataset, DeterministicAndComplete) {
  const auto cfg = small_dataset();
  auto a = seed_store(cfg);
  auto b = seed_store(cfg);
  EXPECT_EQ(a.serialize(), b.serialize());
  auto other = cfg;
  other.rng_seed = 6;
  EXPECT_NE(a.serialize(), seed_store(other).serialize());

  EXPECT_EQ(a.scan_prefix(keys::kAirport).size(), 12u);
  EXPECT_EQ(a.scan_prefix(keys::kFlight).size(), 60u);
  EXPECT_EQ(a.scan_prefix(keys::kSeatMap).size(), 60u);
  EXPECT_EQ(a.scan_prefix(keys::kUser).size(), 3u);
  for (const auto& [key, value] : a.scan_prefix(keys::kFlight)) {
    auto f = json::parse(value);
    EXPECT_NE(f["from"], f["to"]) << key;
  }
  EXPECT_THROW(seed_store({1, 10, 10, 1, 1}), ConfigError);
}

TEST(Catalog, FlightsFromMatchesRawDepartureCounts) {
  auto store = seed_store(small_dataset());
  std::map<std::string, std::size_t> departures;
  for (const auto& [key, value] : store.scan_prefix(keys::kFlight)) ++departures[json::parse(value)["from"]];

  Catalog catalog(store);
  std::size_t total = 0;
  for (const auto& airport : catalog.destinations()) {
    auto flights = catalog.flights(airport.code);
    EXPECT_EQ(flights.size(), departures[airport.code]) << airport.code;
    for (const auto& f : flights) EXPECT_EQ(f.from, airport.code);
    total += flights.size();
  }
  EXPECT_EQ(total, 60u);
  EXPECT_EQ(catalog.flights().size(), 60u);
  EXPECT_THROW(catalog.flights(std::string_view("abc")), ServiceError);
}

TEST(Catalog, BookingIsAllOrNothing) {
  auto store = seed_store(small_dataset());
  Catalog catalog(store);
  auto booking = catalog.create_booking("user1", "FL00001", {"1A", "1B"});
  EXPECT_EQ(booking.id, "BK00000001");
  EXPECT_EQ(catalog.available_seats("FL00001").size(), 10u);

  try {
    catalog.create_booking("user2", "FL00001", {"1C", "1A"});
    FAIL() << "expected a conflict";
  } catch (const ServiceError& e) {
    EXPECT_EQ(e.status(), 409);
  }
  EXPECT_EQ(catalog.available_seats("FL00001").size(), 10u);

  auto expect_status = [&](int status, auto&& fn) {
    try {
      fn();
      ADD_FAILURE() << "expected status " << status;
    } catch (const ServiceError& e) {
      EXPECT_EQ(e.status(), status);
    }
  };
  expect_status(404, [&] { catalog.create_booking("user1", "FL99999", {"1A"}); });
  expect_status(404, [&] { catalog.create_booking("user1", "FL00001", {"99Z"}); });
  expect_status(400, [&] { catalog.create_booking("user1", "FL00001", {}); });
  expect_status(400, [&] { catalog.create_booking("user1", "FL00001", {"2A", "2A"}); });

  auto second = catalog.create_booking("user1", "FL00002", {"1A"});
  EXPECT_EQ(second.id, "BK00000002");
  EXPECT_EQ(catalog.bookings("user1").size(), 2u);
  EXPECT_TRUE(catalog.bookings("user2").empty());
}

TEST(Catalog, ConcurrentBookingsNeverDoubleBook) {
  auto store = seed_store(small_dataset());
  Catalog catalog(store);
  std::atomic<int> successes{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (std::uint32_t s = 0; s < 12; ++s) {
        try {
          catalog.create_booking("user" + std::to_string(t % 3 + 1), "FL00003", {seat_label(s)});
          ++successes;
        } catch (const ServiceError&) {
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(successes.load(), 12);
  EXPECT_TRUE(catalog.available_seats("FL00003").empty());
}

TEST(Service, RoutesAndStatuses) {
  BookingService service(seed_store(small_dataset()));
  EXPECT_EQ(service.dispatch(get("/destinations")).status, 200);
  EXPECT_EQ(service.dispatch(get("/flights")).status, 200);
  EXPECT_EQ(service.dispatch(get("/flights/FL00001")).status, 200);
  EXPECT_EQ(service.dispatch(get("/flights/FL00001/seats")).status, 200);
  EXPECT_EQ(service.dispatch(get("/flights/FL99999")).status, 404);
  EXPECT_EQ(service.dispatch(get("/flights?from=a")).status, 400);
  EXPECT_EQ(service.dispatch(get("/nope")).status, 404);
  EXPECT_EQ(service.dispatch({"DELETE", "/destinations", {}, {}}).status, 405);

  auto unauthorized = service.dispatch(get("/bookings"));
  EXPECT_EQ(unauthorized.status, 401);
  EXPECT_TRUE(unauthorized.headers.get("WWW-Authenticate").has_value());
  EXPECT_EQ(service.dispatch(post_booking("FL00001", {"1A"}, "user1", "nope")).status, 401);

  auto created = service.dispatch(post_booking("FL00001", {"1A", "1B"}));
  EXPECT_EQ(created.status, 201);
  EXPECT_EQ(json::parse(created.body)["bookingId"], "BK00000001");
  EXPECT_EQ(service.dispatch(post_booking("FL00001", {"1B"})).status, 409);

  HttpRequest list = get("/bookings");
  list.headers.set("Authorization", basic_auth_header("user1", "password1"));
  auto listed = service.dispatch(list);
  EXPECT_EQ(listed.status, 200);
  EXPECT_EQ(json::parse(listed.body).size(), 1u);
}

TEST(Service, PathCleaningNormalizesFlightRoutes) {
  BookingService service(seed_store(small_dataset()));
  const auto canonical = service.dispatch(get("/flights/FL00001/seats")).body;
  EXPECT_EQ(service.dispatch(get("/flights//./FL00001//seats/")).body, canonical);
  EXPECT_EQ(service.dispatch(get("/flights/x/../FL00001/seats")).body, canonical);
  // Cleaning never routes out of /flights.
  EXPECT_EQ(service.dispatch(get("/flights/../destinations")).status, 404);
  // A leading double slash never reaches the /flights subtree.
  EXPECT_EQ(service.dispatch(get("//flights/FL00001/seats")).status, 404);
}

TEST(Service, EveryResponseCarriesRequestId) {
  BookingService service(seed_store(small_dataset()));
  EXPECT_EQ(service.dispatch(get("/destinations")).headers.get(kRequestIdHeader), "1");
  EXPECT_EQ(service.dispatch(get("/nope")).headers.get(kRequestIdHeader), "2");
  EXPECT_EQ(service.dispatch(get("/bookings")).headers.get(kRequestIdHeader), "3");

  faults::SeededRandomSource rng(1);
  BookingService degraded(seed_store(small_dataset()), {IssueKind::RequestId, 2}, {nullptr, nullptr, &rng, nullptr});
  auto id = degraded.dispatch(get("/destinations")).headers.get(kRequestIdHeader);
  ASSERT_TRUE(id.has_value());
  EXPECT_EQ(id->size(), 40u);
  EXPECT_EQ(rng.bytes_read(), 1024u);
}

TEST(Service, RandomSourceFailureIsServerError) {
  faults::FailingRandomSource rng;
  BookingService service(seed_store(small_dataset()), {IssueKind::RequestId, 1}, {nullptr, nullptr, &rng, nullptr});
  EXPECT_EQ(service.dispatch(get("/destinations")).status, 500);
}

TEST(Service, MiddlewareWorkScalesWithSeverityOnlyForItsRoutes) {
  faults::CountingHasher sha512(faults::default_sha512());
  faults::CountingPathCleaner cleaner;
  BookingService auth(seed_store(small_dataset()), {IssueKind::BasicAuth, 5}, {&sha512, nullptr, nullptr, nullptr});
  auth.dispatch(get("/destinations"));
  EXPECT_EQ(sha512.calls(), 0u);
  auth.dispatch(post_booking("FL00001", {"1A"}));
  EXPECT_EQ(sha512.calls(), 10u);

  BookingService clean(seed_store(small_dataset()), {IssueKind::CleanPath, 5}, {nullptr, nullptr, nullptr, &cleaner});
  clean.dispatch(get("/destinations"));
  EXPECT_EQ(cleaner.passes(), 0u);
  clean.dispatch(get("/flights/FL00001"));
  EXPECT_EQ(cleaner.passes(), 6u);
}

// Response bodies and statuses never depend on the issue or its severity.
TEST(Service, FunctionalTransparency) {
  const auto cfg = small_dataset();
  const auto requests = perflab::testing::request_mix(seed_store(cfg), 300, 42);
  for (IssueKind kind : {IssueKind::BasicAuth, IssueKind::CleanPath, IssueKind::RequestId}) {
    for (std::uint32_t s : {0u, 3u}) {
      BookingService baseline(seed_store(cfg));
      BookingService degraded(seed_store(cfg), {kind, s});
      for (std::size_t i = 0; i < requests.size(); ++i) {
        auto a = baseline.dispatch(requests[i]);
        auto b = degraded.dispatch(requests[i]);
        ASSERT_EQ(a.status, b.status) << to_string(kind) << " s=" << s << " #" << i << " " << requests[i].target;
        ASSERT_EQ(a.body, b.body) << to_string(kind) << " s=" << s << " #" << i;
      }
    }
  }
}

}  // namespace
}  // namespace perflab::booking
