#pragma once

// Seeded request generator for differential tests of the booking service.

#include <random>
#include <string>
#include <vector>

#include "perflab/booking.hpp"
#include "perflab/http.hpp"

namespace perflab::testing {

/// Mixes every route, odd path spellings, wrong methods, bad credentials and
/// booking conflicts. The airport codes and flight ids come from `store`.
inline std::vector<HttpRequest> request_mix(const store::KvStore& store, std::size_t count, std::uint64_t seed) {
  std::vector<std::string> airports;
  for (const auto& kv : store.scan_prefix(booking::keys::kAirport)) {
    airports.push_back(kv.first.substr(booking::keys::kAirport.size()));
  }
  std::vector<std::string> flights;
  for (const auto& kv : store.scan_prefix(booking::keys::kFlight)) {
    flights.push_back(kv.first.substr(booking::keys::kFlight.size()));
  }

  std::mt19937_64 rng(seed);
  auto pick = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  auto chance = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  auto seat = [&] {
    return booking::seat_label(std::uniform_int_distribution<std::uint32_t>(0, 11)(rng));
  };
  auto auth = [&](HttpRequest& r) {
    const auto user = booking::seeded_user(std::uniform_int_distribution<std::uint32_t>(0, 2)(rng));
    if (chance(0.1)) return;
    r.headers.set("Authorization", basic_auth_header(user.username, chance(0.15) ? "wrong" : user.password));
  };

  std::vector<HttpRequest> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    HttpRequest r;
    r.method = "GET";
    switch (std::uniform_int_distribution<int>(0, 12)(rng)) {
      case 0: r.target = "/destinations"; break;
      case 1: r.target = "/flights"; break;
      case 2: r.target = "/flights?from=" + pick(airports); break;
      case 3: r.target = "/flights?from=" + std::string(chance(0.5) ? "zz" : "ZZZ"); break;
      case 4: r.target = "/flights/" + pick(flights); break;
      case 5: r.target = "/flights/" + pick(flights) + "/seats"; break;
      case 6: r.target = "//flights/./" + pick(flights) + "//seats/"; break;
      case 7: r.target = chance(0.5) ? "/flights/../destinations" : "/flights/FL99999"; break;
      case 8:
        r.target = "/bookings";
        auth(r);
        break;
      case 9:
      case 10: {
        r.method = "POST";
        r.target = "/bookings";
        auth(r);
        // A small flight pool so conflicts happen.
        const std::string flight = flights[std::uniform_int_distribution<std::size_t>(0, 2)(rng)];
        std::vector<std::string> seats{seat()};
        if (chance(0.7)) seats.push_back(seat());
        r.body = chance(0.05) ? "{not json" : booking::handlers::booking_request_body(flight, seats);
        break;
      }
      case 11:
        r.method = chance(0.5) ? "DELETE" : "POST";
        r.target = chance(0.5) ? "/destinations" : "/flights/" + pick(flights);
        break;
      default: r.target = chance(0.5) ? "/" : "/unknown/route"; break;
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace perflab::testing
