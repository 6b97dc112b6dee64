#include <cstdio>
#include <random>
#include <set>

#include "json.hpp"
#include "perflab/booking.hpp"

namespace perflab::booking {

using nlohmann::json;

void DatasetConfig::validate() const {
  if (airport_count < 2) throw ConfigError("airportCount must be at least 2");
  if (airport_count > 26 * 26 * 26) throw ConfigError("airportCount exceeds the 3-letter code space");
  if (flight_count < 1 || flight_count > 99999) throw ConfigError("flightCount must be in [1, 99999]");
  if (seats_per_flight < 1) throw ConfigError("seatsPerFlight must be at least 1");
  if (user_count < 1) throw ConfigError("userCount must be at least 1");
}

User seeded_user(std::uint32_t index) {
  return {"user" + std::to_string(index + 1), "password" + std::to_string(index + 1)};
}

std::string seat_label(std::uint32_t index) {
  return std::to_string(index / 6 + 1) + static_cast<char>('A' + index % 6);
}

bool is_airport_code(std::string_view code) {
  if (code.size() != 3) return false;
  for (char c : code) {
    if (c < 'A' || c > 'Z') return false;
  }
  return true;
}

store::KvStore seed_store(const DatasetConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.rng_seed);
  store::KvStore store;

  std::uniform_int_distribution<int> letter(0, 25);
  std::set<std::string> seen;
  std::vector<std::string> codes;
  codes.reserve(config.airport_count);
  while (codes.size() < config.airport_count) {
    std::string code{static_cast<char>('A' + letter(rng)), static_cast<char>('A' + letter(rng)),
                     static_cast<char>('A' + letter(rng))};
    if (seen.insert(code).second) codes.push_back(code);
  }
  for (const auto& code : codes) {
    store.put(std::string(keys::kAirport) + code,
              json{{"code", code}, {"name", "Airport " + code}}.dump());
  }

  json seat_map;
  seat_map["seats"] = json::array();
  for (std::uint32_t s = 0; s < config.seats_per_flight; ++s) {
    seat_map["seats"].push_back({{"id", seat_label(s)}, {"status", "available"}});
  }
  const std::string seat_map_text = seat_map.dump();

  std::uniform_int_distribution<std::size_t> origin(0, codes.size() - 1);
  std::uniform_int_distribution<std::size_t> other(0, codes.size() - 2);
  std::uniform_int_distribution<int> slot(0, 30 * 24 * 12 - 1);  // 5-minute slots over 30 days
  for (std::uint32_t i = 0; i < config.flight_count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "FL%05u", i + 1);
    std::size_t from = origin(rng);
    std::size_t to = other(rng);
    if (to >= from) ++to;
    int minutes = slot(rng) * 5;
    char departure[32];
    std::snprintf(departure, sizeof departure, "2026-11-%02dT%02d:%02d:00Z", minutes / (24 * 60) + 1,
                  (minutes / 60) % 24, minutes % 60);
    store.put(std::string(keys::kFlight) + id,
              json{{"id", id}, {"from", codes[from]}, {"to", codes[to]}, {"departure", departure}}.dump());
    store.put(std::string(keys::kSeatMap) + id, seat_map_text);
  }

  for (std::uint32_t u = 0; u < config.user_count; ++u) {
    User user = seeded_user(u);
    store.put(std::string(keys::kUser) + user.username,
              json{{"username", user.username}, {"password", user.password}}.dump());
  }
  store.put(keys::kBookingSequence, "0");
  return store;
}

}  // namespace perflab::booking
