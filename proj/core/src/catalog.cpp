#include <chrono>
#include <cstdio>
#include <ctime>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "perflab/booking.hpp"

namespace perflab::booking {

using nlohmann::json;

ServiceError bad_request(const std::string& message) { return {400, "bad_request", message}; }
ServiceError not_found(const std::string& message) { return {404, "not_found", message}; }
ServiceError conflict(const std::string& message) { return {409, "conflict", message}; }
ServiceError unauthorized(const std::string& message) { return {401, "unauthorized", message}; }

namespace {

FlightSummary parse_flight(std::string_view text) {
  json j = json::parse(text);
  return {j.at("id").get<std::string>(), j.at("from").get<std::string>(),
          j.at("to").get<std::string>(), j.at("departure").get<std::string>()};
}

Booking parse_booking(std::string_view text) {
  json j = json::parse(text);
  return {j.at("id").get<std::string>(), j.at("username").get<std::string>(),
          j.at("flightId").get<std::string>(), j.at("seatIds").get<std::vector<std::string>>(),
          j.at("createdAt").get<std::string>()};
}

std::vector<Seat> parse_seats(std::string_view text) {
  json j = json::parse(text);
  std::vector<Seat> seats;
  const auto& list = j.at("seats");
  seats.reserve(list.size());
  for (const auto& s : list) {
    seats.push_back({s.at("id").get<std::string>(),
                     s.at("status").get<std::string>() == "booked" ? SeatStatus::Booked
                                                                   : SeatStatus::Available});
  }
  return seats;
}

std::string now_iso8601() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

std::string key_for(std::string_view prefix, std::string_view id) {
  std::string key(prefix);
  key.append(id);
  return key;
}

json flight_json(const FlightSummary& f) {
  return {{"id", f.id}, {"from", f.from}, {"to", f.to}, {"departure", f.departure}};
}

json booking_json(const Booking& b) {
  return {{"bookingId", b.id}, {"flightId", b.flight_id}, {"seatIds", b.seat_ids}};
}

HttpResponse json_response(int status, const json& body) {
  HttpResponse resp;
  resp.status = status;
  resp.headers.set("Content-Type", "application/json");
  resp.body = body.dump();
  return resp;
}

}  // namespace

std::vector<Airport> Catalog::destinations() const {
  std::vector<Airport> out;
  store_.for_each_prefix(keys::kAirport, [&](std::string_view, std::string_view value) {
    json j = json::parse(value);
    out.push_back({j.at("code").get<std::string>(), j.at("name").get<std::string>()});
  });
  return out;
}

std::vector<FlightSummary> Catalog::flights(std::optional<std::string_view> from) const {
  if (from && !is_airport_code(*from)) {
    throw bad_request("malformed airport code '" + std::string(*from) + "'");
  }
  std::vector<FlightSummary> out;
  store_.for_each_prefix(keys::kFlight, [&](std::string_view, std::string_view value) {
    FlightSummary flight = parse_flight(value);
    if (!from || flight.from == *from) out.push_back(std::move(flight));
  });
  return out;
}

FlightSummary Catalog::flight(std::string_view id) const {
  auto value = store_.get(key_for(keys::kFlight, id));
  if (!value) throw not_found("unknown flight '" + std::string(id) + "'");
  return parse_flight(*value);
}

std::vector<Seat> Catalog::all_seats(std::string_view flight_id) const {
  auto value = store_.get(key_for(keys::kSeatMap, flight_id));
  if (!value) throw not_found("unknown flight '" + std::string(flight_id) + "'");
  return parse_seats(*value);
}

std::vector<Seat> Catalog::available_seats(std::string_view flight_id) const {
  std::vector<Seat> seats = all_seats(flight_id);
  std::erase_if(seats, [](const Seat& s) { return s.status != SeatStatus::Available; });
  return seats;
}

std::string Catalog::next_booking_id() {
  for (;;) {
    auto current = store_.get(keys::kBookingSequence);
    std::uint64_t next = current ? std::stoull(*current) + 1 : 1;
    if (store_.compare_and_swap(keys::kBookingSequence, current, std::to_string(next))) {
      char id[32];
      std::snprintf(id, sizeof id, "BK%08llu", static_cast<unsigned long long>(next));
      return id;
    }
  }
}

Booking Catalog::create_booking(std::string_view username, std::string_view flight_id,
                                const std::vector<std::string>& seat_ids) {
  if (seat_ids.empty()) throw bad_request("seatIds must not be empty");
  if (std::set<std::string>(seat_ids.begin(), seat_ids.end()).size() != seat_ids.size()) {
    throw bad_request("seatIds must be distinct");
  }
  if (!store_.get(key_for(keys::kUser, username))) {
    throw unauthorized("unknown user '" + std::string(username) + "'");
  }

  const std::string key = key_for(keys::kSeatMap, flight_id);
  for (;;) {
    auto current = store_.get(key);
    if (!current) throw not_found("unknown flight '" + std::string(flight_id) + "'");
    json map = json::parse(*current);
    auto& seats = map.at("seats");
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(seats.size());
    for (std::size_t i = 0; i < seats.size(); ++i) index.emplace(seats[i].at("id").get<std::string>(), i);

    for (const auto& seat : seat_ids) {
      auto it = index.find(seat);
      if (it == index.end()) throw not_found("unknown seat '" + seat + "'");
      if (seats[it->second].at("status") == "booked") throw conflict("seat '" + seat + "' is already booked");
    }
    for (const auto& seat : seat_ids) seats[index.at(seat)]["status"] = "booked";
    if (store_.compare_and_swap(key, current, map.dump())) break;
  }

  Booking booking{next_booking_id(), std::string(username), std::string(flight_id), seat_ids,
                  now_iso8601()};
  store_.put(key_for(keys::kBooking, booking.id),
             json{{"id", booking.id},
                  {"username", booking.username},
                  {"flightId", booking.flight_id},
                  {"seatIds", booking.seat_ids},
                  {"createdAt", booking.created_at}}
                 .dump());
  return booking;
}

std::vector<Booking> Catalog::bookings(std::string_view username) const {
  std::vector<Booking> out;
  store_.for_each_prefix(keys::kBooking, [&](std::string_view, std::string_view value) {
    Booking b = parse_booking(value);
    if (b.username == username) out.push_back(std::move(b));
  });
  return out;
}

std::optional<Booking> Catalog::booking(std::string_view id) const {
  auto value = store_.get(key_for(keys::kBooking, id));
  if (!value) return std::nullopt;
  return parse_booking(*value);
}

std::vector<User> Catalog::users() const {
  std::vector<User> out;
  store_.for_each_prefix(keys::kUser, [&](std::string_view, std::string_view value) {
    json j = json::parse(value);
    out.push_back({j.at("username").get<std::string>(), j.at("password").get<std::string>()});
  });
  return out;
}

HttpResponse error_response(int status, std::string_view code, std::string_view message) {
  return json_response(status, json{{"code", code}, {"message", message}});
}

namespace handlers {

HttpResponse destinations(const Catalog& catalog) {
  json body = json::array();
  for (const auto& a : catalog.destinations()) body.push_back({{"code", a.code}, {"name", a.name}});
  return json_response(200, body);
}

HttpResponse flights(const Catalog& catalog, std::optional<std::string_view> from) {
  json body = json::array();
  for (const auto& f : catalog.flights(from)) body.push_back(flight_json(f));
  return json_response(200, body);
}

HttpResponse flight(const Catalog& catalog, std::string_view id) {
  return json_response(200, flight_json(catalog.flight(id)));
}

HttpResponse seats(const Catalog& catalog, std::string_view flight_id) {
  json body = json::array();
  for (const auto& s : catalog.available_seats(flight_id)) body.push_back({{"seatId", s.id}});
  return json_response(200, body);
}

HttpResponse create_booking(Catalog& catalog, std::string_view username, std::string_view body) {
  json request = json::parse(body, nullptr, false);
  if (request.is_discarded() || !request.is_object()) throw bad_request("body must be a JSON object");
  auto flight = request.find("flightId");
  auto seats = request.find("seatIds");
  if (flight == request.end() || !flight->is_string()) throw bad_request("flightId must be a string");
  if (seats == request.end() || !seats->is_array()) throw bad_request("seatIds must be an array");
  std::vector<std::string> seat_ids;
  for (const auto& s : *seats) {
    if (!s.is_string()) throw bad_request("seatIds must contain strings");
    seat_ids.push_back(s.get<std::string>());
  }
  Booking booking = catalog.create_booking(username, flight->get<std::string>(), seat_ids);
  return json_response(201, booking_json(booking));
}

HttpResponse bookings(const Catalog& catalog, std::string_view username) {
  json body = json::array();
  for (const auto& b : catalog.bookings(username)) body.push_back(booking_json(b));
  return json_response(200, body);
}

std::string booking_request_body(std::string_view flight_id, const std::vector<std::string>& seat_ids) {
  return json{{"flightId", flight_id}, {"seatIds", seat_ids}}.dump();
}

}  // namespace handlers
}  // namespace perflab::booking
