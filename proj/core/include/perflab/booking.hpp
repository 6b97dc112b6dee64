#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "perflab/faults.hpp"
#include "perflab/http.hpp"
#include "perflab/issue_config.hpp"
#include "perflab/kv_store.hpp"

namespace perflab::booking {

struct Airport {
  std::string code;
  std::string name;
  friend bool operator==(const Airport&, const Airport&) = default;
};

enum class SeatStatus { Available, Booked };

struct Seat {
  std::string id;
  SeatStatus status = SeatStatus::Available;
  friend bool operator==(const Seat&, const Seat&) = default;
};

/// Flight without its seat map, as listed by the /flights endpoints.
struct FlightSummary {
  std::string id;
  std::string from;
  std::string to;
  std::string departure;  // ISO-8601 UTC
  friend bool operator==(const FlightSummary&, const FlightSummary&) = default;
};

struct Booking {
  std::string id;
  std::string username;
  std::string flight_id;
  std::vector<std::string> seat_ids;
  std::string created_at;
};

struct User {
  std::string username;
  std::string password;
};

// ---------------------------------------------------------------------------
// Dataset

struct DatasetConfig {
  std::uint32_t airport_count = 100;
  std::uint32_t flight_count = 1000;
  std::uint32_t seats_per_flight = 180;
  std::uint32_t user_count = 10;
  std::uint64_t rng_seed = 1;

  /// Throws ConfigError.
  void validate() const;

  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

/// Builds a deterministic dataset: airports, flights with seat maps, users.
store::KvStore seed_store(const DatasetConfig& config);

/// Credentials of the k-th seeded user (0-based).
User seeded_user(std::uint32_t index);

/// Seat label for a 0-based seat index: rows of six, "1A".."1F", "2A", ...
std::string seat_label(std::uint32_t index);

bool is_airport_code(std::string_view code);

namespace keys {
inline constexpr std::string_view kAirport = "airport/";
inline constexpr std::string_view kFlight = "flight/";
inline constexpr std::string_view kSeatMap = "seatmap/";
inline constexpr std::string_view kBooking = "booking/";
inline constexpr std::string_view kUser = "user/";
inline constexpr std::string_view kBookingSequence = "meta/booking-seq";
}  // namespace keys

// ---------------------------------------------------------------------------
// Errors surfaced as 4xx/5xx at the HTTP boundary

class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  [[nodiscard]] int status() const noexcept { return status_; }
  [[nodiscard]] const std::string& code() const noexcept { return code_; }

 private:
  int status_;
  std::string code_;
};

ServiceError bad_request(const std::string& message);
ServiceError not_found(const std::string& message);
ServiceError conflict(const std::string& message);
ServiceError unauthorized(const std::string& message);

// ---------------------------------------------------------------------------
// Business logic over the store

class Catalog {
 public:
  explicit Catalog(store::KvStore& store) : store_(store) {}

  [[nodiscard]] std::vector<Airport> destinations() const;
  /// Throws bad_request for a malformed airport code.
  [[nodiscard]] std::vector<FlightSummary> flights(std::optional<std::string_view> from = {}) const;
  /// Throws not_found.
  [[nodiscard]] FlightSummary flight(std::string_view id) const;
  /// Only seats with status Available. Throws not_found.
  [[nodiscard]] std::vector<Seat> available_seats(std::string_view flight_id) const;
  [[nodiscard]] std::vector<Seat> all_seats(std::string_view flight_id) const;
  /// Atomically books all requested seats or none. Throws bad_request,
  /// not_found or conflict.
  Booking create_booking(std::string_view username, std::string_view flight_id,
                         const std::vector<std::string>& seat_ids);
  [[nodiscard]] std::vector<Booking> bookings(std::string_view username) const;
  [[nodiscard]] std::optional<Booking> booking(std::string_view id) const;
  [[nodiscard]] std::vector<User> users() const;

  [[nodiscard]] store::KvStore& store() const noexcept { return store_; }

 private:
  std::string next_booking_id();

  store::KvStore& store_;
};

/// Route handlers: JSON in, JSON out, no middleware. Each throws
/// ServiceError on client errors.
namespace handlers {
HttpResponse destinations(const Catalog& catalog);
HttpResponse flights(const Catalog& catalog, std::optional<std::string_view> from);
HttpResponse flight(const Catalog& catalog, std::string_view id);
HttpResponse seats(const Catalog& catalog, std::string_view flight_id);
HttpResponse create_booking(Catalog& catalog, std::string_view username, std::string_view body);
HttpResponse bookings(const Catalog& catalog, std::string_view username);

/// {"flightId": ..., "seatIds": [...]}
std::string booking_request_body(std::string_view flight_id, const std::vector<std::string>& seat_ids);
}  // namespace handlers

HttpResponse error_response(int status, std::string_view code, std::string_view message);

// ---------------------------------------------------------------------------
// Service: router plus middleware chain

/// Injectable primitives for the three degradable middleware steps.
/// Null members fall back to the process defaults.
struct Primitives {
  const faults::Hasher* sha512 = nullptr;
  const faults::Hasher* sha1 = nullptr;
  faults::RandomSource* random = nullptr;
  const faults::PathCleaner* path_cleaner = nullptr;
};

/// The flight-booking service. Middleware order: request ID (all routes),
/// path cleaning (routes under /flights), basic auth (/bookings), handler.
/// Every response that got a request ID carries it in X-Request-Id.
class BookingService {
 public:
  explicit BookingService(store::KvStore store, IssueConfig issue = {}, Primitives primitives = {});
  BookingService(const BookingService&) = delete;
  BookingService& operator=(const BookingService&) = delete;

  HttpResponse dispatch(const HttpRequest& request);

  /// Typed entry point for booking creation including authentication.
  Booking post_booking(const faults::Credentials& credentials, std::string_view flight_id,
                       const std::vector<std::string>& seat_ids);

  [[nodiscard]] Catalog& catalog() noexcept { return catalog_; }
  [[nodiscard]] const Catalog& catalog() const noexcept { return catalog_; }
  [[nodiscard]] store::KvStore& store() noexcept { return store_; }
  [[nodiscard]] const IssueConfig& issue() const noexcept { return issue_; }

 private:
  HttpResponse route(const HttpRequest& request, std::string_view path, std::string_view query);
  std::optional<std::string> authenticate(const HttpRequest& request) const;
  bool credentials_valid(const faults::Credentials& provided) const;

  store::KvStore store_;
  Catalog catalog_;
  IssueConfig issue_;
  const faults::Hasher& sha512_;
  const faults::Hasher& sha1_;
  faults::RandomSource& random_;
  const faults::PathCleaner& path_cleaner_;
  std::atomic<std::uint64_t> request_counter_{0};
  std::map<std::string, std::string, std::less<>> credentials_;
};

}  // namespace perflab::booking
