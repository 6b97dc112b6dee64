#include <exception>

#include "perflab/booking.hpp"

namespace perflab::booking {
namespace {

bool starts_with(std::string_view text, std::string_view prefix) {
  return text.substr(0, prefix.size()) == prefix;
}

HttpResponse method_not_allowed() {
  return error_response(405, "method_not_allowed", "method not allowed");
}

}  // namespace

BookingService::BookingService(store::KvStore store, IssueConfig issue, Primitives primitives)
    : store_(std::move(store)),
      catalog_(store_),
      issue_(issue),
      sha512_(primitives.sha512 ? *primitives.sha512 : faults::default_sha512()),
      sha1_(primitives.sha1 ? *primitives.sha1 : faults::default_sha1()),
      random_(primitives.random ? *primitives.random : faults::default_random_source()),
      path_cleaner_(primitives.path_cleaner ? *primitives.path_cleaner : faults::default_path_cleaner()) {
  for (auto& user : catalog_.users()) credentials_.emplace(user.username, user.password);
}

HttpResponse BookingService::dispatch(const HttpRequest& request) {
  std::string request_id;
  try {
    request_id = faults::degraded_request_id(issue_.severity_for(IssueKind::RequestId), random_,
                                             request_counter_, sha1_);
  } catch (const std::exception& e) {
    return error_response(500, "internal", std::string("request id generation failed: ") + e.what());
  }

  std::string_view target = request.target;
  std::size_t qmark = target.find('?');
  std::string_view path = target.substr(0, qmark);
  std::string_view query = qmark == std::string_view::npos ? std::string_view() : target.substr(qmark + 1);

  HttpResponse response;
  try {
    response = route(request, path, query);
  } catch (const ServiceError& e) {
    response = error_response(e.status(), e.code(), e.what());
    if (e.status() == 401) response.headers.set("WWW-Authenticate", "Basic realm=\"bookings\"");
  } catch (const std::exception& e) {
    response = error_response(500, "internal", e.what());
  }
  response.headers.set(kRequestIdHeader, std::move(request_id));
  return response;
}

HttpResponse BookingService::route(const HttpRequest& request, std::string_view raw_path,
                                   std::string_view query) {
  if (raw_path == "/flights" || starts_with(raw_path, "/flights/")) {
    std::string path = faults::degraded_clean_path(
        raw_path, issue_.severity_for(IssueKind::CleanPath), path_cleaner_);
    if (path != "/flights" && !starts_with(path, "/flights/")) throw not_found("no route for " + path);
    std::string_view rest = std::string_view(path).substr(std::string_view("/flights").size());
    if (rest.empty()) {
      if (request.method != "GET") return method_not_allowed();
      auto from = query_param(query, "from");
      return handlers::flights(catalog_, from ? std::optional<std::string_view>(*from) : std::nullopt);
    }
    rest.remove_prefix(1);  // leading '/'
    std::size_t slash = rest.find('/');
    std::string id = percent_decode(rest.substr(0, slash));
    if (slash == std::string_view::npos) {
      if (request.method != "GET") return method_not_allowed();
      return handlers::flight(catalog_, id);
    }
    if (rest.substr(slash) == "/seats") {
      if (request.method != "GET") return method_not_allowed();
      return handlers::seats(catalog_, id);
    }
    throw not_found("no route for " + path);
  }

  if (raw_path == "/destinations") {
    if (request.method != "GET") return method_not_allowed();
    return handlers::destinations(catalog_);
  }

  if (raw_path == "/bookings") {
    auto user = authenticate(request);
    if (!user) throw unauthorized("invalid or missing credentials");
    if (request.method == "GET") return handlers::bookings(catalog_, *user);
    if (request.method == "POST") return handlers::create_booking(catalog_, *user, request.body);
    return method_not_allowed();
  }

  throw not_found("no route for " + std::string(raw_path));
}

std::optional<std::string> BookingService::authenticate(const HttpRequest& request) const {
  auto header = request.headers.get("Authorization");
  if (!header || !starts_with(*header, "Basic ")) return std::nullopt;
  auto decoded = base64_decode(header->substr(6));
  if (!decoded) return std::nullopt;
  std::size_t colon = decoded->find(':');
  if (colon == std::string::npos) return std::nullopt;
  faults::Credentials provided{decoded->substr(0, colon), decoded->substr(colon + 1)};
  if (!credentials_valid(provided)) return std::nullopt;
  return provided.user;
}

bool BookingService::credentials_valid(const faults::Credentials& provided) const {
  auto it = credentials_.find(provided.user);
  if (it == credentials_.end()) return false;
  return faults::degraded_validate_credentials(provided, {it->first, it->second},
                                               issue_.severity_for(IssueKind::BasicAuth), sha512_);
}

Booking BookingService::post_booking(const faults::Credentials& credentials, std::string_view flight_id,
                                     const std::vector<std::string>& seat_ids) {
  if (!credentials_valid(credentials)) throw unauthorized("invalid credentials");
  return catalog_.create_booking(credentials.user, flight_id, seat_ids);
}

}  // namespace perflab::booking
