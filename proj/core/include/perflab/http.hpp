#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace perflab {

/// Header map with case-insensitive names (stored lowercase).
class HttpHeaders {
 public:
  void set(std::string_view name, std::string value);
  [[nodiscard]] std::optional<std::string_view> get(std::string_view name) const;
  [[nodiscard]] const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

  friend bool operator==(const HttpHeaders&, const HttpHeaders&) = default;

 private:
  std::map<std::string, std::string> entries_;
};

struct HttpRequest {
  std::string method;
  /// Raw request target: path plus optional "?query".
  std::string target;
  HttpHeaders headers;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  HttpHeaders headers;
  std::string body;
};

inline constexpr std::string_view kRequestIdHeader = "X-Request-Id";

/// Percent-decodes `text`; '+' is kept literally. Malformed escapes are kept as-is.
std::string percent_decode(std::string_view text);

/// Value of `key` in an application/x-www-form-urlencoded query string.
std::optional<std::string> query_param(std::string_view query, std::string_view key);

std::string base64_encode(std::string_view data);
/// std::nullopt for malformed input.
std::optional<std::string> base64_decode(std::string_view data);

/// "Basic <base64(user:password)>"
std::string basic_auth_header(std::string_view user, std::string_view password);

}  // namespace perflab
