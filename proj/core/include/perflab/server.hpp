#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "perflab/booking.hpp"
#include "perflab/http.hpp"

namespace perflab {

/// HTTP/1.1 front end for a BookingService. Every request, whatever its
/// method or path, is handed to BookingService::dispatch.
class HttpServer {
 public:
  /// Port 0 binds an ephemeral port; see port().
  HttpServer(booking::BookingService& service, std::string host = "127.0.0.1", int port = 0);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Serves on a background thread; returns once the socket is bound.
  void start();
  /// Serves on the calling thread until stop() is called from elsewhere.
  void run();
  void stop();

  [[nodiscard]] int port() const noexcept { return port_; }
  [[nodiscard]] const std::string& host() const noexcept { return host_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string host_;
  int port_;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Something that can answer HttpRequests: a remote server or an in-process
/// service. Implementations need not be thread-safe; use one per worker.
class ServiceClient {
 public:
  virtual ~ServiceClient() = default;
  /// Throws TransportError when no response could be obtained.
  virtual HttpResponse send(const HttpRequest& request) = 0;
};

/// Persistent-connection HTTP client, no retries.
class HttpServiceClient final : public ServiceClient {
 public:
  HttpServiceClient(std::string host, int port, double timeout_seconds = 30.0);
  ~HttpServiceClient() override;
  HttpResponse send(const HttpRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Calls BookingService::dispatch directly.
class InProcessClient final : public ServiceClient {
 public:
  explicit InProcessClient(booking::BookingService& service) : service_(service) {}
  HttpResponse send(const HttpRequest& request) override { return service_.dispatch(request); }

 private:
  booking::BookingService& service_;
};

/// Polls GET /destinations until it answers 200 or the deadline passes.
bool wait_until_ready(const std::string& host, int port, double timeout_seconds);

}  // namespace perflab
