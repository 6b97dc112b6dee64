#include "perflab/server.hpp"

#include <chrono>
#include <limits>
#include <thread>

#include "httplib.h"

namespace perflab {

namespace {
constexpr std::size_t kServerThreads = 128;
}  // namespace

struct HttpServer::Impl {
  httplib::Server server;
  std::thread thread;
};

HttpServer::HttpServer(booking::BookingService& service, std::string host, int port)
    : impl_(std::make_unique<Impl>()), host_(std::move(host)), port_(port) {
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    HttpRequest request;
    request.method = req.method;
    request.target = req.target.empty() ? req.path : req.target;
    for (const auto& [name, value] : req.headers) request.headers.set(name, value);
    request.body = req.body;

    HttpResponse response = service.dispatch(request);
    res.status = response.status;
    std::string content_type = "application/json";
    for (const auto& [name, value] : response.headers.entries()) {
      if (name == "content-type") {
        content_type = value;
      } else {
        res.set_header(name, value);
      }
    }
    res.set_content(response.body, content_type);
  };
  // Every VU holds a keep-alive connection, and each connection occupies a
  // pool thread for its lifetime.
  impl_->server.new_task_queue = [] { return new httplib::ThreadPool(kServerThreads); };
  impl_->server.set_keep_alive_max_count(std::numeric_limits<std::size_t>::max());
  impl_->server.set_tcp_nodelay(true);
  static const char* kAnyPath = ".*";
  impl_->server.Get(kAnyPath, handler);
  impl_->server.Post(kAnyPath, handler);
  impl_->server.Put(kAnyPath, handler);
  impl_->server.Patch(kAnyPath, handler);
  impl_->server.Delete(kAnyPath, handler);
  impl_->server.Options(kAnyPath, handler);
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() {
  if (port_ == 0) {
    port_ = impl_->server.bind_to_any_port(host_);
  } else if (!impl_->server.bind_to_port(host_, port_)) {
    throw std::runtime_error("cannot bind " + host_ + ":" + std::to_string(port_));
  }
  if (port_ <= 0) throw std::runtime_error("cannot bind " + host_);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::run() {
  if (port_ == 0) {
    port_ = impl_->server.bind_to_any_port(host_);
  } else if (!impl_->server.bind_to_port(host_, port_)) {
    throw std::runtime_error("cannot bind " + host_ + ":" + std::to_string(port_));
  }
  if (port_ <= 0) throw std::runtime_error("cannot bind " + host_);
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

struct HttpServiceClient::Impl {
  httplib::Client client;
  Impl(const std::string& host, int port) : client(host, port) {}
};

HttpServiceClient::HttpServiceClient(std::string host, int port, double timeout_seconds)
    : impl_(std::make_unique<Impl>(host, port)) {
  auto timeout = std::chrono::duration<double>(timeout_seconds);
  impl_->client.set_keep_alive(true);
  impl_->client.set_tcp_nodelay(true);
  impl_->client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  impl_->client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  impl_->client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
}

HttpServiceClient::~HttpServiceClient() = default;

HttpResponse HttpServiceClient::send(const HttpRequest& request) {
  httplib::Request req;
  req.method = request.method;
  req.path = request.target;
  for (const auto& [name, value] : request.headers.entries()) req.set_header(name, value);
  if (!request.body.empty()) {
    req.body = request.body;
    if (!req.has_header("Content-Type")) req.set_header("Content-Type", "application/json");
  }
  auto result = impl_->client.send(req);
  if (!result) throw TransportError(httplib::to_string(result.error()));
  HttpResponse response;
  response.status = result->status;
  for (const auto& [name, value] : result->headers) response.headers.set(name, value);
  response.body = std::move(result->body);
  return response;
}

bool wait_until_ready(const std::string& host, int port, double timeout_seconds) {
  auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
  while (std::chrono::steady_clock::now() < deadline) {
    try {
      HttpServiceClient client(host, port, 1.0);
      if (client.send({"GET", "/destinations", {}, {}}).status == 200) return true;
    } catch (const TransportError&) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  return false;
}

}  // namespace perflab
