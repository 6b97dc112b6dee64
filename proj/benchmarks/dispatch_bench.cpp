// Full router dispatch per route, baseline service without issues.

#include <benchmark/benchmark.h>

#include "perflab/booking.hpp"
#include "perflab/primitives.hpp"

namespace {

using namespace perflab;

booking::BookingService& service() {
  static booking::BookingService s(booking::seed_store({}));
  return s;
}

void dispatch(benchmark::State& state, HttpRequest request) {
  auto& svc = service();
  for (auto _ : state) benchmark::DoNotOptimize(svc.dispatch(request));
}

HttpRequest authorized(std::string method, std::string target) {
  HttpRequest r{std::move(method), std::move(target), {}, {}};
  r.headers.set("Authorization", basic_auth_header("user1", "password1"));
  return r;
}

BENCHMARK_CAPTURE(dispatch, destinations, HttpRequest{"GET", "/destinations", {}, {}});
BENCHMARK_CAPTURE(dispatch, flights, HttpRequest{"GET", "/flights", {}, {}});
BENCHMARK_CAPTURE(dispatch, flight, HttpRequest{"GET", "/flights/FL00001", {}, {}});
BENCHMARK_CAPTURE(dispatch, seats, HttpRequest{"GET", "/flights/FL00001/seats", {}, {}});
BENCHMARK_CAPTURE(dispatch, bookings, authorized("GET", "/bookings"));
BENCHMARK_CAPTURE(dispatch, not_found, HttpRequest{"GET", "/nope", {}, {}});

}  // namespace

BENCHMARK_MAIN();
