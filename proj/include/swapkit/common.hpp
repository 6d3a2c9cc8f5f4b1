// Shared utilities: deterministic RNG, complex helpers, thread-pool map.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace swapkit {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// splitmix64 step; the backbone of every random stream in the library.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic RNG. Streams depend only on the seed (and child indices),
// never on the standard library implementation or the thread schedule.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ^ 0xd1b54a32d192ed03ULL) {
    // Warm up so that nearby seeds decorrelate immediately.
    next_u64();
    next_u64();
  }

  // Independent child stream for sample #index; the contract that makes
  // Monte-Carlo output independent of the number of worker threads.
  Rng child(std::uint64_t index) const {
    std::uint64_t s = state_;
    std::uint64_t mixed = splitmix64(s) ^ (0x9e6c63d0876a9f7bULL * (index + 1));
    return Rng(mixed);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in {0, ..., k-1}.
  int next_int(int k) {
    if (k <= 0) throw std::invalid_argument("Rng::next_int: k must be positive");
    // 128-bit multiply trick: unbiased enough for doubles-scale sampling and
    // exactly reproducible.
    return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                             static_cast<unsigned __int128>(k)) >> 64);
  }

  bool next_bool(double p) { return next_double() < p; }

  // Standard normal via Box-Muller (no cached spare: keeps streams position-independent).
  double next_gaussian() {
    double u = 0.0;
    do { u = next_double(); } while (u <= 0.0);
    double v = next_double();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * kPi * v);
  }

  cplx next_unit_complex() {
    double t = 2.0 * kPi * next_double();
    return {std::cos(t), std::sin(t)};
  }

  // Uniform complex in the unit disk-ish box [-1,1]^2 (used for random tables).
  cplx next_box_complex() { return {2.0 * next_double() - 1.0, 2.0 * next_double() - 1.0}; }

 private:
  std::uint64_t state_;
};

// Thread budget: min(hardware, SWAPKIT_THREADS if set).
inline int thread_budget() {
  unsigned hw = std::thread::hardware_concurrency();
  int n = hw == 0 ? 1 : static_cast<int>(hw);
  if (const char* env = std::getenv("SWAPKIT_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

// Parallel index loop. body(i) must write only to its own output slot;
// results are then independent of the thread count.
template <class Body>
inline void parallel_for(std::size_t count, Body&& body) {
  int threads = thread_budget();
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t]() {
      for (std::size_t i = t; i < count; i += nthreads) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline double sqr(double x) { return x * x; }

}  // namespace swapkit
