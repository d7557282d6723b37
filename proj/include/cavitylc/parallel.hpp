#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "cavitylc/error.hpp"

namespace cavitylc {

// Worker count: CAVITYLC_THREADS if set, else the hardware concurrency.
inline int default_threads() {
  if (const char* env = std::getenv("CAVITYLC_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::InvalidConfig, std::string("CAVITYLC_THREADS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline int resolve_threads(int requested) { return requested >= 1 ? requested : default_threads(); }

// Calls body(i) for i in [begin, end) on up to `threads` workers. Indices are
// handed out dynamically; body must not throw (capture failures per index).
template <class Body>
void parallel_for(std::size_t begin, std::size_t end, int threads, Body&& body) {
  if (end <= begin) return;
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || end - begin == 1) {
    for (std::size_t i = begin; i < end; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{begin};
  auto run = [&] {
    for (std::size_t i = next++; i < end; i = next++) body(i);
  };
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < std::min(workers, end - begin); ++w) pool.emplace_back(run);
  run();
}

}  // namespace cavitylc
