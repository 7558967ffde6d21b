#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace ircloud {

/// Worker count from IRCLOUD_WORKERS (default 1, invalid values fall back to 1).
inline unsigned worker_count() {
  const char* env = std::getenv("IRCLOUD_WORKERS");
  if (!env) return 1;
  try {
    const long n = std::stol(env);
    return n >= 1 ? static_cast<unsigned>(std::min<long>(n, 256)) : 1u;
  } catch (const std::exception&) {
    return 1;
  }
}

/// out[i] = fn(items[i]); work is shared between `workers` threads and results
/// keep input order. The first exception (by index) is rethrown.
template <class T, class F>
auto parallel_map(const std::vector<T>& items, F fn, unsigned workers = worker_count()) {
  using R = decltype(fn(items.front()));
  std::vector<R> out(items.size());
  std::vector<std::exception_ptr> errors(items.size());
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      try {
        out[i] = fn(items[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(items.size())));
  if (n == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(run);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace ircloud
