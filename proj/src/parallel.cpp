#include "condot/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace condot {

namespace {

std::atomic<int> g_override{0};

int env_threads() {
  const char* v = std::getenv("CONDOT_THREADS");
  if (v != nullptr && *v != '\0') {
    try {
      const int n = std::stoi(v);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int thread_count() {
  const int o = g_override.load();
  return o > 0 ? o : env_threads();
}

void set_thread_count(int n) { g_override.store(std::max(n, 0)); }

void parallel_for(Eigen::Index n, const std::function<void(Eigen::Index, Eigen::Index)>& body,
                  Eigen::Index min_chunk) {
  if (n <= 0) return;
  const Eigen::Index max_workers = (n + min_chunk - 1) / std::max<Eigen::Index>(min_chunk, 1);
  const auto workers = std::min<Eigen::Index>(thread_count(), max_workers);
  if (workers <= 1) {
    body(0, n);
    return;
  }
  const Eigen::Index chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (Eigen::Index w = 0; w < workers; ++w) {
    const Eigen::Index begin = w * chunk;
    const Eigen::Index end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, w, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace condot
