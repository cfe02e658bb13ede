#include "dlva/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace dlva {
namespace {

size_t default_thread_count() {
  if (const char* env = std::getenv("DLVA_THREADS")) {
    long v = std::atol(env);
    if (v > 0) return static_cast<size_t>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

size_t& thread_count_ref() {
  static size_t n = default_thread_count();
  return n;
}

}  // namespace

size_t thread_count() { return thread_count_ref(); }

void set_thread_count(size_t n) { thread_count_ref() = n == 0 ? 1 : n; }

void parallel_for(size_t n, size_t min_parallel,
                  const std::function<void(size_t, size_t)>& fn) {
  if (n == 0) return;
  size_t workers = std::min(thread_count(), n);
  if (workers <= 1 || n < min_parallel) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  size_t chunk = (n + workers - 1) / workers;
  for (size_t w = 0; w < workers; ++w) {
    size_t begin = w * chunk;
    size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&fn, &errors, w, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace dlva
