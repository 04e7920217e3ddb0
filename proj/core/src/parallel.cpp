#include "trendcca/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace trendcca {

unsigned effective_threads(unsigned requested) {
  unsigned n = requested != 0 ? requested : std::thread::hardware_concurrency();
  return std::max(1u, n);
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn,
                  unsigned threads) {
  if (n == 0) return;
  const unsigned nt = std::min<std::size_t>(effective_threads(threads), n);
  if (nt <= 1) {
    fn(0, n);
    return;
  }

  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(nt);
  const std::size_t chunk = (n + nt - 1) / nt;
  for (unsigned t = 0; t < nt; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&, t, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace trendcca
