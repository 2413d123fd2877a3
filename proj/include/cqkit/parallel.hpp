#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#include <omp.h>

namespace cqkit {

/// Worker count used when a caller passes parallelism <= 0.
inline int default_parallelism() { return omp_get_max_threads(); }

/// Reference loop: fn(0), fn(1), ... in order on the calling thread.
template <class Fn> void serial_for(std::size_t n, Fn &&fn) {
  for (std::size_t i = 0; i < n; ++i)
    fn(i);
}

/// Runs fn(i) for every i in [0, n) across an OpenMP team. Each index must
/// write only to its own output slot; results are then identical to
/// serial_for. If any call throws, the exception from the lowest index is
/// rethrown after the loop.
template <class Fn> void parallel_for(std::size_t n, int parallelism, Fn &&fn) {
  const int threads = parallelism > 0 ? parallelism : default_parallelism();
  if (threads == 1 || n < 2) {
    serial_for(n, fn);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace cqkit
