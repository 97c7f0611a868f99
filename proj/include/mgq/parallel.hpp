#pragma once

#include <cstddef>
#include <exception>

#ifndef MGQ_NO_OPENMP
#include <omp.h>
#endif

namespace mgq {

// Runs body(i) for i < n over up to `workers` threads (0: the OpenMP default). Bodies write
// their result by index, so callers that reduce afterwards are independent of the schedule.
// The first exception is rethrown after the loop.
template <class Body>
void parallel_for(std::size_t n, int workers, Body&& body) {
  std::exception_ptr err;
#ifndef MGQ_NO_OPENMP
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#ifndef MGQ_NO_OPENMP
#pragma omp critical(mgq_parallel_error)
#endif
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  parallel_for(n, 0, static_cast<Body&&>(body));
}

}  // namespace mgq
