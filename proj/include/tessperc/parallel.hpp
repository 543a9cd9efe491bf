#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <utility>
#include <vector>

#ifdef TESSPERC_HAVE_OPENMP
#include <omp.h>
#endif

namespace tessperc {

/// Worker count resolution: explicit > 0 wins, then TESSPERC_WORKERS, then 1.
int resolve_workers(int requested);

/// Serial reference: evaluates fn(i) for i in [0, n) in index order.
template <class Fn>
auto replicate_map_serial(std::size_t n, Fn&& fn) {
  using R = decltype(fn(std::size_t{0}));
  std::vector<R> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
  return out;
}

/// Evaluates fn(i) for i in [0, n) on `workers` OpenMP threads. Results are stored by index,
/// so the returned vector is identical to replicate_map_serial for any worker count as long as
/// fn(i) depends only on i. If replicates throw, the exception of the lowest index is rethrown.
template <class Fn>
auto replicate_map(std::size_t n, int workers, Fn&& fn) {
  using R = decltype(fn(std::size_t{0}));
#ifdef TESSPERC_HAVE_OPENMP
  if (workers > 1 && n > 1) {
    std::vector<R> out(n);
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
    for (std::int64_t i = 0; i < count; ++i) {
      try {
        out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    return out;
  }
#else
  (void)workers;
#endif
  return replicate_map_serial(n, std::forward<Fn>(fn));
}

}  // namespace tessperc
