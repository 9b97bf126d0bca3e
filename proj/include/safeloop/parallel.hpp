#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace safeloop {

enum class Execution { Serial, Parallel };

/// out[i] = fn(i) for i in [0, n). Each call writes its own slot, so the
/// result is independent of scheduling. The first exception (lowest index)
/// is rethrown after the loop.
template <typename T, typename Fn>
std::vector<T> map_indices(std::size_t n, Fn&& fn, Execution exec) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  const long count = static_cast<long>(n);
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < count; ++i) {
      try {
        out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
    for (long i = 0; i < count; ++i) {
      try {
        out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace safeloop
