#ifndef XMT_PARALLEL_H_
#define XMT_PARALLEL_H_

#include <cstddef>
#include <exception>
#include <vector>

namespace xmt {

// Runs body(i) for i in [0, n) across OpenMP threads. Each iteration must
// write only to its own output slot so that results are independent of the
// schedule. The first exception (by index) is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t n, const Body& body) {
  std::vector<std::exception_ptr> errors(n);
  bool failed = false;
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
      failed = true;
    }
  }
  if (failed) {
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
}

}  // namespace xmt

#endif  // XMT_PARALLEL_H_
