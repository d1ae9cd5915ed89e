#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace amod {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

// Error taxonomy. Everything derives from std::runtime_error so callers that
// only care about "it failed" can catch one type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Argument outside the domain of a formula (e.g. omega = 0 for r').
struct DomainError : Error {
  using Error::Error;
};
/// Requested value outside the range of a monotone branch.
struct RangeError : Error {
  using Error::Error;
};
/// A sampled operation would alias or wrap.
struct UnderresolutionError : Error {
  using Error::Error;
};
/// Adaptive quadrature hit its subdivision limit before meeting tolerance.
struct ToleranceError : Error {
  using Error::Error;
};
/// Operation refused because no valid admissibility certificate was given.
struct CertificateError : Error {
  using Error::Error;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

inline int sgn(double v) { return (v > 0.0) - (v < 0.0); }

/// printf-style %.17g, the round-trip format used by every exported file.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Thread cap shared by all data-parallel loops in the library.

namespace detail {
inline std::atomic<unsigned>& thread_cap() {
  static std::atomic<unsigned> cap{0};  // 0 = hardware concurrency
  return cap;
}
}  // namespace detail

inline void set_max_threads(unsigned n) { detail::thread_cap().store(n); }

inline unsigned max_threads() {
  unsigned cap = detail::thread_cap().load();
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return cap == 0 ? hw : cap;
}

/// Evaluates fn(i) for i in [0, n) and stores the results in index order.
/// Each index is computed independently, so the output does not depend on
/// the number of threads or on scheduling.
template <class Fn>
auto parallel_map(std::size_t n, Fn&& fn, unsigned threads = 0)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using T = decltype(fn(std::size_t{}));
  std::vector<T> out(n);
  unsigned nt = threads == 0 ? max_threads() : threads;
  nt = static_cast<unsigned>(std::min<std::size_t>(nt, n));
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(nt);
  for (unsigned t = 0; t < nt; ++t) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace amod
