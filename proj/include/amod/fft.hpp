#pragma once

// Thin wrapper over Eigen's FFT with the sign/scale conventions used here:
//   forward(f)_k = sum_n f_n e^{-2 pi i k n / N}
//   inverse(F)_n = (1/N) sum_k F_k e^{+2 pi i k n / N}

#include <unsupported/Eigen/FFT>

#include <span>
#include <vector>

#include "amod/common.hpp"

namespace amod::fft {

inline std::vector<cplx> forward(std::span<const cplx> in) {
  Eigen::FFT<double> engine;
  std::vector<cplx> src(in.begin(), in.end());
  std::vector<cplx> out;
  engine.fwd(out, src);
  return out;
}

inline std::vector<cplx> inverse(std::span<const cplx> in) {
  Eigen::FFT<double> engine;
  std::vector<cplx> src(in.begin(), in.end());
  std::vector<cplx> out;
  engine.inv(out, src);
  return out;
}

/// Signed bin index: 0..N/2-1 then -N/2..-1.
inline long signed_bin(std::size_t k, std::size_t n) {
  return k < (n + 1) / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

/// Physical frequency of each DFT bin for sample spacing dt.
inline std::vector<double> frequencies(std::size_t n, double dt) {
  std::vector<double> xi(n);
  const double df = 1.0 / (static_cast<double>(n) * dt);
  for (std::size_t k = 0; k < n; ++k) xi[k] = static_cast<double>(signed_bin(k, n)) * df;
  return xi;
}

}  // namespace amod::fft
