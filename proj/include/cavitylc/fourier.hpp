#pragma once

#include <complex>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "cavitylc/error.hpp"

namespace cavitylc {

using cplx = std::complex<double>;

// Maps truncated plane-wave amplitudes c_n (n = -n_max..n_max) to samples of
// psi(x) = sum_n c_n exp(i n x) on a uniform grid over [0, 2pi) and back.
// Holds FFT plans and scratch buffers, so one instance per thread.
class Fourier {
 public:
  Fourier(int n_max, int grid_points) : n_max_(n_max), grid_(grid_points), spec_(grid_points), field_(grid_points) {
    if (grid_points < 2 * n_max + 1) {
      throw Error(ErrorCode::GridTooCoarse,
                  "grid_points=" + std::to_string(grid_points) + " cannot hold modes |n|<=" + std::to_string(n_max));
    }
    fft_.SetFlag(Eigen::FFT<double>::Unscaled);
  }

  int n_max() const { return n_max_; }
  int grid_points() const { return grid_; }

  void to_grid(std::span<const cplx> c, std::span<cplx> psi) {
    std::fill(spec_.begin(), spec_.end(), cplx{});
    for (int n = -n_max_; n <= n_max_; ++n) spec_[wrap(n)] = c[n + n_max_];
    fft_.inv(field_, spec_);
    std::copy(field_.begin(), field_.end(), psi.begin());
  }

  // Projects grid samples back onto |n| <= n_max; higher harmonics are dropped.
  void from_grid(std::span<const cplx> psi, std::span<cplx> c) {
    std::copy(psi.begin(), psi.end(), field_.begin());
    fft_.fwd(spec_, field_);
    const double inv = 1.0 / grid_;
    for (int n = -n_max_; n <= n_max_; ++n) c[n + n_max_] = spec_[wrap(n)] * inv;
  }

 private:
  std::size_t wrap(int n) const { return static_cast<std::size_t>(n < 0 ? n + grid_ : n); }

  int n_max_;
  int grid_;
  Eigen::FFT<double> fft_;
  std::vector<cplx> spec_;
  std::vector<cplx> field_;
};

}  // namespace cavitylc
