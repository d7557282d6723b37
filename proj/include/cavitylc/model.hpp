#pragma once

// Dimensionless BEC-cavity model: hbar = omega_R = k_c = 1, cavity amplitude
// stored as a = alpha / sqrt(N). The condensate lives on one cavity period
// x in [0, 2pi) and is expanded in plane waves exp(i n x), |n| <= n_max.

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "cavitylc/error.hpp"
#include "cavitylc/fourier.hpp"

namespace cavitylc {

struct ModelParams {
  double delta_c = 10.0;      // cavity detuning
  double u0n = -12.0;         // collective light shift U0*N (< 0 for red detuning)
  double kappa = 10.0;        // cavity field decay rate
  double eta = 4.0;           // effective pump rate
  double g1d = 0.0;           // contact interaction g_aa N / L
  double atom_number = 1e5;   // only sets the TWA noise scale
  int n_max = 16;
  int grid_points = 128;
  double truncation_alarm = 1e-6;  // boundary occupation that flags an under-resolved run

  // delta_0 = Delta_c + U0 N / 2, the cavity detuning seen by a homogeneous condensate.
  double delta0() const { return delta_c + 0.5 * u0n; }
  int modes() const { return 2 * n_max + 1; }

  bool operator==(const ModelParams&) const = default;
};

inline ModelParams validate_params(const ModelParams& raw) {
  for (double v : {raw.delta_c, raw.u0n, raw.kappa, raw.eta, raw.g1d, raw.atom_number, raw.truncation_alarm}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "model parameter is not finite");
  }
  if (!(raw.kappa > 0.0)) throw Error(ErrorCode::NonPositiveKappa, "kappa must be > 0, got " + std::to_string(raw.kappa));
  if (raw.n_max < 2) throw Error(ErrorCode::TruncationTooSmall, "n_max must be >= 2, got " + std::to_string(raw.n_max));
  if (raw.grid_points < 4 * raw.n_max) {
    throw Error(ErrorCode::GridTooCoarse, "grid_points must be >= 4*n_max = " + std::to_string(4 * raw.n_max));
  }
  if (raw.atom_number < 1.0) throw Error(ErrorCode::NonFiniteValue, "atom_number must be >= 1");
  return raw;
}

// Amplitudes c_n on the integer momentum ladder n = -n_max..n_max.
class CondensateState {
 public:
  CondensateState() = default;
  explicit CondensateState(std::vector<cplx> amplitudes) : c_(std::move(amplitudes)) {
    if (c_.size() % 2 == 0 || c_.size() < 3) {
      throw Error(ErrorCode::TruncationTooSmall, "amplitude vector must have odd length 2*n_max+1");
    }
  }

  static CondensateState homogeneous(int n_max) {
    std::vector<cplx> c(static_cast<std::size_t>(2 * n_max + 1));
    c[static_cast<std::size_t>(n_max)] = 1.0;
    return CondensateState(std::move(c));
  }

  int n_max() const { return static_cast<int>(c_.size() / 2); }
  std::size_t size() const { return c_.size(); }

  // Indexed by momentum n, not by storage slot.
  cplx& operator[](int n) { return c_[static_cast<std::size_t>(n + n_max())]; }
  const cplx& operator[](int n) const { return c_[static_cast<std::size_t>(n + n_max())]; }

  std::span<cplx> amplitudes() { return c_; }
  std::span<const cplx> amplitudes() const { return c_; }

  double norm_squared() const {
    double s = 0.0;
    for (const auto& z : c_) s += std::norm(z);
    return s;
  }

  CondensateState normalized() const {
    CondensateState out = *this;
    const double inv = 1.0 / std::sqrt(norm_squared());
    for (auto& z : out.c_) z *= inv;
    return out;
  }

  // Largest of |c_{-n_max}|^2 and |c_{+n_max}|^2.
  double boundary_occupation() const { return std::max(std::norm(c_.front()), std::norm(c_.back())); }

  bool operator==(const CondensateState&) const = default;

 private:
  std::vector<cplx> c_;
};

struct SystemState {
  CondensateState condensate;
  cplx a{};       // alpha / sqrt(N)
  double t = 0.0;

  double intensity() const { return std::norm(a); }
  bool operator==(const SystemState&) const = default;
};

struct OrderParams {
  double theta = 0.0;  // integral of rho cos(x)
  double bmean = 0.5;  // integral of rho cos^2(x)
};

namespace detail {

// Theta = sum_n Re(c_n^* c_{n+1}); no normalization check.
inline double theta_of(std::span<const cplx> c) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) s += (std::conj(c[i]) * c[i + 1]).real();
  return s;
}

// B = (1/2) sum |c_n|^2 + (1/2) sum_n Re(c_n^* c_{n+2}).
inline double bmean_of(std::span<const cplx> c) {
  double norm = 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    norm += std::norm(c[i]);
    if (i + 2 < c.size()) s += (std::conj(c[i]) * c[i + 2]).real();
  }
  return 0.5 * norm + 0.5 * s;
}

inline double kinetic_of(std::span<const cplx> c) {
  const int n_max = static_cast<int>(c.size() / 2);
  double e = 0.0;
  for (int n = -n_max; n <= n_max; ++n) e += double(n) * n * std::norm(c[static_cast<std::size_t>(n + n_max)]);
  return e;
}

// chi_n = c_0 (c_n^* + c_{-n}^*)
inline cplx chi_of(std::span<const cplx> c, int n) {
  const int n_max = static_cast<int>(c.size() / 2);
  const auto at = [&](int k) { return c[static_cast<std::size_t>(k + n_max)]; };
  return at(0) * (std::conj(at(n)) + std::conj(at(-n)));
}

inline void require_normalized(const CondensateState& c, double tol = 1e-6) {
  const double dev = std::abs(c.norm_squared() - 1.0);
  if (!(dev <= tol)) {
    throw Error(ErrorCode::UnnormalizedState, "sum |c_n|^2 deviates from 1 by " + std::to_string(dev));
  }
}

}  // namespace detail

inline OrderParams order_parameters(const CondensateState& c) {
  detail::require_normalized(c);
  return {detail::theta_of(c.amplitudes()), detail::bmean_of(c.amplitudes())};
}

inline double kinetic_energy(const CondensateState& c) { return detail::kinetic_of(c.amplitudes()); }

inline cplx chi(const CondensateState& c, int n) { return detail::chi_of(c.amplitudes(), n); }

// {a, Theta} -> {-a, -Theta}: half-period translation c_n -> (-1)^n c_n.
inline CondensateState z2_transform(const CondensateState& c) {
  CondensateState out = c;
  for (int n = -c.n_max(); n <= c.n_max(); ++n) {
    if (n % 2 != 0) out[n] = -out[n];
  }
  return out;
}

inline SystemState z2_transform(const SystemState& s) { return {z2_transform(s.condensate), -s.a, s.t}; }

// rho(x_j) = |psi(x_j)|^2 / (2 pi) on x_j = 2 pi j / grid_points, so that the
// periodic trapezoid rule integrates it to sum |c_n|^2.
inline std::vector<double> density_profile(const CondensateState& c, int grid_points) {
  detail::require_normalized(c);
  Fourier fourier(c.n_max(), grid_points);
  std::vector<cplx> psi(static_cast<std::size_t>(grid_points));
  fourier.to_grid(c.amplitudes(), psi);
  std::vector<double> rho(psi.size());
  for (std::size_t j = 0; j < psi.size(); ++j) rho[j] = std::norm(psi[j]) / (2.0 * std::numbers::pi);
  return rho;
}

inline std::vector<double> grid_coordinates(int grid_points) {
  std::vector<double> x(static_cast<std::size_t>(grid_points));
  for (int j = 0; j < grid_points; ++j) x[static_cast<std::size_t>(j)] = 2.0 * std::numbers::pi * j / grid_points;
  return x;
}

}  // namespace cavitylc
