#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "cavitylc/fourier.hpp"
#include "cavitylc/model.hpp"

namespace cavitylc {

// Packed integration state: [c_{-n_max}, ..., c_{n_max}, a].
using PackedState = std::vector<cplx>;

inline PackedState pack(const SystemState& s) {
  PackedState y(s.condensate.amplitudes().begin(), s.condensate.amplitudes().end());
  y.push_back(s.a);
  return y;
}

inline SystemState unpack(const PackedState& y, double t) {
  return {CondensateState(std::vector<cplx>(y.begin(), y.end() - 1)), y.back(), t};
}

// Mean-field drift of the coupled condensate/cavity equations,
//   i dC/dt = M C + g1d P[|psi|^2 psi],
//   i da/dt = (Delta_c - i kappa + U0N B) a + eta Theta,
// with M = (n^2 + U0N|a|^2/2) d0 + (U0N|a|^2/4) d2 + (eta/2)(a + a^*) d1,
// where [d_j]_{nm} = 1 if |n - m| == j. The factor 1/2 on d1 is the plane-wave
// matrix element of cos(x); Theta = C^T (d1/2) C uses the same convention.
class CoupledRhs {
 public:
  explicit CoupledRhs(const ModelParams& p, double ramp_time = 0.0)
      : p_(p), ramp_time_(ramp_time), n_max_(p.n_max) {
    if (p_.g1d != 0.0) {
      fourier_.emplace(p_.n_max, p_.grid_points);
      grid_.resize(static_cast<std::size_t>(p_.grid_points));
      nonlinear_.resize(static_cast<std::size_t>(p_.modes()));
    }
  }

  const ModelParams& params() const { return p_; }

  double eta_at(double t) const {
    if (ramp_time_ <= 0.0 || t >= ramp_time_) return p_.eta;
    return p_.eta * std::max(t, 0.0) / ramp_time_;
  }

  // out = M(a) c, without the contact interaction.
  void apply_linear(std::span<const cplx> c, cplx a, double eta, std::span<cplx> out) const {
    const int d = static_cast<int>(c.size());
    const double intensity = std::norm(a);
    const double diag_shift = 0.5 * p_.u0n * intensity;
    const double off2 = 0.25 * p_.u0n * intensity;
    const double off1 = eta * a.real();  // (eta/2)(a + a^*)
    for (int i = 0; i < d; ++i) {
      const int n = i - n_max_;
      cplx acc = (double(n) * n + diag_shift) * c[i];
      if (i >= 1) acc += off1 * c[i - 1];
      if (i + 1 < d) acc += off1 * c[i + 1];
      if (i >= 2) acc += off2 * c[i - 2];
      if (i + 2 < d) acc += off2 * c[i + 2];
      out[i] = acc;
    }
  }

  // out += g1d P[|psi|^2 psi], evaluated on the real-space grid.
  void add_interaction(std::span<const cplx> c, std::span<cplx> out) {
    if (!fourier_) return;
    fourier_->to_grid(c, grid_);
    for (auto& z : grid_) z *= std::norm(z);
    fourier_->from_grid(grid_, nonlinear_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p_.g1d * nonlinear_[i];
  }

  cplx cavity_drift(std::span<const cplx> c, cplx a, double eta) const {
    const double theta = detail::theta_of(c);
    const double bmean = detail::bmean_of(c);
    const cplx detuning{p_.delta_c + p_.u0n * bmean, -p_.kappa};
    return cplx{0.0, -1.0} * (detuning * a + eta * theta);
  }

  // odeint-compatible signature.
  void operator()(const PackedState& y, PackedState& dydt, double t) {
    const std::size_t d = y.size() - 1;
    const std::span<const cplx> c(y.data(), d);
    const std::span<cplx> dc(dydt.data(), d);
    const cplx a = y[d];
    const double eta = eta_at(t);
    apply_linear(c, a, eta, dc);
    add_interaction(c, dc);
    for (auto& z : dc) z = cplx{z.imag(), -z.real()};  // multiply by -i
    dydt[d] = cavity_drift(c, a, eta);
  }

 private:
  ModelParams p_;
  double ramp_time_;
  int n_max_;
  std::optional<Fourier> fourier_;
  std::vector<cplx> grid_;
  std::vector<cplx> nonlinear_;
};

struct Derivative {
  std::vector<cplx> dc;
  cplx da;
};

// Deterministic time derivative of a single state (no noise, no ramp).
inline Derivative coupled_rhs(const SystemState& s, const ModelParams& p) {
  CoupledRhs rhs(p);
  const PackedState y = pack(s);
  PackedState dydt(y.size());
  rhs(y, dydt, s.t);
  return {std::vector<cplx>(dydt.begin(), dydt.end() - 1), dydt.back()};
}

}  // namespace cavitylc
