#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <numbers>
#include <ostream>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "cavitylc/model.hpp"
#include "cavitylc/rhs.hpp"

namespace cavitylc {

enum class Method {
  Adaptive,   // embedded Runge-Kutta-Fehlberg 7(8) with step control
  FixedStep,  // classical RK4 drift; the stochastic scheme adds cavity noise on top
};

struct IntegratorConfig {
  Method method = Method::Adaptive;
  double rtol = 1e-9;
  double atol = 1e-13;
  double dt = 5e-3;              // fixed step, FixedStep only
  double output_stride = 0.05;
  double t_end = 2000.0;
  int snapshot_stride = 0;       // store a full SystemState every k samples; 0 disables
  std::vector<int> chi_orders{1, 2};
  double ramp_time = 0.0;        // linear pump ramp 0 -> eta over [0, ramp_time]; 0 = fixed pump
  double initial_step = 1e-3;
  double min_step = 1e-12;
};

inline void validate(const IntegratorConfig& cfg) {
  if (!(cfg.rtol > 0.0) || !(cfg.atol > 0.0)) throw Error(ErrorCode::InvalidConfig, "tolerances must be > 0");
  if (!(cfg.output_stride > 0.0)) throw Error(ErrorCode::InvalidConfig, "output_stride must be > 0");
  if (cfg.method == Method::FixedStep) {
    if (!(cfg.dt > 0.0)) throw Error(ErrorCode::InvalidConfig, "dt must be > 0 for fixed-step runs");
    const double ratio = cfg.output_stride / cfg.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
      throw Error(ErrorCode::InvalidConfig, "output_stride must be an integer multiple of dt");
    }
  }
  for (int n : cfg.chi_orders) {
    if (n < 1) throw Error(ErrorCode::InvalidConfig, "chi orders must be >= 1");
  }
}

// Time series of observables sampled every output_stride.
struct Trajectory {
  std::vector<int> chi_orders;
  std::vector<double> times;
  std::vector<double> intensity;  // |a|^2 = |alpha|^2 / N
  std::vector<double> theta;
  std::vector<double> bmean;
  std::vector<double> kinetic;
  std::vector<cplx> cavity;
  std::vector<std::vector<cplx>> chi;  // chi[k][sample] for chi_orders[k]
  std::vector<SystemState> snapshots;
  SystemState final_state;
  double max_norm_drift = 0.0;
  double max_boundary_occupation = 0.0;
  bool truncation_alarm = false;

  std::size_t size() const { return times.size(); }

  const std::vector<cplx>& chi_series(int n) const {
    for (std::size_t k = 0; k < chi_orders.size(); ++k) {
      if (chi_orders[k] == n) return chi[k];
    }
    throw Error(ErrorCode::MissingObservable, "chi_" + std::to_string(n) + " was not recorded");
  }

  bool has_chi(int n) const { return std::find(chi_orders.begin(), chi_orders.end(), n) != chi_orders.end(); }
};

// Homogeneous condensate with a small real cavity seed.
inline SystemState meanfield_seed(const ModelParams& p, double seed = 1e-3) {
  return {CondensateState::homogeneous(p.n_max), cplx{seed, 0.0}, 0.0};
}

namespace detail {

class Recorder {
 public:
  Recorder(const ModelParams& p, const IntegratorConfig& cfg, std::size_t expected) : p_(p), cfg_(cfg) {
    traj_.chi_orders = cfg.chi_orders;
    traj_.chi.resize(cfg.chi_orders.size());
    for (auto* v : {&traj_.times, &traj_.intensity, &traj_.theta, &traj_.bmean, &traj_.kinetic}) v->reserve(expected);
    traj_.cavity.reserve(expected);
    for (auto& v : traj_.chi) v.reserve(expected);
  }

  void record(const PackedState& y, double t) {
    const std::span<const cplx> c(y.data(), y.size() - 1);
    const cplx a = y.back();
    double norm = 0.0;
    for (const auto& z : c) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        throw Error(ErrorCode::NonFiniteState, "non-finite amplitude at t=" + std::to_string(t));
      }
      norm += std::norm(z);
    }
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
      throw Error(ErrorCode::NonFiniteState, "non-finite cavity amplitude at t=" + std::to_string(t));
    }
    traj_.times.push_back(t);
    traj_.intensity.push_back(std::norm(a));
    traj_.theta.push_back(theta_of(c));
    traj_.bmean.push_back(bmean_of(c));
    traj_.kinetic.push_back(kinetic_of(c));
    traj_.cavity.push_back(a);
    for (std::size_t k = 0; k < cfg_.chi_orders.size(); ++k) {
      const int n = cfg_.chi_orders[k];
      traj_.chi[k].push_back(n <= p_.n_max ? chi_of(c, n) : cplx{});
    }
    traj_.max_norm_drift = std::max(traj_.max_norm_drift, std::abs(norm - 1.0));
    const double edge = std::max(std::norm(c.front()), std::norm(c.back()));
    traj_.max_boundary_occupation = std::max(traj_.max_boundary_occupation, edge);
    if (edge > p_.truncation_alarm) traj_.truncation_alarm = true;
    if (cfg_.snapshot_stride > 0 && (traj_.times.size() - 1) % static_cast<std::size_t>(cfg_.snapshot_stride) == 0) {
      traj_.snapshots.push_back(unpack(y, t));
    }
  }

  Trajectory finish(const PackedState& y, double t) {
    traj_.final_state = unpack(y, t);
    return std::move(traj_);
  }

 private:
  const ModelParams& p_;
  const IntegratorConfig& cfg_;
  Trajectory traj_;
};

inline std::size_t sample_count(double t0, const IntegratorConfig& cfg) {
  if (!(cfg.t_end > t0)) throw Error(ErrorCode::InvalidConfig, "t_end must exceed the initial time");
  return static_cast<std::size_t>(std::floor((cfg.t_end - t0) / cfg.output_stride + 1e-9)) + 1;
}

inline void rk4_step(CoupledRhs& rhs, PackedState& y, double t, double dt, std::array<PackedState, 5>& work) {
  auto& [k1, k2, k3, k4, tmp] = work;
  const std::size_t m = y.size();
  rhs(y, k1, t);
  for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
  rhs(tmp, k2, t + 0.5 * dt);
  for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
  rhs(tmp, k3, t + 0.5 * dt);
  for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + dt * k3[i];
  rhs(tmp, k4, t + dt);
  const double w = dt / 6.0;
  for (std::size_t i = 0; i < m; ++i) y[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

}  // namespace detail

// Cavity noise increment drawn once per fixed step; returns dW for the step
// [t, t + dt]. An empty function means a noiseless run.
using NoiseSource = std::function<cplx(double t, double dt)>;

// Fixed-step scheme: RK4 for the drift, then the additive cavity increment
// (Euler-Maruyama; exact to strong order 1 because the noise is additive).
inline Trajectory evolve_fixed_step(const SystemState& s0, const ModelParams& p, const IntegratorConfig& cfg,
                                    const NoiseSource& noise = {}) {
  validate(cfg);
  CoupledRhs rhs(p, cfg.ramp_time);
  PackedState y = pack(s0);
  std::array<PackedState, 5> work;
  for (auto& w : work) w.resize(y.size());
  const std::size_t samples = detail::sample_count(s0.t, cfg);
  const auto steps_per_sample = static_cast<std::size_t>(std::llround(cfg.output_stride / cfg.dt));
  const double dt = cfg.output_stride / static_cast<double>(steps_per_sample);
  detail::Recorder rec(p, cfg, samples);
  rec.record(y, s0.t);
  double t = s0.t;
  for (std::size_t k = 1; k < samples; ++k) {
    const double t_base = s0.t + static_cast<double>(k - 1) * cfg.output_stride;
    for (std::size_t j = 0; j < steps_per_sample; ++j) {
      t = t_base + static_cast<double>(j) * dt;
      detail::rk4_step(rhs, y, t, dt, work);
      if (noise) y.back() += noise(t, dt);
    }
    t = s0.t + static_cast<double>(k) * cfg.output_stride;
    rec.record(y, t);
  }
  return rec.finish(y, t);
}

inline Trajectory evolve_adaptive(const SystemState& s0, const ModelParams& p, const IntegratorConfig& cfg) {
  namespace odeint = boost::numeric::odeint;
  validate(cfg);
  CoupledRhs rhs(p, cfg.ramp_time);
  PackedState y = pack(s0);
  auto stepper = odeint::make_controlled(cfg.atol, cfg.rtol, odeint::runge_kutta_fehlberg78<PackedState>());
  const std::size_t samples = detail::sample_count(s0.t, cfg);
  detail::Recorder rec(p, cfg, samples);
  rec.record(y, s0.t);
  double t = s0.t;
  double h_natural = cfg.initial_step;
  for (std::size_t k = 1; k < samples; ++k) {
    const double t_obs = s0.t + static_cast<double>(k) * cfg.output_stride;
    while (t_obs - t > 1e-12 * std::max(1.0, std::abs(t_obs))) {
      const bool truncated = h_natural >= t_obs - t;
      double h = truncated ? t_obs - t : h_natural;
      const auto result = stepper.try_step(std::ref(rhs), y, t, h);
      if (result == odeint::success) {
        if (!truncated || h > h_natural) h_natural = h;
      } else {
        h_natural = h;
        if (h_natural < cfg.min_step) {
          throw Error(ErrorCode::StepSizeUnderflow, "step size fell below " + std::to_string(cfg.min_step) +
                                                        " at t=" + std::to_string(t));
        }
      }
    }
    t = t_obs;
    rec.record(y, t);
  }
  return rec.finish(y, t);
}

inline Trajectory evolve_meanfield(const SystemState& s0, const ModelParams& p, const IntegratorConfig& cfg) {
  return cfg.method == Method::Adaptive ? evolve_adaptive(s0, p, cfg) : evolve_fixed_step(s0, p, cfg);
}

struct PhaseSlip {
  int grid_index = 0;
  double x = 0.0;
  double density = 0.0;
  double phase_jump = 0.0;  // arg(psi_{j+1} / psi_{j-1}), wrapped to (-pi, pi]
};

// Local density minima below density_floor (same normalization as
// density_profile) across which the phase of psi jumps by pi within 0.2 rad.
inline std::vector<PhaseSlip> detect_phase_slips(const CondensateState& c, int grid_points, double density_floor) {
  detail::require_normalized(c);
  Fourier fourier(c.n_max(), grid_points);
  std::vector<cplx> psi(static_cast<std::size_t>(grid_points));
  fourier.to_grid(c.amplitudes(), psi);
  const auto g = static_cast<std::size_t>(grid_points);
  std::vector<double> rho(g);
  for (std::size_t j = 0; j < g; ++j) rho[j] = std::norm(psi[j]) / (2.0 * std::numbers::pi);

  std::vector<PhaseSlip> slips;
  constexpr double jump_tolerance = 0.2;
  for (std::size_t j = 0; j < g; ++j) {
    const std::size_t prev = (j + g - 1) % g;
    const std::size_t next = (j + 1) % g;
    if (!(rho[j] < density_floor && rho[j] < rho[prev] && rho[j] <= rho[next])) continue;
    const double jump = std::arg(psi[next] * std::conj(psi[prev]));
    if (std::abs(std::abs(jump) - std::numbers::pi) <= jump_tolerance) {
      slips.push_back({static_cast<int>(j), 2.0 * std::numbers::pi * static_cast<double>(j) / grid_points, rho[j], jump});
    }
  }
  return slips;
}

// Column layout (v1): t, intensity, theta, bmean, kinetic, re_a, im_a, then
// re/im of chi_n for each recorded order.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t[1/omega_R],intensity[|alpha|^2/N],theta[1],bmean[1],kinetic[omega_R],re_a[1],im_a[1]";
  for (int n : traj.chi_orders) os << ",re_chi" << n << "[1],im_chi" << n << "[1]";
  os << '\n';
  const auto old_precision = os.precision(17);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    os << traj.times[i] << ',' << traj.intensity[i] << ',' << traj.theta[i] << ',' << traj.bmean[i] << ','
       << traj.kinetic[i] << ',' << traj.cavity[i].real() << ',' << traj.cavity[i].imag();
    for (const auto& series : traj.chi) os << ',' << series[i].real() << ',' << series[i].imag();
    os << '\n';
  }
  os.precision(old_precision);
}

// Binary snapshot, little-endian, version 1:
//   [0,4)   magic "CLCS"
//   [4,8)   u32 version
//   [8,12)  u32 n_max
//   [12,16) u32 reserved (0)
//   [16,24) f64 t
//   [24,40) f64 re(a), f64 im(a)
//   [40,..) (2 n_max + 1) x (f64 re(c_n), f64 im(c_n)), n ascending
namespace snapshot {

inline constexpr std::uint32_t kVersion = 1;
inline constexpr char kMagic[4] = {'C', 'L', 'C', 'S'};

namespace detail {
inline void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xffu));
}
inline void put_f64(std::ostream& os, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xffu));
}
inline std::uint64_t get_bytes(std::istream& is, int count) {
  std::uint64_t v = 0;
  for (int i = 0; i < count; ++i) {
    const int ch = is.get();
    if (ch == std::char_traits<char>::eof()) throw Error(ErrorCode::Io, "truncated snapshot");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(ch)) << (8 * i);
  }
  return v;
}
}  // namespace detail

inline void write(std::ostream& os, const SystemState& s) {
  os.write(kMagic, 4);
  detail::put_u32(os, kVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(s.condensate.n_max()));
  detail::put_u32(os, 0);
  detail::put_f64(os, s.t);
  detail::put_f64(os, s.a.real());
  detail::put_f64(os, s.a.imag());
  for (const auto& z : s.condensate.amplitudes()) {
    detail::put_f64(os, z.real());
    detail::put_f64(os, z.imag());
  }
  if (!os) throw Error(ErrorCode::Io, "failed to write snapshot");
}

inline SystemState read(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || !std::equal(magic, magic + 4, kMagic)) throw Error(ErrorCode::Io, "not a cavitylc snapshot");
  const auto version = static_cast<std::uint32_t>(detail::get_bytes(is, 4));
  if (version != kVersion) throw Error(ErrorCode::Io, "unsupported snapshot version " + std::to_string(version));
  const auto n_max = static_cast<int>(detail::get_bytes(is, 4));
  detail::get_bytes(is, 4);
  const auto f64 = [&] { return std::bit_cast<double>(detail::get_bytes(is, 8)); };
  SystemState s;
  s.t = f64();
  const double re = f64();
  s.a = {re, f64()};
  std::vector<cplx> c(static_cast<std::size_t>(2 * n_max + 1));
  for (auto& z : c) {
    const double zr = f64();
    z = {zr, f64()};
  }
  s.condensate = CondensateState(std::move(c));
  return s;
}

}  // namespace snapshot

}  // namespace cavitylc
