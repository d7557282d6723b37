#pragma once

// Truncated Wigner ensembles: Wigner-sampled initial states, additive cavity
// noise, fixed-step stochastic trajectories, and index-ordered ensemble sums.

#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <random>
#include <vector>

#include "cavitylc/classify.hpp"
#include "cavitylc/dynamics.hpp"
#include "cavitylc/parallel.hpp"

namespace cavitylc {

struct EnsembleConfig {
  int n_traj = 500;
  std::uint64_t master_seed = 1;
  double dt = 5e-3;
  bool include_initial_noise = true;
  bool include_dynamical_noise = true;
  double t_end = 2000.0;
  double output_stride = 0.05;
  double t0 = 1500.0;  // window for spectra and terminal means
  double t1 = 2000.0;
  double seed_amplitude = 1e-3;  // mean-field cavity seed the noise is added to
  int threads = 0;               // 0: default_threads()
};

struct EnsembleStats {
  std::vector<double> times;
  std::vector<double> mean_intensity;
  std::vector<double> se_intensity;  // standard error of the mean
  std::vector<double> mean_theta;
  std::vector<double> se_theta;
  IntensitySpectrum mean_spectrum;          // average of per-trajectory |I(omega)|^2, then unit-normalized
  std::vector<double> terminal_intensity;   // per trajectory, mean over [t0, t1); NaN if excluded
  std::vector<double> terminal_intensity_std;  // per trajectory, std over [t0, t1); NaN if excluded
  int n_used = 0;
  int n_excluded = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Independent stream per trajectory: seeded from master_seed xor index.
inline std::mt19937_64 trajectory_rng(std::uint64_t master_seed, std::uint64_t index) {
  return std::mt19937_64(detail::splitmix64(master_seed ^ detail::splitmix64(index)));
}

// Half a quantum per mode: complex Gaussian with <|delta|^2> = 1/(2N) on every
// momentum mode (including n = 0) and on the cavity, around the mean-field seed.
inline SystemState sample_wigner_initial(const ModelParams& p, std::mt19937_64& rng, double seed_amplitude = 1e-3) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(1.0 / (4.0 * p.atom_number)));
  const auto draw = [&] {
    const double re = gauss(rng);
    const double im = gauss(rng);
    return cplx{re, im};
  };
  std::vector<cplx> c(static_cast<std::size_t>(p.modes()));
  double excited = 0.0;
  for (int n = -p.n_max; n <= p.n_max; ++n) {
    c[static_cast<std::size_t>(n + p.n_max)] = draw();
    if (n != 0) excited += std::norm(c[static_cast<std::size_t>(n + p.n_max)]);
  }
  c[static_cast<std::size_t>(p.n_max)] += std::sqrt(std::max(0.0, 1.0 - excited));
  const cplx a = cplx{seed_amplitude, 0.0} + draw();
  return {CondensateState(std::move(c)).normalized(), a, 0.0};
}

// Cavity increment over dt: <dW> = 0, <|dW|^2> = kappa dt / N.
inline cplx noise_increment(std::mt19937_64& rng, double dt, const ModelParams& p) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(p.kappa * dt / (2.0 * p.atom_number)));
  const double re = gauss(rng);
  const double im = gauss(rng);
  return {re, im};
}

inline EnsembleStats run_ensemble(const ModelParams& p, const EnsembleConfig& cfg) {
  if (cfg.n_traj < 1) throw Error(ErrorCode::InvalidConfig, "n_traj must be >= 1");
  if (!(cfg.dt > 0.0)) throw Error(ErrorCode::InvalidConfig, "dt must be > 0");
  if (!(cfg.t_end >= cfg.t1)) throw Error(ErrorCode::InvalidConfig, "t_end must cover the analysis window");

  IntegratorConfig icfg;
  icfg.method = Method::FixedStep;
  icfg.dt = cfg.dt;
  icfg.output_stride = cfg.output_stride;
  icfg.t_end = cfg.t_end;
  icfg.chi_orders = {};
  validate(icfg);

  struct Result {
    bool ok = false;
    std::vector<double> intensity;
    std::vector<double> theta;
    std::vector<double> power;  // raw one-sided power over the window
    double window_mean = 0.0;
    double window_std = 0.0;
    std::exception_ptr failure;
  };

  EnsembleStats out;
  const auto n = static_cast<std::size_t>(cfg.n_traj);
  out.terminal_intensity.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.terminal_intensity_std.assign(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> sum_i, sum_i2, sum_th, sum_th2, sum_power;

  const int threads = resolve_threads(cfg.threads);
  // Batches bound memory; within a batch results are kept by index and summed in order.
  const std::size_t batch = std::max<std::size_t>(1, 4 * static_cast<std::size_t>(threads));
  std::vector<Result> results(batch);
  for (std::size_t lo = 0; lo < n; lo += batch) {
    const std::size_t hi = std::min(n, lo + batch);
    parallel_for(lo, hi, threads, [&](std::size_t i) {
      Result& r = results[i - lo];
      r = Result{};
      auto rng = trajectory_rng(cfg.master_seed, i);
      const SystemState s0 = cfg.include_initial_noise ? sample_wigner_initial(p, rng, cfg.seed_amplitude)
                                                       : meanfield_seed(p, cfg.seed_amplitude);
      NoiseSource noise;
      if (cfg.include_dynamical_noise) noise = [&](double, double h) { return noise_increment(rng, h, p); };
      try {
        Trajectory tr = evolve_fixed_step(s0, p, icfg, noise);
        const auto w = detail::select_window(tr.times, cfg.t0, cfg.t1);
        r.window_mean = detail::mean_of(tr.intensity, w);
        r.window_std = detail::std_of(tr.intensity, w);
        r.power = detail::one_sided_power(detail::slice(tr.intensity, w));
        r.intensity = std::move(tr.intensity);
        r.theta = std::move(tr.theta);
        r.ok = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteState) r.failure = std::current_exception();
      } catch (...) {
        r.failure = std::current_exception();
      }
    });
    for (std::size_t i = lo; i < hi; ++i) {
      Result& r = results[i - lo];
      if (r.failure) std::rethrow_exception(r.failure);
      if (!r.ok) {
        ++out.n_excluded;
        continue;
      }
      if (sum_i.empty()) {
        sum_i.assign(r.intensity.size(), 0.0);
        sum_i2.assign(r.intensity.size(), 0.0);
        sum_th.assign(r.theta.size(), 0.0);
        sum_th2.assign(r.theta.size(), 0.0);
        sum_power.assign(r.power.size(), 0.0);
      }
      for (std::size_t k = 0; k < r.intensity.size(); ++k) {
        sum_i[k] += r.intensity[k];
        sum_i2[k] += r.intensity[k] * r.intensity[k];
        sum_th[k] += r.theta[k];
        sum_th2[k] += r.theta[k] * r.theta[k];
      }
      for (std::size_t k = 0; k < r.power.size(); ++k) sum_power[k] += r.power[k];
      out.terminal_intensity[i] = r.window_mean;
      out.terminal_intensity_std[i] = r.window_std;
      ++out.n_used;
    }
  }
  if (double(out.n_excluded) > 0.01 * double(n)) {
    throw Error(ErrorCode::NonFiniteState, std::to_string(out.n_excluded) + " of " + std::to_string(n) +
                                               " trajectories diverged (limit 1%)");
  }
  if (out.n_used == 0) throw Error(ErrorCode::NonFiniteState, "every trajectory diverged");
  out.times.resize(sum_i.size());
  for (std::size_t k = 0; k < out.times.size(); ++k) out.times[k] = double(k) * cfg.output_stride;
  const auto window = detail::select_window(out.times, cfg.t0, cfg.t1);

  const double used = out.n_used;
  const auto finish = [&](const std::vector<double>& s, const std::vector<double>& s2, std::vector<double>& mean,
                          std::vector<double>& se) {
    mean.resize(s.size());
    se.resize(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      mean[k] = s[k] / used;
      const double var = out.n_used > 1 ? std::max(0.0, (s2[k] - used * mean[k] * mean[k]) / (used - 1.0)) : 0.0;
      se[k] = std::sqrt(var / used);
    }
  };
  finish(sum_i, sum_i2, out.mean_intensity, out.se_intensity);
  finish(sum_th, sum_th2, out.mean_theta, out.se_theta);

  auto& spec = out.mean_spectrum;
  spec.t0 = cfg.t0;
  spec.t1 = cfg.t0 + double(window.size()) * window.dt;
  spec.power = std::move(sum_power);
  spec.freqs.resize(spec.power.size());
  for (std::size_t k = 0; k < spec.freqs.size(); ++k) spec.freqs[k] = double(k) * spec.resolution();
  double total = 0.0;
  for (double v : spec.power) total += v;
  if (total > 0.0) {
    for (double& v : spec.power) v /= total;
  } else {
    spec.degenerate = true;
  }
  return out;
}

// Peak of a spectrum with a log-parabolic refinement over the neighbouring bins.
inline double spectrum_peak(const IntensitySpectrum& spec) {
  if (spec.degenerate || spec.power.size() < 3) return std::numeric_limits<double>::quiet_NaN();
  std::size_t k = 1;
  for (std::size_t i = 1; i < spec.power.size(); ++i) {
    if (spec.power[i] > spec.power[k]) k = i;
  }
  double shift = 0.0;
  if (k >= 2 && k + 1 < spec.power.size() && spec.power[k - 1] > 0.0 && spec.power[k + 1] > 0.0) {
    const double l = std::log(spec.power[k - 1]), c = std::log(spec.power[k]), r = std::log(spec.power[k + 1]);
    const double denom = l - 2.0 * c + r;
    if (denom < 0.0) shift = std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
  }
  return (double(k) + shift) * spec.resolution();
}

}  // namespace cavitylc
