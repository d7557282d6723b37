#pragma once

// Long-time analysis of mean-field trajectories: intensity spectra, spectral
// IPR, phase labels, chi_n orbits and Z2 limit-cycle merging.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "cavitylc/dynamics.hpp"
#include "cavitylc/error.hpp"

namespace cavitylc {

struct IntensitySpectrum {
  std::vector<double> freqs;  // omega_k = 2 pi k / T, k = 0..N/2
  std::vector<double> power;  // one-sided, DC removed, sums to 1 unless degenerate
  double t0 = 0.0;
  double t1 = 0.0;
  bool degenerate = false;

  double resolution() const { return 2.0 * std::numbers::pi / (t1 - t0); }
};

namespace detail {

inline constexpr double kMinWindow = 50.0;

struct Window {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  double dt = 0.0;
  std::size_t size() const { return end - begin; }
};

// Samples with t in [t0, t1); checks uniform spacing inside the window.
inline Window select_window(const std::vector<double>& times, double t0, double t1) {
  if (!(t1 - t0 >= kMinWindow)) {
    throw Error(ErrorCode::WindowTooShort, "analysis window must span >= 50, got " + std::to_string(t1 - t0));
  }
  const double slack = 1e-9 * std::max(1.0, std::abs(t1));
  Window w;
  w.begin = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t0 - slack) - times.begin());
  w.end = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t1 - slack) - times.begin());
  if (w.size() < 4) throw Error(ErrorCode::WindowTooShort, "fewer than 4 samples inside the analysis window");
  w.dt = (times[w.end - 1] - times[w.begin]) / double(w.size() - 1);
  for (std::size_t i = w.begin + 1; i < w.end; ++i) {
    if (std::abs(times[i] - times[i - 1] - w.dt) > 1e-6 * w.dt) {
      throw Error(ErrorCode::NonuniformSampling, "sample spacing varies near t=" + std::to_string(times[i]));
    }
  }
  if (double(w.size()) * w.dt < kMinWindow - slack) {
    throw Error(ErrorCode::WindowTooShort, "samples inside the window span less than 50");
  }
  return w;
}

inline double mean_of(const std::vector<double>& v, const Window& w) {
  double s = 0.0;
  for (std::size_t i = w.begin; i < w.end; ++i) s += v[i];
  return s / double(w.size());
}

inline double std_of(const std::vector<double>& v, const Window& w) {
  const double m = mean_of(v, w);
  double s = 0.0;
  for (std::size_t i = w.begin; i < w.end; ++i) s += (v[i] - m) * (v[i] - m);
  return std::sqrt(s / double(w.size()));
}

// One-sided |DFT|^2 of the mean-subtracted signal. Bin 0 is zero by construction.
inline std::vector<double> one_sided_power(std::vector<double> x) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= double(n);
  for (double& v : x) v -= mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, x);
  std::vector<double> power(n / 2 + 1, 0.0);
  for (std::size_t k = 1; k < power.size(); ++k) {
    const bool nyquist = (n % 2 == 0) && (k == n / 2);
    power[k] = (nyquist ? 1.0 : 2.0) * std::norm(spec[k]);
  }
  return power;
}

// Peak frequency of a uniformly sampled real signal: Hann window, 4x zero
// padding, and a parabola through the log power of the peak and its neighbours.
inline double peak_frequency(std::vector<double> x, double dt) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= double(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(n - 1));
    x[i] = (x[i] - mean) * hann;
  }
  x.resize(4 * n, 0.0);
  const auto power = one_sided_power(std::move(x));
  std::size_t k = 1;
  for (std::size_t i = 1; i < power.size(); ++i) {
    if (power[i] > power[k]) k = i;
  }
  if (!(power[k] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  double shift = 0.0;
  if (k >= 2 && k + 1 < power.size() && power[k - 1] > 0.0 && power[k + 1] > 0.0) {
    const double l = std::log(power[k - 1]), c = std::log(power[k]), r = std::log(power[k + 1]);
    const double denom = l - 2.0 * c + r;
    if (denom < 0.0) shift = std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
  }
  return 2.0 * std::numbers::pi * (double(k) + shift) / (double(power.size() - 1) * 2.0 * dt);
}

template <class Sample>
double sample_distance(const Sample& a, const Sample& b) {
  return std::abs(a - b);
}

// Recurrence period: first lag at which RMS |x(t+lag) - x(t)| drops to a deep
// local minimum (< 10% of its running maximum). Returns NaN if none is found
// within a third of the window.
template <class Sample>
double recurrence_period(const std::vector<Sample>& x, std::size_t begin, std::size_t end, double dt) {
  const std::size_t n = end - begin;
  const std::size_t max_lag = n / 3;
  double running_max = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  bool descending = false;
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double s = 0.0;
    for (std::size_t i = begin; i + lag < end; ++i) {
      const double d = sample_distance(x[i + lag], x[i]);
      s += d * d;
    }
    const double rms = std::sqrt(s / double(n - lag));
    running_max = std::max(running_max, rms);
    if (rms > prev && descending && prev < 0.1 * running_max) {
      // parabolic refinement of the minimum at lag - 1
      double next = rms;
      double here = prev;
      double before = here;
      if (lag >= 3) {
        double sb = 0.0;
        for (std::size_t i = begin; i + lag - 2 < end; ++i) {
          const double d = sample_distance(x[i + lag - 2], x[i]);
          sb += d * d;
        }
        before = std::sqrt(sb / double(n - lag + 2));
      }
      const double denom = before - 2.0 * here + next;
      const double shift = denom > 0.0 ? std::clamp(0.5 * (before - next) / denom, -0.5, 0.5) : 0.0;
      return (double(lag - 1) + shift) * dt;
    }
    descending = rms < prev;
    prev = rms;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

template <class Sample>
std::vector<Sample> slice(const std::vector<Sample>& v, const Window& w) {
  return {v.begin() + static_cast<std::ptrdiff_t>(w.begin), v.begin() + static_cast<std::ptrdiff_t>(w.end)};
}

}  // namespace detail

inline IntensitySpectrum intensity_spectrum(const Trajectory& traj, double t0, double t1) {
  const auto w = detail::select_window(traj.times, t0, t1);
  IntensitySpectrum out;
  out.t0 = t0;
  out.t1 = t0 + double(w.size()) * w.dt;
  out.power = detail::one_sided_power(detail::slice(traj.intensity, w));
  out.freqs.resize(out.power.size());
  for (std::size_t k = 0; k < out.freqs.size(); ++k) out.freqs[k] = double(k) * out.resolution();

  double total = 0.0;
  for (double v : out.power) total += v;
  // Power of a constant signal is pure round-off: compare against the signal scale.
  double scale = 0.0;
  for (std::size_t i = w.begin; i < w.end; ++i) scale = std::max(scale, std::abs(traj.intensity[i]));
  const double floor = std::pow(1e-12 * std::max(scale, 1e-300) * double(w.size()), 2);
  if (!(total > floor)) {
    out.degenerate = true;
    std::fill(out.power.begin(), out.power.end(), 0.0);
    return out;
  }
  for (double& v : out.power) v /= total;
  return out;
}

// Same as intensity_spectrum, but the window start is moved forward so the
// window holds an integer number of fundamental periods of I(t). A periodic
// signal then has every harmonic on a bin, and its IPR reflects line weights
// rather than leakage from an incommensurate window length. The fundamental is
// the recurrence period of I if one exists, else the dominant period.
inline IntensitySpectrum period_matched_spectrum(const Trajectory& traj, double t0, double t1) {
  const auto w = detail::select_window(traj.times, t0, t1);
  double period = detail::recurrence_period(traj.intensity, w.begin, w.end, w.dt);
  if (!std::isfinite(period)) {
    const double f = detail::peak_frequency(detail::slice(traj.intensity, w), w.dt);
    period = std::isfinite(f) && f > 0.0 ? 2.0 * std::numbers::pi / f : 0.0;
  }
  const double span = double(w.size()) * w.dt;
  if (!(period > 0.0) || period > span - detail::kMinWindow) return intensity_spectrum(traj, t0, t1);
  const double cycles = std::floor(span / period);
  const auto n = static_cast<std::size_t>(std::llround(cycles * period / w.dt));
  if (n >= w.size()) return intensity_spectrum(traj, t0, t1);
  const double start = traj.times[w.end - n];
  return intensity_spectrum(traj, start, start + double(n) * w.dt);
}

// Sum of squared unit-normalized power.
inline double spectral_ipr(const IntensitySpectrum& spec) {
  double total = 0.0;
  double sq = 0.0;
  for (double v : spec.power) {
    total += v;
    sq += v * v;
  }
  if (spec.degenerate || !(total > 0.0)) throw Error(ErrorCode::DegenerateSpectrum, "spectrum carries no power");
  return sq / (total * total);
}

// Peak frequency of a recorded series over [t0, t1); NaN for a static signal.
inline double dominant_frequency(const std::vector<double>& times, const std::vector<double>& values, double t0,
                                 double t1) {
  const auto w = detail::select_window(times, t0, t1);
  return detail::peak_frequency(detail::slice(values, w), w.dt);
}

enum class Phase { N, S, SL, AL, C };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::N: return "N";
    case Phase::S: return "S";
    case Phase::SL: return "SL";
    case Phase::AL: return "AL";
    case Phase::C: return "C";
  }
  return "?";
}

struct ClassifyRules {
  double t0 = 1500.0;
  double t1 = 2000.0;
  double intensity_floor = 1e-3;
  double constancy_rel_std = 1e-3;
  double activity_threshold = 1e-4;
  double ipr_split = 0.5;
  double low_confidence_band = 0.1;  // |ipr - split| below this is flagged
};

struct PhaseLabel {
  Phase phase = Phase::N;
  double ipr = std::numeric_limits<double>::quiet_NaN();  // only for non-degenerate intensity spectra
  double mean_intensity = 0.0;
  double intensity_rel_std = 0.0;
  double activity = 0.0;  // max of the stds of Theta, B and Re chi_2 over the window
  double dominant_frequency = std::numeric_limits<double>::quiet_NaN();  // of I(t)
  double atomic_frequency = std::numeric_limits<double>::quiet_NaN();    // of Re chi_2, or B if chi_2 absent
  bool low_confidence = false;
};

inline PhaseLabel classify_phase(const Trajectory& traj, const ModelParams& /*p*/, const ClassifyRules& rules = {}) {
  if (traj.size() == 0 || traj.times.back() < rules.t1 - 1e-9 * rules.t1) {
    throw Error(ErrorCode::TrajectoryTooShort,
                "trajectory must reach t=" + std::to_string(rules.t1) +
                    (traj.size() ? ", ends at " + std::to_string(traj.times.back()) : std::string(", is empty")));
  }
  const auto w = detail::select_window(traj.times, rules.t0, rules.t1);
  PhaseLabel out;
  out.mean_intensity = detail::mean_of(traj.intensity, w);
  const double i_std = detail::std_of(traj.intensity, w);
  out.intensity_rel_std = out.mean_intensity > 0.0 ? i_std / out.mean_intensity : 0.0;

  const std::vector<double>* atomic = &traj.bmean;
  std::vector<double> re_chi2;
  out.activity = std::max(detail::std_of(traj.theta, w), detail::std_of(traj.bmean, w));
  if (traj.has_chi(2)) {
    const auto& chi2 = traj.chi_series(2);
    re_chi2.resize(chi2.size());
    for (std::size_t i = 0; i < chi2.size(); ++i) re_chi2[i] = chi2[i].real();
    out.activity = std::max(out.activity, detail::std_of(re_chi2, w));
    atomic = &re_chi2;
  }
  if (out.activity > 0.0) out.atomic_frequency = detail::peak_frequency(detail::slice(*atomic, w), w.dt);

  const auto spec = period_matched_spectrum(traj, rules.t0, rules.t1);
  if (!spec.degenerate) {
    out.ipr = spectral_ipr(spec);
    out.dominant_frequency = detail::peak_frequency(detail::slice(traj.intensity, w), w.dt);
  }

  if (out.mean_intensity < rules.intensity_floor) {
    out.phase = out.activity > rules.activity_threshold ? Phase::AL : Phase::N;
  } else if (out.intensity_rel_std < rules.constancy_rel_std) {
    out.phase = Phase::S;
  } else {
    out.phase = out.ipr >= rules.ipr_split ? Phase::SL : Phase::C;
    out.low_confidence = std::abs(out.ipr - rules.ipr_split) < rules.low_confidence_band;
  }
  return out;
}

struct Orbit {
  int n = 1;
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<double> times;
  std::vector<cplx> samples;
  double scale = 0.0;        // max |chi_n| over the window
  double spread = 0.0;       // RMS distance from the orbit centroid
  bool degenerate = false;   // orbit has collapsed to a point
  double period = std::numeric_limits<double>::quiet_NaN();
  double closure = 0.0;      // RMS recurrence mismatch at the period, relative to spread
  double symmetry = 0.0;     // Hausdorff distance to the negated orbit, relative to scale
  double min_abs = 0.0;      // closest approach to the origin
  double theta_period = std::numeric_limits<double>::quiet_NaN();  // 2 pi / dominant frequency
  double intensity_period = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline constexpr std::size_t kHausdorffPoints = 2000;

inline std::vector<cplx> decimate(const std::vector<cplx>& v, std::size_t target) {
  if (v.size() <= target) return v;
  const std::size_t stride = (v.size() + target - 1) / target;
  std::vector<cplx> out;
  for (std::size_t i = 0; i < v.size(); i += stride) out.push_back(v[i]);
  if (out.back() != v.back()) out.push_back(v.back());
  return out;
}

inline double point_to_polyline(cplx z, const std::vector<cplx>& line) {
  if (line.size() == 1) return std::abs(z - line[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const cplx seg = line[i + 1] - line[i];
    const double len2 = std::norm(seg);
    double s = len2 > 0.0 ? ((z - line[i]) * std::conj(seg)).real() / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    best = std::min(best, std::abs(z - (line[i] + s * seg)));
  }
  return best;
}

// Symmetric Hausdorff distance between two sampled curves, measured point to polyline.
inline double hausdorff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  const auto pa = decimate(a, kHausdorffPoints);
  const auto pb = decimate(b, kHausdorffPoints);
  double d = 0.0;
  for (const auto& z : pa) d = std::max(d, point_to_polyline(z, pb));
  for (const auto& z : pb) d = std::max(d, point_to_polyline(z, pa));
  return d;
}

inline constexpr double kDegenerateSpread = 1e-6;

}  // namespace detail

inline Orbit chi_orbit(const Trajectory& traj, int n, double t0 = 1500.0, double t1 = 2000.0) {
  const auto& chi = traj.chi_series(n);
  const auto w = detail::select_window(traj.times, t0, t1);
  Orbit o;
  o.n = n;
  o.t0 = t0;
  o.t1 = t1;
  o.times = detail::slice(traj.times, w);
  o.samples = detail::slice(chi, w);

  cplx centroid{};
  o.min_abs = std::numeric_limits<double>::infinity();
  for (const auto& z : o.samples) {
    centroid += z;
    o.scale = std::max(o.scale, std::abs(z));
    o.min_abs = std::min(o.min_abs, std::abs(z));
  }
  centroid /= double(o.samples.size());
  for (const auto& z : o.samples) o.spread += std::norm(z - centroid);
  o.spread = std::sqrt(o.spread / double(o.samples.size()));

  o.theta_period = 2.0 * std::numbers::pi / detail::peak_frequency(detail::slice(traj.theta, w), w.dt);
  o.intensity_period = 2.0 * std::numbers::pi / detail::peak_frequency(detail::slice(traj.intensity, w), w.dt);

  std::vector<cplx> negated(o.samples.size());
  for (std::size_t i = 0; i < negated.size(); ++i) negated[i] = -o.samples[i];
  o.symmetry = o.scale > 0.0 ? detail::hausdorff(o.samples, negated) / o.scale : 0.0;

  if (o.spread <= detail::kDegenerateSpread * std::max(o.scale, 1.0)) {
    o.degenerate = true;
    return o;
  }

  o.period = detail::recurrence_period(o.samples, 0, o.samples.size(), w.dt);
  double lo_t, hi_t;
  if (std::isfinite(o.period)) {
    lo_t = hi_t = o.period;
  } else {
    std::vector<double> re(o.samples.size());
    for (std::size_t i = 0; i < re.size(); ++i) re[i] = o.samples[i].real();
    const double f = detail::peak_frequency(re, w.dt);
    const double guess = std::isfinite(f) && f > 0.0 ? 2.0 * std::numbers::pi / f : (t1 - t0) / 10.0;
    lo_t = 0.8 * guess;
    hi_t = 1.2 * guess;
  }
  // Closure: smallest RMS recurrence mismatch over lags in [lo_t, hi_t].
  const std::size_t m = o.samples.size();
  const auto lag_lo = static_cast<std::size_t>(std::max(1.0, std::floor(lo_t / w.dt)));
  const auto lag_hi = std::min(static_cast<std::size_t>(std::ceil(hi_t / w.dt)), m / 2);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < m; ++i) s += std::norm(o.samples[i + lag] - o.samples[i]);
    best = std::min(best, std::sqrt(s / double(m - lag)));
  }
  o.closure = std::isfinite(best) ? best / o.spread : 1.0;
  return o;
}

struct MergingReport {
  bool merged = false;
  bool degenerate = false;
  double coincidence = 0.0;     // Hausdorff distance between the two orbits, relative to scale
  double symmetry = 0.0;        // worse of the two self-symmetry metrics
  double period_ratio = std::numeric_limits<double>::quiet_NaN();  // Theta period / intensity period
  bool signature_consistent = false;  // ratio ~2 when merged, ~1 otherwise
};

inline MergingReport detect_merging(const Orbit& plus, const Orbit& minus, double tol = 0.05) {
  if (plus.n != minus.n || plus.samples.size() != minus.samples.size() || plus.t0 != minus.t0 ||
      plus.t1 != minus.t1) {
    throw Error(ErrorCode::IncompatibleOrbits, "orbits differ in order, window or sample count");
  }
  MergingReport r;
  r.symmetry = std::max(plus.symmetry, minus.symmetry);
  if (plus.degenerate || minus.degenerate) {
    r.degenerate = true;
    return r;
  }
  const double scale = std::max(plus.scale, minus.scale);
  r.coincidence = detail::hausdorff(plus.samples, minus.samples) / scale;
  r.merged = r.coincidence < tol && r.symmetry < tol;
  r.period_ratio = plus.theta_period / plus.intensity_period;
  const double expected = r.merged ? 2.0 : 1.0;
  r.signature_consistent = std::abs(r.period_ratio - expected) < tol * expected;
  return r;
}

}  // namespace cavitylc
