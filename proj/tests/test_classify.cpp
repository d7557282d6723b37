#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "cavitylc/classify.hpp"

using namespace cavitylc;

namespace {

constexpr double kPi = std::numbers::pi;

struct Signals {
  std::function<double(double)> intensity = [](double) { return 0.0; };
  std::function<double(double)> theta = [](double) { return 0.0; };
  std::function<double(double)> bmean = [](double) { return 0.5; };
  std::function<cplx(double)> chi1 = [](double) { return cplx{}; };
  std::function<cplx(double)> chi2 = [](double) { return cplx{}; };
};

Trajectory synthetic(const Signals& s, double t_end = 2000.0, double stride = 0.05) {
  Trajectory tr;
  tr.chi_orders = {1, 2};
  tr.chi.resize(2);
  const auto n = static_cast<std::size_t>(std::llround(t_end / stride)) + 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = double(k) * stride;
    tr.times.push_back(t);
    tr.intensity.push_back(s.intensity(t));
    tr.theta.push_back(s.theta(t));
    tr.bmean.push_back(s.bmean(t));
    tr.kinetic.push_back(0.0);
    tr.cavity.push_back(std::sqrt(std::max(0.0, s.intensity(t))));
    tr.chi[0].push_back(s.chi1(t));
    tr.chi[1].push_back(s.chi2(t));
  }
  return tr;
}

IntensitySpectrum spectrum_from(std::vector<double> power) {
  IntensitySpectrum s;
  s.power = std::move(power);
  s.freqs.resize(s.power.size());
  for (std::size_t k = 0; k < s.freqs.size(); ++k) s.freqs[k] = double(k);
  return s;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

}  // namespace

TEST(IntensitySpectrum, PureToneOnBin) {
  // 500 time units, frequency on bin 40.
  const double w = 2.0 * kPi * 40.0 / 500.0;
  Signals s;
  s.intensity = [w](double t) { return 1.0 + 0.1 * std::cos(w * t); };
  const auto spec = intensity_spectrum(synthetic(s), 1500.0, 2000.0);
  ASSERT_FALSE(spec.degenerate);
  EXPECT_NEAR(spec.resolution(), 2.0 * kPi / 500.0, 1e-9);
  const auto peak = std::max_element(spec.power.begin(), spec.power.end()) - spec.power.begin();
  EXPECT_EQ(peak, 40);
  EXPECT_NEAR(spec.power[std::size_t(peak)], 1.0, 1e-9);
  EXPECT_NEAR(spectral_ipr(spec), 1.0, 1e-9);
  EXPECT_EQ(spec.power[0], 0.0);
  double total = 0.0;
  for (double v : spec.power) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(IntensitySpectrum, ConstantSignalIsDegenerate) {
  Signals s;
  s.intensity = [](double) { return 0.3; };
  const auto spec = intensity_spectrum(synthetic(s), 1500.0, 2000.0);
  EXPECT_TRUE(spec.degenerate);
  EXPECT_EQ(code_of([&] { spectral_ipr(spec); }), ErrorCode::DegenerateSpectrum);
}

TEST(IntensitySpectrum, WindowErrors) {
  Signals s;
  const auto tr = synthetic(s, 100.0);
  EXPECT_EQ(code_of([&] { intensity_spectrum(tr, 60.0, 100.0); }), ErrorCode::WindowTooShort);
  auto jittered = synthetic(s, 200.0);
  jittered.times[2100] += 0.01;
  EXPECT_EQ(code_of([&] { intensity_spectrum(jittered, 100.0, 200.0); }), ErrorCode::NonuniformSampling);
}

TEST(IntensitySpectrum, PeriodMatchingRemovesLeakage) {
  // Tone halfway between bins: a raw window leaks, a window trimmed to whole periods does not.
  const double w = 2.0 * kPi * 73.5 / 500.0;
  Signals s;
  s.intensity = [w](double t) { return 1.0 + 0.2 * std::cos(w * t); };
  const auto tr = synthetic(s);
  const double raw = spectral_ipr(intensity_spectrum(tr, 1500.0, 2000.0));
  const double matched = spectral_ipr(period_matched_spectrum(tr, 1500.0, 2000.0));
  EXPECT_LT(raw, 0.9);
  EXPECT_GT(matched, 0.95);
}

TEST(SpectralIpr, Examples) {
  EXPECT_DOUBLE_EQ(spectral_ipr(spectrum_from({0, 0, 1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(spectral_ipr(spectrum_from({0, 0.5, 0, 0.5})), 0.5);
  for (int k : {3, 10, 64}) {
    std::vector<double> p(100, 0.0);
    for (int i = 0; i < k; ++i) p[std::size_t(1 + i)] = 1.0 / k;
    EXPECT_NEAR(spectral_ipr(spectrum_from(p)), 1.0 / k, 1e-14);
  }
  EXPECT_EQ(code_of([] { spectral_ipr(spectrum_from({0, 0, 0})); }), ErrorCode::DegenerateSpectrum);
}

TEST(SpectralIpr, BoundsAndPermutationInvariance) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p(64);
    double total = 0.0;
    for (auto& v : p) total += (v = u(rng) * u(rng));
    for (auto& v : p) v /= total;
    const double ipr = spectral_ipr(spectrum_from(p));
    EXPECT_GE(ipr, 1.0 / 64.0 - 1e-15);
    EXPECT_LE(ipr, 1.0);
    std::shuffle(p.begin(), p.end(), rng);
    EXPECT_NEAR(spectral_ipr(spectrum_from(p)), ipr, 1e-14);
  }
}

TEST(DominantFrequency, OffBinToneAccuracy) {
  for (double w : {0.37, 0.929, 2.41}) {
    Signals s;
    s.intensity = [w](double t) { return std::sin(w * t + 0.3); };
    const auto tr = synthetic(s);
    EXPECT_NEAR(dominant_frequency(tr.times, tr.intensity, 1500.0, 2000.0) / w, 1.0, 1e-3);
  }
}

TEST(ClassifyPhase, NormalState) {
  Signals s;
  const auto l = classify_phase(synthetic(s), ModelParams{});
  EXPECT_EQ(l.phase, Phase::N);
  EXPECT_TRUE(std::isnan(l.ipr));
}

TEST(ClassifyPhase, SuperradiantState) {
  Signals s;
  s.intensity = [](double t) { return 0.07 + 1e-6 * std::sin(t); };
  s.theta = [](double) { return 0.4; };
  const auto l = classify_phase(synthetic(s), ModelParams{});
  EXPECT_EQ(l.phase, Phase::S);
  EXPECT_NEAR(l.mean_intensity, 0.07, 1e-9);
}

TEST(ClassifyPhase, AtomicLimitCycle) {
  Signals s;
  s.bmean = [](double t) { return 0.5 + 0.1 * std::cos(4.0 * t); };
  s.chi2 = [](double t) { return cplx(0.2 * std::cos(4.0 * t), 0.0); };
  const auto l = classify_phase(synthetic(s), ModelParams{});
  EXPECT_EQ(l.phase, Phase::AL);
  EXPECT_NEAR(l.atomic_frequency, 4.0, 4e-3);
}

TEST(ClassifyPhase, SuperradiantLimitCycle) {
  Signals s;
  s.intensity = [](double t) { return 0.05 * (1.0 + 0.8 * std::cos(0.929 * t)); };
  s.theta = [](double t) { return 0.3 * std::cos(0.929 * t); };
  const auto l = classify_phase(synthetic(s), ModelParams{});
  EXPECT_EQ(l.phase, Phase::SL);
  EXPECT_GT(l.ipr, 0.9);
  EXPECT_NEAR(l.dominant_frequency, 0.929, 1e-3);
}

TEST(ClassifyPhase, ChaoticBroadband) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> noise(40001);
  for (auto& v : noise) v = g(rng);
  Signals s;
  s.intensity = [&noise](double t) { return 0.05 + 0.01 * noise[std::size_t(std::llround(t / 0.05))]; };
  s.theta = [&noise](double t) { return 0.1 * noise[std::size_t(std::llround(t / 0.05))]; };
  const auto l = classify_phase(synthetic(s), ModelParams{});
  EXPECT_EQ(l.phase, Phase::C);
  EXPECT_LT(l.ipr, 0.05);
}

TEST(ClassifyPhase, TooShortRun) {
  Signals s;
  EXPECT_EQ(code_of([&] { classify_phase(synthetic(s, 1000.0), ModelParams{}); }), ErrorCode::TrajectoryTooShort);
}

TEST(ClassifyPhase, LowConfidenceNearSplit) {
  // Fundamental plus an equal harmonic: IPR 1/2.
  Signals s;
  s.intensity = [](double t) { return 0.05 + 0.01 * (std::cos(2.0 * kPi * 40.0 / 500.0 * t) + std::cos(2.0 * kPi * 80.0 / 500.0 * t)); };
  const auto l = classify_phase(synthetic(s), ModelParams{});
  EXPECT_NEAR(l.ipr, 0.5, 1e-6);
  EXPECT_TRUE(l.low_confidence);
}

TEST(ChiOrbit, CircleAroundOrigin) {
  const double w = 0.8;
  Signals s;
  s.chi1 = [w](double t) { return std::polar(0.3, w * t); };
  s.theta = [w](double t) { return std::cos(w * t); };
  s.intensity = [w](double t) { return 1.0 + 0.5 * std::cos(2.0 * w * t); };
  const auto o = chi_orbit(synthetic(s), 1);
  EXPECT_FALSE(o.degenerate);
  EXPECT_NEAR(o.scale, 0.3, 1e-12);
  EXPECT_NEAR(o.spread, 0.3, 1e-3);
  EXPECT_NEAR(o.period, 2.0 * kPi / w, 1e-2);
  EXPECT_LT(o.closure, 1e-2);
  EXPECT_LT(o.symmetry, 1e-3);
  EXPECT_NEAR(o.min_abs, 0.3, 1e-12);
  EXPECT_NEAR(o.theta_period / o.intensity_period, 2.0, 1e-3);
}

TEST(ChiOrbit, FixedPointIsDegenerate) {
  Signals s;
  s.chi1 = [](double) { return cplx(0.4, 0.1); };
  const auto o = chi_orbit(synthetic(s), 1);
  EXPECT_TRUE(o.degenerate);
  EXPECT_GT(o.symmetry, 1.0);
}

TEST(ChiOrbit, MissingOrder) {
  Signals s;
  EXPECT_EQ(code_of([&] { chi_orbit(synthetic(s), 3); }), ErrorCode::MissingObservable);
}

TEST(DetectMerging, MirrorOrbitsApart) {
  const double w = 0.8;
  Signals plus, minus;
  plus.chi1 = [w](double t) { return cplx(0.5, 0.0) + std::polar(0.1, w * t); };
  minus.chi1 = [w](double t) { return -(cplx(0.5, 0.0) + std::polar(0.1, w * t)); };
  for (auto* s : {&plus, &minus}) {
    s->theta = [w](double t) { return 0.3 + 0.1 * std::cos(w * t); };
    s->intensity = [w](double t) { return 1.0 + 0.5 * std::cos(w * t); };
  }
  const auto r = detect_merging(chi_orbit(synthetic(plus), 1), chi_orbit(synthetic(minus), 1));
  EXPECT_FALSE(r.merged);
  EXPECT_GT(r.coincidence, 1.0);
  EXPECT_NEAR(r.period_ratio, 1.0, 1e-3);
  EXPECT_TRUE(r.signature_consistent);
}

TEST(DetectMerging, SharedSymmetricOrbit) {
  const double w = 0.8;
  Signals plus, minus;
  plus.chi1 = [w](double t) { return std::polar(0.3, w * t); };
  minus.chi1 = [w](double t) { return -std::polar(0.3, w * t); };
  for (auto* s : {&plus, &minus}) {
    s->theta = [w](double t) { return std::cos(w * t); };
    s->intensity = [w](double t) { return 1.0 + 0.5 * std::cos(2.0 * w * t); };
  }
  const auto r = detect_merging(chi_orbit(synthetic(plus), 1), chi_orbit(synthetic(minus), 1));
  EXPECT_TRUE(r.merged);
  EXPECT_LT(r.coincidence, 1e-3);
  EXPECT_NEAR(r.period_ratio, 2.0, 2e-3);
  EXPECT_TRUE(r.signature_consistent);
}

TEST(DetectMerging, IncompatibleWindows) {
  Signals s;
  s.chi1 = [](double t) { return std::polar(0.3, t); };
  const auto tr = synthetic(s);
  EXPECT_EQ(code_of([&] { detect_merging(chi_orbit(tr, 1), chi_orbit(tr, 1, 1400.0, 2000.0)); }),
            ErrorCode::IncompatibleOrbits);
}

TEST(PhaseNames, AllDistinct) {
  EXPECT_EQ(to_string(Phase::N), "N");
  EXPECT_EQ(to_string(Phase::S), "S");
  EXPECT_EQ(to_string(Phase::SL), "SL");
  EXPECT_EQ(to_string(Phase::AL), "AL");
  EXPECT_EQ(to_string(Phase::C), "C");
}
