#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "cavitylc/stability.hpp"

using namespace cavitylc;

namespace {

ModelParams params(double delta_c, double eta) {
  ModelParams p;
  p.delta_c = delta_c;
  p.eta = eta;
  p.n_max = 10;
  p.grid_points = 64;
  return p;
}

SteadyState solve(const ModelParams& p) { return imaginary_time_solve(p, symmetry_broken_seed(p.n_max)); }

}  // namespace

TEST(StabilityMatrix, NormalPhaseCavityBlock) {
  const auto p = params(10.0, 3.0);
  const auto s = build_stability_matrix(solve(p), p);
  const int d = p.modes();
  ASSERT_EQ(s.rows(), 2 * d + 2);
  const double d0 = p.delta0();
  EXPECT_NEAR(std::abs(s(2 * d, 2 * d) - cplx(d0, -p.kappa)), 0.0, 1e-8);
  EXPECT_NEAR(std::abs(s(2 * d + 1, 2 * d + 1) - cplx(-d0, -p.kappa)), 0.0, 1e-8);
  EXPECT_EQ(s(2 * d, 2 * d + 1), cplx(0.0));
  // Cavity eigenvalues of the decoupled 2x2 block.
  const Eigen::MatrixXcd s33 = s.block(2 * d, 2 * d, 2, 2);
  auto ev = stability_eigenvalues(s33);
  std::sort(ev.begin(), ev.end(), [](cplx x, cplx y) { return x.real() < y.real(); });
  EXPECT_NEAR(std::abs(ev[0] - cplx(-d0, -p.kappa)), 0.0, 1e-8);
  EXPECT_NEAR(std::abs(ev[1] - cplx(d0, -p.kappa)), 0.0, 1e-8);
}

TEST(StabilityMatrix, ConjugateBlockRelation) {
  for (double eta : {3.0, 5.2, 6.4}) {
    const auto p = params(9.0, eta);
    const auto s = build_stability_matrix(solve(p), p);
    const int d = p.modes();
    EXPECT_LE((s.block(d, d, d, d) + s.block(0, 0, d, d).conjugate()).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(StabilityMatrix, EigenvaluePairing) {
  for (double eta : {5.2, 6.4, 10.0}) {
    const auto p = params(9.0, eta);
    const auto ev = stability_eigenvalues(build_stability_matrix(solve(p), p));
    int neutral = 0;
    for (const auto& l : ev) {
      // The phase mode is a Jordan pair at 0; the solver splits it by ~sqrt(eps |S|).
      if (std::abs(l) < 1e-6) {
        ++neutral;
        continue;
      }
      double best = 1e300;
      for (const auto& m : ev) best = std::min(best, std::abs(m + std::conj(l)));
      EXPECT_LE(best, 1e-8) << "eta=" << eta << " lambda=" << l;
    }
    EXPECT_EQ(neutral, 2) << "eta=" << eta;
  }
}

TEST(StabilityMatrix, LinearPropagationMatchesNonlinear) {
  const auto p = params(9.0, 6.4);
  const auto ss = solve(p);
  const auto s = build_stability_matrix(ss, p);
  const int d = p.modes();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::VectorXcd dc(d);
  for (int i = 0; i < d; ++i) dc(i) = cplx(g(rng), g(rng)) * std::exp(-0.5 * std::abs(i - p.n_max));
  const cplx da(g(rng), g(rng));
  const double scale = 1e-5 / std::sqrt(dc.squaredNorm() + std::norm(da));
  dc *= scale;
  const cplx da_s = da * scale;
  Eigen::VectorXcd dpsi(2 * d + 2);
  dpsi << dc, dc.conjugate(), da_s, std::conj(da_s);

  const double t = 0.1;
  const Eigen::MatrixXcd prop = (cplx(0.0, -t) * s).exp();
  const Eigen::VectorXcd linear = prop * dpsi;

  // Full dynamics from the perturbed state; remove the mu rotation afterwards.
  SystemState s0{ss.condensate, ss.a + da_s, 0.0};
  for (int i = 0; i < d; ++i) s0.condensate.amplitudes()[std::size_t(i)] += dc(i);
  IntegratorConfig cfg;
  cfg.t_end = t;
  cfg.output_stride = t;
  cfg.rtol = 1e-12;
  cfg.atol = 1e-16;
  const auto tr = evolve_meanfield(s0, p, cfg);
  const auto& fin = tr.final_state;
  const cplx rot = std::polar(1.0, ss.mu * t);
  Eigen::VectorXcd nonlinear(2 * d + 2);
  for (int i = 0; i < d; ++i) {
    const cplx dev = fin.condensate.amplitudes()[std::size_t(i)] * rot - ss.condensate.amplitudes()[std::size_t(i)];
    nonlinear(i) = dev;
    nonlinear(d + i) = std::conj(dev);
  }
  nonlinear(2 * d) = fin.a - ss.a;
  nonlinear(2 * d + 1) = std::conj(fin.a - ss.a);
  // The steady state itself drifts by ~residual * t; keep that well below the signal.
  ASSERT_LE(ss.residual * t, 1e-8);
  EXPECT_LE((nonlinear - linear).norm() / linear.norm(), 0.05);
}

TEST(GrowthRate, ZeroInNormalAndStablePhases) {
  for (double eta : {3.0, 4.0, 5.2}) {
    const auto p = params(9.0, eta);
    const auto rep = analyze_stability(solve(p), p);
    EXPECT_EQ(rep.max_growth, 0.0) << "eta=" << eta;
    EXPECT_TRUE(rep.stable);
    EXPECT_EQ(rep.eigenvalues.size(), std::size_t(2 * p.modes() + 2));
  }
}

TEST(GrowthRate, PositiveBeyondStabilityLine) {
  const auto p = params(9.0, 6.4);
  const auto rep = analyze_stability(solve(p), p);
  EXPECT_GT(rep.max_growth, 1e-3);
  EXPECT_FALSE(rep.stable);
}

TEST(GrowthRate, AgreesWithTimeDomain) {
  for (double eta : {5.2, 6.4}) {
    const auto p = params(9.0, eta);
    const auto ss = solve(p);
    const bool unstable = analyze_stability(ss, p).max_growth > 0.0;
    const double dev = time_domain_departure(ss, p, 500.0);
    EXPECT_EQ(unstable, dev > 1e-3) << "eta=" << eta << " departure=" << dev;
  }
}

TEST(StabilityMatrix, Errors) {
  auto p = params(10.0, 3.0);
  auto ss = solve(p);
  auto pg = p;
  pg.g1d = 0.1;
  try {
    build_stability_matrix(ss, pg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InteractionUnsupported);
  }
  ss.residual = 1e-3;
  try {
    build_stability_matrix(ss, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadSteadyState);
  }
}
