#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "cavitylc/rhs.hpp"

using namespace cavitylc;

namespace {

CondensateState random_state(int n_max, std::uint64_t seed, double decay = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<cplx> c(static_cast<std::size_t>(2 * n_max + 1));
  for (int n = -n_max; n <= n_max; ++n) c[std::size_t(n + n_max)] = cplx(g(rng), g(rng)) * std::exp(-decay * std::abs(n));
  return CondensateState(c).normalized();
}

// <n| f(x) |m> = (1/2pi) int f(x) e^{i(m-n)x} dx by midpoint quadrature.
template <class F>
cplx matrix_element(F f, int n, int m) {
  const int q = 512;
  cplx s{};
  for (int j = 0; j < q; ++j) {
    const double x = 2.0 * std::numbers::pi * (j + 0.5) / q;
    s += f(x) * std::polar(1.0, (m - n) * x);
  }
  return s / double(q);
}

// i dC/dt = [p^2 + U0N|a|^2 cos^2 x + 2 eta Re(a) cos x] C + g1d |psi|^2 psi (projected),
// built independently of the banded implementation.
std::vector<cplx> reference_condensate_drift(const CondensateState& c, cplx a, const ModelParams& p) {
  const int nm = c.n_max();
  std::vector<cplx> out(c.size());
  for (int n = -nm; n <= nm; ++n) {
    cplx acc = double(n) * n * c[n];
    for (int m = -nm; m <= nm; ++m) {
      const auto potential = [&](double x) {
        return p.u0n * std::norm(a) * std::cos(x) * std::cos(x) + 2.0 * p.eta * a.real() * std::cos(x);
      };
      acc += matrix_element(potential, n, m) * c[m];
    }
    // Direct convolution: sum over k + l - m = n of c_k c_l c_m^*.
    if (p.g1d != 0.0) {
      cplx nl{};
      for (int k = -nm; k <= nm; ++k)
        for (int l = -nm; l <= nm; ++l) {
          const int m = k + l - n;
          if (std::abs(m) <= nm) nl += c[k] * c[l] * std::conj(c[m]);
        }
      acc += p.g1d * nl;
    }
    out[std::size_t(n + nm)] = cplx{0.0, -1.0} * acc;
  }
  return out;
}

}  // namespace

TEST(CoupledRhs, HomogeneousStateWithEmptyCavityOnlyRotatesPhase) {
  ModelParams p;
  const auto d = coupled_rhs({CondensateState::homogeneous(p.n_max), 0.0, 0.0}, p);
  for (int i = 0; i < p.modes(); ++i) EXPECT_EQ(d.dc[std::size_t(i)], cplx(0.0)) << "mode " << i - p.n_max;
  EXPECT_EQ(d.da, cplx(0.0));
}

TEST(CoupledRhs, PumpScatteringIntoFirstOrders) {
  ModelParams p;
  p.eta = 4.0;
  const double a = 0.01;
  const auto d = coupled_rhs({CondensateState::homogeneous(p.n_max), a, 0.0}, p);
  // i dc_{+-1}/dt = (eta/2)(a + a^*) c_0 = eta a c_0.
  EXPECT_NEAR(std::abs(d.dc[std::size_t(p.n_max + 1)] - cplx(0.0, -p.eta * a)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(d.dc[std::size_t(p.n_max - 1)] - cplx(0.0, -p.eta * a)), 0.0, 1e-15);
  // Theta = 0 for a homogeneous cloud, B = 1/2.
  const cplx expected_da = cplx{0.0, -1.0} * cplx{p.delta_c + 0.5 * p.u0n, -p.kappa} * a;
  EXPECT_NEAR(std::abs(d.da - expected_da), 0.0, 1e-15);
}

TEST(CoupledRhs, MatchesQuadratureOperator) {
  ModelParams p;
  p.n_max = 6;
  p.grid_points = 32;
  p.eta = 5.3;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto c = random_state(p.n_max, seed, 0.3);
    const cplx a{0.13, -0.07};
    const auto d = coupled_rhs({c, a, 0.0}, p);
    const auto ref = reference_condensate_drift(c, a, p);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(std::abs(d.dc[i] - ref[i]), 0.0, 1e-12);
  }
}

TEST(CoupledRhs, ContactTermMatchesDirectConvolution) {
  ModelParams p;
  p.n_max = 5;
  p.grid_points = 32;  // >= 3 n_max + n_max + 1: the cubic term is alias-free
  p.g1d = 0.7;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto c = random_state(p.n_max, seed);
    const cplx a{-0.2, 0.05};
    const auto d = coupled_rhs({c, a, 0.0}, p);
    auto ref = reference_condensate_drift(c, a, p);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(std::abs(d.dc[i] - ref[i]), 0.0, 1e-12);
  }
}

TEST(CoupledRhs, CavityDriftMatchesDefinition) {
  ModelParams p;
  p.n_max = 4;
  p.grid_points = 16;
  const auto c = random_state(p.n_max, 9);
  const cplx a{0.3, 0.4};
  const auto op = order_parameters(c);
  const auto d = coupled_rhs({c, a, 0.0}, p);
  const cplx ref = cplx{0.0, -1.0} * (cplx{p.delta_c + p.u0n * op.bmean, -p.kappa} * a + p.eta * op.theta);
  EXPECT_NEAR(std::abs(d.da - ref), 0.0, 1e-14);
}

TEST(CoupledRhs, ConservesNormInstantaneously) {
  // d/dt sum |c_n|^2 = 2 Re(C^+ dC/dt) vanishes for a Hermitian generator.
  for (double g : {0.0, 1.3}) {
    ModelParams p;
    p.n_max = 8;
    p.grid_points = 64;
    p.g1d = g;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto c = random_state(p.n_max, seed, 0.2);
      const auto d = coupled_rhs({c, cplx(0.2, -0.3), 0.0}, p);
      cplx s{};
      for (int i = 0; i < p.modes(); ++i) s += std::conj(c.amplitudes()[std::size_t(i)]) * d.dc[std::size_t(i)];
      EXPECT_NEAR(s.real(), 0.0, 1e-13);
    }
  }
}

TEST(CoupledRhs, Z2Equivariance) {
  ModelParams p;
  p.n_max = 8;
  p.grid_points = 64;
  p.g1d = 0.4;
  const SystemState s{random_state(p.n_max, 3, 0.3), cplx(0.1, 0.2), 0.0};
  const auto d = coupled_rhs(s, p);
  const auto dz = coupled_rhs(z2_transform(s), p);
  for (int n = -p.n_max; n <= p.n_max; ++n) {
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    EXPECT_NEAR(std::abs(dz.dc[std::size_t(n + p.n_max)] - sign * d.dc[std::size_t(n + p.n_max)]), 0.0, 1e-13);
  }
  EXPECT_NEAR(std::abs(dz.da + d.da), 0.0, 1e-15);
}

TEST(CoupledRhs, PumpRampIsLinear) {
  ModelParams p;
  p.eta = 6.0;
  CoupledRhs rhs(p, 100.0);
  EXPECT_DOUBLE_EQ(rhs.eta_at(0.0), 0.0);
  EXPECT_DOUBLE_EQ(rhs.eta_at(25.0), 1.5);
  EXPECT_DOUBLE_EQ(rhs.eta_at(150.0), 6.0);
}

TEST(PackedState, RoundTrip) {
  const SystemState s{random_state(3, 5), cplx(1, 2), 4.5};
  EXPECT_EQ(unpack(pack(s), 4.5), s);
}
