#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cavitylc/dynamics.hpp"
#include "cavitylc/steady_state.hpp"

namespace cavitylc {

struct StabilityReport {
  std::vector<cplx> eigenvalues;
  double max_growth = 0.0;  // max Im(lambda), clamped to 0 below the threshold
  bool stable = true;
};

inline constexpr double kGrowthThreshold = 1e-6;
inline constexpr double kSteadyResidualGate = 1e-6;

// Linearization i d(dpsi)/dt = S dpsi about a steady state, with
// dpsi = [dc (2n_max+1), dc^* (2n_max+1), da, da^*] in the frame rotating at mu:
//
//   S = | M - mu      0         [Q^* C,  Q C]    |
//       | 0        -M^* + mu   [-Q^* C^*, -Q C^*] |
//       | [C^+ Q; -C^T Q^*]  [C^T Q; -C^+ Q^*]  diag(D - i kappa, -D - i kappa) |
//
// with Q = a U0N (d0/2 + d2/4) + (eta/2) d1 and D = Delta_c + U0N B.
inline Eigen::MatrixXcd build_stability_matrix(const SteadyState& ss, const ModelParams& p) {
  if (p.g1d != 0.0) throw Error(ErrorCode::InteractionUnsupported, "linear stability is implemented for g1d == 0 only");
  if (ss.residual > kSteadyResidualGate && !ss.extrapolated) {
    throw Error(ErrorCode::BadSteadyState, "steady-state residual " + std::to_string(ss.residual) + " above gate");
  }
  if (ss.condensate.n_max() != p.n_max) throw Error(ErrorCode::BadSteadyState, "steady state truncation differs from n_max");

  const int d = p.modes();
  const auto& cs = ss.condensate.amplitudes();
  Eigen::VectorXcd c(d);
  for (int i = 0; i < d; ++i) c(i) = cs[static_cast<std::size_t>(i)];
  const cplx a = ss.a;
  const double bmean = detail::bmean_of(cs);

  Eigen::MatrixXcd m = detail::hamiltonian_real(p.n_max, a, p).cast<cplx>();
  Eigen::MatrixXd pb = Eigen::MatrixXd::Zero(d, d);  // d0/2 + d2/4
  Eigen::MatrixXd d1 = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    pb(i, i) = 0.5;
    if (i + 2 < d) pb(i, i + 2) = pb(i + 2, i) = 0.25;
    if (i + 1 < d) d1(i, i + 1) = d1(i + 1, i) = 1.0;
  }
  const Eigen::MatrixXcd q = a * p.u0n * pb.cast<cplx>() + (0.5 * p.eta) * d1.cast<cplx>();
  const Eigen::MatrixXcd qc = q.conjugate();
  const Eigen::VectorXcd cc = c.conjugate();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);

  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(2 * d + 2, 2 * d + 2);
  s.block(0, 0, d, d) = m - ss.mu * id;
  s.block(d, d, d, d) = -m.conjugate() + ss.mu * id;
  s.block(0, 2 * d, d, 1) = qc * c;
  s.block(0, 2 * d + 1, d, 1) = q * c;
  s.block(d, 2 * d, d, 1) = -qc * cc;
  s.block(d, 2 * d + 1, d, 1) = -q * cc;
  s.block(2 * d, 0, 1, d) = c.adjoint() * q;
  s.block(2 * d + 1, 0, 1, d) = -c.transpose() * qc;
  s.block(2 * d, d, 1, d) = c.transpose() * q;
  s.block(2 * d + 1, d, 1, d) = -c.adjoint() * qc;
  const double detuning = p.delta_c + p.u0n * bmean;
  s(2 * d, 2 * d) = cplx{detuning, -p.kappa};
  s(2 * d + 1, 2 * d + 1) = cplx{-detuning, -p.kappa};
  return s;
}

inline std::vector<cplx> stability_eigenvalues(const Eigen::MatrixXcd& s) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(s, /*computeEigenvectors=*/false);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::EigenSolverFailure, "stability eigenproblem failed");
  const auto& ev = eig.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

// Growth rate of the fastest collective mode, max Im(lambda); values at or
// below kGrowthThreshold (the neutral phase mode, round-off) count as zero.
inline double max_growth_rate(const Eigen::MatrixXcd& s) {
  double g = -std::numeric_limits<double>::infinity();
  for (const auto& lambda : stability_eigenvalues(s)) g = std::max(g, lambda.imag());
  return g <= kGrowthThreshold ? 0.0 : g;
}

inline StabilityReport analyze_stability(const SteadyState& ss, const ModelParams& p) {
  const Eigen::MatrixXcd s = build_stability_matrix(ss, p);
  StabilityReport report;
  report.eigenvalues = stability_eigenvalues(s);
  double g = -std::numeric_limits<double>::infinity();
  for (const auto& lambda : report.eigenvalues) g = std::max(g, lambda.imag());
  report.max_growth = g <= kGrowthThreshold ? 0.0 : g;
  report.stable = report.max_growth == 0.0;
  return report;
}

// Time-domain check: largest |Theta(t) - Theta_ss| over [0, horizon] after a
// random kick of norm `kick` to the condensate and cavity (seeded, reproducible).
inline double time_domain_departure(const SteadyState& ss, const ModelParams& p, double horizon = 500.0,
                                    double kick = 1e-5, std::uint64_t seed = 7, IntegratorConfig cfg = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<cplx> dc(ss.condensate.size() + 1);
  double norm = 0.0;
  for (auto& z : dc) {
    z = {gauss(rng), gauss(rng)};
    norm += std::norm(z);
  }
  const double scale = kick / std::sqrt(norm);
  SystemState s{ss.condensate, ss.a + scale * dc.back(), 0.0};
  for (std::size_t i = 0; i < ss.condensate.size(); ++i) s.condensate.amplitudes()[i] += scale * dc[i];
  s.condensate = s.condensate.normalized();
  cfg.t_end = horizon;
  cfg.chi_orders.clear();
  const Trajectory traj = evolve_meanfield(s, p, cfg);
  const double theta_ss = ss.order().theta;
  double dev = 0.0;
  for (double th : traj.theta) dev = std::max(dev, std::abs(th - theta_ss));
  return dev;
}

}  // namespace cavitylc
