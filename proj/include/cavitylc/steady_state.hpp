#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cavitylc/model.hpp"
#include "cavitylc/rhs.hpp"

namespace cavitylc {

struct SteadyState {
  CondensateState condensate;
  cplx a{};
  double mu = 0.0;       // eigenvalue of the self-consistent Hamiltonian
  double energy = 0.0;   // <M> + (g1d/2) <|psi|^4>; equals mu when g1d == 0
  double residual = 0.0; // max-norm of the real-time drift after removing the phase rotation at mu
  int iterations = 0;
  bool extrapolated = false;  // reached only through the fallback after relaxation stalled

  OrderParams order() const { return {detail::theta_of(condensate.amplitudes()), detail::bmean_of(condensate.amplitudes())}; }
};

// Stationary cavity amplitude for a frozen condensate: the fixed point of
// i da/dt = (delta_eff - i kappa) a + eta Theta, i.e. a = -eta Theta / (delta_eff - i kappa).
inline cplx adiabatic_cavity(double theta, double bmean, const ModelParams& p) {
  const cplx denom{p.delta_c + p.u0n * bmean, -p.kappa};
  return -p.eta * theta / denom;
}

// eta_c = sqrt((1/2 + g1d)(delta0 + kappa^2/delta0)); no threshold unless delta0 > 0.
inline std::optional<double> analytic_critical_pump(const ModelParams& p) {
  const double d0 = p.delta0();
  if (!(d0 > 0.0)) return std::nullopt;
  return std::sqrt((0.5 + p.g1d) * (d0 + p.kappa * p.kappa / d0));
}

// Homogeneous condensate with admixture eps in both c_{+1} and c_{-1}; the sign
// of eps picks the Z2 branch.
inline CondensateState symmetry_broken_seed(int n_max, double eps = 1e-3) {
  CondensateState c = CondensateState::homogeneous(n_max);
  c[1] = eps;
  c[-1] = eps;
  return c.normalized();
}

struct ImaginaryTimeConfig {
  double dtau = 0.5;          // imaginary-time step; each step applies exp(-H dtau) exactly
  double tol = 1e-10;         // on successive changes of Theta, B and mu
  double residual_tol = 1e-8; // on the real-time drift
  int max_iterations = 400000;
  int stall_window = 1000;    // iterations without residual progress before the fallback kicks in
  double damping = 0.05;      // cavity mixing factor of the damped iteration
};

namespace detail {

// Fourier coefficients rho_k = sum_m c_{m+k} c_m^* of |psi|^2, k = -2 n_max..2 n_max.
inline std::vector<cplx> density_coefficients(std::span<const cplx> c) {
  const int d = static_cast<int>(c.size());
  std::vector<cplx> rho(static_cast<std::size_t>(2 * d - 1));
  for (int k = -(d - 1); k <= d - 1; ++k) {
    cplx s{};
    for (int m = std::max(0, -k); m < std::min(d, d - k); ++m) s += c[m + k] * std::conj(c[m]);
    rho[static_cast<std::size_t>(k + d - 1)] = s;
  }
  return rho;
}

// Dense H = M(a) (+ g1d Toeplitz[rho] for the contact term).
inline Eigen::MatrixXcd hamiltonian(std::span<const cplx> c, cplx a, const ModelParams& p) {
  const int d = static_cast<int>(c.size());
  const int n_max = d / 2;
  const double intensity = std::norm(a);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const int n = i - n_max;
    h(i, i) = double(n) * n + 0.5 * p.u0n * intensity;
    if (i + 1 < d) h(i, i + 1) = h(i + 1, i) = p.eta * a.real();
    if (i + 2 < d) h(i, i + 2) = h(i + 2, i) = 0.25 * p.u0n * intensity;
  }
  if (p.g1d != 0.0) {
    const auto rho = density_coefficients(c);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) h(i, j) += p.g1d * rho[static_cast<std::size_t>(i - j + d - 1)];
    }
  }
  return h;
}

inline double interaction_moment(std::span<const cplx> c) {
  double s = 0.0;
  for (const auto& r : density_coefficients(c)) s += std::norm(r);
  return s;  // mean of |psi|^4 over one period
}

inline Eigen::VectorXcd to_eigen(std::span<const cplx> c) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) v(static_cast<Eigen::Index>(i)) = c[i];
  return v;
}

inline std::vector<cplx> from_eigen(const Eigen::VectorXcd& v) { return {v.data(), v.data() + v.size()}; }

// Real-time drift of (C, a) with the global phase rotation at mu removed.
inline double drift_residual(const CondensateState& c, cplx a, double mu, const ModelParams& p) {
  CoupledRhs rhs(p);
  PackedState y(c.amplitudes().begin(), c.amplitudes().end());
  y.push_back(a);
  PackedState dy(y.size());
  rhs(y, dy, 0.0);
  double r = std::abs(dy.back());
  for (std::size_t i = 0; i + 1 < y.size(); ++i) r = std::max(r, std::abs(dy[i] + cplx{0.0, mu} * y[i]));
  return r;
}

// Real symmetric M(a) for the interaction-free problem.
inline Eigen::MatrixXd hamiltonian_real(int n_max, cplx a, const ModelParams& p) {
  const int d = 2 * n_max + 1;
  const double intensity = std::norm(a);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const int n = i - n_max;
    h(i, i) = double(n) * n + 0.5 * p.u0n * intensity;
    if (i + 1 < d) h(i, i + 1) = h(i + 1, i) = p.eta * a.real();
    if (i + 2 < d) h(i, i + 2) = h(i + 2, i) = 0.25 * p.u0n * intensity;
  }
  return h;
}

// One imaginary-time step c <- exp(-(H - h_min) dtau) c, renormalized.
inline void imaginary_step(Eigen::VectorXcd& c, cplx a, double dtau, const ModelParams& p) {
  if (p.g1d == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hamiltonian_real(p.n_max, a, p));
    if (eig.info() != Eigen::Success) throw Error(ErrorCode::EigenSolverFailure, "Hamiltonian diagonalization failed");
    const Eigen::VectorXd w = (-(eig.eigenvalues().array() - eig.eigenvalues()(0)) * dtau).exp();
    const Eigen::MatrixXd& v = eig.eigenvectors();
    const Eigen::VectorXd re = v * (w.asDiagonal() * (v.transpose() * c.real()));
    const Eigen::VectorXd im = v * (w.asDiagonal() * (v.transpose() * c.imag()));
    c.real() = re;
    c.imag() = im;
  } else {
    const std::span<const cplx> cs(c.data(), static_cast<std::size_t>(c.size()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(hamiltonian(cs, a, p));
    if (eig.info() != Eigen::Success) throw Error(ErrorCode::EigenSolverFailure, "Hamiltonian diagonalization failed");
    const Eigen::VectorXd w = (-(eig.eigenvalues().array() - eig.eigenvalues()(0)) * dtau).exp();
    const Eigen::MatrixXcd& v = eig.eigenvectors();
    c = v * (w.asDiagonal() * (v.adjoint() * c));
  }
  c /= c.norm();
}

// Ground state of M(a) and the cavity amplitude it would induce (g1d == 0).
struct GroundStateMap {
  Eigen::VectorXd c;
  double energy = 0.0;
  cplx a_induced{};
};

inline GroundStateMap ground_state_map(cplx a, const ModelParams& p) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hamiltonian_real(p.n_max, a, p));
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::EigenSolverFailure, "Hamiltonian diagonalization failed");
  GroundStateMap out;
  out.c = eig.eigenvectors().col(0);
  out.energy = eig.eigenvalues()(0);
  std::vector<cplx> cv(out.c.data(), out.c.data() + out.c.size());
  out.a_induced = adiabatic_cavity(theta_of(cv), bmean_of(cv), p);
  return out;
}

// Newton iteration on F(a) = a_induced(a) - a with a finite-difference Jacobian.
// Reaches self-consistent points that imaginary-time relaxation cannot
// (unstable under relaxation); returns nullopt if it does not converge.
inline std::optional<cplx> newton_cavity(cplx a0, const ModelParams& p, double tol, int max_iterations = 200) {
  cplx a = a0;
  auto residual = [&](cplx z) { return ground_state_map(z, p).a_induced - z; };
  cplx f = residual(a);
  for (int it = 0; it < max_iterations; ++it) {
    if (std::abs(f) < tol) return a;
    const double h = 1e-7 * std::max(1.0, std::abs(a));
    const cplx fx = (residual(a + cplx{h, 0.0}) - f) / h;
    const cplx fy = (residual(a + cplx{0.0, h}) - f) / h;
    // Solve [fx fy] [dx dy]^T = -f as a real 2x2 system.
    const double det = fx.real() * fy.imag() - fy.real() * fx.imag();
    if (!std::isfinite(det) || std::abs(det) < 1e-300) return std::nullopt;
    const double dx = (-f.real() * fy.imag() + fy.real() * f.imag()) / det;
    const double dy = (-fx.real() * f.imag() + fx.imag() * f.real()) / det;
    double step = 1.0;
    cplx trial = a + step * cplx{dx, dy};
    cplx f_trial = residual(trial);
    while (std::abs(f_trial) >= std::abs(f) && step > 1e-4) {
      step *= 0.5;
      trial = a + step * cplx{dx, dy};
      f_trial = residual(trial);
    }
    a = trial;
    f = f_trial;
  }
  return std::abs(f) < tol ? std::optional<cplx>(a) : std::nullopt;
}

}  // namespace detail

// Imaginary-time relaxation of C with the cavity slaved to adiabatic_cavity at
// every step. Each step applies exp(-(H - h_min) dtau) through an eigen-
// decomposition of the instantaneous Hamiltonian and renormalizes. If the
// residual stalls (no stable relaxation fixed point), the solve falls back to
// Newton on the slaved cavity amplitude (g1d == 0) or an under-relaxed cavity
// update (g1d != 0); such results are flagged as extrapolated.
inline SteadyState imaginary_time_solve(const ModelParams& p, const CondensateState& init,
                                        const ImaginaryTimeConfig& cfg = {}) {
  validate_params(p);
  if (init.n_max() != p.n_max) throw Error(ErrorCode::InvalidConfig, "initial state truncation differs from n_max");
  Eigen::VectorXcd c = detail::to_eigen(init.normalized().amplitudes());
  CoupledRhs rhs(p);
  std::vector<cplx> hc(static_cast<std::size_t>(p.modes()));

  const auto view = [](const Eigen::VectorXcd& v) { return std::span<const cplx>(v.data(), static_cast<std::size_t>(v.size())); };
  const auto finish = [&](const Eigen::VectorXcd& v, int iterations, bool extrapolated) {
    SteadyState ss;
    ss.condensate = CondensateState(detail::from_eigen(v));
    ss.a = adiabatic_cavity(detail::theta_of(view(v)), detail::bmean_of(view(v)), p);
    rhs.apply_linear(view(v), ss.a, p.eta, hc);
    rhs.add_interaction(view(v), hc);
    double mu = 0.0;
    for (std::size_t i = 0; i < hc.size(); ++i) mu += (std::conj(v(static_cast<Eigen::Index>(i))) * hc[i]).real();
    ss.mu = mu;
    ss.energy = mu - (p.g1d != 0.0 ? 0.5 * p.g1d * detail::interaction_moment(view(v)) : 0.0);
    ss.residual = detail::drift_residual(ss.condensate, ss.a, ss.mu, p);
    ss.iterations = iterations;
    ss.extrapolated = extrapolated;
    return ss;
  };

  const double seed_theta = detail::theta_of(view(c));
  cplx a = adiabatic_cavity(seed_theta, detail::bmean_of(view(c)), p);
  double mu_prev = std::numeric_limits<double>::infinity();
  OrderParams op_prev{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  bool damped = false;
  double best_residual = std::numeric_limits<double>::infinity();
  int best_at = 0;
  int switched_at = 0;

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    detail::imaginary_step(c, a, damped ? 0.2 * cfg.dtau : cfg.dtau, p);
    const OrderParams op{detail::theta_of(view(c)), detail::bmean_of(view(c))};
    const cplx a_target = adiabatic_cavity(op.theta, op.bmean, p);
    a = damped ? a + cfg.damping * (a_target - a) : a_target;

    rhs.apply_linear(view(c), a, p.eta, hc);
    rhs.add_interaction(view(c), hc);
    double mu = 0.0;
    for (std::size_t i = 0; i < hc.size(); ++i) mu += (std::conj(c(static_cast<Eigen::Index>(i))) * hc[i]).real();
    double residual = std::abs(a - a_target);
    for (std::size_t i = 0; i < hc.size(); ++i) {
      residual = std::max(residual, std::abs(hc[i] - mu * c(static_cast<Eigen::Index>(i))));
    }
    const double change =
        std::max({std::abs(op.theta - op_prev.theta), std::abs(op.bmean - op_prev.bmean), std::abs(mu - mu_prev)});
    op_prev = op;
    mu_prev = mu;

    if (change < cfg.tol && residual < cfg.residual_tol) return finish(c, it, damped);
    if (residual < 0.5 * best_residual) {
      best_residual = residual;
      best_at = it;
    }
    if (it - best_at <= cfg.stall_window) continue;

    if (p.g1d == 0.0) {
      if (const auto root = detail::newton_cavity(a, p, 1e-13)) {
        Eigen::VectorXcd v = detail::ground_state_map(*root, p).c.cast<cplx>();
        // Newton may land on the mirror branch; map it back onto the seed's.
        if (seed_theta * detail::theta_of(view(v)) < 0.0) {
          for (Eigen::Index i = 0; i < v.size(); ++i) {
            if ((i - p.n_max) % 2 != 0) v(i) = -v(i);
          }
        }
        return finish(v, it, true);
      }
      throw Error(ErrorCode::OscillatoryResidual, "relaxation stalled at residual " + std::to_string(best_residual) +
                                                      " and Newton on the cavity amplitude failed");
    }
    if (damped && it - switched_at > cfg.stall_window) {
      throw Error(ErrorCode::OscillatoryResidual,
                  "residual stalled at " + std::to_string(best_residual) + " even with damping");
    }
    if (!damped) {
      damped = true;
      switched_at = it;
      best_at = it;
      best_residual = std::numeric_limits<double>::infinity();
    }
  }
  throw Error(ErrorCode::NoConvergence, "imaginary-time iteration cap reached");
}

// Smallest pump (within rel_tol) at which the imaginary-time solution from a
// +eps seed carries |Theta| > theta_threshold. Requires a bracketing interval.
inline double numerical_critical_pump(ModelParams p, double eta_lo, double eta_hi, double rel_tol = 1e-3,
                                      double theta_threshold = 1e-4, const ImaginaryTimeConfig& cfg = {}) {
  const auto organized = [&](double eta) {
    p.eta = eta;
    const SteadyState ss = imaginary_time_solve(p, symmetry_broken_seed(p.n_max), cfg);
    return std::abs(ss.order().theta) > theta_threshold;
  };
  if (organized(eta_lo) || !organized(eta_hi)) {
    throw Error(ErrorCode::InvalidConfig, "pump interval does not bracket the self-organization threshold");
  }
  while (eta_hi - eta_lo > rel_tol * eta_hi) {
    const double mid = 0.5 * (eta_lo + eta_hi);
    (organized(mid) ? eta_hi : eta_lo) = mid;
  }
  return 0.5 * (eta_lo + eta_hi);
}

}  // namespace cavitylc
