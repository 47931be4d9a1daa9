#ifndef HJMPC_DYNAMICS_HPP
#define HJMPC_DYNAMICS_HPP

#include <cmath>

#include "hjmpc/types.hpp"

namespace hjmpc {

inline constexpr double kSingularityFloor = 1e-12;

namespace detail {
inline void primary_distances(double x, double y, double mu, double& r1, double& r2,
                              double floor = kSingularityFloor) {
  r1 = std::hypot(x + mu, y);
  r2 = std::hypot(x - 1.0 + mu, y);
  if (r1 < floor || r2 < floor)
    throw SingularityError("pseudo_potential: state too close to a primary (r1=" +
                           std::to_string(r1) + ", r2=" + std::to_string(r2) + ")");
}
}  // namespace detail

/// Rotating-frame effective potential 0.5(x^2+y^2) + (1-mu)/r1 + mu/r2.
inline double pseudo_potential(const Eigen::Vector2d& q, double mu) {
  double r1, r2;
  detail::primary_distances(q.x(), q.y(), mu, r1, r2);
  return 0.5 * (q.x() * q.x() + q.y() * q.y()) + (1.0 - mu) / r1 + mu / r2;
}

inline Eigen::Vector2d pseudo_potential_grad(const Eigen::Vector2d& q, double mu) {
  double r1, r2;
  detail::primary_distances(q.x(), q.y(), mu, r1, r2);
  const double r13 = r1 * r1 * r1, r23 = r2 * r2 * r2;
  return {q.x() - (1.0 - mu) * (q.x() + mu) / r13 - mu * (q.x() - 1.0 + mu) / r23,
          q.y() - (1.0 - mu) * q.y() / r13 - mu * q.y() / r23};
}

inline Eigen::Matrix2d pseudo_potential_hess(const Eigen::Vector2d& q, double mu) {
  double r1, r2;
  detail::primary_distances(q.x(), q.y(), mu, r1, r2);
  const double x = q.x(), y = q.y();
  const double r13 = r1 * r1 * r1, r15 = r13 * r1 * r1;
  const double r23 = r2 * r2 * r2, r25 = r23 * r2 * r2;
  const double d1 = x + mu, d2 = x - 1.0 + mu;
  Eigen::Matrix2d h;
  h(0, 0) = 1.0 - (1.0 - mu) / r13 + 3.0 * (1.0 - mu) * d1 * d1 / r15 - mu / r23 + 3.0 * mu * d2 * d2 / r25;
  h(1, 1) = 1.0 - (1.0 - mu) / r13 + 3.0 * (1.0 - mu) * y * y / r15 - mu / r23 + 3.0 * mu * y * y / r25;
  h(0, 1) = h(1, 0) = 3.0 * (1.0 - mu) * d1 * y / r15 + 3.0 * mu * d2 * y / r25;
  return h;
}

/// PCR3BP vector field with additive control on the velocity components.
inline State4 pcr3bp_rhs(const State4& s, const Control2& u, double mu) {
  const Eigen::Vector2d g = pseudo_potential_grad(s.head<2>(), mu);
  State4 ds;
  ds[0] = s[2];
  ds[1] = s[3];
  ds[2] = 2.0 * s[3] + g.x() + u.x();
  ds[3] = -2.0 * s[2] + g.y() + u.y();
  return ds;
}

inline State4 pcr3bp_drift(const State4& s, double mu) {
  return pcr3bp_rhs(s, Control2::Zero(), mu);
}

/// Jacobian of the uncontrolled vector field, d f / d state.
inline Mat4 pcr3bp_drift_jacobian(const State4& s, double mu) {
  const Eigen::Matrix2d h = pseudo_potential_hess(s.head<2>(), mu);
  Mat4 j = Mat4::Zero();
  j(0, 2) = 1.0;
  j(1, 3) = 1.0;
  j.bottomLeftCorner<2, 2>() = h;
  j(2, 3) = 2.0;
  j(3, 2) = -2.0;
  return j;
}

/// Integral of motion of the uncontrolled PCR3BP, C = 2*Omega - v^2.
inline double jacobi_constant(const State4& s, double mu) {
  return 2.0 * pseudo_potential(s.head<2>(), mu) - (s[2] * s[2] + s[3] * s[3]);
}

/// Control-eliminated tracking Hamiltonian about the nominal state xN:
///   H = 0.5 dx'Q dx + dlam'(f(xN+dx) - f(xN)) - 0.5 dlam' B R^-1 B' dlam
/// with the full nonlinear drift difference (no linearization).
inline double tracking_hamiltonian_at(const State4& dx, const Costate4& dlam, const State4& xN,
                                      const CostWeights& w, const SystemParams& p) {
  const State4 df = pcr3bp_drift(xN + dx, p.mu) - pcr3bp_drift(xN, p.mu);
  const Eigen::Vector2d lv = dlam.tail<2>();
  return 0.5 * dx.dot(w.Q * dx) + dlam.dot(df) - 0.5 * lv.dot(w.R.inverse() * lv);
}

/// dH/d(dlam): the delta-state canonical rate.
inline State4 tracking_ham_dlam(const State4& dx, const Costate4& dlam, const State4& xN,
                                const CostWeights& w, const SystemParams& p) {
  State4 out = pcr3bp_drift(xN + dx, p.mu) - pcr3bp_drift(xN, p.mu);
  out.tail<2>() -= w.R.inverse() * dlam.tail<2>();
  return out;
}

/// dH/d(dx): minus the delta-costate canonical rate.
inline Costate4 tracking_ham_dx(const State4& dx, const Costate4& dlam, const State4& xN,
                                const CostWeights& w, const SystemParams& p) {
  return w.Q * dx + pcr3bp_drift_jacobian(xN + dx, p.mu).transpose() * dlam;
}

/// Optimal control deviation du* = -R^-1 B' dlam.
inline Control2 optimal_control_deviation(const Costate4& dlam, const CostWeights& w) {
  return -w.R.inverse() * dlam.tail<2>();
}

}  // namespace hjmpc

#endif  // HJMPC_DYNAMICS_HPP
