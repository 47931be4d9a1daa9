#ifndef HJMPC_L1_HPP
#define HJMPC_L1_HPP

#include <algorithm>
#include <cmath>

#include "hjmpc/types.hpp"

namespace hjmpc {

/// Soft-threshold shrinkage operator.
inline double shrink(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

struct L1Options {
  double epsilon = 1e-7;        // residual budget ||A x - b||_2 <= epsilon
  double gap_tol = 1e-9;        // duality-gap certificate tolerance
  int max_cd_sweeps = 200000;   // coordinate-descent sweep budget per lambda
  int max_bisect = 200;         // lambda root-finding budget
};

struct L1Result {
  Eigen::VectorXd x;
  double residual = 0.0;   // ||A x - b||_2
  double objective = 0.0;  // ||K x||_1
  double gap = 0.0;        // certified duality gap at exit
  int sweeps = 0;
};

namespace l1_detail {

/// One full coordinate-descent pass of min 1/2 ||A x - b||^2 + lambda ||K x||_1.
/// r is maintained as b - A x. Returns the largest coefficient change.
inline double cd_sweep(const Eigen::MatrixXd& A, const Eigen::VectorXd& colsq,
                       const Eigen::VectorXd& k, double lambda, Eigen::VectorXd& x,
                       Eigen::VectorXd& r) {
  double dmax = 0.0;
  for (int j = 0; j < x.size(); ++j) {
    if (colsq[j] == 0.0) continue;
    const double xj = x[j];
    const double rho = A.col(j).dot(r) + colsq[j] * xj;
    const double xn = shrink(rho, lambda * k[j]) / colsq[j];
    if (xn != xj) {
      r.noalias() -= (xn - xj) * A.col(j);
      x[j] = xn;
      dmax = std::max(dmax, std::abs(xn - xj));
    }
  }
  return dmax;
}

/// Duality gap for min ||K x||_1 s.t. ||A x - b|| <= eps, certified with the
/// dual point nu = s * (A x - b), s chosen so that ||K^-1 A^T nu||_inf <= 1.
/// Dual objective is -b^T nu - eps ||nu||_2; requires x feasible.
inline double duality_gap(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& k, const Eigen::VectorXd& x, double eps) {
  const Eigen::VectorXd res = A * x - b;
  const double rn = res.norm();
  double scale = 1.0;
  if (rn > 0.0) {
    const Eigen::VectorXd g = A.transpose() * res;
    double m = 0.0;
    for (int j = 0; j < k.size(); ++j) m = std::max(m, std::abs(g[j]) / k[j]);
    scale = (m > 0.0) ? 1.0 / m : 0.0;
  }
  const Eigen::VectorXd nu = scale * res;
  const double primal = (k.array() * x.array()).abs().sum();
  const double dual = -b.dot(nu) - eps * nu.norm();
  return primal - dual;
}

/// Solve the penalized problem at a fixed lambda to stationarity.
inline int solve_at_lambda(const Eigen::MatrixXd& A, const Eigen::VectorXd& colsq,
                           const Eigen::VectorXd& k, double lambda, Eigen::VectorXd& x,
                           Eigen::VectorXd& r, int budget, double xtol) {
  int used = 0;
  while (used < budget) {
    const double d = cd_sweep(A, colsq, k, lambda, x, r);
    ++used;
    if (d < xtol) break;
  }
  return used;
}

}  // namespace l1_detail

/// Weighted basis-pursuit denoising: min ||K x||_1 s.t. ||A x - b||_2 <= eps,
/// K diagonal positive. Solved through the penalized form along a decreasing
/// lambda path, with the penalty pinned by bisection so the residual meets the
/// budget from below, and polished until the duality-gap certificate clears.
inline L1Result solve_bpdn(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& k, const L1Options& opt) {
  if (A.rows() != b.size() || A.cols() != k.size())
    throw std::invalid_argument("solve_bpdn: dimension mismatch");
  if ((k.array() <= 0.0).any()) throw std::invalid_argument("solve_bpdn: K must be positive");
  if (!(opt.epsilon > 0.0)) throw std::invalid_argument("solve_bpdn: epsilon must be positive");

  L1Result out;
  out.x = Eigen::VectorXd::Zero(A.cols());
  if (b.norm() <= opt.epsilon) {  // zero is feasible hence optimal
    out.residual = b.norm();
    return out;
  }

  Eigen::VectorXd colsq(A.cols());
  for (int j = 0; j < A.cols(); ++j) colsq[j] = A.col(j).squaredNorm();

  // lambda_max: above it, x = 0 is stationary.
  double lam_hi = 0.0;
  {
    const Eigen::VectorXd g = A.transpose() * b;
    for (int j = 0; j < k.size(); ++j) lam_hi = std::max(lam_hi, std::abs(g[j]) / k[j]);
  }
  lam_hi *= 1.0000001;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(A.cols());
  Eigen::VectorXd r = b;
  const double xtol = 1e-15 * std::max(1.0, b.norm());
  int sweeps = 0;

  // Warm-started geometric path down to a lambda whose residual clears eps.
  double lam_lo = lam_hi;
  double res_lo = b.norm();
  for (int it = 0; it < 400 && res_lo > opt.epsilon; ++it) {
    lam_lo *= 0.5;
    sweeps += l1_detail::solve_at_lambda(A, colsq, k, lam_lo, x, r, opt.max_cd_sweeps, xtol);
    r = b - A * x;  // discard incremental drift before the feasibility test
    res_lo = r.norm();
    if (lam_lo < 1e-300) break;
  }
  if (res_lo > opt.epsilon)
    throw ConvergenceError("solve_bpdn: residual budget unreachable (infeasible constraint)");

  // Bisection on lambda: keep the bracket [lam_lo, lam_hi] with
  // residual(lam_lo) <= eps < residual(lam_hi); converge from the feasible side.
  Eigen::VectorXd x_feas = x, r_feas = r;
  for (int it = 0; it < opt.max_bisect; ++it) {
    const double lam = 0.5 * (lam_lo + lam_hi);
    sweeps += l1_detail::solve_at_lambda(A, colsq, k, lam, x, r, opt.max_cd_sweeps, xtol);
    r = b - A * x;
    const double rn = r.norm();
    if (rn <= opt.epsilon) {
      lam_lo = lam;
      x_feas = x;
      r_feas = r;
      if (rn >= opt.epsilon * (1.0 - 1e-9)) break;  // pinned on the budget
    } else {
      lam_hi = lam;
    }
    if ((lam_hi - lam_lo) < 1e-14 * lam_hi) break;
  }

  // Polish at the accepted lambda until the certificate clears; on an
  // infeasible drift back off to the certified iterate and raise lambda.
  x = x_feas;
  r = r_feas;
  double lam_p = lam_lo;
  double gap = l1_detail::duality_gap(A, b, k, x, opt.epsilon);
  for (int it = 0; it < 60 && gap > opt.gap_tol; ++it) {
    sweeps += l1_detail::solve_at_lambda(A, colsq, k, lam_p, x, r, 2000, xtol);
    r = b - A * x;
    if (r.norm() > opt.epsilon) {
      lam_p *= 1.0001;
      x = x_feas;
      r = r_feas;
      continue;
    }
    x_feas = x;
    r_feas = r;
    gap = l1_detail::duality_gap(A, b, k, x, opt.epsilon);
  }
  x = x_feas;  // always return the certified feasible iterate
  r = r_feas;
  gap = l1_detail::duality_gap(A, b, k, x, opt.epsilon);

  out.x = x;
  out.residual = r.norm();
  out.objective = (k.array() * x.array()).abs().sum();
  out.gap = gap;
  out.sweeps = sweeps;
  return out;
}

}  // namespace hjmpc

#endif  // HJMPC_L1_HPP
