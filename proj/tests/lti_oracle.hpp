#ifndef HJMPC_TESTS_LTI_ORACLE_HPP
#define HJMPC_TESTS_LTI_ORACLE_HPP

// Double-integrator oracle: the generating function of a linear Hamiltonian
// system is quadratic with blocks given in closed form by the state
// transition matrix of the canonical flow, making every stage of the march
// and the costate recovery independently checkable.

#include <unsupported/Eigen/MatrixFunctions>

#include "hjmpc/hj.hpp"

namespace lti {

inline hjmpc::Mat4 a_matrix() {
  hjmpc::Mat4 a = hjmpc::Mat4::Zero();
  a(0, 2) = 1.0;
  a(1, 3) = 1.0;
  return a;
}

// H = 0.5 dx'dx + dlam' A dx - 0.5 dlam' B B' dlam  (Q = I, R = I)
inline hjmpc::HamiltonianFn hamiltonian() {
  return [](const hjmpc::State4& dx, const hjmpc::Costate4& dlam, double) {
    return 0.5 * dx.squaredNorm() + dlam.dot(a_matrix() * dx) -
           0.5 * dlam.tail<2>().squaredNorm();
  };
}

// Canonical flow (dx0, dlam0) -> (dx(t), dlam(t)).
inline hjmpc::Mat8 flow(double t) {
  hjmpc::Mat8 m = hjmpc::Mat8::Zero();
  m.topLeftCorner<4, 4>() = a_matrix();
  m.topRightCorner<4, 4>() = -hjmpc::CostWeights{}.control_quadratic();  // -B R^-1 B'
  m.bottomLeftCorner<4, 4>() = -hjmpc::Mat4::Identity();                 // -Q
  m.bottomRightCorner<4, 4>() = -a_matrix().transpose();
  return (m * t).exp();
}

struct F2Blocks {
  hjmpc::Mat4 p;  // dx-dx quadratic block
  hjmpc::Mat4 u;  // dlam0-dx cross block (dx0 = U dx + V dlam0)
  hjmpc::Mat4 v;  // dlam0-dlam0 block
};

// F2 = 0.5 dx'P dx + dlam0' U dx + 0.5 dlam0' V dlam0 so that
// dF2/ddx = P dx + U' dlam0 = dlam and dF2/ddlam0 = U dx + V dlam0 = dx0.
inline F2Blocks analytic_f2(double t) {
  const hjmpc::Mat8 phi = flow(t);
  const hjmpc::Mat4 pxx = phi.topLeftCorner<4, 4>();
  const hjmpc::Mat4 pxl = phi.topRightCorner<4, 4>();
  const hjmpc::Mat4 plx = phi.bottomLeftCorner<4, 4>();
  const hjmpc::Mat4 pxx_inv = pxx.inverse();
  F2Blocks b;
  b.u = pxx_inv;
  b.v = -pxx_inv * pxl;
  b.p = plx * pxx_inv;
  return b;
}

// Quadratic part of a coefficient vector as the symmetric 8x8 matrix G with
// F2_quad = 0.5 zeta' G zeta (physical space, undoing the basis scaling).
inline hjmpc::Mat8 quadratic_matrix(const hjmpc::BasisDictionary& d, const Eigen::VectorXd& c) {
  hjmpc::Mat8 g = hjmpc::Mat8::Zero();
  for (int j = 0; j < d.size(); ++j) {
    if (d.indices[j].total() != 2) continue;
    int a = -1, b = -1;
    for (int i = 0; i < 8; ++i) {
      if (d.indices[j].exponents[i] == 2) a = b = i;
      if (d.indices[j].exponents[i] == 1) (a < 0 ? a : b) = i;
    }
    const double v = c[j] / (d.scale[a] * d.scale[b]);
    if (a == b) {
      g(a, a) += 2.0 * v;
    } else {
      g(a, b) += v;
      g(b, a) += v;
    }
  }
  return g;
}

// Max |difference| between a marched coefficient vector's quadratic part and
// the analytic generating function at time t.
inline double quadratic_error(const hjmpc::BasisDictionary& d, const Eigen::VectorXd& c, double t) {
  const hjmpc::Mat8 g = quadratic_matrix(d, c);
  const F2Blocks b = analytic_f2(t);
  double err = (g.topLeftCorner<4, 4>() - b.p).cwiseAbs().maxCoeff();
  err = std::max(err, (g.topRightCorner<4, 4>() - b.u.transpose()).cwiseAbs().maxCoeff());
  err = std::max(err, (g.bottomRightCorner<4, 4>() - b.v).cwiseAbs().maxCoeff());
  return err;
}

}  // namespace lti

#endif  // HJMPC_TESTS_LTI_ORACLE_HPP
