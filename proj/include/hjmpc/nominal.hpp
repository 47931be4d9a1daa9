#ifndef HJMPC_NOMINAL_HPP
#define HJMPC_NOMINAL_HPP

#include <optional>

#include "hjmpc/integrator.hpp"

namespace hjmpc {

/// Converged minimum-energy reference: dense grids of state, costate and
/// control with Hermite-interpolation support.
struct NominalTrajectory {
  std::vector<double> times;
  std::vector<State4> states;
  std::vector<Costate4> costates;
  std::vector<Control2> controls;
  std::vector<State4> state_derivs;
  std::vector<Costate4> costate_derivs;
  State4 x0, xf;
  double tf = 0.0;
  SystemParams params;
  Eigen::Matrix2d R = Eigen::Matrix2d::Identity();

  std::size_t size() const { return times.size(); }
};

struct BvpConfig {
  double shooting_tol = 1e-11;     // terminal state residual norm
  int max_newton_iters = 60;
  double integrator_tol = 1e-12;
  int grid_size = 2001;            // dense output nodes
  int multiple_shooting_segments = 8;
  std::optional<Costate4> initial_costate_guess;
};

/// State+costate vector field of the minimum-energy problem,
/// u* = -R^-1 B' lam, lamdot = -(df/dx)' lam.
inline Vec8 augmented_rhs(const Vec8& z, const SystemParams& p, const Eigen::Matrix2d& R) {
  const State4 s = z.head<4>();
  const Costate4 lam = z.tail<4>();
  const Control2 u = -R.inverse() * lam.tail<2>();
  Vec8 dz;
  dz.head<4>() = pcr3bp_rhs(s, u, p.mu);
  dz.tail<4>() = -pcr3bp_drift_jacobian(s, p.mu).transpose() * lam;
  return dz;
}

/// Nominal Hamiltonian 0.5 u*'Ru* + lam'f(x,u*); constant along extremals.
inline double nominal_hamiltonian(const Vec8& z, const SystemParams& p, const Eigen::Matrix2d& R) {
  const Costate4 lam = z.tail<4>();
  const Control2 u = -R.inverse() * lam.tail<2>();
  return 0.5 * u.dot(R * u) + lam.dot(pcr3bp_rhs(z.head<4>(), u, p.mu));
}

namespace detail {

template <class Rhs>
inline Vec8 flow8(const Rhs& rhs, const Vec8& z0, double t0, double t1, double tol) {
  AdaptiveRk<8, const Rhs&> rk(rhs, tol);
  return rk.integrate(t0, t1, z0);
}

// Damped Newton on a generic residual with forward-difference Jacobian.
template <class Residual>
inline Eigen::VectorXd damped_newton(const Residual& res, Eigen::VectorXd v, double tol, int max_iters,
                                     double* out_norm = nullptr) {
  Eigen::VectorXd r = res(v);
  double rn = r.norm();
  for (int it = 0; it < max_iters && rn > tol; ++it) {
    Eigen::MatrixXd J(r.size(), v.size());
    for (int j = 0; j < v.size(); ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(v[j]));
      Eigen::VectorXd vp = v;
      vp[j] += h;
      J.col(j) = (res(vp) - r) / h;
    }
    const Eigen::VectorXd dv = J.colPivHouseholderQr().solve(-r);
    double alpha = 1.0;
    for (int ls = 0; ls < 30; ++ls) {
      Eigen::VectorXd vn = v + alpha * dv;
      Eigen::VectorXd rnew;
      try {
        rnew = res(vn);
      } catch (const SingularityError&) {
        alpha *= 0.5;
        continue;
      }
      if (rnew.norm() < rn * (1.0 - 1e-4 * alpha) || rnew.norm() < tol) {
        v = vn;
        r = rnew;
        rn = rnew.norm();
        break;
      }
      alpha *= 0.5;
      if (ls == 29) {  // no progress
        if (out_norm) *out_norm = rn;
        return v;
      }
    }
  }
  if (out_norm) *out_norm = rn;
  return v;
}

}  // namespace detail

/// Indirect TPBVP solve: single shooting on lam(t0), multiple-shooting
/// fallback when the single-shooting Newton stalls.
inline NominalTrajectory solve_nominal(const State4& x0, const State4& xf, double tf,
                                       const SystemParams& p, const Eigen::Matrix2d& R,
                                       const BvpConfig& cfg = {}) {
  if (!(tf > 0.0)) throw std::invalid_argument("solve_nominal: tf must be positive");
  p.validate();
  auto rhs = [&](double, const Vec8& z) { return augmented_rhs(z, p, R); };

  Costate4 lam_guess = cfg.initial_costate_guess.value_or(Costate4::Zero());

  auto single_res = [&](const Eigen::VectorXd& lam0) -> Eigen::VectorXd {
    Vec8 z0;
    z0.head<4>() = x0;
    z0.tail<4>() = lam0;
    return detail::flow8(rhs, z0, 0.0, tf, cfg.integrator_tol).head<4>() - xf;
  };

  double best = 0.0;
  Eigen::VectorXd lam0 =
      detail::damped_newton(single_res, Eigen::VectorXd(lam_guess), cfg.shooting_tol, cfg.max_newton_iters, &best);

  if (best > cfg.shooting_tol) {
    // Multiple shooting: unknowns are lam0 plus interior (x, lam) nodes.
    const int nseg = cfg.multiple_shooting_segments;
    const auto seg_t = [&](int i) { return tf * i / nseg; };
    // seed interior states by linear interpolation between endpoints
    Eigen::VectorXd v(4 + 8 * (nseg - 1));
    v.head<4>() = lam_guess;
    for (int i = 1; i < nseg; ++i) {
      const double a = double(i) / nseg;
      v.segment<4>(4 + 8 * (i - 1)) = (1.0 - a) * x0 + a * xf;
      v.segment<4>(8 + 8 * (i - 1)).setZero();
    }
    auto multi_res = [&](const Eigen::VectorXd& vv) -> Eigen::VectorXd {
      Eigen::VectorXd r(8 * (nseg - 1) + 4);
      Vec8 z;
      z.head<4>() = x0;
      z.tail<4>() = vv.head<4>();
      for (int i = 0; i < nseg; ++i) {
        const Vec8 zf = detail::flow8(rhs, z, seg_t(i), seg_t(i + 1), cfg.integrator_tol);
        if (i + 1 < nseg) {
          Vec8 znext;
          znext.head<4>() = vv.segment<4>(4 + 8 * i);
          znext.tail<4>() = vv.segment<4>(8 + 8 * i);
          r.segment<8>(8 * i) = zf - znext;
          z = znext;
        } else {
          r.segment<4>(8 * (nseg - 1)) = zf.head<4>() - xf;
        }
      }
      return r;
    };
    v = detail::damped_newton(multi_res, v, cfg.shooting_tol, 2 * cfg.max_newton_iters, &best);
    if (best > cfg.shooting_tol)
      throw ConvergenceError("solve_nominal: shooting did not converge, best residual " + std::to_string(best));
    lam0 = v.head<4>();
    // polish with single shooting from the multiple-shooting costate
    lam0 = detail::damped_newton(single_res, lam0, cfg.shooting_tol, cfg.max_newton_iters, &best);
    if (best > cfg.shooting_tol)
      throw ConvergenceError("solve_nominal: polish failed, best residual " + std::to_string(best));
  }

  NominalTrajectory nom;
  nom.x0 = x0;
  nom.xf = xf;
  nom.tf = tf;
  nom.params = p;
  nom.R = R;
  nom.times.resize(cfg.grid_size);
  for (int i = 0; i < cfg.grid_size; ++i) nom.times[i] = tf * i / (cfg.grid_size - 1);
  nom.times.back() = tf;

  Vec8 z0;
  z0.head<4>() = x0;
  z0.tail<4>() = lam0;
  AdaptiveRk<8, decltype(rhs)> rk(rhs, cfg.integrator_tol);
  rk.integrate(0.0, tf, z0, nom.times, [&](double, const Vec8& z, const Vec8& dz) {
    nom.states.push_back(z.head<4>());
    nom.costates.push_back(z.tail<4>());
    nom.controls.push_back(-R.inverse() * z.tail<2>());
    nom.state_derivs.push_back(dz.head<4>());
    nom.costate_derivs.push_back(dz.tail<4>());
  });
  if (nom.states.size() != nom.times.size())
    throw ConvergenceError("solve_nominal: dense sampling failed");
  return nom;
}

namespace detail {
template <class T>
inline T hermite(const std::vector<double>& ts, const std::vector<T>& ys, const std::vector<T>& ds, double t) {
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - ts.begin() - 1, 0), ts.size() - 2);
  const double h = ts[i + 1] - ts[i];
  const double s = (t - ts[i]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * ys[i] + h10 * h * ds[i] + h01 * ys[i + 1] + h11 * h * ds[i + 1];
}
}  // namespace detail

struct NominalSample {
  State4 state;
  Control2 control;
  Costate4 costate;
};

inline NominalSample sample_nominal(const NominalTrajectory& nom, double t) {
  if (t < nom.times.front() - 1e-12 || t > nom.times.back() + 1e-12)
    throw std::out_of_range("sample_nominal: t outside [t0, tf]");
  t = std::clamp(t, nom.times.front(), nom.times.back());
  NominalSample s;
  s.state = detail::hermite(nom.times, nom.states, nom.state_derivs, t);
  s.costate = detail::hermite(nom.times, nom.costates, nom.costate_derivs, t);
  s.control = -nom.R.inverse() * s.costate.tail<2>();
  return s;
}

/// Tracking Hamiltonian with the nominal sampled at time t.
inline double tracking_hamiltonian(const State4& dx, const Costate4& dlam, double t,
                                   const NominalTrajectory& nom, const CostWeights& w,
                                   const SystemParams& p) {
  return tracking_hamiltonian_at(dx, dlam, sample_nominal(nom, t).state, w, p);
}

}  // namespace hjmpc

#endif  // HJMPC_NOMINAL_HPP
