#ifndef HJMPC_INTEGRATOR_HPP
#define HJMPC_INTEGRATOR_HPP

#include <algorithm>
#include <cmath>
#include <functional>

#include "hjmpc/dynamics.hpp"
#include "hjmpc/types.hpp"

namespace hjmpc {

/// Adaptive embedded Dormand-Prince 5(4) integrator for small fixed-size
/// systems. Requested output times are hit exactly by clamping the step.
template <int N, class Rhs>
class AdaptiveRk {
 public:
  using Vec = Eigen::Matrix<double, N, 1>;

  AdaptiveRk(Rhs rhs, double tol) : rhs_(std::move(rhs)), tol_(tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("AdaptiveRk: tol must be positive");
  }

  /// Integrates from (t0, y0) to tf, invoking visit(t, y, dy) at t0 and at
  /// every element of `sample_times` (strictly increasing, within [t0, tf]).
  template <class Visit>
  Vec integrate(double t0, double tf, Vec y, const std::vector<double>& sample_times, Visit&& visit) const {
    const double dir = tf >= t0 ? 1.0 : -1.0;
    double t = t0;
    Vec k1 = rhs_(t, y);
    std::size_t next_sample = 0;
    while (next_sample < sample_times.size() && sample_times[next_sample] * dir <= t * dir) {
      visit(t, y, k1);
      ++next_sample;
    }
    double h = dir * std::min(std::abs(tf - t0), 1e-2);
    const double span = std::abs(tf - t0);
    while (dir * (tf - t) > 0.0) {
      double t_stop = tf;
      if (next_sample < sample_times.size() && dir * (sample_times[next_sample] - tf) < 0.0)
        t_stop = sample_times[next_sample];
      if (dir * (t + h - t_stop) > 0.0) h = t_stop - t;

      Vec y_new, k_new;
      const double err = step(t, y, k1, h, y_new, k_new);
      if (err <= 1.0) {
        t = (std::abs(t + h - t_stop) < 1e-15 * span) ? t_stop : t + h;
        y = y_new;
        k1 = k_new;
        while (next_sample < sample_times.size() && sample_times[next_sample] * dir <= t * dir) {
          visit(t, y, k1);
          ++next_sample;
        }
      }
      const double scale = std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 0.2, 5.0);
      h *= scale;
      if (std::abs(h) < 1e-15 * std::max(1.0, std::abs(t)))
        throw SingularityError("AdaptiveRk: step size underflow at t=" + std::to_string(t));
    }
    return y;
  }

  Vec integrate(double t0, double tf, const Vec& y0) const {
    return integrate(t0, tf, y0, {}, [](double, const Vec&, const Vec&) {});
  }

 private:
  // One DP5(4) step; returns the scaled error norm and fills y_new/k_new (FSAL).
  double step(double t, const Vec& y, const Vec& k1, double h, Vec& y_new, Vec& k_new) const {
    const Vec k2 = rhs_(t + h / 5.0, y + h * (k1 / 5.0));
    const Vec k3 = rhs_(t + 3.0 * h / 10.0, y + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
    const Vec k4 = rhs_(t + 4.0 * h / 5.0, y + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3));
    const Vec k5 = rhs_(t + 8.0 * h / 9.0,
                        y + h * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 + 64448.0 / 6561.0 * k3 -
                                 212.0 / 729.0 * k4));
    const Vec k6 = rhs_(t + h, y + h * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 + 46732.0 / 5247.0 * k3 +
                                        49.0 / 176.0 * k4 - 5103.0 / 18656.0 * k5));
    y_new = y + h * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4 - 2187.0 / 6784.0 * k5 +
                     11.0 / 84.0 * k6);
    k_new = rhs_(t + h, y_new);
    const Vec y4 = y + h * (5179.0 / 57600.0 * k1 + 7571.0 / 16695.0 * k3 + 393.0 / 640.0 * k4 -
                            92097.0 / 339200.0 * k5 + 187.0 / 2100.0 * k6 + 1.0 / 40.0 * k_new);
    double err = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      const double sc = tol_ + tol_ * std::max(std::abs(y[i]), std::abs(y_new[i]));
      err = std::max(err, std::abs(y_new[i] - y4[i]) / sc);
    }
    return err;
  }

  Rhs rhs_;
  double tol_;
};

using ControlFn = std::function<Control2(double)>;

/// Propagates the controlled PCR3BP on a uniform output grid of n_samples nodes.
inline Trajectory propagate(const State4& s0, const ControlFn& control, double t0, double tf,
                            const SystemParams& p, double tol = 1e-12, int n_samples = 401) {
  if (!(tf > t0)) throw std::invalid_argument("propagate: tf must exceed t0");
  if (n_samples < 2) throw std::invalid_argument("propagate: need at least 2 samples");
  auto rhs = [&](double t, const State4& s) {
    return pcr3bp_rhs(s, control ? control(t) : Control2::Zero(), p.mu);
  };
  AdaptiveRk<4, decltype(rhs)> rk(rhs, tol);
  std::vector<double> grid(n_samples);
  for (int i = 0; i < n_samples; ++i) grid[i] = t0 + (tf - t0) * i / (n_samples - 1);
  grid.back() = tf;

  Trajectory traj;
  traj.times.reserve(grid.size());
  rk.integrate(t0, tf, s0, grid, [&](double t, const State4& y, const State4& dy) {
    traj.times.push_back(t);
    traj.states.push_back(y);
    traj.derivs.push_back(dy);
    if (control) traj.controls.push_back(control(t));
  });
  traj.check_consistent();
  return traj;
}

/// Cubic Hermite interpolation on a stored trajectory; exact at grid nodes.
inline State4 sample_trajectory(const Trajectory& traj, double t) {
  if (traj.size() < 2 || traj.derivs.empty())
    throw std::invalid_argument("sample_trajectory: need nodes with derivatives");
  if (t < traj.times.front() - 1e-12 || t > traj.times.back() + 1e-12)
    throw std::out_of_range("sample_trajectory: t outside stored range");
  t = std::clamp(t, traj.times.front(), traj.times.back());
  auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
  std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - traj.times.begin() - 1, 0), traj.size() - 2);
  const double h = traj.times[i + 1] - traj.times[i];
  const double s = (t - traj.times[i]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * traj.states[i] + h10 * h * traj.derivs[i] + h01 * traj.states[i + 1] + h11 * h * traj.derivs[i + 1];
}

}  // namespace hjmpc

#endif  // HJMPC_INTEGRATOR_HPP
