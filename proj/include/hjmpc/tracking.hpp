#ifndef HJMPC_TRACKING_HPP
#define HJMPC_TRACKING_HPP

#include <random>

#include "hjmpc/hj.hpp"
#include "hjmpc/units.hpp"

namespace hjmpc {

/// Newton options for the implicit costate recovery.
struct RecoveryOptions {
  double tol = 1e-10;        // ||g|| stopping tolerance
  int max_iters = 50;
  double cond_max = 1e12;    // Jacobian conditioning guard
};

namespace track_detail {

inline void check_conditioning(const Mat4& j, double cond_max, const char* what) {
  Eigen::JacobiSVD<Mat4> svd(j);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0 || smax / smin > cond_max)
    throw SingularityError(std::string(what) + ": degenerate recovery Jacobian");
}

/// Damped Newton on g with analytic Jacobian.
template <class G, class J>
Costate4 newton4(const G& g, const J& jac, Costate4 lam, const RecoveryOptions& opt,
                 const char* what) {
  State4 gv = g(lam);
  for (int it = 0; it < opt.max_iters; ++it) {
    if (gv.norm() < opt.tol) return lam;
    const Mat4 jm = jac(lam);
    check_conditioning(jm, opt.cond_max, what);
    const Costate4 step = jm.fullPivLu().solve(gv);
    double alpha = 1.0;
    for (int ls = 0; ls < 40; ++ls) {
      const Costate4 trial = lam - alpha * step;
      const State4 gt = g(trial);
      if (gt.norm() < gv.norm() * (1.0 - 1e-4 * alpha) || gt.norm() < opt.tol) {
        lam = trial;
        gv = gt;
        break;
      }
      alpha *= 0.5;
      if (ls == 39) throw ConvergenceError(std::string(what) + ": line search stalled");
    }
  }
  if (gv.norm() < opt.tol) return lam;
  throw ConvergenceError(std::string(what) + ": Newton did not converge");
}

}  // namespace track_detail

/// Solves dF2/d(dlam0)(dxf, dlam0, tf) = dx0 for the initial costate
/// deviation matching a boundary pair (dx0, dxf).
inline Costate4 recover_initial_costate(const State4& dx0, const State4& dxf,
                                        const CoefficientTimeline& tl,
                                        const RecoveryOptions& opt = {}) {
  tl.check_consistent();
  const Eigen::VectorXd& c = tl.coeffs.back();
  const BasisDictionary& d = tl.dict;
  auto zeta = [&](const Costate4& lam) {
    Vec8 z;
    z << dxf, lam;
    return z;
  };
  auto g = [&](const Costate4& lam) -> State4 { return f2_grad_lam0(d, c, zeta(lam)) - dx0; };
  auto jac = [&](const Costate4& lam) -> Mat4 { return f2_hess_lam0(d, c, zeta(lam)); };
  return track_detail::newton4(g, jac, Costate4::Zero(), opt, "recover_initial_costate");
}

struct ResolveResult {
  Costate4 dlam0;  // re-identified initial costate deviation
  Costate4 dlam;   // costate deviation at the measurement time
};

/// Re-identifies the costate from a mid-trajectory measurement: dlam0 solves
/// dF2/d(dlam0)(dx_meas, ., t_k) = dF2/d(dlam0)(dxf, ., tf), then the costate
/// at t_k is dF2/d(dx) there. Degenerates as t_k -> tf.
inline ResolveResult resolve_at_time(const State4& dx_meas, double t_k, const State4& dxf,
                                     const CoefficientTimeline& tl, const RecoveryOptions& opt = {}) {
  tl.check_consistent();
  const Eigen::VectorXd& ck = tl.at_time(t_k);
  const Eigen::VectorXd& cf = tl.coeffs.back();
  const BasisDictionary& d = tl.dict;
  auto zk = [&](const Costate4& lam) {
    Vec8 z;
    z << dx_meas, lam;
    return z;
  };
  auto zf = [&](const Costate4& lam) {
    Vec8 z;
    z << dxf, lam;
    return z;
  };
  auto g = [&](const Costate4& lam) -> State4 {
    return f2_grad_lam0(d, ck, zk(lam)) - f2_grad_lam0(d, cf, zf(lam));
  };
  auto jac = [&](const Costate4& lam) -> Mat4 {
    return f2_hess_lam0(d, ck, zk(lam)) - f2_hess_lam0(d, cf, zf(lam));
  };
  ResolveResult r;
  r.dlam0 = track_detail::newton4(g, jac, Costate4::Zero(), opt, "resolve_at_time");
  r.dlam = f2_grad_dx(d, ck, zk(r.dlam0));
  return r;
}

struct TrackedArc {
  std::vector<double> times;
  std::vector<State4> dx;        // deviation from the canonical system
  std::vector<Costate4> dlam;
  std::vector<Control2> du;
  std::vector<State4> x_abs;     // absolute state from the full-dynamics cross-check
  double crosscheck_error = 0.0; // max ||x_abs - (x_N + dx)||
};

/// Propagates the canonical deviation system (dx, dlam) alongside the
/// absolute state driven by the reconstructed control, as a cross-check of
/// the deviation formulation. Aborts if the deviation escapes escape_factor
/// times the domain half-width.
inline TrackedArc closed_loop_propagate(const State4& dx0, const Costate4& dlam0,
                                        const NominalTrajectory& nom, const CostWeights& w,
                                        double t0, double tf, const DomainBox& box,
                                        double escape_factor = 10.0, double tol = 1e-12,
                                        int n_samples = 201) {
  const Mat4 s = w.control_quadratic();
  const Eigen::Matrix<double, 2, 4> bt =
      (Eigen::Matrix<double, 2, 4>() << 0, 0, 1, 0, 0, 0, 0, 1).finished();
  const Eigen::Matrix2d rinv = w.R.inverse();
  const Vec8 hw_full = box.half_width();
  const State4 hw = hw_full.head<4>();

  auto rhs = [&](double t, const Eigen::Matrix<double, 12, 1>& y) {
    const State4 dx = y.head<4>();
    const Costate4 dlam = y.segment<4>(4);
    const State4 xa = y.tail<4>();
    if ((dx.cwiseAbs().array() > escape_factor * hw.array()).any())
      throw ConvergenceError("closed_loop_propagate: deviation escaped the training domain");
    const NominalSample ns = sample_nominal(nom, t);
    const double mu = nom.params.mu;
    Eigen::Matrix<double, 12, 1> dy;
    dy.head<4>() = pcr3bp_drift(ns.state + dx, mu) - pcr3bp_drift(ns.state, mu) - s * dlam;
    dy.segment<4>(4) = -(w.Q * dx + pcr3bp_drift_jacobian(ns.state + dx, mu).transpose() * dlam);
    const Control2 u = ns.control - rinv * (bt * dlam);
    dy.tail<4>() = pcr3bp_rhs(xa, u, mu);
    return dy;
  };

  Eigen::Matrix<double, 12, 1> y0;
  y0 << dx0, dlam0, sample_nominal(nom, t0).state + dx0;
  std::vector<double> samples(n_samples);
  for (int i = 0; i < n_samples; ++i) samples[i] = t0 + (tf - t0) * i / (n_samples - 1);

  TrackedArc arc;
  AdaptiveRk<12, decltype(rhs)> rk(rhs, tol);
  rk.integrate(t0, tf, y0, samples,
               [&](double t, const Eigen::Matrix<double, 12, 1>& y,
                   const Eigen::Matrix<double, 12, 1>&) {
    arc.times.push_back(t);
    arc.dx.push_back(y.head<4>());
    arc.dlam.push_back(y.segment<4>(4));
    arc.du.push_back(-rinv * (bt * y.segment<4>(4)));
    arc.x_abs.push_back(y.tail<4>());
    const State4 xn = sample_nominal(nom, t).state;
    arc.crosscheck_error =
        std::max(arc.crosscheck_error, (y.tail<4>() - (xn + y.head<4>())).norm());
  });
  return arc;
}

enum class NoiseKind { uniform, gaussian_truncated };

struct NavigationModel {
  double pos_err_km = 0.0;        // per-axis bound on position measurement error
  double vel_err_mps = 0.0;       // per-axis bound on velocity measurement error
  double interval_days = 1.0;     // time between measurement updates
  NoiseKind noise = NoiseKind::uniform;
  std::uint64_t seed = 0;
  bool continue_on_failure = false;
};

struct MeasurementEpoch {
  double t = 0.0;
  State4 dx_meas = State4::Zero();
  Costate4 dlam = Costate4::Zero();
  bool recovered = false;
};

struct MpcRun {
  std::vector<double> times;
  std::vector<State4> dx_true;       // truth deviation from the reference
  std::vector<State4> dx_belief;     // controller's propagated deviation
  std::vector<Costate4> dlam;        // controller costate
  std::vector<Control2> du;
  std::vector<MeasurementEpoch> epochs;
  int failed_updates = 0;
  double terminal_pos_err_km = 0.0;
  double terminal_state_err = 0.0;   // normalized full-state norm
};

/// Closed-loop simulation: truth propagates under the controller's feedback,
/// the controller re-identifies its costate from noisy measurements at fixed
/// intervals and propagates its own belief in between. Deterministic for a
/// fixed seed.
inline MpcRun mpc_simulate(const State4& dx0_true, const State4& dxf, const GfSolution& gf,
                           const NominalTrajectory& nom, const CostWeights& w,
                           const NavigationModel& nav, const DomainBox& box,
                           const RecoveryOptions& ropt = {}, double tol = 1e-12) {
  const BasisDictionary& d = gf.timeline.dict;
  const Mat4 s = w.control_quadratic();
  const Eigen::Matrix<double, 2, 4> bt =
      (Eigen::Matrix<double, 2, 4>() << 0, 0, 1, 0, 0, 0, 0, 1).finished();
  const Eigen::Matrix2d rinv = w.R.inverse();

  std::mt19937_64 rng(nav.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double pos_n = convert_units(nav.pos_err_km, UnitKind::Length, UnitDirection::ToNormalized,
                                     nom.params);
  const double vel_n = convert_units(nav.vel_err_mps, UnitKind::Velocity,
                                     UnitDirection::ToNormalized, nom.params);
  const double interval = convert_units(nav.interval_days, UnitKind::Time,
                                        UnitDirection::ToNormalized, nom.params);
  if (!(interval > 0.0)) throw std::invalid_argument("mpc_simulate: interval must be positive");

  std::normal_distribution<double> gauss(0.0, 1.0 / 3.0);
  auto bounded = [&]() {
    if (nav.noise == NoiseKind::uniform) return unit(rng);
    return std::clamp(gauss(rng), -1.0, 1.0);
  };
  auto draw_noise = [&]() {
    State4 e;
    e << pos_n * bounded(), pos_n * bounded(), vel_n * bounded(), vel_n * bounded();
    return e;
  };

  // The generating function is only trusted inside the training domain:
  // measurements are clamped into the box before recovery, and a recovered
  // costate far outside the trained costate range is treated as a failed
  // update rather than fed to the controller.
  const Vec8 hw_full = box.half_width();
  auto clamp_measurement = [&](State4 dx) {
    for (int i = 0; i < 4; ++i) dx[i] = std::clamp(dx[i], -hw_full[i], hw_full[i]);
    return dx;
  };
  auto costate_trusted = [&](const Costate4& lam) {
    for (int i = 0; i < 4; ++i)
      if (!std::isfinite(lam[i]) || std::abs(lam[i]) > 10.0 * hw_full[4 + i]) return false;
    return true;
  };

  MpcRun run;
  const double t0 = nom.times.front(), tf = nom.tf;
  State4 x_true = nom.x0 + dx0_true;
  State4 dx_b = State4::Zero();
  Costate4 dlam_b = Costate4::Zero();
  bool have_control = false;

  double t = t0;
  while (t < tf - 1e-12) {
    const double t_next = std::min(t + interval, tf);
    // measurement + costate re-identification at epoch t
    const State4 dx_meas =
        clamp_measurement((x_true - sample_nominal(nom, t).state) + draw_noise());
    MeasurementEpoch ep;
    ep.t = t;
    ep.dx_meas = dx_meas;
    try {
      Costate4 cand;
      if (t <= t0 + 1e-12) {
        cand = recover_initial_costate(dx_meas, dxf, gf.timeline, ropt);
      } else {
        cand = resolve_at_time(dx_meas, t, dxf, gf.timeline, ropt).dlam;
      }
      if (!costate_trusted(cand))
        throw ConvergenceError("mpc_simulate: recovered costate outside the trusted region");
      dlam_b = cand;
      dx_b = dx_meas;
      have_control = true;
      ep.dlam = dlam_b;
      ep.recovered = true;
    } catch (const std::runtime_error&) {
      ++run.failed_updates;
      if (!nav.continue_on_failure || !have_control) throw;
    }
    run.epochs.push_back(ep);

    // joint propagation of belief (canonical) and truth (controlled by belief)
    auto rhs = [&](double tt, const Eigen::Matrix<double, 12, 1>& y) {
      const State4 dxb = y.head<4>();
      const Costate4 lam = y.segment<4>(4);
      const State4 xt = y.tail<4>();
      const NominalSample ns = sample_nominal(nom, tt);
      if (((xt - ns.state).cwiseAbs().array() > 10.0 * box.half_width().head<4>().array()).any())
        throw ConvergenceError("mpc_simulate: truth escaped the training domain");
      const double mu = nom.params.mu;
      Eigen::Matrix<double, 12, 1> dy;
      dy.head<4>() = pcr3bp_drift(ns.state + dxb, mu) - pcr3bp_drift(ns.state, mu) - s * lam;
      dy.segment<4>(4) =
          -(w.Q * dxb + pcr3bp_drift_jacobian(ns.state + dxb, mu).transpose() * lam);
      dy.tail<4>() = pcr3bp_rhs(xt, ns.control - rinv * (bt * lam), mu);
      return dy;
    };
    Eigen::Matrix<double, 12, 1> y;
    y << dx_b, dlam_b, x_true;
    const int n_arc = std::max(2, static_cast<int>(std::ceil((t_next - t) / interval * 25)) + 1);
    std::vector<double> samples(n_arc);
    for (int i = 0; i < n_arc; ++i) samples[i] = t + (t_next - t) * i / (n_arc - 1);
    AdaptiveRk<12, decltype(rhs)> rk(rhs, tol);
    y = rk.integrate(t, t_next, y, samples,
                 [&](double tt, const Eigen::Matrix<double, 12, 1>& ys,
                     const Eigen::Matrix<double, 12, 1>&) {
      if (!run.times.empty() && tt <= run.times.back() + 1e-14) return;
      run.times.push_back(tt);
      run.dx_belief.push_back(ys.head<4>());
      run.dlam.push_back(ys.segment<4>(4));
      run.du.push_back(-rinv * (bt * ys.segment<4>(4)));
      run.dx_true.push_back(ys.tail<4>() - sample_nominal(nom, tt).state);
    });
    dx_b = y.head<4>();
    dlam_b = y.segment<4>(4);
    x_true = y.tail<4>();
    t = t_next;
  }

  const State4 err = x_true - nom.xf;
  run.terminal_state_err = err.norm();
  run.terminal_pos_err_km =
      convert_units(err.head<2>().norm(), UnitKind::Length, UnitDirection::ToPhysical, nom.params);
  (void)d;
  return run;
}

struct SweepCell {
  double pos_err_km = 0.0;
  double interval_days = 0.0;
  int seed_count = 0;
  double mean_err_km = 0.0;
  double max_err_km = 0.0;
  int failures = 0;  // runs that aborted (escape / recovery breakdown)
};

/// Grid sweep over navigation error magnitude and update interval; each cell
/// aggregates seeds_per_cell seeded closed-loop runs. Cells are independent
/// and seeded deterministically by grid position.
inline std::vector<SweepCell> nav_error_sweep(const State4& dx0_true, const State4& dxf,
                                              const GfSolution& gf, const NominalTrajectory& nom,
                                              const CostWeights& w, const DomainBox& box,
                                              const std::vector<double>& pos_errs_km,
                                              const std::vector<double>& intervals_days,
                                              double vel_err_mps, std::uint64_t seed_base,
                                              int seeds_per_cell = 1) {
  if (pos_errs_km.empty() || intervals_days.empty() || seeds_per_cell < 1)
    throw std::invalid_argument("nav_error_sweep: empty grid");
  std::vector<SweepCell> out;
  std::uint64_t cell_idx = 0;
  for (double pe : pos_errs_km) {
    for (double iv : intervals_days) {
      SweepCell cell;
      cell.pos_err_km = pe;
      cell.interval_days = iv;
      double sum = 0.0;
      for (int sdx = 0; sdx < seeds_per_cell; ++sdx) {
        NavigationModel nav;
        nav.pos_err_km = pe;
        nav.vel_err_mps = vel_err_mps;
        nav.interval_days = iv;
        nav.seed = seed_base + cell_idx * 1000 + sdx;
        nav.continue_on_failure = true;
        try {
          const MpcRun run = mpc_simulate(dx0_true, dxf, gf, nom, w, nav, box);
          sum += run.terminal_pos_err_km;
          cell.max_err_km = std::max(cell.max_err_km, run.terminal_pos_err_km);
          ++cell.seed_count;
        } catch (const std::runtime_error&) {
          ++cell.failures;
        }
      }
      if (cell.seed_count > 0) cell.mean_err_km = sum / cell.seed_count;
      ++cell_idx;
      out.push_back(cell);
    }
  }
  return out;
}

}  // namespace hjmpc

#endif  // HJMPC_TRACKING_HPP
