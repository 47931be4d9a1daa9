#ifndef HJMPC_HJ_HPP
#define HJMPC_HJ_HPP

#include <functional>
#include <string>

#include "hjmpc/basis.hpp"
#include "hjmpc/l1.hpp"
#include "hjmpc/nominal.hpp"
#include "hjmpc/points.hpp"

namespace hjmpc {

enum class SolverMode { l2, l1 };
enum class MarchOrder { euler, heun, rk4 };
enum class WeightMode { uniform, cubature };

inline SolverMode parse_solver_mode(const std::string& s) {
  if (s == "l2") return SolverMode::l2;
  if (s == "l1") return SolverMode::l1;
  throw std::invalid_argument("unknown solver mode: " + s);
}
inline MarchOrder parse_march_order(const std::string& s) {
  if (s == "euler") return MarchOrder::euler;
  if (s == "heun") return MarchOrder::heun;
  if (s == "rk4") return MarchOrder::rk4;
  throw std::invalid_argument("unknown march order: " + s);
}
inline WeightMode parse_weight_mode(const std::string& s) {
  if (s == "uniform") return WeightMode::uniform;
  if (s == "cubature") return WeightMode::cubature;
  throw std::invalid_argument("unknown weight mode: " + s);
}

struct SolverConfig {
  double dt = 1e-3;          // march step
  double epsilon = 1e-7;     // per-step residual budget (weighted l2 norm)
  double eta = 1e-7;         // reweighting regularizer
  double delta_s = 1e-8;     // reweighting stopping tolerance
  int max_reweight = 20;
  SolverMode solver = SolverMode::l1;
  MarchOrder march = MarchOrder::heun;
  WeightMode weighting = WeightMode::cubature;
  double gap_tol = 1e-9;

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("SolverConfig: dt must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("SolverConfig: epsilon must be positive");
    if (!(eta > 0.0)) throw std::invalid_argument("SolverConfig: eta must be positive");
    if (!(delta_s > 0.0)) throw std::invalid_argument("SolverConfig: delta_s must be positive");
    if (max_reweight < 1) throw std::invalid_argument("SolverConfig: max_reweight must be >= 1");
  }
};

/// Tracking Hamiltonian as a function of the state and costate deviations
/// and time along the reference.
using HamiltonianFn = std::function<double(const State4&, const Costate4&, double)>;

inline HamiltonianFn make_pcr3bp_hamiltonian(const NominalTrajectory& nom, const CostWeights& w) {
  return [&nom, &w](const State4& dx, const Costate4& dlam, double t) {
    return tracking_hamiltonian(dx, dlam, t, nom, w, nom.params);
  };
}

/// One collocated linear system A dc = b with per-row weights.
struct StepSystem {
  Eigen::MatrixXd A;  // N x m basis evaluations
  Eigen::VectorXd b;  // -H_i * dt
  Eigen::VectorXd w;  // row weights (diagonal of W)
  double t = 0.0;
};

/// Evaluates the basis rows and Hamiltonian right-hand side at the
/// collocation points for the coefficient state c at time t. Points are in
/// physical deviation coordinates, columns (dx, dlam0).
inline StepSystem assemble_system(const HamiltonianFn& H, const BasisDictionary& d,
                                  const Eigen::MatrixXd& pts, const Eigen::VectorXd& cub_w,
                                  const Eigen::VectorXd& c, double t, double dt,
                                  WeightMode wm) {
  if (pts.cols() != 8) throw std::invalid_argument("assemble_system: points must have 8 columns");
  if (cub_w.size() != pts.rows()) throw std::invalid_argument("assemble_system: weight count mismatch");
  const int n = static_cast<int>(pts.rows());
  StepSystem s;
  s.t = t;
  s.A.resize(n, d.size());
  s.b.resize(n);
  s.w.resize(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd zeta = pts.row(i).transpose();
    s.A.row(i) = eval_basis(d, zeta).transpose();
    const Costate4 dlam = f2_grad_dx(d, c, zeta);
    s.b[i] = -H(zeta.head<4>(), dlam, t) * dt;
    s.w[i] = (wm == WeightMode::cubature) ? std::sqrt(std::max(0.0, cub_w[i]) * n) : 1.0;
  }
  return s;
}

/// Minimum-norm weighted least-squares update.
inline Eigen::VectorXd solve_l2(const StepSystem& s) {
  const Eigen::MatrixXd wa = s.w.asDiagonal() * s.A;
  const Eigen::VectorXd wb = s.w.asDiagonal() * s.b;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(wa);
  return cod.solve(wb);
}

struct L1StepInfo {
  int reweight_iters = 0;
  double gap = 0.0;
  double residual = 0.0;
};

/// Iteratively reweighted l1 recovery: min ||K dc||_1 s.t. ||W(A dc - b)|| <= eps,
/// K initialized from the basis orders and refreshed from the previous iterate.
inline Eigen::VectorXd solve_weighted_l1(const StepSystem& s, const BasisDictionary& d,
                                         const SolverConfig& cfg, L1StepInfo* info = nullptr) {
  const Eigen::MatrixXd wa = s.w.asDiagonal() * s.A;
  const Eigen::VectorXd wb = s.w.asDiagonal() * s.b;
  {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(wa);
    const double best = (wa * cod.solve(wb) - wb).norm();
    if (best > cfg.epsilon)
      throw ConvergenceError("solve_weighted_l1: residual budget below least-squares floor");
  }
  Eigen::VectorXd k(d.size());
  for (int j = 0; j < d.size(); ++j) k[j] = 1.0 + d.indices[j].total();
  L1Options opt;
  opt.epsilon = cfg.epsilon;
  opt.gap_tol = cfg.gap_tol;
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(d.size());
  L1Result r;
  int it = 0;
  for (; it < cfg.max_reweight; ++it) {
    r = solve_bpdn(wa, wb, k, opt);
    if ((r.x - prev).norm() < cfg.delta_s) {
      prev = r.x;
      ++it;
      break;
    }
    prev = r.x;
    k = (prev.array().abs() + cfg.eta).inverse();
  }
  if (info) {
    info->reweight_iters = it;
    info->gap = r.gap;
    info->residual = r.residual;
  }
  return prev;
}

struct StepStats {
  double t = 0.0;
  double train_median = 0.0, train_max = 0.0;   // unweighted |row residual|
  double test_median = 0.0, test_max = 0.0;
  double train_rms = 0.0, test_rms = 0.0;
  double weighted_norm = 0.0;                   // max over stages of ||W(A dc - b)||
  double gap = 0.0;
  int reweight_iters = 0;
  std::vector<int> nnz_by_order;                // of the accumulated coefficients
};

struct GfSolution {
  CoefficientTimeline timeline;
  std::vector<StepStats> steps;
  std::string scheme;  // descriptor of points/solver used
};

namespace hj_detail {

inline double median_abs(Eigen::VectorXd v) {
  if (v.size() == 0) return 0.0;
  v = v.cwiseAbs();
  std::sort(v.data(), v.data() + v.size());
  const int n = static_cast<int>(v.size());
  return (n % 2) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::vector<int> nnz_by_order(const BasisDictionary& d, const Eigen::VectorXd& c,
                                     double thresh = 1e-10) {
  std::vector<int> out(d.degree + 1, 0);
  for (int j = 0; j < d.size(); ++j)
    if (std::abs(c[j]) > thresh) ++out[d.indices[j].total()];
  return out;
}

}  // namespace hj_detail

/// Marches the generating-function coefficients from the identity map at t0
/// to tf. Each stage solves one collocated linear system; Heun combines two
/// stages per step. Residual statistics come from the first stage, evaluated
/// with that stage's own solution; the test set never enters the solve.
inline GfSolution time_march(const HamiltonianFn& H, const BasisDictionary& d,
                             const Eigen::MatrixXd& train_pts, const Eigen::VectorXd& train_w,
                             const Eigen::MatrixXd& test_pts, double t0, double tf,
                             const SolverConfig& cfg) {
  cfg.validate();
  if (tf < t0) throw std::invalid_argument("time_march: need tf >= t0");
  const int n_steps =
      (tf == t0) ? 0 : std::max(1, static_cast<int>(std::llround((tf - t0) / cfg.dt)));
  const double dt = n_steps ? (tf - t0) / n_steps : 0.0;

  Eigen::MatrixXd test_phi(test_pts.rows(), d.size());
  for (int i = 0; i < test_pts.rows(); ++i)
    test_phi.row(i) = eval_basis(d, Eigen::VectorXd(test_pts.row(i).transpose())).transpose();

  GfSolution out;
  out.timeline.dict = d;
  out.scheme = (cfg.solver == SolverMode::l1 ? "l1" : "l2") +
               std::string(cfg.march == MarchOrder::heun ? "/heun" : "/euler");
  Eigen::VectorXd c = identity_coefficients(d);
  out.timeline.times.push_back(t0);
  out.timeline.coeffs.push_back(c);
  out.steps.reserve(n_steps);

  auto solve_stage = [&](const StepSystem& s, L1StepInfo* info) {
    if (cfg.solver == SolverMode::l1) return solve_weighted_l1(s, d, cfg, info);
    return solve_l2(s);
  };

  for (int k = 0; k < n_steps; ++k) {
    const double t = t0 + k * dt;
    StepStats st;
    st.t = t;
    L1StepInfo info1;
    const StepSystem s1 = assemble_system(H, d, train_pts, train_w, c, t, dt, cfg.weighting);
    const Eigen::VectorXd dc1 = solve_stage(s1, &info1);
    double wnorm = (s1.w.asDiagonal() * (s1.A * dc1 - s1.b)).norm();
    Eigen::VectorXd dc = dc1;
    auto extra_stage = [&](const Eigen::VectorXd& c_stage, double t_stage) {
      L1StepInfo info2;
      const StepSystem s2 =
          assemble_system(H, d, train_pts, train_w, c_stage, t_stage, dt, cfg.weighting);
      const Eigen::VectorXd dc2 = solve_stage(s2, &info2);
      wnorm = std::max(wnorm, (s2.w.asDiagonal() * (s2.A * dc2 - s2.b)).norm());
      info1.gap = std::max(info1.gap, info2.gap);
      info1.reweight_iters = std::max(info1.reweight_iters, info2.reweight_iters);
      return dc2;
    };
    if (cfg.march == MarchOrder::heun) {
      const Eigen::VectorXd dc2 = extra_stage(c + dc1, t + dt);
      dc = 0.5 * (dc1 + dc2);
    } else if (cfg.march == MarchOrder::rk4) {
      // classic RK4 on the dt-scaled increment: stages evaluate the system
      // at the usual half/full-step predictor states
      const Eigen::VectorXd dc2 = extra_stage(c + 0.5 * dc1, t + 0.5 * dt);
      const Eigen::VectorXd dc3 = extra_stage(c + 0.5 * dc2, t + 0.5 * dt);
      const Eigen::VectorXd dc4 = extra_stage(c + dc3, t + dt);
      dc = (dc1 + 2.0 * dc2 + 2.0 * dc3 + dc4) / 6.0;
    }
    c += dc;

    const Eigen::VectorXd train_res = s1.A * dc1 - s1.b;
    st.train_median = hj_detail::median_abs(train_res);
    st.train_max = train_res.cwiseAbs().maxCoeff();
    st.train_rms = train_res.norm() / std::sqrt(double(train_res.size()));
    if (test_pts.rows() > 0) {
      Eigen::VectorXd test_b(test_pts.rows());
      const Eigen::VectorXd c_prev = out.timeline.coeffs.back();
      for (int i = 0; i < test_pts.rows(); ++i) {
        const Eigen::VectorXd zeta = test_pts.row(i).transpose();
        const Costate4 dlam = f2_grad_dx(d, c_prev, zeta);
        test_b[i] = -H(zeta.head<4>(), dlam, t) * dt;
      }
      const Eigen::VectorXd test_res = test_phi * dc1 - test_b;
      st.test_median = hj_detail::median_abs(test_res);
      st.test_max = test_res.cwiseAbs().maxCoeff();
      st.test_rms = test_res.norm() / std::sqrt(double(test_res.size()));
    }
    st.weighted_norm = wnorm;
    st.gap = info1.gap;
    st.reweight_iters = info1.reweight_iters;
    st.nnz_by_order = hj_detail::nnz_by_order(d, c);

    out.timeline.times.push_back(t + dt);
    out.timeline.coeffs.push_back(c);
    out.steps.push_back(std::move(st));
  }
  out.timeline.check_consistent();
  return out;
}

}  // namespace hjmpc

#endif  // HJMPC_HJ_HPP
