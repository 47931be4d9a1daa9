#ifndef HJMPC_IO_HPP
#define HJMPC_IO_HPP

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hjmpc/tracking.hpp"

namespace hjmpc {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace io_detail {

// %.17g guarantees bit-exact double round-trips through text.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.precision(17);
  return f;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open for reading: " + path);
  return f;
}

inline void expect_tag(std::istream& in, const std::string& tag, const std::string& path) {
  std::string got;
  in >> got;
  if (got != tag) throw IoError(path + ": expected '" + tag + "', got '" + got + "'");
}

}  // namespace io_detail

// --- nominal trajectory ---

inline void write_nominal(const NominalTrajectory& nom, const std::string& path) {
  auto f = io_detail::open_out(path);
  using io_detail::fmt;
  f << "hjmpc-nominal 1\n";
  f << "mu " << fmt(nom.params.mu) << "\nlu_km " << fmt(nom.params.lu_km) << "\ntu_s "
    << fmt(nom.params.tu_s) << "\n";
  f << "tf " << fmt(nom.tf) << "\n";
  f << "r " << fmt(nom.R(0, 0)) << " " << fmt(nom.R(0, 1)) << " " << fmt(nom.R(1, 0)) << " "
    << fmt(nom.R(1, 1)) << "\n";
  f << "x0";
  for (int i = 0; i < 4; ++i) f << " " << fmt(nom.x0[i]);
  f << "\nxf";
  for (int i = 0; i < 4; ++i) f << " " << fmt(nom.xf[i]);
  f << "\nn " << nom.size() << "\n";
  for (std::size_t k = 0; k < nom.size(); ++k) {
    f << fmt(nom.times[k]);
    for (int i = 0; i < 4; ++i) f << " " << fmt(nom.states[k][i]);
    for (int i = 0; i < 4; ++i) f << " " << fmt(nom.costates[k][i]);
    f << "\n";
  }
  if (!f) throw IoError("write failed: " + path);
}

inline NominalTrajectory read_nominal(const std::string& path) {
  auto f = io_detail::open_in(path);
  using io_detail::expect_tag;
  expect_tag(f, "hjmpc-nominal", path);
  int ver;
  f >> ver;
  if (ver != 1) throw IoError(path + ": unsupported version");
  NominalTrajectory nom;
  expect_tag(f, "mu", path);
  f >> nom.params.mu;
  expect_tag(f, "lu_km", path);
  f >> nom.params.lu_km;
  expect_tag(f, "tu_s", path);
  f >> nom.params.tu_s;
  expect_tag(f, "tf", path);
  f >> nom.tf;
  expect_tag(f, "r", path);
  f >> nom.R(0, 0) >> nom.R(0, 1) >> nom.R(1, 0) >> nom.R(1, 1);
  expect_tag(f, "x0", path);
  for (int i = 0; i < 4; ++i) f >> nom.x0[i];
  expect_tag(f, "xf", path);
  for (int i = 0; i < 4; ++i) f >> nom.xf[i];
  expect_tag(f, "n", path);
  std::size_t n;
  f >> n;
  nom.times.resize(n);
  nom.states.resize(n);
  nom.costates.resize(n);
  nom.controls.resize(n);
  nom.state_derivs.resize(n);
  nom.costate_derivs.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    f >> nom.times[k];
    for (int i = 0; i < 4; ++i) f >> nom.states[k][i];
    for (int i = 0; i < 4; ++i) f >> nom.costates[k][i];
    if (!f) throw IoError(path + ": truncated nominal row");
    Vec8 z;
    z << nom.states[k], nom.costates[k];
    const Vec8 dz = augmented_rhs(z, nom.params, nom.R);
    nom.state_derivs[k] = dz.head<4>();
    nom.costate_derivs[k] = dz.tail<4>();
    nom.controls[k] = -nom.R.inverse() * nom.costates[k].tail<2>();
  }
  return nom;
}

// --- coefficient timeline ---

inline void write_timeline(const CoefficientTimeline& tl, const std::string& path) {
  tl.check_consistent();
  auto f = io_detail::open_out(path);
  using io_detail::fmt;
  const BasisDictionary& d = tl.dict;
  f << "hjmpc-coeffs 1\n";
  f << "n_vars " << d.n_vars << "\ndegree " << d.degree << "\nm " << d.size() << "\n";
  f << "scale";
  for (int i = 0; i < d.n_vars; ++i) f << " " << fmt(d.scale[i]);
  f << "\nsteps " << tl.times.size() << "\n";
  for (std::size_t k = 0; k < tl.times.size(); ++k) {
    int nnz = 0;
    for (int j = 0; j < d.size(); ++j)
      if (tl.coeffs[k][j] != 0.0) ++nnz;
    f << "t " << fmt(tl.times[k]) << " " << nnz << "\n";
    for (int j = 0; j < d.size(); ++j)
      if (tl.coeffs[k][j] != 0.0) f << j << " " << fmt(tl.coeffs[k][j]) << "\n";
  }
  if (!f) throw IoError("write failed: " + path);
}

inline CoefficientTimeline read_timeline(const std::string& path) {
  auto f = io_detail::open_in(path);
  using io_detail::expect_tag;
  expect_tag(f, "hjmpc-coeffs", path);
  int ver;
  f >> ver;
  if (ver != 1) throw IoError(path + ": unsupported version");
  int n_vars, degree, m;
  expect_tag(f, "n_vars", path);
  f >> n_vars;
  expect_tag(f, "degree", path);
  f >> degree;
  expect_tag(f, "m", path);
  f >> m;
  expect_tag(f, "scale", path);
  Eigen::VectorXd scale(n_vars);
  for (int i = 0; i < n_vars; ++i) f >> scale[i];
  CoefficientTimeline tl;
  tl.dict = build_dictionary(n_vars, degree, scale);
  if (tl.dict.size() != m) throw IoError(path + ": dictionary size mismatch");
  std::size_t steps;
  expect_tag(f, "steps", path);
  f >> steps;
  tl.times.resize(steps);
  tl.coeffs.assign(steps, Eigen::VectorXd::Zero(m));
  for (std::size_t k = 0; k < steps; ++k) {
    expect_tag(f, "t", path);
    int nnz;
    f >> tl.times[k] >> nnz;
    for (int e = 0; e < nnz; ++e) {
      int j;
      double v;
      f >> j >> v;
      if (!f || j < 0 || j >= m) throw IoError(path + ": bad coefficient entry");
      tl.coeffs[k][j] = v;
    }
  }
  tl.check_consistent();
  return tl;
}

// --- point sets ---

inline void write_points(const PointSet& ps, const std::string& path) {
  auto f = io_detail::open_out(path);
  using io_detail::fmt;
  f << "hjmpc-points 1\n";
  f << "scheme " << ps.scheme << "\nn " << ps.size() << "\ndim " << ps.dim() << "\n";
  for (int i = 0; i < ps.size(); ++i) {
    f << fmt(ps.weights[i]);
    for (int d = 0; d < ps.dim(); ++d) f << " " << fmt(ps.points(i, d));
    f << "\n";
  }
  if (!f) throw IoError("write failed: " + path);
}

inline PointSet read_points(const std::string& path) {
  auto f = io_detail::open_in(path);
  using io_detail::expect_tag;
  expect_tag(f, "hjmpc-points", path);
  int ver;
  f >> ver;
  if (ver != 1) throw IoError(path + ": unsupported version");
  PointSet ps;
  expect_tag(f, "scheme", path);
  f >> ps.scheme;
  int n, dim;
  expect_tag(f, "n", path);
  f >> n;
  expect_tag(f, "dim", path);
  f >> dim;
  ps.points.resize(n, dim);
  ps.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    f >> ps.weights[i];
    for (int d = 0; d < dim; ++d) f >> ps.points(i, d);
  }
  if (!f) throw IoError(path + ": truncated point set");
  return ps;
}

// --- CSV reports ---

inline void write_residual_csv(const GfSolution& gf, const std::string& path) {
  auto f = io_detail::open_out(path);
  using io_detail::fmt;
  const int dmax = gf.timeline.dict.degree;
  f << "step,time,train_median,train_max,test_median,test_max,weighted_norm,gap,reweight_iters";
  for (int o = 0; o <= dmax; ++o) f << ",nnz_order" << o;
  f << "\n";
  for (std::size_t k = 0; k < gf.steps.size(); ++k) {
    const StepStats& s = gf.steps[k];
    f << k << "," << fmt(s.t) << "," << fmt(s.train_median) << "," << fmt(s.train_max) << ","
      << fmt(s.test_median) << "," << fmt(s.test_max) << "," << fmt(s.weighted_norm) << ","
      << fmt(s.gap) << "," << s.reweight_iters;
    for (int o = 0; o <= dmax; ++o)
      f << "," << (o < static_cast<int>(s.nnz_by_order.size()) ? s.nnz_by_order[o] : 0);
    f << "\n";
  }
  if (!f) throw IoError("write failed: " + path);
}

inline void write_mpc_csv(const MpcRun& run, const std::string& path) {
  auto f = io_detail::open_out(path);
  using io_detail::fmt;
  f << "time,dx_true_x,dx_true_y,dx_true_vx,dx_true_vy,"
       "dx_belief_x,dx_belief_y,dx_belief_vx,dx_belief_vy,"
       "dlam_1,dlam_2,dlam_3,dlam_4,du_x,du_y\n";
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    f << fmt(run.times[k]);
    for (int i = 0; i < 4; ++i) f << "," << fmt(run.dx_true[k][i]);
    for (int i = 0; i < 4; ++i) f << "," << fmt(run.dx_belief[k][i]);
    for (int i = 0; i < 4; ++i) f << "," << fmt(run.dlam[k][i]);
    for (int i = 0; i < 2; ++i) f << "," << fmt(run.du[k][i]);
    f << "\n";
  }
  if (!f) throw IoError("write failed: " + path);
}

inline void write_sweep_csv(const std::vector<SweepCell>& cells, const std::string& path) {
  auto f = io_detail::open_out(path);
  using io_detail::fmt;
  f << "pos_err_km,interval_days,seed_count,mean_err_km,max_err_km,failures\n";
  for (const SweepCell& c : cells)
    f << fmt(c.pos_err_km) << "," << fmt(c.interval_days) << "," << c.seed_count << ","
      << fmt(c.mean_err_km) << "," << fmt(c.max_err_km) << "," << c.failures << "\n";
  if (!f) throw IoError("write failed: " + path);
}

inline void write_mpc_epochs_csv(const MpcRun& run, const std::string& path) {
  auto f = io_detail::open_out(path);
  using io_detail::fmt;
  f << "epoch,t,dx_meas_x,dx_meas_y,dx_meas_vx,dx_meas_vy,dlam_1,dlam_2,dlam_3,dlam_4,recovered\n";
  for (std::size_t k = 0; k < run.epochs.size(); ++k) {
    const MeasurementEpoch& e = run.epochs[k];
    f << k << "," << fmt(e.t);
    for (int i = 0; i < 4; ++i) f << "," << fmt(e.dx_meas[i]);
    for (int i = 0; i < 4; ++i) f << "," << fmt(e.dlam[i]);
    f << "," << (e.recovered ? 1 : 0) << "\n";
  }
  if (!f) throw IoError("write failed: " + path);
}

// --- run configuration ---

struct DomainConfig {
  double pos_km = 100.0;     // +- bound on position deviations
  double vel_mps = 2.0;      // +- bound on velocity deviations
  Eigen::Vector4d lam0_box = (Eigen::Vector4d() << 0.02, 0.03, 0.005, 0.005).finished();
};

struct PointsConfig {
  std::string train_scheme = "cut6";
  int train_count = 0;       // only for lhs / monte_carlo
  int test_count = 100;
  std::uint64_t seed = 7;
};

struct CaseConfig {
  std::string name = "I";    // I..IV: corner position perturbations
  double vel_mps = 2.0;      // bound of the uniform velocity perturbation
  std::uint64_t seed = 0;
};

struct SweepConfig {
  std::vector<double> pos_errs_km = {10.0, 50.0, 100.0};
  std::vector<double> intervals_days = {0.5, 1.0, 2.0};
  double vel_err_mps = 1.0;
  int seeds_per_cell = 3;
  std::uint64_t seed_base = 100;
};

struct RunConfig {
  SystemParams system;
  State4 x0, xf;
  double tof_days = 5.0;
  CostWeights weights;
  DomainConfig domain;
  int basis_degree = 4;
  PointsConfig points;
  SolverConfig solver;
  BvpConfig bvp;
  CaseConfig track_case;
  NavigationModel nav;
  SweepConfig sweep;
  std::string nominal_path = "nominal.dat";
  std::string coeffs_path = "coeffs.dat";
  std::string residuals_path = "residuals.csv";

  double tf() const {
    return convert_units(tof_days, UnitKind::Time, UnitDirection::ToNormalized, system);
  }

  DomainBox domain_box() const {
    const double pn = convert_units(domain.pos_km, UnitKind::Length, UnitDirection::ToNormalized, system);
    const double vn = convert_units(domain.vel_mps, UnitKind::Velocity, UnitDirection::ToNormalized, system);
    DomainBox box;
    Vec8 hw;
    hw << pn, pn, vn, vn, domain.lam0_box;
    box.lower = -hw;
    box.upper = hw;
    box.validate();
    return box;
  }
};

namespace io_detail {

using nlohmann::json;

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
  }
}

inline State4 vec4(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4)
    throw std::invalid_argument("config: " + where + " must be an array of 4 numbers");
  State4 v;
  for (int i = 0; i < 4; ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace io_detail

namespace io_detail {

inline RunConfig parse_config_impl(const nlohmann::json& j) {
  using io_detail::check_keys;
  using io_detail::vec4;
  RunConfig c;
  check_keys(j, {"system", "boundary", "weights", "domain", "basis", "points", "solver", "bvp",
                 "case", "nav", "sweep", "outputs"},
             "root");

  if (j.contains("system")) {
    const auto& s = j.at("system");
    check_keys(s, {"mu", "lu_km", "tu_s"}, "system");
    c.system.mu = s.value("mu", c.system.mu);
    c.system.lu_km = s.value("lu_km", c.system.lu_km);
    c.system.tu_s = s.value("tu_s", c.system.tu_s);
  }
  c.system.validate();

  if (!j.contains("boundary")) throw std::invalid_argument("config: missing 'boundary'");
  {
    const auto& b = j.at("boundary");
    check_keys(b, {"x0", "xf", "tof_days"}, "boundary");
    c.x0 = vec4(b.at("x0"), "boundary.x0");
    c.xf = vec4(b.at("xf"), "boundary.xf");
    c.tof_days = b.at("tof_days").get<double>();
    if (!(c.tof_days > 0.0)) throw std::invalid_argument("config: tof_days must be positive");
  }

  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    check_keys(w, {"q_diag", "r_diag"}, "weights");
    if (w.contains("q_diag")) c.weights.Q = vec4(w.at("q_diag"), "weights.q_diag").asDiagonal();
    if (w.contains("r_diag")) {
      const auto& r = w.at("r_diag");
      if (!r.is_array() || r.size() != 2)
        throw std::invalid_argument("config: weights.r_diag must have 2 entries");
      c.weights.R = Eigen::Vector2d(r[0].get<double>(), r[1].get<double>()).asDiagonal();
    }
    c.weights.validate();
  }

  if (j.contains("domain")) {
    const auto& d = j.at("domain");
    check_keys(d, {"pos_km", "vel_mps", "lam0_box"}, "domain");
    c.domain.pos_km = d.value("pos_km", c.domain.pos_km);
    c.domain.vel_mps = d.value("vel_mps", c.domain.vel_mps);
    if (d.contains("lam0_box")) c.domain.lam0_box = vec4(d.at("lam0_box"), "domain.lam0_box");
    if (!(c.domain.pos_km > 0.0 && c.domain.vel_mps > 0.0) ||
        (c.domain.lam0_box.array() <= 0.0).any())
      throw std::invalid_argument("config: domain bounds must be positive");
  }

  if (j.contains("basis")) {
    const auto& b = j.at("basis");
    check_keys(b, {"degree"}, "basis");
    c.basis_degree = b.value("degree", c.basis_degree);
    if (c.basis_degree < 2) throw std::invalid_argument("config: basis.degree must be >= 2");
  }

  if (j.contains("points")) {
    const auto& p = j.at("points");
    check_keys(p, {"train_scheme", "train_count", "test_count", "seed"}, "points");
    c.points.train_scheme = p.value("train_scheme", c.points.train_scheme);
    c.points.train_count = p.value("train_count", c.points.train_count);
    c.points.test_count = p.value("test_count", c.points.test_count);
    c.points.seed = p.value("seed", c.points.seed);
    parse_point_scheme(c.points.train_scheme);  // validates
  }

  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    check_keys(s, {"dt", "epsilon", "eta", "delta_s", "alpha", "max_reweight", "mode", "march",
                   "weighting", "gap_tol"},
               "solver");
    // "alpha" is accepted for interface compatibility but has no effect.
    c.solver.dt = s.value("dt", c.solver.dt);
    c.solver.epsilon = s.value("epsilon", c.solver.epsilon);
    c.solver.eta = s.value("eta", c.solver.eta);
    c.solver.delta_s = s.value("delta_s", c.solver.delta_s);
    c.solver.max_reweight = s.value("max_reweight", c.solver.max_reweight);
    c.solver.gap_tol = s.value("gap_tol", c.solver.gap_tol);
    if (s.contains("mode")) c.solver.solver = parse_solver_mode(s.at("mode").get<std::string>());
    if (s.contains("march")) c.solver.march = parse_march_order(s.at("march").get<std::string>());
    if (s.contains("weighting"))
      c.solver.weighting = parse_weight_mode(s.at("weighting").get<std::string>());
    c.solver.validate();
  }

  if (j.contains("bvp")) {
    const auto& b = j.at("bvp");
    check_keys(b, {"shooting_tol", "max_newton_iters", "integrator_tol", "grid_size",
                   "multiple_shooting_segments"},
               "bvp");
    c.bvp.shooting_tol = b.value("shooting_tol", c.bvp.shooting_tol);
    c.bvp.max_newton_iters = b.value("max_newton_iters", c.bvp.max_newton_iters);
    c.bvp.integrator_tol = b.value("integrator_tol", c.bvp.integrator_tol);
    c.bvp.grid_size = b.value("grid_size", c.bvp.grid_size);
    c.bvp.multiple_shooting_segments =
        b.value("multiple_shooting_segments", c.bvp.multiple_shooting_segments);
  }

  if (j.contains("case")) {
    const auto& t = j.at("case");
    check_keys(t, {"name", "vel_mps", "seed"}, "case");
    c.track_case.name = t.value("name", c.track_case.name);
    c.track_case.vel_mps = t.value("vel_mps", c.track_case.vel_mps);
    c.track_case.seed = t.value("seed", c.track_case.seed);
  }

  if (j.contains("nav")) {
    const auto& n = j.at("nav");
    check_keys(n, {"pos_err_km", "vel_err_mps", "interval_days", "noise", "seed",
                   "continue_on_failure"},
               "nav");
    if (n.contains("noise")) {
      const std::string kind = n.at("noise").get<std::string>();
      if (kind == "uniform") c.nav.noise = NoiseKind::uniform;
      else if (kind == "gaussian_truncated") c.nav.noise = NoiseKind::gaussian_truncated;
      else throw std::invalid_argument("config: nav.noise must be uniform|gaussian_truncated");
    }
    c.nav.pos_err_km = n.value("pos_err_km", c.nav.pos_err_km);
    c.nav.vel_err_mps = n.value("vel_err_mps", c.nav.vel_err_mps);
    c.nav.interval_days = n.value("interval_days", c.nav.interval_days);
    c.nav.seed = n.value("seed", c.nav.seed);
    c.nav.continue_on_failure = n.value("continue_on_failure", c.nav.continue_on_failure);
    if (!(c.nav.interval_days > 0.0))
      throw std::invalid_argument("config: nav.interval_days must be positive");
  }

  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    check_keys(s, {"pos_errs_km", "intervals_days", "vel_err_mps", "seeds_per_cell", "seed_base"},
               "sweep");
    if (s.contains("pos_errs_km")) c.sweep.pos_errs_km = s.at("pos_errs_km").get<std::vector<double>>();
    if (s.contains("intervals_days"))
      c.sweep.intervals_days = s.at("intervals_days").get<std::vector<double>>();
    c.sweep.vel_err_mps = s.value("vel_err_mps", c.sweep.vel_err_mps);
    c.sweep.seeds_per_cell = s.value("seeds_per_cell", c.sweep.seeds_per_cell);
    c.sweep.seed_base = s.value("seed_base", c.sweep.seed_base);
    if (c.sweep.pos_errs_km.empty() || c.sweep.intervals_days.empty() || c.sweep.seeds_per_cell < 1)
      throw std::invalid_argument("config: sweep grids must be non-empty");
  }

  if (j.contains("outputs")) {
    const auto& o = j.at("outputs");
    check_keys(o, {"nominal", "coeffs", "residuals"}, "outputs");
    c.nominal_path = o.value("nominal", c.nominal_path);
    c.coeffs_path = o.value("coeffs", c.coeffs_path);
    c.residuals_path = o.value("residuals", c.residuals_path);
  }
  return c;
}

}  // namespace io_detail

/// Parses and validates a run configuration; any JSON shape or type problem
/// surfaces as std::invalid_argument.
inline RunConfig parse_config(const nlohmann::json& j) {
  try {
    return io_detail::parse_config_impl(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

inline RunConfig load_config(const std::string& path) {
  auto f = io_detail::open_in(path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: JSON parse error in " + path + ": " + e.what());
  }
  return parse_config(j);
}

/// Corner-case initial perturbation: position signs by case name, velocity
/// components drawn uniformly from [-vel_mps, vel_mps] (seeded).
inline State4 case_perturbation(const RunConfig& c) {
  double sx, sy;
  const std::string& n = c.track_case.name;
  if (n == "I") { sx = 1; sy = 1; }
  else if (n == "II") { sx = -1; sy = 1; }
  else if (n == "III") { sx = -1; sy = -1; }
  else if (n == "IV") { sx = 1; sy = -1; }
  else throw std::invalid_argument("config: case.name must be I..IV");
  const double pn =
      convert_units(c.domain.pos_km, UnitKind::Length, UnitDirection::ToNormalized, c.system);
  std::mt19937_64 rng(c.track_case.seed);
  std::uniform_real_distribution<double> u(-c.track_case.vel_mps, c.track_case.vel_mps);
  const double v1 = u(rng), v2 = u(rng);
  State4 dx;
  dx << sx * pn, sy * pn,
      convert_units(v1, UnitKind::Velocity, UnitDirection::ToNormalized, c.system),
      convert_units(v2, UnitKind::Velocity, UnitDirection::ToNormalized, c.system);
  return dx;
}

}  // namespace hjmpc

#endif  // HJMPC_IO_HPP
