#include <doctest.h>

#include "hjmpc/tracking.hpp"
#include "lti_oracle.hpp"

using namespace hjmpc;

namespace {
// A marched LTI generating function shared across the cases in this file.
const GfSolution& lti_gf() {
  static const GfSolution gf = [] {
    const BasisDictionary d = build_dictionary(8, 2);
    const PointSet ps = generate_points(8, PointScheme::cut4);
    SolverConfig cfg;
    cfg.solver = SolverMode::l2;
    cfg.march = MarchOrder::rk4;  // recovery amplifies march truncation error ~10x
    cfg.dt = 1e-3;
    return time_march(lti::hamiltonian(), d, ps.points, ps.weights, Eigen::MatrixXd(0, 8), 0.0,
                      1.0, cfg);
  }();
  return gf;
}
}  // namespace

TEST_CASE("recover_initial_costate: zero boundary gives zero costate") {
  const Costate4 lam = recover_initial_costate(State4::Zero(), State4::Zero(), lti_gf().timeline);
  CHECK(lam.norm() < 1e-12);
}

TEST_CASE("recover_initial_costate: identity coefficients are degenerate") {
  CoefficientTimeline tl;
  tl.dict = build_dictionary(8, 2);
  tl.times = {0.0};
  tl.coeffs = {identity_coefficients(tl.dict)};
  State4 dx0;
  dx0 << 0.1, 0.0, 0.0, 0.0;
  CHECK_THROWS_AS(recover_initial_costate(dx0, State4::Zero(), tl), SingularityError);
}

TEST_CASE("LTI oracle: recovered costate matches the STM boundary-value solution") {
  State4 dx0, dxf;
  dx0 << 0.12, -0.05, 0.03, 0.08;
  dxf << -0.02, 0.04, 0.01, -0.03;
  const Costate4 lam = recover_initial_costate(dx0, dxf, lti_gf().timeline);

  const Mat8 phi = lti::flow(1.0);
  const Costate4 oracle = phi.topRightCorner<4, 4>().inverse() *
                          (dxf - phi.topLeftCorner<4, 4>() * dx0);
  CHECK((lam - oracle).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("resolve_at_time: zero measurement gives zero costate") {
  const ResolveResult r = resolve_at_time(State4::Zero(), 0.5, State4::Zero(), lti_gf().timeline);
  CHECK(r.dlam0.norm() < 1e-12);
  CHECK(r.dlam.norm() < 1e-12);
}

TEST_CASE("LTI oracle: mid-horizon re-solve matches the remaining-horizon STM solution") {
  State4 dx_meas, dxf;
  dx_meas << 0.07, 0.02, -0.04, 0.05;
  dxf << -0.01, 0.03, 0.02, 0.0;
  const ResolveResult r = resolve_at_time(dx_meas, 0.5, dxf, lti_gf().timeline);

  const Mat8 phi = lti::flow(0.5);  // flow over the remaining horizon [0.5, 1]
  const Costate4 oracle = phi.topRightCorner<4, 4>().inverse() *
                          (dxf - phi.topLeftCorner<4, 4>() * dx_meas);
  CHECK((r.dlam - oracle).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("resolve_at_time degenerates as t_k approaches tf") {
  State4 dx;
  dx << 0.05, 0.0, 0.0, 0.0;
  CHECK_THROWS_AS(resolve_at_time(dx, 1.0, State4::Zero(), lti_gf().timeline),
                  std::runtime_error);
}

// --- PCR3BP closed-loop pieces (shared nominal at a short horizon) ---

namespace {
const NominalTrajectory& short_nominal() {
  static const NominalTrajectory nom = [] {
    SystemParams p;
    const State4 x0(0.810796, -0.158270, -0.129473, 0.319169);
    auto rhs = [&](double, const State4& s) { return pcr3bp_drift(s, p.mu); };
    AdaptiveRk<4, decltype(rhs)> rk(rhs, 1e-12);
    State4 xf = rk.integrate(0.0, 0.4, x0);
    xf[0] += 5e-4;  // small controlled offset
    BvpConfig cfg;
    cfg.grid_size = 401;
    return solve_nominal(x0, xf, 0.4, p, Eigen::Matrix2d::Identity(), cfg);
  }();
  return nom;
}

DomainBox pcr3bp_box() {
  DomainBox box;
  Vec8 hw;
  hw << 2.7e-4, 2.7e-4, 2e-3, 2e-3, 0.02, 0.03, 0.005, 0.005;
  box.lower = -hw;
  box.upper = hw;
  return box;
}
}  // namespace

TEST_CASE("closed_loop_propagate: zero perturbation stays on the nominal") {
  CostWeights w;
  const NominalTrajectory& nom = short_nominal();
  const TrackedArc arc = closed_loop_propagate(State4::Zero(), Costate4::Zero(), nom, w, 0.0,
                                               nom.tf, pcr3bp_box());
  double dmax = 0.0;
  for (const State4& dx : arc.dx) dmax = std::max(dmax, dx.norm());
  CHECK(dmax < 1e-9);
  CHECK(arc.crosscheck_error < 1e-8);
}

TEST_CASE("closed_loop_propagate: canonical and direct propagation agree") {
  CostWeights w;
  const NominalTrajectory& nom = short_nominal();
  State4 dx0;
  dx0 << 1e-4, -1e-4, 5e-4, -5e-4;
  Costate4 dlam0;
  dlam0 << 0.002, -0.001, 0.0005, 0.001;
  const TrackedArc arc =
      closed_loop_propagate(dx0, dlam0, nom, w, 0.0, nom.tf, pcr3bp_box());
  CHECK(arc.crosscheck_error < 1e-8);
}

TEST_CASE("closed_loop_propagate aborts on domain escape") {
  CostWeights w;
  const NominalTrajectory& nom = short_nominal();
  State4 dx0;
  dx0 << 1e-2, 1e-2, 0.1, 0.1;  // far outside 10x the box
  CHECK_THROWS_AS(
      closed_loop_propagate(dx0, Costate4::Zero(), nom, w, 0.0, nom.tf, pcr3bp_box()),
      ConvergenceError);
}
