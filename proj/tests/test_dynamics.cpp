#include <doctest.h>

#include "hjmpc/integrator.hpp"
#include "hjmpc/units.hpp"

using namespace hjmpc;

namespace {
constexpr double kMu = 0.0122;

State4 table2_x0() { return State4(0.810796, -0.158270, -0.129473, 0.319169); }

Eigen::Vector2d l4() { return {0.5 - kMu, std::sqrt(3.0) / 2.0}; }
}  // namespace

TEST_CASE("pseudo_potential at the equilateral point") {
  // r1 = r2 = 1 there, so Omega = 0.5*((0.5-mu)^2 + 3/4) + 1.
  const double expected = 0.5 * ((0.5 - kMu) * (0.5 - kMu) + 0.75) + 1.0;
  CHECK(pseudo_potential(l4(), kMu) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("pseudo_potential singularity at the first primary") {
  CHECK_THROWS_AS(pseudo_potential({-kMu, 0.0}, kMu), SingularityError);
}

TEST_CASE("pseudo_potential gradient matches central differences") {
  const Eigen::Vector2d q(0.5, 0.5);
  const Eigen::Vector2d g = pseudo_potential_grad(q, kMu);
  const double h = 1e-6;
  for (int i = 0; i < 2; ++i) {
    Eigen::Vector2d qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    const double fd = (pseudo_potential(qp, kMu) - pseudo_potential(qm, kMu)) / (2 * h);
    CHECK(std::abs(g[i] - fd) < 1e-6 * std::max(1.0, std::abs(g[i])));
  }
}

TEST_CASE("pseudo_potential hessian matches central differences") {
  const Eigen::Vector2d q(0.3, -0.4);
  const Eigen::Matrix2d h = pseudo_potential_hess(q, kMu);
  const double step = 1e-6;
  for (int i = 0; i < 2; ++i) {
    Eigen::Vector2d qp = q, qm = q;
    qp[i] += step;
    qm[i] -= step;
    const Eigen::Vector2d fd =
        (pseudo_potential_grad(qp, kMu) - pseudo_potential_grad(qm, kMu)) / (2 * step);
    for (int j = 0; j < 2; ++j) CHECK(std::abs(h(j, i) - fd[j]) < 1e-5 * std::max(1.0, std::abs(h(j, i))));
  }
}

TEST_CASE("L4 is an equilibrium of the uncontrolled field") {
  State4 s;
  s << l4(), 0.0, 0.0;
  CHECK(pcr3bp_rhs(s, Control2::Zero(), kMu).norm() < 1e-10);
}

TEST_CASE("all five Lagrange points are fixed points") {
  // Collinear points: roots of dOmega/dx on the x-axis, by bisection on the
  // three intervals separated by the primaries.
  auto gx = [&](double x) { return pseudo_potential_grad({x, 0.0}, kMu)[0]; };
  auto bisect = [&](double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (gx(lo) * gx(mid) <= 0.0)
        hi = mid;
      else
        lo = mid;
    }
    return 0.5 * (lo + hi);
  };
  const double x_l1 = bisect(-kMu + 1e-6, 1.0 - kMu - 1e-6);
  const double x_l2 = bisect(1.0 - kMu + 1e-6, 2.0);
  const double x_l3 = bisect(-2.0, -kMu - 1e-6);
  for (double x : {x_l1, x_l2, x_l3}) {
    State4 s;
    s << x, 0.0, 0.0, 0.0;
    CHECK(pcr3bp_rhs(s, Control2::Zero(), kMu).norm() < 1e-10);
  }
  for (double sy : {1.0, -1.0}) {
    State4 s;
    s << 0.5 - kMu, sy * std::sqrt(3.0) / 2.0, 0.0, 0.0;
    CHECK(pcr3bp_rhs(s, Control2::Zero(), kMu).norm() < 1e-10);
  }
}

TEST_CASE("control enters additively") {
  const State4 s = table2_x0();
  const Control2 u(0.37, -1.2);
  const State4 d = pcr3bp_rhs(s, u, kMu) - pcr3bp_rhs(s, Control2::Zero(), kMu);
  CHECK(d[0] == 0.0);
  CHECK(d[1] == 0.0);
  CHECK(d[2] == u[0]);
  CHECK(d[3] == u[1]);
}

TEST_CASE("drift jacobian matches central differences of the rhs") {
  const State4 s = table2_x0();
  const Mat4 j = pcr3bp_drift_jacobian(s, kMu);
  const double h = 1e-6;
  for (int i = 0; i < 4; ++i) {
    State4 sp = s, sm = s;
    sp[i] += h;
    sm[i] -= h;
    const State4 fd = (pcr3bp_drift(sp, kMu) - pcr3bp_drift(sm, kMu)) / (2 * h);
    for (int r = 0; r < 4; ++r) CHECK(std::abs(j(r, i) - fd[r]) < 1e-6 * std::max(1.0, std::abs(j(r, i))));
  }
}

TEST_CASE("jacobi constant basics") {
  State4 s;
  s << l4(), 0.0, 0.0;
  CHECK(jacobi_constant(s, kMu) == doctest::Approx(2.0 * pseudo_potential(l4(), kMu)).epsilon(1e-14));
  State4 sv = s;
  sv[2] = 0.4;
  CHECK(jacobi_constant(sv, kMu) < jacobi_constant(s, kMu));
}

TEST_CASE("jacobi conservation over the 5-day horizon") {
  SystemParams p;
  const double tf = convert_units(5.0, UnitKind::Time, UnitDirection::ToNormalized, p);
  const Trajectory traj = propagate(table2_x0(), {}, 0.0, tf, p, 1e-12, 101);
  const double c0 = jacobi_constant(traj.states.front(), p.mu);
  for (const State4& s : traj.states) CHECK(std::abs(jacobi_constant(s, p.mu) - c0) < 1e-10);
}

TEST_CASE("propagate: equilibrium stays fixed and reverses") {
  SystemParams p;
  State4 s;
  s << l4(), 0.0, 0.0;
  const Trajectory fwd = propagate(s, {}, 0.0, 1.0, p, 1e-12, 11);
  CHECK((fwd.states.back() - s).norm() < 1e-11);

  const State4 s0 = table2_x0();
  const Trajectory out = propagate(s0, {}, 0.0, 1.0, p, 1e-12, 3);
  auto rhs = [&](double, const State4& y) { return pcr3bp_drift(y, p.mu); };
  AdaptiveRk<4, decltype(rhs)> rk(rhs, 1e-12);
  const State4 back = rk.integrate(1.0, 0.0, out.states.back());
  CHECK((back - s0).norm() < 1e-10);
}

TEST_CASE("tracking hamiltonian values and canonical consistency") {
  CostWeights w;
  SystemParams p;
  const State4 xN = table2_x0();
  CHECK(tracking_hamiltonian_at(State4::Zero(), Costate4::Zero(), xN, w, p) == 0.0);

  State4 dx;
  dx << 1e-4, -2e-4, 3e-5, -1e-5;
  CHECK(tracking_hamiltonian_at(dx, Costate4::Zero(), xN, w, p) ==
        doctest::Approx(0.5 * dx.dot(w.Q * dx)).epsilon(1e-14));

  Costate4 dlam;
  dlam << 0.01, -0.02, 0.004, 0.003;
  const double h = 1e-6;
  const State4 dH_dlam = tracking_ham_dlam(dx, dlam, xN, w, p);
  const Costate4 dH_dx = tracking_ham_dx(dx, dlam, xN, w, p);
  for (int i = 0; i < 4; ++i) {
    Costate4 lp = dlam, lm = dlam;
    lp[i] += h;
    lm[i] -= h;
    const double fd =
        (tracking_hamiltonian_at(dx, lp, xN, w, p) - tracking_hamiltonian_at(dx, lm, xN, w, p)) / (2 * h);
    CHECK(std::abs(dH_dlam[i] - fd) < 1e-6 * std::max(1.0, std::abs(dH_dlam[i])));
    State4 xp = dx, xm = dx;
    xp[i] += h;
    xm[i] -= h;
    const double fdx =
        (tracking_hamiltonian_at(xp, dlam, xN, w, p) - tracking_hamiltonian_at(xm, dlam, xN, w, p)) / (2 * h);
    CHECK(std::abs(dH_dx[i] - fdx) < 1e-6 * std::max(1.0, std::abs(dH_dx[i])));
  }
}

TEST_CASE("unit conversions") {
  SystemParams p;
  for (auto kind : {UnitKind::Length, UnitKind::Velocity, UnitKind::Time})
    CHECK(convert_units(0.0, kind, UnitDirection::ToNormalized, p) == 0.0);
  CHECK(convert_units(p.lu_km, UnitKind::Length, UnitDirection::ToNormalized, p) == doctest::Approx(1.0));
  CHECK(convert_units(100.0, UnitKind::Length, UnitDirection::ToNormalized, p) ==
        doctest::Approx(100.0 / 384400.0).epsilon(1e-14));
  const double v = convert_units(2.0, UnitKind::Velocity, UnitDirection::ToNormalized, p);
  CHECK(convert_units(v, UnitKind::Velocity, UnitDirection::ToPhysical, p) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(convert_units(5.0, UnitKind::Time, UnitDirection::ToNormalized, p) ==
        doctest::Approx(5.0 * 86400.0 / 375190.0).epsilon(1e-14));
}
