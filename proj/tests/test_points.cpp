#include <doctest.h>

#include "hjmpc/points.hpp"

using namespace hjmpc;

namespace {
bool is_symmetric(const PointSet& ps) {
  // every point's negation must be present with the same weight
  for (int i = 0; i < ps.size(); ++i) {
    bool found = false;
    for (int j = 0; j < ps.size() && !found; ++j)
      if ((ps.points.row(i) + ps.points.row(j)).cwiseAbs().maxCoeff() < 1e-15 &&
          std::abs(ps.weights[i] - ps.weights[j]) < 1e-15)
        found = true;
    if (!found) return false;
  }
  return true;
}
}  // namespace

TEST_CASE("cut4 properties") {
  const PointSet ps = generate_points(8, PointScheme::cut4);
  CHECK(ps.size() == 385);
  CHECK(std::abs(kahan_sum(ps.weights) - 1.0) < 1e-14);
  CHECK(ps.weights.minCoeff() >= 0.0);
  CHECK(ps.points.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  CHECK(is_symmetric(ps));
  CHECK(moment_error(ps, 4) < 1e-10);
}

TEST_CASE("cut6 properties") {
  const PointSet ps = generate_points(8, PointScheme::cut6);
  CHECK(ps.size() == 1745);
  CHECK(std::abs(kahan_sum(ps.weights) - 1.0) < 1e-14);
  CHECK(ps.weights.minCoeff() >= 0.0);
  CHECK(is_symmetric(ps));
  CHECK(moment_error(ps, 6) < 1e-10);
}

TEST_CASE("cut8 properties") {
  const PointSet ps = generate_points(8, PointScheme::cut8);
  CHECK(ps.size() == 27201);
  CHECK(std::abs(kahan_sum(ps.weights) - 1.0) < 1e-14);
  CHECK(ps.weights.minCoeff() >= 0.0);
  CHECK(moment_error(ps, 8) < 1e-10);
}

TEST_CASE("random schemes: symmetry, determinism, odd moments") {
  for (PointScheme s : {PointScheme::lhs, PointScheme::monte_carlo}) {
    const PointSet a = generate_points(8, s, 300, 42);
    const PointSet b = generate_points(8, s, 300, 42);
    CHECK(a.points == b.points);  // bit-identical under the same seed
    CHECK(std::abs(kahan_sum(a.weights) - 1.0) < 1e-14);
    const int n = a.size();
    for (int i = 0; i < n / 2; ++i)
      CHECK((a.points.row(i) + a.points.row(n / 2 + i)).cwiseAbs().maxCoeff() == 0.0);
    // symmetry makes odd moments vanish exactly up to roundoff
    double odd = 0.0;
    for (int dim = 0; dim < 8; ++dim) {
      odd = std::max(odd, std::abs(a.weights.dot(Eigen::VectorXd(a.points.col(dim)))));
      odd = std::max(odd, std::abs(a.weights.dot(
                              Eigen::VectorXd(a.points.col(dim).array().pow(3).matrix()))));
    }
    CHECK(odd < 1e-14);
    const PointSet c = generate_points(8, s, 300, 43);
    CHECK(a.points != c.points);
  }
}

TEST_CASE("monte carlo order-2 moment accuracy at N = 10^4") {
  const PointSet ps = generate_points(8, PointScheme::monte_carlo, 10000, 7);
  CHECK(moment_error(ps, 2) < 0.05);
}

TEST_CASE("domain scaling round trip") {
  DomainBox box;
  box.lower = -Vec8::Ones() * 0.5;
  box.upper = Vec8::Ones() * 0.5;
  box.lower[0] = -1e-4;
  box.upper[0] = 1e-4;
  PointSet ps;
  ps.points = Eigen::MatrixXd(2, 8);
  ps.points.row(0).setOnes();
  ps.points.row(1).setZero();
  ps.weights = Eigen::VectorXd::Constant(2, 0.5);
  const Eigen::MatrixXd phys = scale_to_domain(ps, box);
  CHECK((phys.row(0).transpose() - box.upper).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((phys.row(1).transpose() - box.center()).cwiseAbs().maxCoeff() < 1e-15);
  const Eigen::VectorXd back = unscale_from_domain(phys.row(0).transpose(), box);
  CHECK((back - Eigen::VectorXd::Ones(8)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("invalid domain box rejected") {
  DomainBox box;
  box.lower = Vec8::Ones();
  box.upper = Vec8::Zero();
  CHECK_THROWS_AS(box.validate(), std::invalid_argument);
}
