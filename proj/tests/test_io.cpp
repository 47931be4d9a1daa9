#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hjmpc/io.hpp"

using namespace hjmpc;

namespace {
std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}
}  // namespace

TEST_CASE("coefficient timeline round-trips bit-exactly") {
  CoefficientTimeline tl;
  Eigen::VectorXd scale(8);
  scale << 2.6e-4, 2.6e-4, 1.9e-3, 1.9e-3, 0.02, 0.03, 0.005, 0.005;
  tl.dict = build_dictionary(8, 3, scale);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int k = 0; k < 3; ++k) {
    tl.times.push_back(0.1 * k + 1.0 / 3.0);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(tl.dict.size());
    for (int j = 0; j < c.size(); j += 7) c[j] = n01(rng) * std::pow(10.0, -(j % 9));
    tl.coeffs.push_back(c);
  }
  const std::string path = tmp_path("hjmpc_tl.dat");
  write_timeline(tl, path);
  const CoefficientTimeline back = read_timeline(path);
  REQUIRE(back.times.size() == tl.times.size());
  for (std::size_t k = 0; k < tl.times.size(); ++k) {
    CHECK(back.times[k] == tl.times[k]);
    CHECK(back.coeffs[k] == tl.coeffs[k]);  // bit-exact
  }
  CHECK(back.dict.scale == tl.dict.scale);

  // rewriting produces a byte-identical file
  const std::string path2 = tmp_path("hjmpc_tl2.dat");
  write_timeline(back, path2);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("point set round-trips bit-exactly") {
  const PointSet ps = generate_points(8, PointScheme::lhs, 64, 9);
  const std::string path = tmp_path("hjmpc_pts.dat");
  write_points(ps, path);
  const PointSet back = read_points(path);
  CHECK(back.scheme == ps.scheme);
  CHECK(back.points == ps.points);
  CHECK(back.weights == ps.weights);
}

TEST_CASE("config parsing: happy path, defaults, unknown keys, missing fields") {
  nlohmann::json j = {
      {"boundary",
       {{"x0", {0.810796, -0.158270, -0.129473, 0.319169}},
        {"xf", {1.175974, -0.134272, -0.153277, -0.295254}},
        {"tof_days", 5.0}}},
      {"basis", {{"degree", 3}}},
      {"solver", {{"dt", 0.002}, {"mode", "l1"}, {"alpha", 0.5}}},
  };
  const RunConfig c = parse_config(j);
  CHECK(c.basis_degree == 3);
  CHECK(c.solver.dt == 0.002);
  CHECK(c.system.mu == 0.0122);
  CHECK(c.tf() == doctest::Approx(5.0 * 86400.0 / 375190.0));
  CHECK(c.domain_box().upper[0] == doctest::Approx(100.0 / 384400.0));

  nlohmann::json bad = j;
  bad["solvr"] = nlohmann::json::object();
  CHECK_THROWS_WITH_AS(parse_config(bad), doctest::Contains("solvr"), std::invalid_argument);

  nlohmann::json noxf = j;
  noxf["boundary"].erase("xf");
  CHECK_THROWS_AS(parse_config(noxf), std::invalid_argument);

  nlohmann::json missing = j;
  missing.erase("boundary");
  CHECK_THROWS_WITH_AS(parse_config(missing), doctest::Contains("boundary"),
                       std::invalid_argument);

  nlohmann::json degree0 = j;
  degree0["basis"]["degree"] = 0;
  CHECK_THROWS_AS(parse_config(degree0), std::invalid_argument);

  nlohmann::json badmode = j;
  badmode["solver"]["mode"] = "l3";
  CHECK_THROWS_AS(parse_config(badmode), std::invalid_argument);
}

TEST_CASE("case perturbation signs and determinism") {
  nlohmann::json j = {{"boundary",
                       {{"x0", {0.0, 0.0, 0.0, 0.0}},
                        {"xf", {0.1, 0.1, 0.0, 0.0}},
                        {"tof_days", 1.0}}}};
  RunConfig c = parse_config(j);
  const double pn = 100.0 / 384400.0;
  c.track_case.name = "I";
  State4 dI = case_perturbation(c);
  CHECK(dI[0] == doctest::Approx(pn));
  CHECK(dI[1] == doctest::Approx(pn));
  c.track_case.name = "III";
  State4 dIII = case_perturbation(c);
  CHECK(dIII[0] == doctest::Approx(-pn));
  CHECK(dIII[1] == doctest::Approx(-pn));
  CHECK(case_perturbation(c) == dIII);  // same seed, same draw
  CHECK(std::abs(convert_units(dI[2], UnitKind::Velocity, UnitDirection::ToPhysical, c.system)) <=
        2.0);
  c.track_case.name = "V";
  CHECK_THROWS_AS(case_perturbation(c), std::invalid_argument);
}

TEST_CASE("nominal file round trip preserves states bit-exactly") {
  // synthesize a tiny nominal without running the solver
  NominalTrajectory nom;
  nom.params = SystemParams{};
  nom.R = Eigen::Matrix2d::Identity();
  nom.x0 = State4(0.81, -0.15, -0.13, 0.32);
  nom.xf = State4(1.17, -0.13, -0.15, -0.30);
  nom.tf = 0.5;
  for (int k = 0; k <= 4; ++k) {
    nom.times.push_back(0.125 * k);
    const State4 s = nom.x0 + (nom.xf - nom.x0) * (k / 4.0);
    Costate4 lam;
    lam << 0.1 * k, -0.2, 0.3, 1.0 / 3.0;
    nom.states.push_back(s);
    nom.costates.push_back(lam);
    Vec8 z;
    z << s, lam;
    const Vec8 dz = augmented_rhs(z, nom.params, nom.R);
    nom.state_derivs.push_back(dz.head<4>());
    nom.costate_derivs.push_back(dz.tail<4>());
    nom.controls.push_back(-nom.R.inverse() * lam.tail<2>());
  }
  const std::string path = tmp_path("hjmpc_nom.dat");
  write_nominal(nom, path);
  const NominalTrajectory back = read_nominal(path);
  REQUIRE(back.size() == nom.size());
  for (std::size_t k = 0; k < nom.size(); ++k) {
    CHECK(back.states[k] == nom.states[k]);
    CHECK(back.costates[k] == nom.costates[k]);
    CHECK(back.times[k] == nom.times[k]);
  }
  CHECK(back.tf == nom.tf);
  CHECK(back.x0 == nom.x0);
}
