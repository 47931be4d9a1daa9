// Command-line driver: nominal transfer solve, generating-function training,
// closed-loop tracking, and navigation-error sweeps, all configured from a
// JSON file.
#include <cstdio>
#include <filesystem>

#include <CLI11.hpp>

#include "hjmpc/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;

struct CliArgs {
  std::string config;
  std::string out_dir = ".";
  std::string case_name;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

std::string joined(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

hjmpc::RunConfig load(const CliArgs& a) {
  hjmpc::RunConfig cfg = hjmpc::load_config(a.config);
  if (!a.case_name.empty()) cfg.track_case.name = a.case_name;
  if (a.seed_set) {
    cfg.track_case.seed = a.seed;
    cfg.nav.seed = a.seed;
    cfg.sweep.seed_base = a.seed;
  }
  return cfg;
}

hjmpc::NominalTrajectory nominal_for(const hjmpc::RunConfig& cfg, const CliArgs& a) {
  const std::string path = joined(a.out_dir, cfg.nominal_path);
  if (std::filesystem::exists(path)) return hjmpc::read_nominal(path);
  hjmpc::NominalTrajectory nom =
      hjmpc::solve_nominal(cfg.x0, cfg.xf, cfg.tf(), cfg.system, cfg.weights.R, cfg.bvp);
  hjmpc::write_nominal(nom, path);
  return nom;
}

int run_nominal(const CliArgs& a) {
  const hjmpc::RunConfig cfg = load(a);
  hjmpc::NominalTrajectory nom =
      hjmpc::solve_nominal(cfg.x0, cfg.xf, cfg.tf(), cfg.system, cfg.weights.R, cfg.bvp);
  hjmpc::write_nominal(nom, joined(a.out_dir, cfg.nominal_path));
  const hjmpc::State4 miss = nom.states.back() - cfg.xf;
  std::printf("nominal: tf=%.6f lam0=[%.9g %.9g %.9g %.9g] terminal_miss=%.3e\n", nom.tf,
              nom.costates.front()[0], nom.costates.front()[1], nom.costates.front()[2],
              nom.costates.front()[3], miss.norm());
  std::printf("wrote %s\n", joined(a.out_dir, cfg.nominal_path).c_str());
  return kExitOk;
}

int run_train(const CliArgs& a) {
  const hjmpc::RunConfig cfg = load(a);
  const hjmpc::NominalTrajectory nom = nominal_for(cfg, a);
  const hjmpc::DomainBox box = cfg.domain_box();

  const hjmpc::PointScheme scheme = hjmpc::parse_point_scheme(cfg.points.train_scheme);
  const hjmpc::PointSet train =
      hjmpc::generate_points(8, scheme, cfg.points.train_count, cfg.points.seed);
  const hjmpc::PointSet test = hjmpc::generate_points(8, hjmpc::PointScheme::monte_carlo,
                                                      cfg.points.test_count, cfg.points.seed + 1);
  const Eigen::MatrixXd train_phys = hjmpc::scale_to_domain(train, box);
  const Eigen::MatrixXd test_phys = hjmpc::scale_to_domain(test, box);

  Eigen::VectorXd scale(8);
  scale << box.half_width();
  const hjmpc::BasisDictionary dict = hjmpc::build_dictionary(8, cfg.basis_degree, scale);
  std::printf("train: scheme=%s N_train=%d N_test=%d m=%d steps=%d\n",
              cfg.points.train_scheme.c_str(), train.size(), test.size(), dict.size(),
              static_cast<int>(std::llround(nom.tf / cfg.solver.dt)));

  const hjmpc::HamiltonianFn H = hjmpc::make_pcr3bp_hamiltonian(nom, cfg.weights);
  const hjmpc::GfSolution gf =
      hjmpc::time_march(H, dict, train_phys, train.weights, test_phys, 0.0, nom.tf, cfg.solver);

  hjmpc::write_timeline(gf.timeline, joined(a.out_dir, cfg.coeffs_path));
  hjmpc::write_residual_csv(gf, joined(a.out_dir, cfg.residuals_path));
  double worst = 0.0;
  for (const auto& s : gf.steps) worst = std::max(worst, s.weighted_norm);
  std::printf("train: done, worst weighted step residual %.3e\n", worst);
  std::printf("wrote %s and %s\n", joined(a.out_dir, cfg.coeffs_path).c_str(),
              joined(a.out_dir, cfg.residuals_path).c_str());
  return kExitOk;
}

int run_track(const CliArgs& a) {
  const hjmpc::RunConfig cfg = load(a);
  const hjmpc::NominalTrajectory nom = hjmpc::read_nominal(joined(a.out_dir, cfg.nominal_path));
  hjmpc::GfSolution gf;
  gf.timeline = hjmpc::read_timeline(joined(a.out_dir, cfg.coeffs_path));
  const hjmpc::DomainBox box = cfg.domain_box();

  const hjmpc::State4 dx0 = hjmpc::case_perturbation(cfg);
  const hjmpc::MpcRun run = hjmpc::mpc_simulate(dx0, hjmpc::State4::Zero(), gf, nom, cfg.weights,
                                                cfg.nav, box);
  const std::string out = joined(a.out_dir, "track_case_" + cfg.track_case.name + ".csv");
  hjmpc::write_mpc_csv(run, out);
  hjmpc::write_mpc_epochs_csv(run, joined(a.out_dir, "track_case_" + cfg.track_case.name +
                                                         "_epochs.csv"));
  std::printf("track case %s: terminal position error %.4f km, state norm %.3e, %d updates\n",
              cfg.track_case.name.c_str(), run.terminal_pos_err_km, run.terminal_state_err,
              static_cast<int>(run.epochs.size()));
  std::printf("wrote %s\n", out.c_str());
  return kExitOk;
}

int run_sweep(const CliArgs& a) {
  const hjmpc::RunConfig cfg = load(a);
  const hjmpc::NominalTrajectory nom = hjmpc::read_nominal(joined(a.out_dir, cfg.nominal_path));
  hjmpc::GfSolution gf;
  gf.timeline = hjmpc::read_timeline(joined(a.out_dir, cfg.coeffs_path));
  const hjmpc::DomainBox box = cfg.domain_box();

  const hjmpc::State4 dx0 = hjmpc::case_perturbation(cfg);
  const std::vector<hjmpc::SweepCell> cells = hjmpc::nav_error_sweep(
      dx0, hjmpc::State4::Zero(), gf, nom, cfg.weights, box, cfg.sweep.pos_errs_km,
      cfg.sweep.intervals_days, cfg.sweep.vel_err_mps, cfg.sweep.seed_base,
      cfg.sweep.seeds_per_cell);
  const std::string out = joined(a.out_dir, "sweep.csv");
  hjmpc::write_sweep_csv(cells, out);
  std::printf("sweep: %zu cells, wrote %s\n", cells.size(), out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generating-function tracking for low-thrust cislunar transfers"};
  app.require_subcommand(1);

  CliArgs a;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", a.config, "JSON configuration file")->required();
    sub->add_option("--out", a.out_dir, "output directory");
  };
  CLI::App* c_nominal = app.add_subcommand("nominal", "solve the reference transfer");
  CLI::App* c_train = app.add_subcommand("train", "march the generating function");
  CLI::App* c_track = app.add_subcommand("track", "closed-loop tracking of one case");
  CLI::App* c_sweep = app.add_subcommand("sweep", "navigation-error sweep");
  for (CLI::App* sub : {c_nominal, c_train, c_track, c_sweep}) add_common(sub);
  for (CLI::App* sub : {c_track, c_sweep}) {
    sub->add_option("--case", a.case_name, "perturbation case (I..IV)");
    sub->add_option("--seed", a.seed, "random seed override")->each([&](const std::string&) {
      a.seed_set = true;
    });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(a.out_dir);
    if (c_nominal->parsed()) return run_nominal(a);
    if (c_train->parsed()) return run_train(a);
    if (c_track->parsed()) return run_track(a);
    if (c_sweep->parsed()) return run_sweep(a);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const hjmpc::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return kExitSolver;
  }
  return kExitConfig;
}
