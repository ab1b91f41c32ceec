#include "dkrc/pipeline.hpp"

#include <cstdio>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "dkrc/csv.hpp"
#include "dkrc/error.hpp"
#include "dkrc/rng.hpp"

namespace dkrc::pipeline {

namespace fs = std::filesystem;

namespace {

void prepare_out_dir(const RunConfig& cfg, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory '" + out_dir + "'");
  csv::write_file((fs::path(out_dir) / "config.effective").string(), cfg.to_text());
}

std::string game_file(const std::string& out_dir, int game) {
  char name[32];
  std::snprintf(name, sizeof(name), "game_%03d.csv", game);
  return (fs::path(out_dir) / name).string();
}

std::string plan_file(const std::string& out_dir, int game) {
  char name[32];
  std::snprintf(name, sizeof(name), "plan_%03d.csv", game);
  return (fs::path(out_dir) / name).string();
}

}  // namespace

std::string resolve(const std::string& out_dir, const std::string& path) {
  const fs::path p(path);
  return p.is_absolute() ? p.string() : (fs::path(out_dir) / p).string();
}

CollectSummary cmd_collect(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  prepare_out_dir(cfg, out_dir);
  const envs::Env env = cfg.make_env();
  const envs::EnvSpec spec = env.spec();
  data::OuNoise noise = data::OuNoise::with_defaults(spec.control_dim, spec.dt);
  noise.theta_rate = cfg.ou_theta;
  noise.sigma = cfg.ou_sigma;
  noise.mu.setConstant(cfg.ou_mu);
  noise.state = noise.mu;

  data::Dataset d = data::collect(env, cfg.collect_episodes, cfg.collect_steps, noise, cfg.seed);
  d = data::split(std::move(d), cfg.split, cfg.seed);

  CollectSummary s;
  s.path = resolve(out_dir, cfg.dataset_path);
  data::save(d, s.path);
  s.triples = d.size();
  s.train = d.count(data::Split::Train);
  s.val = d.count(data::Split::Val);
  s.test = d.count(data::Split::Test);
  log << "collected " << s.triples << " triples (train " << s.train << ", val " << s.val
      << ", test " << s.test << ") -> " << s.path << '\n';
  return s;
}

TrainSummary cmd_train(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  prepare_out_dir(cfg, out_dir);
  const std::string dataset_path = resolve(out_dir, cfg.dataset_path);
  if (!fs::exists(dataset_path)) {
    throw Error(ErrorKind::Io, "dataset '" + dataset_path + "' does not exist");
  }
  const data::Dataset d = data::load(dataset_path);
  const envs::EnvSpec spec = cfg.make_env().spec();
  if (d.obs_dim != spec.state_dim || d.control_dim != spec.control_dim) {
    throw Error(ErrorKind::DimensionMismatch,
                "dataset dimensions do not match environment '" +
                    std::string(envs::env_name(cfg.env)) + "'");
  }
  const koopman::TrainResult res = koopman::train(d, spec.goal_state, cfg.train);

  TrainSummary s;
  s.model_path = resolve(out_dir, cfg.model_path);
  s.report_path = (fs::path(out_dir) / "train_report.csv").string();
  koopman::save_model(res.model, cfg.train, s.model_path);
  koopman::save_report_csv(res.report, s.report_path);
  s.selected_epoch = res.report.selected_epoch;
  if (!res.report.epochs.empty()) {
    const auto& sel = res.report.epochs[static_cast<std::size_t>(
        s.selected_epoch >= 0 ? s.selected_epoch : static_cast<int>(res.report.epochs.size()) - 1)];
    s.final_rank = sel.rank;
    s.final_val_err = sel.val_err;
  } else {
    s.final_rank = linalg::matrix_rank(
        linalg::controllability_matrix(res.model.a, res.model.b), cfg.train.rank_tol);
    const auto val = d.indices(data::Split::Val);
    s.final_val_err = koopman::one_step_error(res.model, d.stack_x(val), d.stack_y(val),
                                              d.stack_u(val));
  }
  log << "trained " << res.report.epochs.size() << " epochs; kept epoch " << s.selected_epoch
      << "; controllability rank " << s.final_rank << "/" << cfg.train.lifted_dim
      << "; validation one-step error " << s.final_val_err << '\n';
  log << "model -> " << s.model_path << "\nreport -> " << s.report_path << '\n';
  return s;
}

envs::Policy build_policy(const RunConfig& cfg, const koopman::LiftedModel& model) {
  const envs::EnvSpec spec = cfg.make_env().spec();
  const linalg::Mat q = cfg.q_matrix();
  const linalg::Mat r = cfg.r_matrix();
  if (cfg.law == LawKind::Lqr) {
    const control::LqrLaw law =
        control::design_lqr(model, q, r, control::DareOptions{cfg.dare_tol, cfg.dare_max_iter});
    return control::make_policy(model, law, spec.control_lo, spec.control_hi);
  }
  const control::MpcProblem prob = control::make_mpc_problem(
      model, cfg.horizon, q, r, spec.control_lo, spec.control_hi);
  return control::make_policy(model, prob, spec.control_lo, spec.control_hi,
                              control::MpcOptions{cfg.mpc_tol, cfg.mpc_max_iter});
}

ControlSummary cmd_control(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  prepare_out_dir(cfg, out_dir);
  const koopman::LiftedModel model = koopman::load_model(resolve(out_dir, cfg.model_path));
  const envs::Env env = cfg.make_env();
  if (model.obs_dim() != env.spec().state_dim) {
    throw Error(ErrorKind::DimensionMismatch, "model does not match environment '" +
                                                  std::string(envs::env_name(cfg.env)) + "'");
  }

  const int games = cfg.games;
  std::vector<envs::Trajectory> trajs(static_cast<std::size_t>(games));
  std::vector<std::string> errors(static_cast<std::size_t>(games));
  // Checks the controller can be built before fanning out.
  if (games > 0) (void)build_policy(cfg, model);

#pragma omp parallel for schedule(dynamic)
  for (int g = 0; g < games; ++g) {
    try {
      const envs::Policy policy = build_policy(cfg, model);
      const std::uint64_t seed = derive_seed(cfg.seed, SeedStream::Games, static_cast<std::uint64_t>(g));
      linalg::Vec start = env.reset(seed);
      if (cfg.start_at_goal) {
        start = cfg.env == envs::EnvKind::Pendulum
                    ? linalg::Vec::Zero(2)
                    : linalg::Vec{{cfg.lander.goal_x, cfg.lander.ground + 1e-9, 0, 0, 0, 0}};
      }
      trajs[static_cast<std::size_t>(g)] = envs::rollout_from(env, policy, cfg.game_steps, start);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(g)] = e.what();
    }
  }
  for (int g = 0; g < games; ++g) {
    if (!errors[static_cast<std::size_t>(g)].empty()) {
      throw Error(ErrorKind::PolicyFailure,
                  "game " + std::to_string(g) + ": " + errors[static_cast<std::size_t>(g)]);
    }
  }

  ControlSummary s;
  s.games = games;
  nlohmann::json rows = nlohmann::json::array();
  double steps_sum = 0.0;
  for (int g = 0; g < games; ++g) {
    const envs::Trajectory& traj = trajs[static_cast<std::size_t>(g)];
    envs::save_trajectory_csv(traj, game_file(out_dir, g));
    if (cfg.law == LawKind::Mpc) {
      const control::MpcProblem prob = control::make_mpc_problem(
          model, cfg.horizon, cfg.q_matrix(), cfg.r_matrix(), env.spec().control_lo,
          env.spec().control_hi);
      const linalg::Vec z0 = koopman::lift(model, traj.observations.front());
      const control::MpcPlan plan =
          control::mpc_plan(model, z0, prob, control::MpcOptions{cfg.mpc_tol, cfg.mpc_max_iter});
      control::save_plan_csv(plan, model, prob, plan_file(out_dir, g));
    }
    const analysis::SuccessReport rep = analysis::success_metrics(traj, env, cfg.thresholds);
    s.reports.push_back(rep);
    if (rep.success) {
      ++s.successes;
      steps_sum += rep.steps_to_success;
    }
    s.mean_effort += rep.effort;
    nlohmann::json row{{"game", g},
                       {"success", rep.success},
                       {"steps_to_success", rep.steps_to_success},
                       {"effort", rep.effort},
                       {"steps", traj.steps()}};
    if (cfg.env == envs::EnvKind::Pendulum) {
      std::vector<double> energy;
      for (const linalg::Vec& st : traj.states)
        energy.push_back(analysis::hamiltonian(envs::PendulumState{st(0), st(1)}, cfg.pendulum));
      row["final_energy"] = rep.final_energy;
      row["energy_trace"] = energy;
    }
    rows.push_back(std::move(row));
  }
  if (games > 0) {
    s.success_rate = static_cast<double>(s.successes) / games;
    s.mean_effort /= games;
  }
  if (s.successes > 0) s.mean_steps = steps_sum / s.successes;

  const nlohmann::json metrics{{"env", std::string(envs::env_name(cfg.env))},
                               {"law", cfg.law == LawKind::Lqr ? "lqr" : "mpc"},
                               {"games", games},
                               {"successes", s.successes},
                               {"success_rate", s.success_rate},
                               {"mean_steps_to_success", s.mean_steps},
                               {"mean_effort", s.mean_effort},
                               {"rows", rows}};
  s.metrics_path = (fs::path(out_dir) / "metrics.json").string();
  csv::write_file(s.metrics_path, metrics.dump(1) + "\n");
  log << "played " << games << " games: " << s.successes << " successes (rate "
      << s.success_rate << "), mean effort " << s.mean_effort << "\nmetrics -> "
      << s.metrics_path << '\n';
  return s;
}

EigenSummary cmd_eigen(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  if (cfg.env != envs::EnvKind::Pendulum) {
    throw Error(ErrorKind::Config, "eigen grid is pendulum-only");
  }
  prepare_out_dir(cfg, out_dir);
  const koopman::LiftedModel model = koopman::load_model(resolve(out_dir, cfg.model_path));
  int top_k = cfg.eigen_top_k;
  if (top_k > model.lifted_dim()) {
    log << "warning: eigen.top_k = " << top_k << " exceeds the lifted dimension; using "
        << model.lifted_dim() << '\n';
    top_k = model.lifted_dim();
  }
  const analysis::EigGrid grid = analysis::eigenfunction_grid(model, cfg.grid, top_k);
  EigenSummary s;
  for (std::size_t i = 0; i < grid.surfaces.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "eigen_%02zu.csv", i);
    const std::string path = (fs::path(out_dir) / name).string();
    analysis::save_surface_csv(grid, i, path);
    s.paths.push_back(path);
    s.eigenvalues.push_back(grid.surfaces[i].value);
    log << "eigenfunction " << i << ": lambda = " << grid.surfaces[i].value.real()
        << (grid.surfaces[i].value.imag() < 0 ? " - " : " + ")
        << std::abs(grid.surfaces[i].value.imag()) << "i -> " << path << '\n';
  }
  s.written = static_cast<int>(s.paths.size());
  return s;
}

}  // namespace dkrc::pipeline
