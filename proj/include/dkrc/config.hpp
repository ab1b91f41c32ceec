#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dkrc/analysis.hpp"
#include "dkrc/envs.hpp"
#include "dkrc/koopman.hpp"

namespace dkrc {

enum class LawKind { Lqr, Mpc };

/// Every knob of the pipeline. Defaults depend on the environment, so build
/// one with RunConfig::defaults(kind) and then apply key/value overrides.
struct RunConfig {
  envs::EnvKind env = envs::EnvKind::Pendulum;
  std::uint64_t seed = 0;
  std::string dataset_path = "dataset.csv";
  std::string model_path = "model.json";

  envs::PendulumParams pendulum;
  envs::LanderParams lander;

  int collect_episodes = 5;
  int collect_steps = 380;
  double ou_theta = 0.15;
  double ou_sigma = 0.2;
  double ou_mu = 0.0;
  std::array<double, 3> split{0.7, 0.15, 0.15};

  koopman::TrainConfig train;

  LawKind law = LawKind::Mpc;
  linalg::Vec q_diag;
  linalg::Vec r_diag;
  int horizon = 20;
  int games = 10;
  int game_steps = 400;
  bool start_at_goal = false;
  double dare_tol = 1e-10;
  int dare_max_iter = 10000;
  double mpc_tol = 1e-8;
  int mpc_max_iter = 10000;

  int eigen_top_k = 4;
  analysis::GridSpec grid;

  analysis::SuccessThresholds thresholds;

  static RunConfig defaults(envs::EnvKind kind);

  envs::Env make_env() const;
  linalg::Mat q_matrix() const;
  linalg::Mat r_matrix() const;

  /// Sets one `section.key` entry; throws Config naming the key when it is
  /// unknown or the value does not parse.
  void set(const std::string& key, const std::string& value);
  /// All keys with their current values, in a stable order.
  std::vector<std::pair<std::string, std::string>> entries() const;
  /// `key = value` lines, re-loadable with parse_config_text.
  std::string to_text() const;
};

/// Parses `key = value` lines (`#` comments, blank lines allowed).
std::vector<std::pair<std::string, std::string>> parse_config_text(
    const std::string& text, const std::string& origin);
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

/// Resolves env.name first (overrides win over the file), builds defaults for
/// that environment, then applies file entries followed by overrides.
RunConfig build_config(const std::vector<std::pair<std::string, std::string>>& file_entries,
                       const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace dkrc
