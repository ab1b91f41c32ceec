#pragma once

#include <ostream>
#include <string>

#include "dkrc/analysis.hpp"
#include "dkrc/config.hpp"
#include "dkrc/control.hpp"
#include "dkrc/data.hpp"
#include "dkrc/koopman.hpp"

// The four CLI subcommands as library calls. Each writes its artifacts under
// `out_dir` (created if missing), echoes the effective config there as
// `config.effective`, and reports progress on `log`.
namespace dkrc::pipeline {

struct CollectSummary {
  std::size_t triples = 0;
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
  std::string path;
};

struct TrainSummary {
  int final_rank = 0;
  double final_val_err = 0.0;
  int selected_epoch = -1;
  std::string model_path;
  std::string report_path;
};

struct ControlSummary {
  int games = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_steps = 0.0;  // over successful games
  double mean_effort = 0.0;
  std::vector<analysis::SuccessReport> reports;
  std::string metrics_path;
};

struct EigenSummary {
  int written = 0;
  std::vector<std::complex<double>> eigenvalues;
  std::vector<std::string> paths;
};

/// Resolves a relative artifact path against the output directory.
std::string resolve(const std::string& out_dir, const std::string& path);

CollectSummary cmd_collect(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);
TrainSummary cmd_train(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);
ControlSummary cmd_control(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);
EigenSummary cmd_eigen(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

/// Builds the configured controller for a trained model.
envs::Policy build_policy(const RunConfig& cfg, const koopman::LiftedModel& model);

}  // namespace dkrc::pipeline
