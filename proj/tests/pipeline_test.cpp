#include "dkrc/pipeline.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dkrc/error.hpp"

namespace dkrc::pipeline {
namespace {

namespace fs = std::filesystem;

std::string fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dkrc_pipeline_" + name);
  fs::remove_all(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig quick(envs::EnvKind kind = envs::EnvKind::Pendulum) {
  RunConfig c = RunConfig::defaults(kind);
  c.seed = 5;
  c.collect_episodes = 2;
  c.collect_steps = 60;
  c.train.lifted_dim = kind == envs::EnvKind::Lander ? 10 : 6;
  c.train.hidden = 8;
  c.train.epochs = 2;
  c.train.batch = 16;
  c.horizon = 5;
  c.games = 3;
  c.game_steps = 25;
  return c;
}

TEST(Pipeline, CollectDefaultsGiveExpectedCounts) {
  const std::string dir = fresh_dir("collect_counts");
  std::ostringstream log;
  const CollectSummary s = cmd_collect(RunConfig::defaults(envs::EnvKind::Pendulum), dir, log);
  EXPECT_EQ(s.triples, 1900u);
  EXPECT_EQ(s.val, 285u);
  EXPECT_EQ(s.test, 285u);
  EXPECT_EQ(s.train, 1330u);
  EXPECT_TRUE(fs::exists(fs::path(dir) / "dataset.csv"));
  EXPECT_TRUE(fs::exists(fs::path(dir) / "config.effective"));
}

TEST(Pipeline, SameSeedGivesIdenticalFiles) {
  const std::string a = fresh_dir("det_a"), b = fresh_dir("det_b");
  std::ostringstream log;
  for (const std::string& dir : {a, b}) {
    cmd_collect(quick(), dir, log);
    cmd_train(quick(), dir, log);
  }
  EXPECT_EQ(slurp(a + "/dataset.csv"), slurp(b + "/dataset.csv"));
  EXPECT_EQ(slurp(a + "/model.json"), slurp(b + "/model.json"));
  EXPECT_EQ(slurp(a + "/train_report.csv"), slurp(b + "/train_report.csv"));
}

TEST(Pipeline, TrainWithoutDatasetIsIoError) {
  std::ostringstream log;
  try {
    cmd_train(quick(), fresh_dir("no_data"), log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}

TEST(Pipeline, CorruptDatasetNamesLine) {
  const std::string dir = fresh_dir("corrupt");
  std::ostringstream log;
  cmd_collect(quick(), dir, log);
  std::string text = slurp(dir + "/dataset.csv");
  std::size_t pos = 0;
  for (int i = 0; i < 5; ++i) pos = text.find('\n', pos) + 1;  // start of line 6
  text.insert(pos, "garbage,");
  std::ofstream(dir + "/dataset.csv") << text;
  try {
    cmd_train(quick(), dir, log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 6"), std::string::npos) << e.what();
  }
}

TEST(Pipeline, ZeroEpochsWritesUsableModel) {
  const std::string dir = fresh_dir("zero_epochs");
  RunConfig c = quick();
  c.train.epochs = 0;
  std::ostringstream log;
  cmd_collect(c, dir, log);
  const TrainSummary t = cmd_train(c, dir, log);
  EXPECT_EQ(t.selected_epoch, -1);
  const koopman::LiftedModel m = koopman::load_model(t.model_path);
  EXPECT_EQ(m.lifted_dim(), 6);
}

TEST(Pipeline, ControlWritesOneFilePerGame) {
  const std::string dir = fresh_dir("games");
  RunConfig c = quick();
  c.games = 10;
  std::ostringstream log;
  cmd_collect(c, dir, log);
  cmd_train(c, dir, log);
  const ControlSummary s = cmd_control(c, dir, log);
  EXPECT_EQ(s.games, 10);
  for (int g = 0; g < 10; ++g) {
    char name[32];
    std::snprintf(name, sizeof(name), "game_%03d.csv", g);
    EXPECT_TRUE(fs::exists(fs::path(dir) / name)) << name;
  }
  const auto metrics = nlohmann::json::parse(slurp(s.metrics_path));
  EXPECT_EQ(metrics["games"], 10);
  EXPECT_EQ(metrics["rows"].size(), 10u);
  EXPECT_EQ(metrics["rows"][0]["energy_trace"].size(),
            static_cast<std::size_t>(metrics["rows"][0]["steps"]) + 1);
}

TEST(Pipeline, ZeroGamesIsEmptyButValid) {
  const std::string dir = fresh_dir("no_games");
  RunConfig c = quick();
  std::ostringstream log;
  cmd_collect(c, dir, log);
  cmd_train(c, dir, log);
  c.games = 0;
  const ControlSummary s = cmd_control(c, dir, log);
  EXPECT_EQ(s.games, 0);
  EXPECT_EQ(s.success_rate, 0.0);
  EXPECT_TRUE(fs::exists(s.metrics_path));
}

TEST(Pipeline, StartingAtGoalAlwaysSucceeds) {
  for (envs::EnvKind kind : {envs::EnvKind::Pendulum, envs::EnvKind::Lander}) {
    const std::string dir = fresh_dir("goal_" + std::string(envs::env_name(kind)));
    RunConfig c = quick(kind);
    c.train.epochs = 0;
    c.start_at_goal = true;
    std::ostringstream log;
    cmd_collect(c, dir, log);
    cmd_train(c, dir, log);
    const ControlSummary s = cmd_control(c, dir, log);
    EXPECT_EQ(s.success_rate, 1.0) << envs::env_name(kind);
  }
}

TEST(Pipeline, EigenClampsTopK) {
  const std::string dir = fresh_dir("eigen");
  RunConfig c = quick();
  c.eigen_top_k = 50;
  c.grid.theta_points = 5;
  c.grid.theta_dot_points = 4;
  std::ostringstream log;
  cmd_collect(c, dir, log);
  cmd_train(c, dir, log);
  const EigenSummary s = cmd_eigen(c, dir, log);
  EXPECT_EQ(s.written, 6);
  EXPECT_NE(log.str().find("warning"), std::string::npos);
  for (const std::string& p : s.paths) EXPECT_TRUE(fs::exists(p));
}

TEST(Pipeline, EigenRejectsLander) {
  const std::string dir = fresh_dir("eigen_lander");
  std::ostringstream log;
  try {
    cmd_eigen(quick(envs::EnvKind::Lander), dir, log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
}

}  // namespace
}  // namespace dkrc::pipeline
