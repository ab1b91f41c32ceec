#include "dkrc/config.hpp"

#include <gtest/gtest.h>

#include "dkrc/error.hpp"

namespace dkrc {
namespace {

TEST(Config, PendulumDefaults) {
  const RunConfig c = RunConfig::defaults(envs::EnvKind::Pendulum);
  EXPECT_EQ(c.q_matrix(), linalg::Mat::Identity(3, 3));
  EXPECT_EQ(c.r_matrix(), linalg::Mat::Constant(1, 1, 0.1));
  EXPECT_EQ(c.train.lifted_dim, 20);
  EXPECT_EQ(c.train.blend, 0.5);
  EXPECT_EQ(c.collect_episodes * c.collect_steps, 1900);
}

TEST(Config, LanderDefaults) {
  const RunConfig c = RunConfig::defaults(envs::EnvKind::Lander);
  EXPECT_EQ(c.q_matrix(), linalg::Mat::Identity(6, 6));
  EXPECT_EQ(c.r_matrix().rows(), 2);
  EXPECT_EQ(c.make_env().spec().state_dim, 6);
}

TEST(Config, ScalarWeightBroadcasts) {
  RunConfig c = RunConfig::defaults(envs::EnvKind::Lander);
  c.set("control.r", "0.5");
  EXPECT_EQ(c.r_matrix(), linalg::Mat::Identity(2, 2) * 0.5);
  c.set("control.q", "1,2,3");
  EXPECT_THROW(c.q_matrix(), Error);
}

TEST(Config, UnknownKeyIsNamed) {
  RunConfig c;
  try {
    c.set("train.epoch", "3");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_NE(std::string(e.what()).find("train.epoch"), std::string::npos);
  }
}

TEST(Config, BadValuesAreRejected) {
  RunConfig c;
  EXPECT_THROW(c.set("train.epochs", "three"), Error);
  EXPECT_THROW(c.set("train.epochs", "-1"), Error);
  EXPECT_THROW(c.set("train.lr", "1e-3x"), Error);
  EXPECT_THROW(c.set("control.law", "pid"), Error);
  EXPECT_THROW(c.set("train.constrained_c", "maybe"), Error);
  EXPECT_THROW(c.set("train.l1_form", "k"), Error);
}

TEST(Config, LiftOptionsParse) {
  RunConfig c;
  c.set("train.l1_form", "batch");
  c.set("train.state_in_lift", "true");
  c.set("train.normalize_input", "true");
  EXPECT_EQ(c.train.l1_form, koopman::L1Form::Batch);
  EXPECT_TRUE(c.train.state_in_lift);
  EXPECT_TRUE(c.train.normalize_input);
}

TEST(Config, TextRoundTrip) {
  RunConfig c = RunConfig::defaults(envs::EnvKind::Lander);
  c.set("train.lr", "0.003");
  c.set("seed", "77");
  c.set("control.q", "1,2,3,4,5,6");
  const RunConfig back = build_config(parse_config_text(c.to_text(), "<text>"), {});
  EXPECT_EQ(back.entries(), c.entries());
}

TEST(Config, OverridesWinOverFile) {
  const auto file = parse_config_text("env.name = lander\n# comment\n\ntrain.epochs = 5\n", "f");
  const RunConfig c = build_config(file, {{"train.epochs", "9"}});
  EXPECT_EQ(c.env, envs::EnvKind::Lander);
  EXPECT_EQ(c.train.epochs, 9);
  const RunConfig p = build_config(file, {{"env.name", "pendulum"}});
  EXPECT_EQ(p.env, envs::EnvKind::Pendulum);
  EXPECT_EQ(p.q_matrix().rows(), 3);
}

TEST(Config, MalformedLineReportsOrigin) {
  try {
    parse_config_text("seed = 1\njust words\n", "run.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg"), std::string::npos);
  }
}

TEST(Config, UnknownEnvironmentListsChoices) {
  try {
    build_config({{"env.name", "acrobot"}}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("pendulum, lander"), std::string::npos);
  }
}

}  // namespace
}  // namespace dkrc
