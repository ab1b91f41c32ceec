#include "dkrc/data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "dkrc/error.hpp"

namespace dkrc::data {
namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

Dataset small_pendulum(int episodes = 3, int steps = 40, std::uint64_t seed = 7) {
  const envs::Env env(envs::PendulumParams{});
  return collect(env, episodes, steps, OuNoise::with_defaults(1, 0.05), seed);
}

TEST(Ou, StationaryMoments) {
  OuNoise n = OuNoise::with_defaults(1, 0.05);
  n.theta_rate = 1.0;
  n.sigma = 0.5;
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) ou_step(n, rng);
  double s1 = 0.0, s2 = 0.0;
  constexpr int kSteps = 400000;
  for (int i = 0; i < kSteps; ++i) {
    const double s = ou_step(n, rng)(0);
    s1 += s;
    s2 += s * s;
  }
  const double mean = s1 / kSteps;
  const double var = s2 / kSteps - mean * mean;
  // AR(1) with a = 1 - theta dt and innovation variance sigma^2 dt.
  const double a = 1.0 - n.theta_rate * n.dt;
  const double expected = n.sigma * n.sigma * n.dt / (1.0 - a * a);
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, expected, 0.05 * expected);
}

TEST(Ou, ZeroSigmaDecaysToMu) {
  OuNoise n = OuNoise::with_defaults(2, 0.1);
  n.sigma = 0.0;
  n.mu = Vec{{1.0, -1.0}};
  n.state = Vec::Zero(2);
  n.theta_rate = 2.0;
  Rng rng(0);
  for (int i = 0; i < 200; ++i) ou_step(n, rng);
  EXPECT_LT((n.state - n.mu).norm(), 1e-12);
}

TEST(Collect, PendulumCountsAndConsistency) {
  const Dataset d = small_pendulum(5, 380);
  EXPECT_EQ(d.size(), 1900u);
  EXPECT_EQ(d.obs_dim, 3);
  EXPECT_EQ(d.control_dim, 1);
  for (std::size_t i = 0; i + 1 < d.size(); ++i) {
    const Triple& a = d.triples[i];
    const Triple& b = d.triples[i + 1];
    ASSERT_LE(std::abs(a.u(0)), 2.0);
    if (a.episode == b.episode) {
      ASSERT_EQ(b.t, a.t + 1);
      ASSERT_EQ(a.y, b.x);
    }
  }
}

TEST(Collect, EpisodesAreIndependentOfCount) {
  const Dataset three = small_pendulum(3, 30, 11);
  const Dataset five = small_pendulum(5, 30, 11);
  ASSERT_EQ(five.size(), 150u);
  for (std::size_t i = 0; i < three.size(); ++i) {
    EXPECT_EQ(three.triples[i].x, five.triples[i].x);
    EXPECT_EQ(three.triples[i].u, five.triples[i].u);
  }
}

TEST(Collect, LanderControlsInBoxAndStopsOnGround) {
  const envs::Env env(envs::LanderParams{});
  const Dataset d = collect(env, 4, 2000, OuNoise::with_defaults(2, 0.02), 5);
  EXPECT_LT(d.size(), 8000u);
  for (const Triple& t : d.triples) {
    ASSERT_GE(t.u(0), 0.0);
    ASSERT_LE(t.u(0), 1.0);
    ASSERT_GE(t.u(1), -1.0);
    ASSERT_LE(t.u(1), 1.0);
  }
}

TEST(Collect, RejectsEmptyRequest) {
  const envs::Env env(envs::PendulumParams{});
  EXPECT_THROW(collect(env, 0, 10, OuNoise::with_defaults(1, 0.05), 0), Error);
  EXPECT_THROW(collect(env, 2, 0, OuNoise::with_defaults(1, 0.05), 0), Error);
}

TEST(Split, CountsAndDisjointness) {
  const Dataset d = split(small_pendulum(5, 20), {0.7, 0.15, 0.15}, 3);
  ASSERT_EQ(d.size(), 100u);
  EXPECT_EQ(d.count(Split::Val), 15u);
  EXPECT_EQ(d.count(Split::Test), 15u);
  EXPECT_EQ(d.count(Split::Train), 70u);
  std::set<std::pair<int, int>> seen;
  for (const Triple& t : d.triples) seen.insert({t.episode, t.t});
  EXPECT_EQ(seen.size(), 100u);
}

TEST(Split, FloorsSmallFractions) {
  const Dataset d = split(small_pendulum(1, 7), {0.7, 0.15, 0.15}, 3);
  EXPECT_EQ(d.count(Split::Val), 1u);
  EXPECT_EQ(d.count(Split::Test), 1u);
  EXPECT_EQ(d.count(Split::Train), 5u);
}

TEST(Split, SeedChangesAssignment) {
  const Dataset base = small_pendulum(2, 50);
  EXPECT_EQ(split(base, {0.6, 0.2, 0.2}, 1), split(base, {0.6, 0.2, 0.2}, 1));
  EXPECT_FALSE(split(base, {0.6, 0.2, 0.2}, 1) == split(base, {0.6, 0.2, 0.2}, 2));
}

TEST(Split, RejectsBadFractions) {
  const Dataset base = small_pendulum(1, 10);
  for (const std::array<double, 3>& f :
       {std::array<double, 3>{0.5, 0.2, 0.2}, std::array<double, 3>{1.2, -0.1, -0.1},
        std::array<double, 3>{0.7, 0.3, 0.1}}) {
    try {
      split(base, f, 0);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::BadFractions);
    }
  }
}

TEST(Csv, RoundTripIsExact) {
  const Dataset d = split(small_pendulum(2, 25), {0.7, 0.15, 0.15}, 9);
  const std::string path = temp_path("dkrc_dataset_rt.csv");
  save(d, path);
  EXPECT_EQ(load(path), d);
}

TEST(Csv, CorruptLineIsReported) {
  const Dataset d = small_pendulum(1, 5);
  const std::string path = temp_path("dkrc_dataset_bad.csv");
  save(d, path);
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  in.close();
  lines[3] = "0,2,train,abc,0,0,0,0,0,0";
  std::ofstream out(path);
  for (const auto& l : lines) out << l << '\n';
  out.close();
  try {
    load(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(Csv, MissingFileIsIoError) {
  try {
    load(temp_path("dkrc_does_not_exist.csv"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}

}  // namespace
}  // namespace dkrc::data
