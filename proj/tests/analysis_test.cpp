#include "dkrc/analysis.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "dkrc/csv.hpp"
#include "dkrc/error.hpp"

namespace dkrc::analysis {
namespace {

constexpr double kPi = std::numbers::pi;

koopman::LiftedModel model_with(const Mat& a) {
  koopman::LiftedModel m;
  m.psi = net::init(3, static_cast<int>(a.rows()), 8, 21, 1);
  m.a = a;
  m.b = Mat::Ones(a.rows(), 1);
  m.c = Mat::Zero(3, a.rows());
  m.u0 = Vec::Zero(1);
  m.goal = Vec{{1.0, 0.0, 0.0}};
  m.psi0 = net::forward(m.psi, m.goal);
  return m;
}

GridSpec small_grid() {
  GridSpec g;
  g.theta_points = 9;
  g.theta_dot_points = 7;
  return g;
}

Vec psi_at(const koopman::LiftedModel& m, double theta, double theta_dot) {
  return net::forward_reference(m.psi, Mat(Vec{{std::cos(theta), std::sin(theta), theta_dot}}))
      .col(0);
}

TEST(Hamiltonian, UprightAndHangingRest) {
  const envs::PendulumParams p;
  EXPECT_EQ(hamiltonian({0.0, 0.0}, p), 10.0);
  EXPECT_NEAR(hamiltonian({kPi, 0.0}, p), -10.0, 1e-12);
  EXPECT_NEAR(hamiltonian({kPi / 2, 2.0}, p), 2.0, 1e-12);
}

TEST(Hamiltonian, EvenInBothCoordinates) {
  const envs::PendulumParams p;
  for (double th : {0.3, 1.2, 2.9}) {
    for (double w : {0.0, 0.7, 5.0}) {
      EXPECT_EQ(hamiltonian({th, w}, p), hamiltonian({-th, w}, p));
      EXPECT_EQ(hamiltonian({th, w}, p), hamiltonian({th, -w}, p));
    }
  }
}

TEST(EigenGrid, DiagonalDynamicsGiveLiftCoordinates) {
  Mat a = Mat::Zero(4, 4);
  a.diagonal() << 0.2, 0.9, -0.5, 0.7;
  const koopman::LiftedModel m = model_with(a);
  const EigGrid g = eigenfunction_grid(m, small_grid(), 4);
  ASSERT_EQ(g.surfaces.size(), 4u);
  const int order[] = {1, 3, 2, 0};  // by |lambda| descending
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(g.surfaces[i].value.real(), a(order[i], order[i]), 1e-12);
    EXPECT_EQ(g.surfaces[i].im, Mat::Zero(9, 7));
    // Eigenvector e_k up to sign: |phi| = |psi_k|.
    for (int r = 0; r < 9; ++r) {
      for (int c = 0; c < 7; ++c) {
        const double expect = std::abs(psi_at(m, g.theta(r), g.theta_dot(c))(order[i]));
        EXPECT_NEAR(std::abs(g.surfaces[i].re(r, c)), expect, 1e-10);
      }
    }
  }
}

TEST(EigenGrid, EigenfunctionPropagatesUnderLiftedDynamics) {
  // w^T A = lambda w^T, so w^T (A psi) = lambda w^T psi for every psi.
  const Mat a{{0.8, -0.3, 0.0, 0.0}, {0.3, 0.8, 0.1, 0.0}, {0.0, 0.2, 0.4, 0.0}, {0.1, 0.0, 0.0, 0.2}};
  const koopman::LiftedModel m = model_with(a);
  const EigGrid g = eigenfunction_grid(m, small_grid(), 4);
  const auto pairs = linalg::eig_left(a);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& w = pairs[i].left_vector;
    EXPECT_LT((w.transpose() * a.cast<std::complex<double>>() - pairs[i].value * w.transpose()).norm(),
              1e-10);
    const Vec psi = psi_at(m, g.theta(2), g.theta_dot(5));
    const std::complex<double> phi(g.surfaces[i].re(2, 5), g.surfaces[i].im(2, 5));
    const std::complex<double> direct = w.dot(psi.cast<std::complex<double>>());
    EXPECT_LT(std::abs(std::abs(phi) - std::abs(direct)), 1e-10);
  }
}

TEST(EigenGrid, ConjugatePairSurfaces) {
  const Mat a{{0.6, -0.7, 0.0, 0.0}, {0.7, 0.6, 0.0, 0.0}, {0.0, 0.0, 0.3, 0.0}, {0.0, 0.0, 0.0, 0.1}};
  const EigGrid g = eigenfunction_grid(model_with(a), small_grid(), 3);
  EXPECT_EQ(g.surfaces[0].value, std::conj(g.surfaces[1].value));
  EXPECT_LT((g.surfaces[0].re - g.surfaces[1].re).norm(), 1e-12);
  EXPECT_LT((g.surfaces[0].im + g.surfaces[1].im).norm(), 1e-12);
  EXPECT_EQ(g.surfaces[2].im, Mat::Zero(9, 7));
}

TEST(EigenGrid, ParallelMatchesReference) {
  const Mat a{{0.6, -0.7, 0.1, 0.0}, {0.7, 0.6, 0.0, 0.2}, {0.0, 0.0, 0.3, 0.0}, {0.1, 0.0, 0.0, -0.9}};
  const koopman::LiftedModel m = model_with(a);
  const EigGrid p = eigenfunction_grid(m, GridSpec{}, 4);
  const EigGrid r = eigenfunction_grid_reference(m, GridSpec{}, 4);
  ASSERT_EQ(p.surfaces.size(), r.surfaces.size());
  EXPECT_EQ(p.theta, r.theta);
  for (std::size_t i = 0; i < p.surfaces.size(); ++i) {
    EXPECT_LT((p.surfaces[i].re - r.surfaces[i].re).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((p.surfaces[i].im - r.surfaces[i].im).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(EigenGrid, GridCoversBoxInclusive) {
  const EigGrid g = eigenfunction_grid(model_with(Mat::Identity(4, 4) * 0.5), GridSpec{}, 1);
  ASSERT_EQ(g.theta.size(), 61);
  EXPECT_NEAR(g.theta(0), -kPi, 1e-15);
  EXPECT_NEAR(g.theta(60), kPi, 1e-15);
  EXPECT_EQ(g.theta_dot(0), -8.0);
  EXPECT_EQ(g.theta_dot(60), 8.0);
  EXPECT_EQ(g.theta_dot(30), 0.0);
}

TEST(EigenGrid, CsvRoundTripKeepsValues) {
  const EigGrid g = eigenfunction_grid(model_with(Mat::Identity(4, 4) * 0.5), small_grid(), 2);
  const auto path = (std::filesystem::temp_directory_path() / "dkrc_eig_rt.csv").string();
  save_surface_csv(g, 1, path);
  const auto lines = csv::read_lines(path);
  ASSERT_EQ(lines.size(), 1u + 9 * 7);
  EXPECT_EQ(lines[0], "theta,theta_dot,re,im");
  const auto f = csv::split_fields(lines[1 + 3 * 7 + 4]);
  EXPECT_EQ(csv::parse_double(f[0], 0), g.theta(3));
  EXPECT_EQ(csv::parse_double(f[1], 0), g.theta_dot(4));
  EXPECT_EQ(csv::parse_double(f[2], 0), g.surfaces[1].re(3, 4));
  EXPECT_EQ(csv::parse_double(f[3], 0), g.surfaces[1].im(3, 4));
}

envs::Trajectory pendulum_path(int len, int reach) {
  envs::Trajectory t;
  for (int i = 0; i <= len; ++i) {
    t.states.push_back(i >= reach ? Vec{{0.05, 0.1}} : Vec{{2.0, 1.0}});
    t.observations.push_back(Vec::Zero(3));
    if (i < len) t.controls.push_back(Vec{{0.5}});
  }
  return t;
}

TEST(Success, PendulumHeldForWindow) {
  const envs::Env env(envs::PendulumParams{});
  const SuccessReport r = success_metrics(pendulum_path(40, 10), env);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.steps_to_success, 10);
  EXPECT_NEAR(r.effort, 40 * 0.25, 1e-12);
  EXPECT_NEAR(r.final_energy, hamiltonian({0.05, 0.1}, envs::PendulumParams{}), 1e-15);
}

TEST(Success, PendulumReachedTooLate) {
  const envs::Env env(envs::PendulumParams{});
  const SuccessReport r = success_metrics(pendulum_path(40, 30), env);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.steps_to_success, -1);
}

TEST(Success, StartAtGoalIsImmediate) {
  const envs::Env env(envs::PendulumParams{});
  EXPECT_EQ(success_metrics(pendulum_path(5, 0), env).steps_to_success, 0);
}

TEST(Success, WrappedAngleCountsAsGoal) {
  const envs::Env env(envs::PendulumParams{});
  envs::Trajectory t = pendulum_path(30, 0);
  for (Vec& s : t.states) s(0) = 2 * kPi - 0.05;
  EXPECT_TRUE(success_metrics(t, env).success);
}

TEST(Success, LanderTouchdown) {
  const envs::Env env(envs::LanderParams{});
  envs::Trajectory t;
  t.states = {Vec{{10.0, 6.0, 0.0, 0.0, -1.0, 0.0}}, Vec{{10.4, 4.1, 0.1, 0.2, -0.5, 0.0}}};
  t.controls = {Vec{{0.5, 0.0}}};
  EXPECT_TRUE(success_metrics(t, env).success);
  EXPECT_EQ(success_metrics(t, env).steps_to_success, 1);
  t.states.back()(4) = -2.0;
  EXPECT_FALSE(success_metrics(t, env).success);
}

TEST(Success, EmptyTrajectoryIsAnError) {
  const envs::Env env(envs::PendulumParams{});
  try {
    success_metrics(envs::Trajectory{}, env);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyTrajectory);
  }
}

}  // namespace
}  // namespace dkrc::analysis
