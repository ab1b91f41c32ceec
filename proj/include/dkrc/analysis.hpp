#pragma once

#include <complex>
#include <string>
#include <vector>

#include "dkrc/envs.hpp"
#include "dkrc/koopman.hpp"
#include "dkrc/linalg.hpp"

namespace dkrc::analysis {

using linalg::Mat;
using linalg::Vec;

struct GridSpec {
  double theta_lo = -3.141592653589793;
  double theta_hi = 3.141592653589793;
  int theta_points = 61;
  double theta_dot_lo = -8.0;
  double theta_dot_hi = 8.0;
  int theta_dot_points = 61;
};

struct EigenSurface {
  std::complex<double> value;
  Mat re;  // theta_points x theta_dot_points
  Mat im;
};

struct EigGrid {
  Vec theta;
  Vec theta_dot;
  std::vector<EigenSurface> surfaces;
};

/// phi_i(theta, theta_dot) = w_i^T psi([cos theta, sin theta, theta_dot]) for
/// the top_k left eigenpairs of A (by |lambda|). Rows of the grid are
/// evaluated in parallel.
EigGrid eigenfunction_grid(const koopman::LiftedModel& model, const GridSpec& grid,
                           int top_k);
/// Single-threaded, one point at a time; reference for the parallel version.
EigGrid eigenfunction_grid_reference(const koopman::LiftedModel& model,
                                     const GridSpec& grid, int top_k);

/// `theta,theta_dot,re,im`, one row per grid point.
void save_surface_csv(const EigGrid& grid, std::size_t index, const std::string& path);

/// H = 1/2 m l^2 theta_dot^2 + m g l cos(theta); upright rest is the maximum
/// potential.
double hamiltonian(const envs::PendulumState& s, const envs::PendulumParams& p);

struct SuccessThresholds {
  double pendulum_theta = 0.2;
  double pendulum_theta_dot = 0.5;
  int pendulum_window = 20;
  double lander_x = 1.0;
  double lander_y = 0.5;
  double lander_theta = 0.2;
  double lander_speed = 1.0;
};

struct SuccessReport {
  bool success = false;
  int steps_to_success = -1;  // first step from which the goal test holds to the end
  double effort = 0.0;        // sum ||u||^2
  double final_energy = 0.0;  // pendulum only
};

SuccessReport success_metrics(const envs::Trajectory& traj, const envs::Env& env,
                              const SuccessThresholds& thr = {});

}  // namespace dkrc::analysis
