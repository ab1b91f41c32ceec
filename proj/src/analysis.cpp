#include "dkrc/analysis.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <sstream>

#include "dkrc/csv.hpp"
#include "dkrc/error.hpp"

namespace dkrc::analysis {

namespace {

Vec axis(double lo, double hi, int points) {
  if (points < 1) throw Error(ErrorKind::BadDims, "grid axes need at least one point");
  if (points == 1) return Vec::Constant(1, lo);
  return Vec::LinSpaced(points, lo, hi);
}

struct Prepared {
  EigGrid grid;
  Eigen::MatrixXcd functionals;  // top_k x N, row i = w_i^T
};

Prepared prepare(const koopman::LiftedModel& model, const GridSpec& spec, int top_k) {
  if (model.obs_dim() != 3) {
    throw Error(ErrorKind::DimensionMismatch,
                "eigenfunction grids need the pendulum observation [cos, sin, theta_dot]");
  }
  const auto pairs = linalg::eig_left(model.a);
  const int k = std::clamp(top_k, 0, static_cast<int>(pairs.size()));
  Prepared out;
  out.grid.theta = axis(spec.theta_lo, spec.theta_hi, spec.theta_points);
  out.grid.theta_dot = axis(spec.theta_dot_lo, spec.theta_dot_hi, spec.theta_dot_points);
  out.functionals.resize(k, model.lifted_dim());
  for (int i = 0; i < k; ++i) {
    out.functionals.row(i) = pairs[static_cast<std::size_t>(i)].left_vector.transpose();
    out.grid.surfaces.push_back(EigenSurface{pairs[static_cast<std::size_t>(i)].value,
                                             Mat(spec.theta_points, spec.theta_dot_points),
                                             Mat(spec.theta_points, spec.theta_dot_points)});
  }
  return out;
}

Mat row_inputs(const EigGrid& grid, Eigen::Index row) {
  const double th = grid.theta(row);
  Mat x(3, grid.theta_dot.size());
  for (Eigen::Index j = 0; j < grid.theta_dot.size(); ++j) {
    x(0, j) = std::cos(th);
    x(1, j) = std::sin(th);
    x(2, j) = grid.theta_dot(j);
  }
  return x;
}

}  // namespace

EigGrid eigenfunction_grid(const koopman::LiftedModel& model, const GridSpec& spec,
                           int top_k) {
  Prepared prep = prepare(model, spec, top_k);
  EigGrid& grid = prep.grid;
  const Eigen::Index rows = grid.theta.size();
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Mat psi = koopman::features(model, row_inputs(grid, r));
    const Eigen::MatrixXcd phi = prep.functionals * psi.cast<std::complex<double>>();
    for (std::size_t i = 0; i < grid.surfaces.size(); ++i) {
      grid.surfaces[i].re.row(r) = phi.row(static_cast<Eigen::Index>(i)).real();
      grid.surfaces[i].im.row(r) = phi.row(static_cast<Eigen::Index>(i)).imag();
    }
  }
  return grid;
}

EigGrid eigenfunction_grid_reference(const koopman::LiftedModel& model,
                                     const GridSpec& spec, int top_k) {
  Prepared prep = prepare(model, spec, top_k);
  EigGrid& grid = prep.grid;
  for (Eigen::Index r = 0; r < grid.theta.size(); ++r) {
    for (Eigen::Index c = 0; c < grid.theta_dot.size(); ++c) {
      Mat x(3, 1);
      x << std::cos(grid.theta(r)), std::sin(grid.theta(r)), grid.theta_dot(c);
      const Vec psi = koopman::features_reference(model, x).col(0);
      for (std::size_t i = 0; i < grid.surfaces.size(); ++i) {
        std::complex<double> acc = 0.0;
        for (Eigen::Index k = 0; k < psi.size(); ++k)
          acc += prep.functionals(static_cast<Eigen::Index>(i), k) * psi(k);
        grid.surfaces[i].re(r, c) = acc.real();
        grid.surfaces[i].im(r, c) = acc.imag();
      }
    }
  }
  return grid;
}

void save_surface_csv(const EigGrid& grid, std::size_t index, const std::string& path) {
  const EigenSurface& s = grid.surfaces.at(index);
  std::ostringstream out;
  out << "theta,theta_dot,re,im\n";
  for (Eigen::Index r = 0; r < grid.theta.size(); ++r) {
    for (Eigen::Index c = 0; c < grid.theta_dot.size(); ++c) {
      out << csv::format_double(grid.theta(r)) << ',' << csv::format_double(grid.theta_dot(c))
          << ',' << csv::format_double(s.re(r, c)) << ',' << csv::format_double(s.im(r, c))
          << '\n';
    }
  }
  csv::write_file(path, out.str());
}

double hamiltonian(const envs::PendulumState& s, const envs::PendulumParams& p) {
  return 0.5 * p.mass * p.length * p.length * s.theta_dot * s.theta_dot +
         p.mass * p.gravity * p.length * std::cos(s.theta);
}

SuccessReport success_metrics(const envs::Trajectory& traj, const envs::Env& env,
                              const SuccessThresholds& thr) {
  if (traj.states.empty()) {
    throw Error(ErrorKind::EmptyTrajectory, "success_metrics needs at least one state");
  }
  SuccessReport rep;
  for (const Vec& u : traj.controls) rep.effort += u.squaredNorm();

  std::function<bool(const Vec&)> at_goal;
  std::size_t window = 1;
  if (env.kind() == envs::EnvKind::Pendulum) {
    at_goal = [&](const Vec& s) {
      return std::abs(envs::wrap_angle(s(0))) < thr.pendulum_theta &&
             std::abs(s(1)) < thr.pendulum_theta_dot;
    };
    window = static_cast<std::size_t>(std::max(thr.pendulum_window, 1));
    const Vec& last = traj.states.back();
    rep.final_energy = hamiltonian(envs::PendulumState{last(0), last(1)}, env.pendulum());
  } else {
    const auto& lp = env.lander();
    at_goal = [&](const Vec& s) {
      return std::abs(s(0) - lp.goal_x) < thr.lander_x &&
             std::abs(s(1) - lp.ground) < thr.lander_y &&
             std::abs(s(2)) < thr.lander_theta &&
             std::hypot(s(3), s(4)) < thr.lander_speed;
    };
  }

  // Length of the goal-satisfying suffix.
  std::size_t suffix = 0;
  for (auto it = traj.states.rbegin(); it != traj.states.rend() && at_goal(*it); ++it) ++suffix;
  const std::size_t needed = std::min(window, traj.states.size());
  rep.success = suffix >= needed;
  if (rep.success) rep.steps_to_success = static_cast<int>(traj.states.size() - suffix);
  return rep;
}

}  // namespace dkrc::analysis
