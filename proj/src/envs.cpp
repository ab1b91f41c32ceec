#include "dkrc/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "dkrc/csv.hpp"
#include "dkrc/error.hpp"
#include "dkrc/rng.hpp"

namespace dkrc::envs {

double wrap_angle(double theta) {
  constexpr double pi = std::numbers::pi;
  if (theta >= -pi && theta <= pi) return theta;
  double r = std::fmod(theta + pi, 2.0 * pi);
  if (r < 0.0) r += 2.0 * pi;
  return r - pi;
}

PendulumState pendulum_step(const PendulumState& s, double u,
                            const PendulumParams& p) {
  u = std::clamp(u, -p.max_torque, p.max_torque);
  const double inertia = p.mass * p.length * p.length;
  const double accel = (-p.damping * s.theta_dot +
                        p.mass * p.gravity * p.length * std::sin(s.theta) + u) /
                       inertia;
  PendulumState next;
  next.theta_dot =
      std::clamp(s.theta_dot + p.dt * accel, -p.max_speed, p.max_speed);
  next.theta = wrap_angle(s.theta + p.dt * next.theta_dot);
  return next;
}

Vec pendulum_observe(const PendulumState& s) {
  Vec obs(3);
  obs << std::cos(s.theta), std::sin(s.theta), s.theta_dot;
  return obs;
}

PendulumState pendulum_reset(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi,
                                               std::numbers::pi);
  std::uniform_real_distribution<double> speed(-1.0, 1.0);
  PendulumState s;
  s.theta = angle(rng);
  s.theta_dot = speed(rng);
  return s;
}

LanderState lander_step(const LanderState& s, double u1, double u2,
                        const LanderParams& p) {
  u1 = std::clamp(u1, 0.0, 1.0);
  u2 = std::clamp(u2, -1.0, 1.0);
  const double sn = std::sin(s.theta);
  const double cs = std::cos(s.theta);
  const double ax = -p.main_accel * u1 * sn + p.side_accel * u2 * cs;
  const double ay = p.main_accel * u1 * cs + p.side_accel * u2 * sn - p.gravity;
  const double atheta = -p.side_torque * u2;

  LanderState next;
  next.x_dot = s.x_dot + p.dt * ax;
  next.y_dot = s.y_dot + p.dt * ay;
  next.theta_dot = s.theta_dot + p.dt * atheta;
  next.x = s.x + p.dt * next.x_dot;
  next.y = s.y + p.dt * next.y_dot;
  next.theta = s.theta + p.dt * next.theta_dot;
  return next;
}

Vec lander_observe(const LanderState& s) {
  Vec obs(6);
  obs << s.x, s.y, s.theta, s.x_dot, s.y_dot, s.theta_dot;
  return obs;
}

LanderState lander_reset(std::uint64_t seed, const LanderParams& p) {
  Rng rng(seed);
  std::uniform_real_distribution<double> offset(-0.5, 0.5);
  std::uniform_real_distribution<double> speed(-1.0, 1.0);
  std::uniform_real_distribution<double> tilt(-0.1, 0.1);
  LanderState s;
  s.x = p.start_x + offset(rng);
  s.y = p.start_y + offset(rng);
  s.x_dot = speed(rng);
  s.y_dot = speed(rng);
  s.theta_dot = speed(rng);
  s.theta = tilt(rng);
  return s;
}

EnvKind parse_env_kind(std::string_view name) {
  if (name == "pendulum") return EnvKind::Pendulum;
  if (name == "lander") return EnvKind::Lander;
  throw Error(ErrorKind::Config, "unknown environment '" + std::string(name) +
                                     "' (valid options: pendulum, lander)");
}

std::string_view env_name(EnvKind kind) {
  return kind == EnvKind::Pendulum ? "pendulum" : "lander";
}

namespace {

PendulumState unpack_pendulum(const Vec& s) {
  if (s.size() != 2) {
    throw Error(ErrorKind::DimensionMismatch, "pendulum state must have 2 entries");
  }
  return PendulumState{s(0), s(1)};
}

Vec pack(const PendulumState& s) { return Vec{{s.theta, s.theta_dot}}; }

LanderState unpack_lander(const Vec& s) {
  if (s.size() != 6) {
    throw Error(ErrorKind::DimensionMismatch, "lander state must have 6 entries");
  }
  return LanderState{s(0), s(1), s(2), s(3), s(4), s(5)};
}

Vec pack(const LanderState& s) { return lander_observe(s); }

}  // namespace

EnvKind Env::kind() const {
  return std::holds_alternative<PendulumParams>(params_) ? EnvKind::Pendulum
                                                         : EnvKind::Lander;
}

int Env::raw_dim() const { return kind() == EnvKind::Pendulum ? 2 : 6; }

EnvSpec Env::spec() const {
  EnvSpec spec;
  if (kind() == EnvKind::Pendulum) {
    const auto& p = pendulum();
    spec.state_dim = 3;
    spec.control_dim = 1;
    spec.control_lo = Vec::Constant(1, -p.max_torque);
    spec.control_hi = Vec::Constant(1, p.max_torque);
    spec.dt = p.dt;
    spec.goal_state = pendulum_observe(PendulumState{0.0, 0.0});
  } else {
    const auto& p = lander();
    spec.state_dim = 6;
    spec.control_dim = 2;
    spec.control_lo = Vec{{0.0, -1.0}};
    spec.control_hi = Vec{{1.0, 1.0}};
    spec.dt = p.dt;
    spec.goal_state = Vec{{p.goal_x, p.ground, 0.0, 0.0, 0.0, 0.0}};
  }
  return spec;
}

Vec Env::reset(std::uint64_t seed) const {
  if (kind() == EnvKind::Pendulum) return pack(pendulum_reset(seed));
  return pack(lander_reset(seed, lander()));
}

Vec Env::clamp_control(const Vec& u) const {
  const EnvSpec s = spec();
  if (u.size() != s.control_dim) {
    throw Error(ErrorKind::DimensionMismatch,
                "control has " + std::to_string(u.size()) + " entries, expected " +
                    std::to_string(s.control_dim));
  }
  return u.cwiseMax(s.control_lo).cwiseMin(s.control_hi);
}

Vec Env::step(const Vec& state, const Vec& u) const {
  const Vec uc = clamp_control(u);
  if (kind() == EnvKind::Pendulum) {
    return pack(pendulum_step(unpack_pendulum(state), uc(0), pendulum()));
  }
  return pack(lander_step(unpack_lander(state), uc(0), uc(1), lander()));
}

Vec Env::observe(const Vec& state) const {
  if (kind() == EnvKind::Pendulum) return pendulum_observe(unpack_pendulum(state));
  return lander_observe(unpack_lander(state));
}

bool Env::terminated(const Vec& state) const {
  if (kind() == EnvKind::Pendulum) return false;
  return state(1) <= lander().ground;
}

Trajectory rollout_from(const Env& env, const Policy& policy, int horizon,
                        const Vec& initial_state) {
  if (horizon < 1) {
    throw Error(ErrorKind::BadDims, "rollout horizon must be >= 1");
  }
  Trajectory traj;
  Vec state = initial_state;
  traj.states.push_back(state);
  traj.observations.push_back(env.observe(state));
  for (int t = 0; t < horizon; ++t) {
    const Vec u = policy(traj.observations.back());
    if (!u.allFinite()) {
      throw Error(ErrorKind::PolicyFailure,
                  "policy returned a non-finite control at step " +
                      std::to_string(t));
    }
    const Vec applied = env.clamp_control(u);
    state = env.step(state, applied);
    traj.controls.push_back(applied);
    traj.states.push_back(state);
    traj.observations.push_back(env.observe(state));
    if (env.terminated(state)) break;
  }
  return traj;
}

Trajectory rollout(const Env& env, const Policy& policy, int horizon,
                   std::uint64_t seed) {
  return rollout_from(env, policy, horizon, env.reset(seed));
}

void save_trajectory_csv(const Trajectory& traj, const std::string& path) {
  const std::size_t ns = traj.states.empty() ? 0 : traj.states.front().size();
  const std::size_t no =
      traj.observations.empty() ? 0 : traj.observations.front().size();
  const std::size_t nu = traj.controls.empty() ? 0 : traj.controls.front().size();

  std::ostringstream out;
  out << "t";
  for (std::size_t i = 0; i < ns; ++i) out << ",s" << i;
  for (std::size_t i = 0; i < no; ++i) out << ",obs" << i;
  for (std::size_t i = 0; i < nu; ++i) out << ",u" << i;
  out << '\n';
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    out << t;
    for (Eigen::Index i = 0; i < traj.states[t].size(); ++i)
      out << ',' << csv::format_double(traj.states[t](i));
    for (Eigen::Index i = 0; i < traj.observations[t].size(); ++i)
      out << ',' << csv::format_double(traj.observations[t](i));
    for (std::size_t i = 0; i < nu; ++i) {
      out << ',';
      out << (t < traj.controls.size()
                  ? csv::format_double(traj.controls[t](static_cast<Eigen::Index>(i)))
                  : std::string("nan"));
    }
    out << '\n';
  }
  csv::write_file(path, out.str());
}

Trajectory load_trajectory_csv(const std::string& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) {
    throw Error(ErrorKind::ParseError, "line 1: missing header in '" + path + "'");
  }
  std::size_t ns = 0, no = 0, nu = 0;
  const auto header = csv::split_fields(lines[0]);
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i].starts_with("obs")) ++no;
    else if (header[i].starts_with("s")) ++ns;
    else if (header[i].starts_with("u")) ++nu;
    else throw Error(ErrorKind::ParseError, "line 1: unexpected column '" +
                                                std::string(header[i]) + "'");
  }
  Trajectory traj;
  std::size_t rows = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    ++rows;
  }
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto f = csv::split_fields(lines[li]);
    const std::size_t line_no = li + 1;
    if (f.size() != 1 + ns + no + nu) {
      throw Error(ErrorKind::ParseError,
                  "line " + std::to_string(line_no) + ": expected " +
                      std::to_string(1 + ns + no + nu) + " fields, got " +
                      std::to_string(f.size()));
    }
    Vec s(static_cast<Eigen::Index>(ns)), o(static_cast<Eigen::Index>(no)),
        u(static_cast<Eigen::Index>(nu));
    std::size_t k = 1;
    for (std::size_t i = 0; i < ns; ++i) s(static_cast<Eigen::Index>(i)) = csv::parse_double(f[k++], line_no);
    for (std::size_t i = 0; i < no; ++i) o(static_cast<Eigen::Index>(i)) = csv::parse_double(f[k++], line_no);
    for (std::size_t i = 0; i < nu; ++i) u(static_cast<Eigen::Index>(i)) = csv::parse_double(f[k++], line_no);
    traj.states.push_back(std::move(s));
    traj.observations.push_back(std::move(o));
    if (traj.states.size() < rows) traj.controls.push_back(std::move(u));
  }
  return traj;
}

}  // namespace dkrc::envs
