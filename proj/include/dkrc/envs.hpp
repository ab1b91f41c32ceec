#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dkrc/linalg.hpp"

namespace dkrc::envs {

using linalg::Vec;

// Torque-driven pendulum with theta = 0 upright:
//   m l^2 theta'' = -gamma theta' + m g l sin(theta) + u
struct PendulumParams {
  double mass = 1.0;
  double length = 1.0;
  double gravity = 10.0;
  double damping = 0.05;
  double dt = 0.05;
  double max_torque = 2.0;
  double max_speed = 8.0;
};

struct PendulumState {
  double theta = 0.0;
  double theta_dot = 0.0;
};

// Planar rigid-body lander. theta is measured clockwise from upright, u1 is
// the main engine (along the body axis) and u2 the side engines.
struct LanderParams {
  double main_accel = 30.0;   // F
  double side_accel = 3.0;    // S
  double side_torque = 3.0;   // T
  double gravity = 10.0;      // g_m
  double dt = 0.02;
  double ground = 4.0;
  double goal_x = 10.0;
  double start_x = 10.0;
  double start_y = 13.0;
};

struct LanderState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double x_dot = 0.0;
  double y_dot = 0.0;
  double theta_dot = 0.0;
};

/// Wraps an angle into [-pi, pi].
double wrap_angle(double theta);

PendulumState pendulum_step(const PendulumState& s, double u,
                            const PendulumParams& p);
/// [cos theta, sin theta, theta_dot]
Vec pendulum_observe(const PendulumState& s);
/// theta ~ U[-pi, pi], theta_dot ~ U[-1, 1].
PendulumState pendulum_reset(std::uint64_t seed);

LanderState lander_step(const LanderState& s, double u1, double u2,
                        const LanderParams& p);
Vec lander_observe(const LanderState& s);
/// (x, y) = start + U[-0.5, 0.5]^2, velocities ~ U[-1, 1], theta ~ U[-0.1, 0.1].
LanderState lander_reset(std::uint64_t seed, const LanderParams& p);

enum class EnvKind { Pendulum, Lander };

EnvKind parse_env_kind(std::string_view name);
std::string_view env_name(EnvKind kind);

struct EnvSpec {
  int state_dim = 0;  // observation dimension n
  int control_dim = 0;
  Vec control_lo;
  Vec control_hi;
  double dt = 0.0;
  Vec goal_state;  // goal observation x*
};

/// Value-type environment. Raw states are packed into vectors: pendulum
/// [theta, theta_dot], lander [x, y, theta, x_dot, y_dot, theta_dot].
class Env {
 public:
  explicit Env(PendulumParams p) : params_(p) {}
  explicit Env(LanderParams p) : params_(p) {}

  EnvKind kind() const;
  EnvSpec spec() const;
  int raw_dim() const;

  Vec reset(std::uint64_t seed) const;
  /// Clamps u to the control box, then integrates one step.
  Vec step(const Vec& state, const Vec& u) const;
  Vec observe(const Vec& state) const;
  bool terminated(const Vec& state) const;
  Vec clamp_control(const Vec& u) const;

  const PendulumParams& pendulum() const {
    return std::get<PendulumParams>(params_);
  }
  const LanderParams& lander() const { return std::get<LanderParams>(params_); }

 private:
  std::variant<PendulumParams, LanderParams> params_;
};

/// Policies act on observations.
using Policy = std::function<Vec(const Vec& observation)>;

/// states/observations hold T+1 entries (initial through final), controls T.
struct Trajectory {
  std::vector<Vec> states;
  std::vector<Vec> observations;
  std::vector<Vec> controls;

  std::size_t steps() const { return controls.size(); }
};

/// Runs `policy` for up to `horizon` steps from reset(seed); stops early when
/// the environment reports termination. Throws PolicyFailure on a non-finite
/// control.
Trajectory rollout(const Env& env, const Policy& policy, int horizon,
                   std::uint64_t seed);
/// Same, from an explicit initial raw state.
Trajectory rollout_from(const Env& env, const Policy& policy, int horizon,
                        const Vec& initial_state);

/// CSV with header `t,s0..,obs0..,u0..`; the final row leaves the control
/// columns as `nan` since no control is applied there.
void save_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory load_trajectory_csv(const std::string& path);

}  // namespace dkrc::envs
