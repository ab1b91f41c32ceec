#include "dkrc/config.hpp"

#include <charconv>
#include <cmath>
#include <type_traits>
#include <functional>
#include <sstream>

#include "dkrc/csv.hpp"
#include "dkrc/error.hpp"

namespace dkrc {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw Error(ErrorKind::Config,
              "key '" + key + "': cannot parse '" + value + "' as " + expected);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    const double d = csv::parse_double(v, 0);
    if (!std::isfinite(d)) bad_value(key, v, "a finite number");
    return d;
  } catch (const Error&) {
    bad_value(key, v, "a number");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    return csv::parse_int(v, 0);
  } catch (const Error&) {
    bad_value(key, v, "an integer");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    bad_value(key, v, "an unsigned 64-bit integer");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

linalg::Vec to_vec(const std::string& key, const std::string& v) {
  std::vector<double> vals;
  for (std::string_view f : csv::split_fields(v)) vals.push_back(to_double(key, std::string(f)));
  if (vals.empty()) bad_value(key, v, "a comma-separated list of numbers");
  return Eigen::Map<const linalg::Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::string from_vec(const linalg::Vec& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += csv::format_double(v(i));
  }
  return out;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Access>
Field real(std::string key, Access access) {
  return Field{key,
               [key, access](RunConfig& c, const std::string& v) { access(c) = to_double(key, v); },
               [access](const RunConfig& c) {
                 return csv::format_double(access(const_cast<RunConfig&>(c)));
               }};
}

template <typename Access>
Field integer(std::string key, Access access, long long lo) {
  return Field{key,
               [key, access, lo](RunConfig& c, const std::string& v) {
                 const long long x = to_int(key, v);
                 if (x < lo) {
                   throw Error(ErrorKind::Config,
                               "key '" + key + "' must be >= " + std::to_string(lo));
                 }
                 access(c) = static_cast<std::remove_reference_t<decltype(access(c))>>(x);
               },
               [access](const RunConfig& c) {
                 return std::to_string(access(const_cast<RunConfig&>(c)));
               }};
}

template <typename Access>
Field boolean(std::string key, Access access) {
  return Field{key,
               [key, access](RunConfig& c, const std::string& v) { access(c) = to_bool(key, v); },
               [access](const RunConfig& c) {
                 return std::string(access(const_cast<RunConfig&>(c)) ? "true" : "false");
               }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(Field{"env.name",
                      [](RunConfig& c, const std::string& v) { c.env = envs::parse_env_kind(v); },
                      [](const RunConfig& c) { return std::string(envs::env_name(c.env)); }});
    f.push_back(Field{"seed",
                      [](RunConfig& c, const std::string& v) { c.seed = to_u64("seed", v); },
                      [](const RunConfig& c) { return std::to_string(c.seed); }});
    f.push_back(Field{"dataset.path",
                      [](RunConfig& c, const std::string& v) { c.dataset_path = v; },
                      [](const RunConfig& c) { return c.dataset_path; }});
    f.push_back(Field{"model.path",
                      [](RunConfig& c, const std::string& v) { c.model_path = v; },
                      [](const RunConfig& c) { return c.model_path; }});

    // Shared physical constants route to whichever environment is active.
    f.push_back(Field{"env.g",
                      [](RunConfig& c, const std::string& v) {
                        c.pendulum.gravity = c.lander.gravity = to_double("env.g", v);
                      },
                      [](const RunConfig& c) {
                        return csv::format_double(c.env == envs::EnvKind::Pendulum
                                                      ? c.pendulum.gravity
                                                      : c.lander.gravity);
                      }});
    f.push_back(Field{"env.dt",
                      [](RunConfig& c, const std::string& v) {
                        const double dt = to_double("env.dt", v);
                        if (!(dt > 0.0)) throw Error(ErrorKind::Config, "key 'env.dt' must be > 0");
                        (c.env == envs::EnvKind::Pendulum ? c.pendulum.dt : c.lander.dt) = dt;
                      },
                      [](const RunConfig& c) {
                        return csv::format_double(c.env == envs::EnvKind::Pendulum ? c.pendulum.dt
                                                                                   : c.lander.dt);
                      }});
    f.push_back(real("env.mass", [](RunConfig& c) -> double& { return c.pendulum.mass; }));
    f.push_back(real("env.length", [](RunConfig& c) -> double& { return c.pendulum.length; }));
    f.push_back(real("env.damping", [](RunConfig& c) -> double& { return c.pendulum.damping; }));
    f.push_back(real("env.max_torque", [](RunConfig& c) -> double& { return c.pendulum.max_torque; }));
    f.push_back(real("env.max_speed", [](RunConfig& c) -> double& { return c.pendulum.max_speed; }));
    f.push_back(real("env.main_accel", [](RunConfig& c) -> double& { return c.lander.main_accel; }));
    f.push_back(real("env.side_accel", [](RunConfig& c) -> double& { return c.lander.side_accel; }));
    f.push_back(real("env.side_torque", [](RunConfig& c) -> double& { return c.lander.side_torque; }));
    f.push_back(real("env.ground", [](RunConfig& c) -> double& { return c.lander.ground; }));
    f.push_back(real("env.goal_x", [](RunConfig& c) -> double& { return c.lander.goal_x; }));
    f.push_back(real("env.start_x", [](RunConfig& c) -> double& { return c.lander.start_x; }));
    f.push_back(real("env.start_y", [](RunConfig& c) -> double& { return c.lander.start_y; }));

    f.push_back(integer("collect.episodes", [](RunConfig& c) -> int& { return c.collect_episodes; }, 1));
    f.push_back(integer("collect.steps", [](RunConfig& c) -> int& { return c.collect_steps; }, 1));
    f.push_back(real("ou.theta", [](RunConfig& c) -> double& { return c.ou_theta; }));
    f.push_back(real("ou.sigma", [](RunConfig& c) -> double& { return c.ou_sigma; }));
    f.push_back(real("ou.mu", [](RunConfig& c) -> double& { return c.ou_mu; }));
    f.push_back(real("split.train", [](RunConfig& c) -> double& { return c.split[0]; }));
    f.push_back(real("split.val", [](RunConfig& c) -> double& { return c.split[1]; }));
    f.push_back(real("split.test", [](RunConfig& c) -> double& { return c.split[2]; }));

    f.push_back(integer("net.lifted_dim", [](RunConfig& c) -> int& { return c.train.lifted_dim; }, 2));
    f.push_back(integer("net.hidden", [](RunConfig& c) -> int& { return c.train.hidden; }, 1));
    f.push_back(integer("train.epochs", [](RunConfig& c) -> int& { return c.train.epochs; }, 0));
    f.push_back(integer("train.batch", [](RunConfig& c) -> int& { return c.train.batch; }, 2));
    f.push_back(real("train.blend", [](RunConfig& c) -> double& { return c.train.blend; }));
    f.push_back(real("train.lr", [](RunConfig& c) -> double& { return c.train.lr; }));
    f.push_back(real("train.beta1", [](RunConfig& c) -> double& { return c.train.beta1; }));
    f.push_back(real("train.beta2", [](RunConfig& c) -> double& { return c.train.beta2; }));
    f.push_back(real("train.adam_eps", [](RunConfig& c) -> double& { return c.train.adam_eps; }));
    f.push_back(real("train.rank_tol", [](RunConfig& c) -> double& { return c.train.rank_tol; }));
    f.push_back(boolean("train.smooth_rank", [](RunConfig& c) -> bool& { return c.train.smooth_rank; }));
    f.push_back(real("train.smooth_eps", [](RunConfig& c) -> double& { return c.train.smooth_eps; }));
    f.push_back(Field{"train.l1_form",
                      [](RunConfig& c, const std::string& v) {
                        try {
                          c.train.l1_form = koopman::parse_l1_form(v);
                        } catch (const Error&) {
                          bad_value("train.l1_form", v, "batch, batch_controls or frozen_ab");
                        }
                      },
                      [](const RunConfig& c) { return std::string(koopman::to_string(c.train.l1_form)); }});
    f.push_back(boolean("train.constrained_c", [](RunConfig& c) -> bool& { return c.train.constrained_c; }));
    f.push_back(boolean("train.normalize_input", [](RunConfig& c) -> bool& { return c.train.normalize_input; }));
    f.push_back(boolean("train.state_in_lift", [](RunConfig& c) -> bool& { return c.train.state_in_lift; }));
    f.push_back(boolean("train.keep_best", [](RunConfig& c) -> bool& { return c.train.keep_best; }));

    f.push_back(Field{"control.law",
                      [](RunConfig& c, const std::string& v) {
                        if (v == "lqr") c.law = LawKind::Lqr;
                        else if (v == "mpc") c.law = LawKind::Mpc;
                        else throw Error(ErrorKind::Config,
                                         "key 'control.law': expected lqr or mpc, got '" + v + "'");
                      },
                      [](const RunConfig& c) {
                        return std::string(c.law == LawKind::Lqr ? "lqr" : "mpc");
                      }});
    f.push_back(Field{"control.q",
                      [](RunConfig& c, const std::string& v) { c.q_diag = to_vec("control.q", v); },
                      [](const RunConfig& c) { return from_vec(c.q_diag); }});
    f.push_back(Field{"control.r",
                      [](RunConfig& c, const std::string& v) { c.r_diag = to_vec("control.r", v); },
                      [](const RunConfig& c) { return from_vec(c.r_diag); }});
    f.push_back(integer("control.horizon", [](RunConfig& c) -> int& { return c.horizon; }, 1));
    f.push_back(integer("control.games", [](RunConfig& c) -> int& { return c.games; }, 0));
    f.push_back(integer("control.steps", [](RunConfig& c) -> int& { return c.game_steps; }, 1));
    f.push_back(boolean("control.start_at_goal", [](RunConfig& c) -> bool& { return c.start_at_goal; }));
    f.push_back(real("control.dare_tol", [](RunConfig& c) -> double& { return c.dare_tol; }));
    f.push_back(integer("control.dare_max_iter", [](RunConfig& c) -> int& { return c.dare_max_iter; }, 1));
    f.push_back(real("control.mpc_tol", [](RunConfig& c) -> double& { return c.mpc_tol; }));
    f.push_back(integer("control.mpc_max_iter", [](RunConfig& c) -> int& { return c.mpc_max_iter; }, 1));

    f.push_back(integer("eigen.top_k", [](RunConfig& c) -> int& { return c.eigen_top_k; }, 0));
    f.push_back(integer("eigen.theta_points", [](RunConfig& c) -> int& { return c.grid.theta_points; }, 1));
    f.push_back(integer("eigen.theta_dot_points", [](RunConfig& c) -> int& { return c.grid.theta_dot_points; }, 1));

    f.push_back(real("metrics.pendulum_theta", [](RunConfig& c) -> double& { return c.thresholds.pendulum_theta; }));
    f.push_back(real("metrics.pendulum_theta_dot", [](RunConfig& c) -> double& { return c.thresholds.pendulum_theta_dot; }));
    f.push_back(integer("metrics.pendulum_window", [](RunConfig& c) -> int& { return c.thresholds.pendulum_window; }, 1));
    f.push_back(real("metrics.lander_x", [](RunConfig& c) -> double& { return c.thresholds.lander_x; }));
    f.push_back(real("metrics.lander_y", [](RunConfig& c) -> double& { return c.thresholds.lander_y; }));
    f.push_back(real("metrics.lander_theta", [](RunConfig& c) -> double& { return c.thresholds.lander_theta; }));
    f.push_back(real("metrics.lander_speed", [](RunConfig& c) -> double& { return c.thresholds.lander_speed; }));
    return f;
  }();
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig RunConfig::defaults(envs::EnvKind kind) {
  RunConfig c;
  c.env = kind;
  if (kind == envs::EnvKind::Pendulum) {
    c.q_diag = linalg::Vec::Ones(3);
    c.r_diag = linalg::Vec::Constant(1, 0.1);
    c.train.lifted_dim = 20;
    c.law = LawKind::Mpc;
    c.game_steps = 400;
    c.collect_episodes = 5;
    c.collect_steps = 380;
  } else {
    c.q_diag = linalg::Vec::Ones(6);
    c.r_diag = linalg::Vec::Constant(2, 0.1);
    c.train.lifted_dim = 30;
    c.law = LawKind::Lqr;
    c.game_steps = 1000;
    c.collect_episodes = 5;
    c.collect_steps = 380;
  }
  return c;
}

envs::Env RunConfig::make_env() const {
  return env == envs::EnvKind::Pendulum ? envs::Env(pendulum) : envs::Env(lander);
}

namespace {

linalg::Mat diag_of(const linalg::Vec& d, Eigen::Index dim, const char* key) {
  if (d.size() == 1) return d(0) * linalg::Mat::Identity(dim, dim);
  if (d.size() != dim) {
    throw Error(ErrorKind::Config, std::string("key '") + key + "' needs 1 or " +
                                       std::to_string(dim) + " entries");
  }
  return d.asDiagonal();
}

}  // namespace

linalg::Mat RunConfig::q_matrix() const {
  return diag_of(q_diag, make_env().spec().state_dim, "control.q");
}

linalg::Mat RunConfig::r_matrix() const {
  return diag_of(r_diag, make_env().spec().control_dim, "control.r");
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (f.key == key) {
      f.set(*this, value);
      return;
    }
  }
  throw Error(ErrorKind::Config, "unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  for (const auto& [k, v] : entries()) out << k << " = " << v << '\n';
  return out.str();
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text,
                                                                   const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Config, origin + ":" + std::to_string(line_no) +
                                         ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorKind::Config, origin + ":" + std::to_string(line_no) + ": empty key");
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::string text;
  for (const std::string& l : csv::read_lines(path)) text += l + "\n";
  return parse_config_text(text, path);
}

RunConfig build_config(const std::vector<std::pair<std::string, std::string>>& file_entries,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
  envs::EnvKind kind = envs::EnvKind::Pendulum;
  for (const auto& [k, v] : file_entries)
    if (k == "env.name") kind = envs::parse_env_kind(v);
  for (const auto& [k, v] : overrides)
    if (k == "env.name") kind = envs::parse_env_kind(v);

  RunConfig cfg = RunConfig::defaults(kind);
  for (const auto& [k, v] : file_entries) cfg.set(k, v);
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  cfg.env = kind;
  return cfg;
}

}  // namespace dkrc
