#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dkrc/envs.hpp"
#include "dkrc/linalg.hpp"
#include "dkrc/rng.hpp"

namespace dkrc::data {

using linalg::Mat;
using linalg::Vec;

enum class Split { Train, Val, Test };

const char* to_string(Split s);
Split parse_split(std::string_view s, std::size_t line);

/// One transition (x_t, x_{t+1}, u_t) in observation space.
struct Triple {
  int episode = 0;
  int t = 0;
  Split split = Split::Train;
  Vec x;
  Vec y;
  Vec u;
};

struct Dataset {
  int obs_dim = 0;
  int control_dim = 0;
  std::vector<Triple> triples;

  std::size_t size() const { return triples.size(); }
  std::size_t count(Split s) const;
  std::vector<std::size_t> indices(Split s) const;

  /// Column-stacked X, Y, U over the given triple indices.
  Mat stack_x(const std::vector<std::size_t>& idx) const;
  Mat stack_y(const std::vector<std::size_t>& idx) const;
  Mat stack_u(const std::vector<std::size_t>& idx) const;

  bool operator==(const Dataset&) const;
};

// Discretized Ornstein-Uhlenbeck process
//   s <- s + theta_rate (mu - s) dt + sigma sqrt(dt) N(0, I)
struct OuNoise {
  Vec mu;
  double theta_rate = 0.15;
  double sigma = 0.2;
  double dt = 0.05;
  Vec state;

  static OuNoise with_defaults(int dim, double dt);
};

Vec ou_step(OuNoise& noise, Rng& rng);

/// Rolls out `episodes` episodes of at most `steps` steps under
/// clamp(uniform-random control + OU noise). Episode e uses a seed derived
/// from (seed, e), so episodes are independent of each other.
Dataset collect(const envs::Env& env, int episodes, int steps,
                const OuNoise& noise, std::uint64_t seed);

/// Seeded permutation, then contiguous train/val/test blocks. Val and test
/// counts are floor(n * fraction); the remainder goes to train.
Dataset split(Dataset d, const std::array<double, 3>& fractions,
              std::uint64_t seed);

/// CSV `episode,t,split,x0..,y0..,u0..`; doubles are written in shortest
/// round-trip form.
void save(const Dataset& d, const std::string& path);
Dataset load(const std::string& path);

}  // namespace dkrc::data
