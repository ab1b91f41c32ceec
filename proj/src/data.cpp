#include "dkrc/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "dkrc/csv.hpp"
#include "dkrc/error.hpp"

namespace dkrc::data {

const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view s, std::size_t line) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw Error(ErrorKind::ParseError, "line " + std::to_string(line) +
                                         ": unknown split '" + std::string(s) +
                                         "'");
}

std::size_t Dataset::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(triples.begin(), triples.end(),
                    [s](const Triple& t) { return t.split == s; }));
}

std::vector<std::size_t> Dataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (triples[i].split == s) out.push_back(i);
  }
  return out;
}

namespace {

template <typename Getter>
Mat stack(const Dataset& d, const std::vector<std::size_t>& idx, int rows,
          Getter get) {
  Mat out(rows, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = get(d.triples[idx[j]]);
  }
  return out;
}

}  // namespace

Mat Dataset::stack_x(const std::vector<std::size_t>& idx) const {
  return stack(*this, idx, obs_dim, [](const Triple& t) -> const Vec& { return t.x; });
}
Mat Dataset::stack_y(const std::vector<std::size_t>& idx) const {
  return stack(*this, idx, obs_dim, [](const Triple& t) -> const Vec& { return t.y; });
}
Mat Dataset::stack_u(const std::vector<std::size_t>& idx) const {
  return stack(*this, idx, control_dim,
               [](const Triple& t) -> const Vec& { return t.u; });
}

bool Dataset::operator==(const Dataset& o) const {
  if (obs_dim != o.obs_dim || control_dim != o.control_dim ||
      triples.size() != o.triples.size())
    return false;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const Triple& a = triples[i];
    const Triple& b = o.triples[i];
    if (a.episode != b.episode || a.t != b.t || a.split != b.split ||
        a.x != b.x || a.y != b.y || a.u != b.u)
      return false;
  }
  return true;
}

OuNoise OuNoise::with_defaults(int dim, double dt) {
  OuNoise n;
  n.mu = Vec::Zero(dim);
  n.state = Vec::Zero(dim);
  n.dt = dt;
  return n;
}

Vec ou_step(OuNoise& noise, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scale = noise.sigma * std::sqrt(noise.dt);
  for (Eigen::Index i = 0; i < noise.state.size(); ++i) {
    noise.state(i) += noise.theta_rate * (noise.mu(i) - noise.state(i)) * noise.dt;
    if (scale != 0.0) noise.state(i) += scale * gauss(rng);
  }
  return noise.state;
}

Dataset collect(const envs::Env& env, int episodes, int steps,
                const OuNoise& noise, std::uint64_t seed) {
  if (episodes < 1 || steps < 1) {
    throw Error(ErrorKind::BadDims, "collect needs episodes >= 1 and steps >= 1");
  }
  const envs::EnvSpec spec = env.spec();
  if (noise.state.size() != spec.control_dim || noise.mu.size() != spec.control_dim) {
    throw Error(ErrorKind::DimensionMismatch,
                "OU noise dimension does not match the control dimension");
  }

  // Episodes are generated independently and merged in order.
  std::vector<std::vector<Triple>> per_episode(static_cast<std::size_t>(episodes));
#pragma omp parallel for schedule(dynamic)
  for (int e = 0; e < episodes; ++e) {
    Rng rng(derive_seed(seed, SeedStream::Collect, static_cast<std::uint64_t>(e)));
    OuNoise ou = noise;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vec state = env.reset(rng());
    Vec obs = env.observe(state);
    auto& out = per_episode[static_cast<std::size_t>(e)];
    for (int t = 0; t < steps; ++t) {
      Vec u(spec.control_dim);
      for (int i = 0; i < spec.control_dim; ++i) {
        u(i) = spec.control_lo(i) + (spec.control_hi(i) - spec.control_lo(i)) * unit(rng);
      }
      u = env.clamp_control(u + ou_step(ou, rng));
      Vec next = env.step(state, u);
      Vec next_obs = env.observe(next);
      out.push_back(Triple{e, t, Split::Train, obs, next_obs, u});
      state = std::move(next);
      obs = std::move(next_obs);
      if (env.terminated(state)) break;
    }
  }

  Dataset d;
  d.obs_dim = spec.state_dim;
  d.control_dim = spec.control_dim;
  for (auto& ep : per_episode) {
    for (auto& tr : ep) d.triples.push_back(std::move(tr));
  }
  return d;
}

Dataset split(Dataset d, const std::array<double, 3>& fractions,
              std::uint64_t seed) {
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9 ||
      std::any_of(fractions.begin(), fractions.end(),
                  [](double f) { return !(f >= 0.0); })) {
    throw Error(ErrorKind::BadFractions,
                "split fractions must be non-negative and sum to 1");
  }
  const std::size_t n = d.triples.size();
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions[1]));
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions[2]));
  const std::size_t n_train = n - n_val - n_test;

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(seed, SeedStream::Split));
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t k = 0; k < n; ++k) {
    d.triples[perm[k]].split = k < n_train ? Split::Train
                              : k < n_train + n_val ? Split::Val
                                                    : Split::Test;
  }
  return d;
}

void save(const Dataset& d, const std::string& path) {
  std::ostringstream out;
  out << "episode,t,split";
  for (int i = 0; i < d.obs_dim; ++i) out << ",x" << i;
  for (int i = 0; i < d.obs_dim; ++i) out << ",y" << i;
  for (int i = 0; i < d.control_dim; ++i) out << ",u" << i;
  out << '\n';
  for (const Triple& t : d.triples) {
    out << t.episode << ',' << t.t << ',' << to_string(t.split);
    for (Eigen::Index i = 0; i < t.x.size(); ++i) out << ',' << csv::format_double(t.x(i));
    for (Eigen::Index i = 0; i < t.y.size(); ++i) out << ',' << csv::format_double(t.y(i));
    for (Eigen::Index i = 0; i < t.u.size(); ++i) out << ',' << csv::format_double(t.u(i));
    out << '\n';
  }
  csv::write_file(path, out.str());
}

Dataset load(const std::string& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) {
    throw Error(ErrorKind::ParseError, "line 1: missing header in '" + path + "'");
  }
  const auto header = csv::split_fields(lines[0]);
  if (header.size() < 3 || header[0] != "episode" || header[1] != "t" ||
      header[2] != "split") {
    throw Error(ErrorKind::ParseError,
                "line 1: header must start with 'episode,t,split'");
  }
  Dataset d;
  for (std::size_t i = 3; i < header.size(); ++i) {
    const char c = header[i].empty() ? '?' : header[i][0];
    if (c == 'x') ++d.obs_dim;
    else if (c == 'u') ++d.control_dim;
    else if (c != 'y')
      throw Error(ErrorKind::ParseError,
                  "line 1: unexpected column '" + std::string(header[i]) + "'");
  }
  if (header.size() != static_cast<std::size_t>(3 + 2 * d.obs_dim + d.control_dim)) {
    throw Error(ErrorKind::ParseError, "line 1: x and y column counts differ");
  }
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const std::size_t line_no = li + 1;
    const auto f = csv::split_fields(lines[li]);
    if (f.size() != header.size()) {
      throw Error(ErrorKind::ParseError,
                  "line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(f.size()));
    }
    Triple t;
    t.episode = static_cast<int>(csv::parse_int(f[0], line_no));
    t.t = static_cast<int>(csv::parse_int(f[1], line_no));
    t.split = parse_split(f[2], line_no);
    t.x.resize(d.obs_dim);
    t.y.resize(d.obs_dim);
    t.u.resize(d.control_dim);
    std::size_t k = 3;
    for (int i = 0; i < d.obs_dim; ++i) t.x(i) = csv::parse_double(f[k++], line_no);
    for (int i = 0; i < d.obs_dim; ++i) t.y(i) = csv::parse_double(f[k++], line_no);
    for (int i = 0; i < d.control_dim; ++i) t.u(i) = csv::parse_double(f[k++], line_no);
    if (!t.x.allFinite() || !t.y.allFinite() || !t.u.allFinite()) {
      throw Error(ErrorKind::ParseError,
                  "line " + std::to_string(line_no) + ": non-finite value");
    }
    d.triples.push_back(std::move(t));
  }
  return d;
}

}  // namespace dkrc::data
