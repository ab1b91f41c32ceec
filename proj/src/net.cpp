#include "dkrc/net.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dkrc/error.hpp"
#include "dkrc/rng.hpp"

namespace dkrc::net {

namespace {

constexpr Eigen::Index kChunk = 32;

void check_input(const MlpParams& p, const Mat& x) {
  if (p.layers.empty()) throw Error(ErrorKind::BadDims, "network has no layers");
  if (x.rows() != p.in_dim()) {
    throw Error(ErrorKind::DimensionMismatch,
                "network expects inputs of dimension " + std::to_string(p.in_dim()) +
                    ", got " + std::to_string(x.rows()));
  }
}

Eigen::Index chunk_count(Eigen::Index cols) { return (cols + kChunk - 1) / kChunk; }

// Forward pass over one block of columns, keeping every activation.
std::vector<Mat> forward_cached(const MlpParams& p, const Mat& x) {
  std::vector<Mat> acts;
  acts.reserve(p.layers.size() + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const Layer& layer = p.layers[l];
    Mat h = layer.weight * acts.back();
    h.colwise() += layer.bias;
    if (l + 1 < p.layers.size()) h = h.array().tanh().matrix();
    acts.push_back(std::move(h));
  }
  return acts;
}

Gradients zero_gradients(const MlpParams& p, Eigen::Index batch) {
  Gradients g;
  g.layers.reserve(p.layers.size());
  for (const Layer& layer : p.layers) {
    g.layers.push_back(Layer{Mat::Zero(layer.weight.rows(), layer.weight.cols()),
                             Vec::Zero(layer.bias.size())});
  }
  g.input = Mat::Zero(p.in_dim(), batch);
  return g;
}

}  // namespace

std::size_t MlpParams::num_params() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Vec MlpParams::flatten() const {
  Vec flat(static_cast<Eigen::Index>(num_params()));
  Eigen::Index k = 0;
  for (const Layer& l : layers) {
    flat.segment(k, l.weight.size()) = l.weight.reshaped();
    k += l.weight.size();
    flat.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
  return flat;
}

void MlpParams::assign(const Vec& flat) {
  if (flat.size() != static_cast<Eigen::Index>(num_params())) {
    throw Error(ErrorKind::DimensionMismatch, "flat parameter vector has wrong length");
  }
  Eigen::Index k = 0;
  for (Layer& l : layers) {
    l.weight.reshaped() = flat.segment(k, l.weight.size());
    k += l.weight.size();
    l.bias = flat.segment(k, l.bias.size());
    k += l.bias.size();
  }
}

bool MlpParams::operator==(const MlpParams& o) const {
  if (layers.size() != o.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].weight.rows() != o.layers[i].weight.rows() ||
        layers[i].weight.cols() != o.layers[i].weight.cols() ||
        layers[i].weight != o.layers[i].weight || layers[i].bias != o.layers[i].bias)
      return false;
  }
  return true;
}

Vec Gradients::flatten() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  Vec flat(static_cast<Eigen::Index>(n));
  Eigen::Index k = 0;
  for (const Layer& l : layers) {
    flat.segment(k, l.weight.size()) = l.weight.reshaped();
    k += l.weight.size();
    flat.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
  return flat;
}

MlpParams init(int in_dim, int out_dim, int hidden, std::uint64_t seed,
               int hidden_layers) {
  if (in_dim < 1 || out_dim <= in_dim) {
    throw Error(ErrorKind::BadDims, "lifted dimension " + std::to_string(out_dim) +
                                        " must exceed input dimension " +
                                        std::to_string(in_dim));
  }
  if (hidden < 1 || hidden_layers < 0) {
    throw Error(ErrorKind::BadDims, "hidden width and depth must be positive");
  }
  Rng rng(seed);
  MlpParams p;
  int fan_in = in_dim;
  for (int l = 0; l <= hidden_layers; ++l) {
    const int fan_out = l == hidden_layers ? out_dim : hidden;
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Layer layer{Mat(fan_out, fan_in), Vec::Zero(fan_out)};
    // Column-major fill keeps the draw order tied to the storage order.
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = dist(rng);
    p.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  return p;
}

Mat forward(const MlpParams& p, const Mat& x) {
  check_input(p, x);
  Mat out(p.out_dim(), x.cols());
  const Eigen::Index chunks = chunk_count(x.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    const Eigen::Index start = c * kChunk;
    const Eigen::Index len = std::min(kChunk, x.cols() - start);
    Mat a = x.middleCols(start, len);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      Mat h = p.layers[l].weight * a;
      h.colwise() += p.layers[l].bias;
      if (l + 1 < p.layers.size()) h = h.array().tanh().matrix();
      a = std::move(h);
    }
    out.middleCols(start, len) = a;
  }
  return out;
}

Vec forward(const MlpParams& p, const Vec& x) {
  return forward(p, Mat(x)).col(0);
}

Gradients backward(const MlpParams& p, const Mat& x, const Mat& upstream) {
  check_input(p, x);
  if (upstream.rows() != p.out_dim() || upstream.cols() != x.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "upstream gradient shape does not match the forward output");
  }
  const Eigen::Index chunks = chunk_count(x.cols());
  std::vector<Gradients> partial(static_cast<std::size_t>(chunks));
  Mat input_grad(x.rows(), x.cols());

#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    const Eigen::Index start = c * kChunk;
    const Eigen::Index len = std::min(kChunk, x.cols() - start);
    const std::vector<Mat> acts = forward_cached(p, x.middleCols(start, len));
    Gradients& g = partial[static_cast<std::size_t>(c)];
    g.layers.resize(p.layers.size());
    Mat delta = upstream.middleCols(start, len);
    for (std::size_t l = p.layers.size(); l-- > 0;) {
      if (l + 1 < p.layers.size()) {
        delta.array() *= 1.0 - acts[l + 1].array().square();
      }
      g.layers[l].weight = delta * acts[l].transpose();
      g.layers[l].bias = delta.rowwise().sum();
      delta = p.layers[l].weight.transpose() * delta;
    }
    input_grad.middleCols(start, len) = delta;
  }

  Gradients total = zero_gradients(p, 0);
  for (const Gradients& g : partial) {
    for (std::size_t l = 0; l < total.layers.size(); ++l) {
      total.layers[l].weight += g.layers[l].weight;
      total.layers[l].bias += g.layers[l].bias;
    }
  }
  total.input = std::move(input_grad);
  return total;
}

Mat forward_reference(const MlpParams& p, const Mat& x) {
  check_input(p, x);
  Mat out(p.out_dim(), x.cols());
  for (Eigen::Index s = 0; s < x.cols(); ++s) {
    std::vector<double> a(x.col(s).data(), x.col(s).data() + x.rows());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      const Layer& layer = p.layers[l];
      std::vector<double> h(static_cast<std::size_t>(layer.weight.rows()));
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
        double acc = layer.bias(i);
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
          acc += layer.weight(i, j) * a[static_cast<std::size_t>(j)];
        h[static_cast<std::size_t>(i)] = l + 1 < p.layers.size() ? std::tanh(acc) : acc;
      }
      a = std::move(h);
    }
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, s) = a[static_cast<std::size_t>(i)];
  }
  return out;
}

Gradients backward_reference(const MlpParams& p, const Mat& x,
                             const Mat& upstream) {
  check_input(p, x);
  if (upstream.rows() != p.out_dim() || upstream.cols() != x.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "upstream gradient shape does not match the forward output");
  }
  Gradients g = zero_gradients(p, x.cols());
  const std::size_t depth = p.layers.size();
  for (Eigen::Index s = 0; s < x.cols(); ++s) {
    std::vector<std::vector<double>> acts(depth + 1);
    acts[0].assign(x.col(s).data(), x.col(s).data() + x.rows());
    for (std::size_t l = 0; l < depth; ++l) {
      const Layer& layer = p.layers[l];
      acts[l + 1].resize(static_cast<std::size_t>(layer.weight.rows()));
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
        double acc = layer.bias(i);
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
          acc += layer.weight(i, j) * acts[l][static_cast<std::size_t>(j)];
        acts[l + 1][static_cast<std::size_t>(i)] = l + 1 < depth ? std::tanh(acc) : acc;
      }
    }
    std::vector<double> delta(upstream.col(s).data(),
                              upstream.col(s).data() + upstream.rows());
    for (std::size_t l = depth; l-- > 0;) {
      const Layer& layer = p.layers[l];
      if (l + 1 < depth) {
        for (std::size_t i = 0; i < delta.size(); ++i) {
          const double a = acts[l + 1][i];
          delta[i] *= 1.0 - a * a;
        }
      }
      std::vector<double> prev(static_cast<std::size_t>(layer.weight.cols()), 0.0);
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
        const double d = delta[static_cast<std::size_t>(i)];
        g.layers[l].bias(i) += d;
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
          g.layers[l].weight(i, j) += d * acts[l][static_cast<std::size_t>(j)];
          prev[static_cast<std::size_t>(j)] += layer.weight(i, j) * d;
        }
      }
      delta = std::move(prev);
    }
    for (Eigen::Index i = 0; i < x.rows(); ++i) g.input(i, s) = delta[static_cast<std::size_t>(i)];
  }
  return g;
}

void adam_step(AdamState& opt, Vec& params, const Vec& grads) {
  if (params.size() != grads.size()) {
    throw Error(ErrorKind::DimensionMismatch, "Adam: parameter and gradient sizes differ");
  }
  if (opt.m.size() == 0 && opt.step == 0) {
    opt.m = Vec::Zero(params.size());
    opt.v = Vec::Zero(params.size());
  }
  if (opt.m.size() != params.size()) {
    throw Error(ErrorKind::DimensionMismatch, "Adam: moment buffers do not match parameters");
  }
  ++opt.step;
  opt.m = opt.beta1 * opt.m + (1.0 - opt.beta1) * grads;
  opt.v = opt.beta2 * opt.v + (1.0 - opt.beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  params.array() -= opt.lr * (opt.m.array() / c1) /
                    ((opt.v.array() / c2).sqrt() + opt.eps);
}

void adam_step(AdamState& opt, MlpParams& params, const Gradients& grads) {
  Vec flat = params.flatten();
  adam_step(opt, flat, grads.flatten());
  params.assign(flat);
}

}  // namespace dkrc::net
