#pragma once

#include <cstdint>
#include <vector>

#include "dkrc/linalg.hpp"

namespace dkrc::net {

using linalg::Mat;
using linalg::Vec;

struct Layer {
  Mat weight;  // out x in
  Vec bias;    // out
};

/// Fully connected network. Every layer but the last applies tanh; the last
/// is linear. Samples are columns.
struct MlpParams {
  std::vector<Layer> layers;

  int in_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
  int out_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }
  std::size_t num_params() const;

  Vec flatten() const;
  void assign(const Vec& flat);

  bool operator==(const MlpParams&) const;
};

inline constexpr int kHiddenLayers = 4;

/// Glorot-uniform weights, zero biases. Requires out_dim > in_dim.
MlpParams init(int in_dim, int out_dim, int hidden, std::uint64_t seed,
               int hidden_layers = kHiddenLayers);

/// Batched evaluation, parallel over fixed column chunks.
Mat forward(const MlpParams& p, const Mat& x);
/// Single-sample convenience.
Vec forward(const MlpParams& p, const Vec& x);

struct Gradients {
  std::vector<Layer> layers;
  Mat input;  // d(loss)/d(x), same shape as the batch

  Vec flatten() const;
};

/// Reverse-mode gradients of sum_j <upstream_j, forward(x)_j>. Chunks are
/// reduced in a fixed order, so the result does not depend on the thread
/// count.
Gradients backward(const MlpParams& p, const Mat& x, const Mat& upstream);

/// Plain per-sample loops with no threading or BLAS-style kernels. Kept as
/// the reference the parallel kernels are tested and benchmarked against.
Mat forward_reference(const MlpParams& p, const Mat& x);
Gradients backward_reference(const MlpParams& p, const Mat& x,
                             const Mat& upstream);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  Vec m;
  Vec v;
};

/// Bias-corrected Adam update of a flat parameter vector in place.
void adam_step(AdamState& opt, Vec& params, const Vec& grads);
void adam_step(AdamState& opt, MlpParams& params, const Gradients& grads);

}  // namespace dkrc::net
