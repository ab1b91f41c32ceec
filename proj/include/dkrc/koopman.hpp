#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dkrc/data.hpp"
#include "dkrc/linalg.hpp"
#include "dkrc/net.hpp"

namespace dkrc::koopman {

using linalg::Mat;
using linalg::Vec;

/// Identified lifted linear model
///   z = psi(x) - psi(x*),   v = u - u0,   z' = A z + B v,   x ~ C z + x*.
/// psi(x) = net((x - in_shift) ./ in_scale), or [x; net(...)] when
/// state_in_lift is set. Empty in_shift means no input scaling.
struct LiftedModel {
  net::MlpParams psi;
  Vec in_shift;
  Vec in_scale;
  bool state_in_lift = false;
  Vec u0;
  Mat a;
  Mat b;
  Mat c;
  Vec psi0;
  Vec goal;

  int obs_dim() const { return psi.in_dim(); }
  int lifted_dim() const { return psi.out_dim() + (state_in_lift ? obs_dim() : 0); }
  int control_dim() const { return static_cast<int>(b.cols()); }
};

/// Network input for raw observations (columns).
Mat net_input(const LiftedModel& model, const Mat& x);
/// psi(x) for a batch of observations (columns), before the goal offset.
Mat features(const LiftedModel& model, const Mat& x);
/// Same, evaluated with the serial reference forward pass.
Mat features_reference(const LiftedModel& model, const Mat& x);

Vec lift(const LiftedModel& model, const Vec& x);
Mat lift(const LiftedModel& model, const Mat& x);

struct L1Result {
  double value = 0.0;
  Mat k;          // z_next * pinv(z)
  Mat grad_z;     // d value / d z
  Mat grad_znext; // d value / d z_next
  Mat grad_v;     // d value / d v, controlled form only
};

/// (1/(L-1)) sum_t ||z_next_t - K z_t|| with K fitted to this batch and held
/// constant for the gradient. A single pair divides by 1.
L1Result loss_l1(const Mat& z, const Mat& z_next,
                 double tol = linalg::kDefaultRankTol);
/// Controlled form: K = z_next * pinv([z; v]) and residual z_next - K [z; v].
L1Result loss_l1(const Mat& z, const Mat& z_next, const Mat& v,
                 double tol = linalg::kDefaultRankTol);
double loss_l1(const LiftedModel& model, const Mat& x, const Mat& x_next,
               double tol = linalg::kDefaultRankTol);

struct L2Terms {
  int rank = 0;
  double rank_term = 0.0;
  double a_norm = 0.0;
  double b_norm = 0.0;

  double value() const { return rank_term + a_norm + b_norm; }
};

/// (N - rank(ctrb(A, B))) + ||A||_1 + ||B||_1. With `smooth`, the rank term
/// becomes N - sum_i s_i / (s_i + eps * s_max).
L2Terms loss_l2(const Mat& a, const Mat& b, double tol = linalg::kDefaultRankTol,
                bool smooth = false, double smooth_eps = 1e-3);

struct AbPair {
  Mat a;
  Mat b;
};

/// Least-squares [A, B] = Z' W^T (W W^T)^+ with W = [Z; V].
AbPair fit_ab(const Mat& z, const Mat& z_next, const Mat& v,
              double tol = linalg::kDefaultRankTol);
/// (1 - blend) * old + blend * fit_ab(...).
AbPair update_ab(const AbPair& old, const Mat& z, const Mat& z_next,
                 const Mat& v, double blend,
                 double tol = linalg::kDefaultRankTol);

/// Output matrix with x - x* ~= C psi(x). Constrained mode enforces
/// C psi0 = 0 by solving over an orthonormal basis of psi0's complement.
Mat solve_c(const Mat& x, const Mat& psi_x, const Vec& psi0, const Vec& goal,
            bool constrained, double tol = linalg::kDefaultRankTol);

/// Mean one-step residual ||z' - A z - B (u - u0)|| over the columns.
double one_step_error(const LiftedModel& model, const Mat& x, const Mat& x_next,
                      const Mat& u);

/// Loss that drives the lifting gradients.
///   Batch:         K = z' pinv(z) per minibatch, residual z' - K z
///   BatchControls: K = z' pinv([z; v]) per minibatch, residual z' - K [z; v]
///   FrozenAb:      residual z' - A z - B v with the epoch's frozen A, B
enum class L1Form { Batch, BatchControls, FrozenAb };
const char* to_string(L1Form f);
L1Form parse_l1_form(const std::string& s);

struct TrainConfig {
  int lifted_dim = 20;
  int hidden = 32;
  int epochs = 300;
  int batch = 64;
  double blend = 0.5;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double rank_tol = linalg::kDefaultRankTol;
  bool smooth_rank = false;
  double smooth_eps = 1e-3;
  L1Form l1_form = L1Form::FrozenAb;
  bool normalize_input = false;  // standardize network inputs with train-split moments
  bool state_in_lift = false;    // lifted_dim counts the n state coordinates
  bool constrained_c = true;
  bool keep_best = true;
  std::uint64_t seed = 0;
};

struct EpochReport {
  int epoch = 0;
  double l1 = 0.0;
  double l2 = 0.0;
  double total = 0.0;
  int rank = 0;
  double val_err = 0.0;

  bool operator==(const EpochReport&) const = default;
};

struct TrainReport {
  std::vector<EpochReport> epochs;
  int selected_epoch = -1;  // epoch whose snapshot was kept, -1 if untrained

  bool operator==(const TrainReport&) const = default;
};

/// `epoch,l1,l2,total,rank,val_err`
void save_report_csv(const TrainReport& report, const std::string& path);

struct TrainResult {
  LiftedModel model;
  TrainReport report;
};

/// Alternates Adam steps on the lifting (A, B frozen) with an analytic
/// blended A/B refit at the end of every epoch, then solves C.
TrainResult train(const data::Dataset& dataset, const Vec& goal,
                  const TrainConfig& config);

/// x_hat_1..x_hat_L (columns) from x under controls v_0..v_{L-1} (columns).
Mat predict(const LiftedModel& model, const Vec& x, const Mat& v);

void save_model(const LiftedModel& model, const TrainConfig& config,
                const std::string& path);
LiftedModel load_model(const std::string& path, TrainConfig* config = nullptr);

}  // namespace dkrc::koopman
