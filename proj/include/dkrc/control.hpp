#pragma once

#include <variant>

#include "dkrc/envs.hpp"
#include "dkrc/koopman.hpp"
#include "dkrc/linalg.hpp"

namespace dkrc::control {

using linalg::Mat;
using linalg::Vec;

struct DareOptions {
  double tol = 1e-10;  // on ||P_{k+1} - P_k||_F, relative to max(1, ||P||_F)
  int max_iter = 10000;
};

/// Fixed-point iteration
///   P <- Qz + A^T (P - P B (R + B^T P B)^{-1} B^T P) A
/// symmetrized every step. Throws NoConvergence (with the last residual) or
/// NotStabilizable when the iterate diverges.
Mat solve_dare(const Mat& a, const Mat& b, const Mat& qz, const Mat& r,
               const DareOptions& opts = {});

/// ||P - (Qz + A^T P A - A^T P B (R + B^T P B)^{-1} B^T P A)||_F
double dare_residual(const Mat& p, const Mat& a, const Mat& b, const Mat& qz,
                     const Mat& r);

/// K = (R + B^T P B)^{-1} B^T P A. Throws SingularR if R + B^T P B is not
/// positive definite.
Mat lqr_gain(const Mat& p, const Mat& a, const Mat& b, const Mat& r);

/// Lifted-space state weight C^T Q C.
Mat lifted_weight(const Mat& c, const Mat& q);

struct LqrLaw {
  Mat k;  // m x N
  Mat p;  // N x N
  Mat q;  // n x n
  Mat r;  // m x m
};

LqrLaw design_lqr(const koopman::LiftedModel& model, const Mat& q, const Mat& r,
                  const DareOptions& opts = {});

/// Finite-horizon problem in v = u - u0 with box bounds; the terminal weight
/// equals the stage weight C^T Q C.
struct MpcProblem {
  int horizon = 1;
  Mat q;
  Mat r;
  Vec v_lo;
  Vec v_hi;
};

/// Shifts physical bounds [u_lo, u_hi] by the model's u0.
MpcProblem make_mpc_problem(const koopman::LiftedModel& model, int horizon,
                            const Mat& q, const Mat& r, const Vec& u_lo,
                            const Vec& u_hi);

struct MpcOptions {
  double tol = 1e-8;  // on the gradient-map norm
  int max_iter = 10000;
};

struct MpcPlan {
  Mat v;  // m x L
  Mat z;  // N x (L + 1), z.col(0) = z0
  double cost = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
};

/// Condensed box-constrained QP over the stacked controls
///   J(v) = v^T H v + 2 (F z0)^T v + const
/// built once per (A, B, Qz, R, L) and re-solved for each z0.
class CondensedMpc {
 public:
  CondensedMpc(const Mat& a, const Mat& b, const Mat& qz, const Mat& r,
               int horizon);

  /// Accelerated projected gradient with step 1/Lipschitz and gradient
  /// restarts. `warm_start` (m x L) may be empty. Throws NoConvergence with
  /// the final residual when the tolerance is not met.
  MpcPlan plan(const Vec& z0, const Vec& v_lo, const Vec& v_hi,
               const MpcOptions& opts = {}, const Mat& warm_start = {}) const;

  const Mat& hessian() const { return h_; }
  Vec linear_term(const Vec& z0) const { return f_ * z0; }
  double lipschitz() const { return lipschitz_; }
  int horizon() const { return horizon_; }

  /// Cost of a control sequence by direct simulation.
  double cost(const Vec& z0, const Mat& v) const;

 private:
  Mat a_, b_, qz_, r_;
  int horizon_;
  Mat h_;  // mL x mL
  Mat f_;  // mL x N
  double lipschitz_ = 0.0;
};

MpcPlan mpc_plan(const koopman::LiftedModel& model, const Vec& z0,
                 const MpcProblem& prob, const MpcOptions& opts = {});

/// CSV `t,z0..,v0..,u0..,cost` with one row per planned step; `cost` is the
/// stage cost z^T C^T Q C z + v^T R v, and the terminal row leaves v and u as
/// `nan`. u = u0 + v before clamping.
void save_plan_csv(const MpcPlan& plan, const koopman::LiftedModel& model,
                   const MpcProblem& prob, const std::string& path);

using ControlLaw = std::variant<LqrLaw, MpcProblem>;

/// x -> z = lift(x); v = -K z (LQR) or the first receding-horizon control
/// (MPC); u = clamp(u0 + v, [u_lo, u_hi]).
envs::Policy make_policy(const koopman::LiftedModel& model, const ControlLaw& law,
                         const Vec& u_lo, const Vec& u_hi,
                         const MpcOptions& mpc_opts = {});

}  // namespace dkrc::control
