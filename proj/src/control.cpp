#include "dkrc/control.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <string>

#include "dkrc/csv.hpp"
#include "dkrc/error.hpp"

namespace dkrc::control {

namespace {

void check_system(const Mat& a, const Mat& b, const Mat& qz, const Mat& r) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.rows() != n || qz.rows() != n || qz.cols() != n ||
      r.rows() != b.cols() || r.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "inconsistent A/B/Q/R dimensions");
  }
}

}  // namespace

Mat lifted_weight(const Mat& c, const Mat& q) {
  if (q.rows() != c.rows() || q.cols() != c.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "Q must be n x n with n = rows(C)");
  }
  Mat qz = c.transpose() * q * c;
  return 0.5 * (qz + qz.transpose());
}

double dare_residual(const Mat& p, const Mat& a, const Mat& b, const Mat& qz,
                     const Mat& r) {
  const Mat btp = b.transpose() * p;
  const Mat s = r + btp * b;
  const Mat rhs = qz + a.transpose() * p * a -
                  a.transpose() * btp.transpose() * s.ldlt().solve(btp * a);
  return (p - rhs).norm();
}

Mat solve_dare(const Mat& a, const Mat& b, const Mat& qz, const Mat& r,
               const DareOptions& opts) {
  check_system(a, b, qz, r);
  Mat p = qz;
  double last = 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    const Mat btp = b.transpose() * p;
    Eigen::LDLT<Mat> s(r + btp * b);
    if (s.info() != Eigen::Success) {
      throw Error(ErrorKind::SingularR, "R + B^T P B is singular during DARE iteration");
    }
    Mat next = qz + a.transpose() * (p - btp.transpose() * s.solve(btp)) * a;
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite() || next.norm() > 1e14) {
      throw Error(ErrorKind::NotStabilizable,
                  "Riccati iterate diverged after " + std::to_string(it + 1) + " iterations");
    }
    last = (next - p).norm();
    p = std::move(next);
    if (last < opts.tol * std::max(1.0, p.norm())) return p;
  }
  throw Error(ErrorKind::NoConvergence,
              "DARE iteration did not converge in " + std::to_string(opts.max_iter) +
                  " iterations (last step " + std::to_string(last) + ")");
}

Mat lqr_gain(const Mat& p, const Mat& a, const Mat& b, const Mat& r) {
  if (p.rows() != a.rows() || p.cols() != a.rows() || b.rows() != a.rows() ||
      r.rows() != b.cols() || r.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "lqr_gain: inconsistent dimensions");
  }
  const Mat btp = b.transpose() * p;
  Eigen::LLT<Mat> s(r + btp * b);
  if (s.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularR, "R + B^T P B is not positive definite");
  }
  return s.solve(btp * a);
}

LqrLaw design_lqr(const koopman::LiftedModel& model, const Mat& q, const Mat& r,
                  const DareOptions& opts) {
  const Mat qz = lifted_weight(model.c, q);
  LqrLaw law;
  law.p = solve_dare(model.a, model.b, qz, r, opts);
  law.k = lqr_gain(law.p, model.a, model.b, r);
  law.q = q;
  law.r = r;
  return law;
}

MpcProblem make_mpc_problem(const koopman::LiftedModel& model, int horizon,
                            const Mat& q, const Mat& r, const Vec& u_lo,
                            const Vec& u_hi) {
  if (horizon < 1) throw Error(ErrorKind::BadDims, "MPC horizon must be >= 1");
  if (u_lo.size() != model.control_dim() || u_hi.size() != model.control_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "MPC bounds do not match the control dimension");
  }
  return MpcProblem{horizon, q, r, u_lo - model.u0, u_hi - model.u0};
}

CondensedMpc::CondensedMpc(const Mat& a, const Mat& b, const Mat& qz, const Mat& r,
                           int horizon)
    : a_(a), b_(b), qz_(qz), r_(r), horizon_(horizon) {
  check_system(a, b, qz, r);
  if (horizon < 1) throw Error(ErrorKind::BadDims, "MPC horizon must be >= 1");
  Eigen::LLT<Mat> r_check(r);
  if (r_check.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularR, "MPC needs R positive definite");
  }
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  const Eigen::Index len = horizon;

  // Row block t (t = 1..L) of the prediction: z_t = A^t z0 + sum_j A^{t-1-j} B v_j.
  std::vector<Mat> a_pow_b(static_cast<std::size_t>(len));  // A^k B
  a_pow_b[0] = b;
  for (Eigen::Index k = 1; k < len; ++k) a_pow_b[static_cast<std::size_t>(k)] = a * a_pow_b[static_cast<std::size_t>(k - 1)];

  Mat gamma = Mat::Zero(n * len, m * len);
  Mat phi(n * len, n);
  Mat a_pow = Mat::Identity(n, n);
  for (Eigen::Index t = 1; t <= len; ++t) {
    a_pow = a * a_pow;
    phi.middleRows((t - 1) * n, n) = a_pow;
    for (Eigen::Index j = 0; j < t; ++j) {
      gamma.block((t - 1) * n, j * m, n, m) = a_pow_b[static_cast<std::size_t>(t - 1 - j)];
    }
  }
  Mat q_gamma(n * len, m * len);
  Mat q_phi(n * len, n);
  for (Eigen::Index t = 0; t < len; ++t) {
    q_gamma.middleRows(t * n, n) = qz * gamma.middleRows(t * n, n);
    q_phi.middleRows(t * n, n) = qz * phi.middleRows(t * n, n);
  }
  h_ = gamma.transpose() * q_gamma;
  for (Eigen::Index t = 0; t < len; ++t) h_.block(t * m, t * m, m, m) += r;
  h_ = 0.5 * (h_ + h_.transpose());
  f_ = gamma.transpose() * q_phi;

  Eigen::SelfAdjointEigenSolver<Mat> eig(h_, Eigen::EigenvaluesOnly);
  lipschitz_ = 2.0 * eig.eigenvalues().maxCoeff();
}

double CondensedMpc::cost(const Vec& z0, const Mat& v) const {
  Vec z = z0;
  double j = 0.0;
  for (Eigen::Index t = 0; t < v.cols(); ++t) {
    j += z.dot(qz_ * z) + v.col(t).dot(r_ * v.col(t));
    z = a_ * z + b_ * v.col(t);
  }
  return j + z.dot(qz_ * z);
}

MpcPlan CondensedMpc::plan(const Vec& z0, const Vec& v_lo, const Vec& v_hi,
                           const MpcOptions& opts, const Mat& warm_start) const {
  const Eigen::Index m = b_.cols();
  const Eigen::Index len = horizon_;
  if (z0.size() != a_.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "MPC: z0 has the wrong dimension");
  }
  if (v_lo.size() != m || v_hi.size() != m || (v_hi - v_lo).minCoeff() < 0.0) {
    throw Error(ErrorKind::DimensionMismatch, "MPC: bounds must be m-vectors with lo <= hi");
  }
  const Vec lo = v_lo.replicate(len, 1);
  const Vec hi = v_hi.replicate(len, 1);
  const Vec g = f_ * z0;
  auto project = [&](const Vec& x) { return Vec(x.cwiseMax(lo).cwiseMin(hi)); };
  auto gradient = [&](const Vec& x) { return Vec(2.0 * (h_ * x + g)); };

  Vec x = Vec::Zero(m * len);
  if (warm_start.size() == m * len) x = warm_start.reshaped();
  x = project(x);

  MpcPlan out;
  const double lip = lipschitz_ > 0.0 ? lipschitz_ : 1.0;
  auto grad_map = [&](const Vec& p, const Vec& grad_p) {
    return lip * (p - project(p - grad_p / lip)).norm();
  };

  Vec y = x;
  double momentum = 1.0;
  Vec grad_x = gradient(x);
  out.kkt_residual = grad_map(x, grad_x);
  int it = 0;
  while (out.kkt_residual >= opts.tol && it < opts.max_iter) {
    const Vec grad_y = gradient(y);
    const Vec x_next = project(y - grad_y / lip);
    const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    // Restart the momentum when it points uphill.
    if (grad_y.dot(x_next - x) > 0.0) {
      momentum = 1.0;
      y = x_next;
    } else {
      y = x_next + ((momentum - 1.0) / momentum_next) * (x_next - x);
      momentum = momentum_next;
    }
    x = x_next;
    grad_x = gradient(x);
    out.kkt_residual = grad_map(x, grad_x);
    ++it;
  }
  out.iterations = it;
  if (out.kkt_residual >= opts.tol) {
    throw Error(ErrorKind::NoConvergence,
                "MPC projected gradient stopped after " + std::to_string(it) +
                    " iterations with gradient-map residual " +
                    std::to_string(out.kkt_residual));
  }

  out.v = x.reshaped(m, len);
  out.z.resize(a_.rows(), len + 1);
  out.z.col(0) = z0;
  for (Eigen::Index t = 0; t < len; ++t) out.z.col(t + 1) = a_ * out.z.col(t) + b_ * out.v.col(t);
  out.cost = cost(z0, out.v);
  return out;
}

MpcPlan mpc_plan(const koopman::LiftedModel& model, const Vec& z0, const MpcProblem& prob,
                 const MpcOptions& opts) {
  const CondensedMpc solver(model.a, model.b, lifted_weight(model.c, prob.q), prob.r,
                            prob.horizon);
  return solver.plan(z0, prob.v_lo, prob.v_hi, opts);
}

void save_plan_csv(const MpcPlan& plan, const koopman::LiftedModel& model,
                   const MpcProblem& prob, const std::string& path) {
  const Mat qz = lifted_weight(model.c, prob.q);
  const Eigen::Index len = plan.v.cols();
  if (plan.z.cols() != len + 1 || plan.z.rows() != qz.rows() ||
      plan.v.rows() != model.control_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "plan does not match the model");
  }
  std::ostringstream out;
  out << 't';
  for (Eigen::Index i = 0; i < plan.z.rows(); ++i) out << ",z" << i;
  for (Eigen::Index i = 0; i < plan.v.rows(); ++i) out << ",v" << i;
  for (Eigen::Index i = 0; i < plan.v.rows(); ++i) out << ",u" << i;
  out << ",cost\n";
  for (Eigen::Index t = 0; t <= len; ++t) {
    const Vec z = plan.z.col(t);
    double cost = z.dot(qz * z);
    out << t;
    for (Eigen::Index i = 0; i < z.size(); ++i) out << ',' << csv::format_double(z(i));
    if (t < len) {
      const Vec v = plan.v.col(t);
      const Vec u = model.u0 + v;
      cost += v.dot(prob.r * v);
      for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << csv::format_double(v(i));
      for (Eigen::Index i = 0; i < u.size(); ++i) out << ',' << csv::format_double(u(i));
    } else {
      for (Eigen::Index i = 0; i < 2 * plan.v.rows(); ++i) out << ",nan";
    }
    out << ',' << csv::format_double(cost) << '\n';
  }
  csv::write_file(path, out.str());
}

envs::Policy make_policy(const koopman::LiftedModel& model, const ControlLaw& law,
                         const Vec& u_lo, const Vec& u_hi, const MpcOptions& mpc_opts) {
  if (u_lo.size() != model.control_dim() || u_hi.size() != model.control_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "policy bounds do not match the control dimension");
  }
  auto shared_model = std::make_shared<const koopman::LiftedModel>(model);

  if (const auto* lqr = std::get_if<LqrLaw>(&law)) {
    return [shared_model, k = lqr->k, u_lo, u_hi](const Vec& x) -> Vec {
      const Vec v = -k * koopman::lift(*shared_model, x);
      return (shared_model->u0 + v).cwiseMax(u_lo).cwiseMin(u_hi);
    };
  }

  const auto& prob = std::get<MpcProblem>(law);
  struct MpcState {
    CondensedMpc solver;
    MpcProblem prob;
    MpcOptions opts;
    Mat warm;
  };
  auto state = std::make_shared<MpcState>(MpcState{
      CondensedMpc(model.a, model.b, lifted_weight(model.c, prob.q), prob.r, prob.horizon),
      prob, mpc_opts, Mat()});

  return [shared_model, state, u_lo, u_hi](const Vec& x) -> Vec {
    const Vec z0 = koopman::lift(*shared_model, x);
    const MpcPlan plan = state->solver.plan(z0, state->prob.v_lo, state->prob.v_hi,
                                            state->opts, state->warm);
    // Shift the plan by one step for the next warm start.
    const Eigen::Index len = plan.v.cols();
    state->warm = plan.v;
    if (len > 1) {
      state->warm.leftCols(len - 1) = plan.v.rightCols(len - 1);
    }
    state->warm.col(len - 1).setZero();
    return (shared_model->u0 + plan.v.col(0)).cwiseMax(u_lo).cwiseMin(u_hi);
  };
}

}  // namespace dkrc::control
