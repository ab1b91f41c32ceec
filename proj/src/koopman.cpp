#include "dkrc/koopman.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dkrc/csv.hpp"
#include "dkrc/error.hpp"
#include "dkrc/rng.hpp"

namespace dkrc::koopman {

using linalg::pseudo_inverse;

Mat net_input(const LiftedModel& model, const Mat& x) {
  if (x.rows() != model.obs_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "lift: observation dimension mismatch");
  }
  if (model.in_shift.size() == 0) return x;
  return ((x.colwise() - model.in_shift).array().colwise() / model.in_scale.array()).matrix();
}

namespace {

Mat stack_features(const LiftedModel& model, const Mat& x, const Mat& net_out) {
  if (!model.state_in_lift) return net_out;
  Mat out(x.rows() + net_out.rows(), x.cols());
  out << x, net_out;
  return out;
}

}  // namespace

Mat features(const LiftedModel& model, const Mat& x) {
  return stack_features(model, x, net::forward(model.psi, net_input(model, x)));
}

Mat features_reference(const LiftedModel& model, const Mat& x) {
  return stack_features(model, x, net::forward_reference(model.psi, net_input(model, x)));
}

Vec lift(const LiftedModel& model, const Vec& x) {
  return features(model, Mat(x)).col(0) - model.psi0;
}

Mat lift(const LiftedModel& model, const Mat& x) {
  Mat z = features(model, x);
  z.colwise() -= model.psi0;
  return z;
}

namespace {

// Mean-normalized sum of column norms of `residual`, with the unit columns
// that make up its gradient.
double residual_norms(const Mat& residual, Mat& unit) {
  const double scale = 1.0 / static_cast<double>(std::max<Eigen::Index>(residual.cols() - 1, 1));
  unit = Mat::Zero(residual.rows(), residual.cols());
  double sum = 0.0;
  for (Eigen::Index j = 0; j < residual.cols(); ++j) {
    const double norm = residual.col(j).norm();
    sum += norm;
    if (norm > 0.0) unit.col(j) = scale * residual.col(j) / norm;
  }
  return scale * sum;
}

void check_batch(const Mat& z, const Mat& z_next) {
  if (z.rows() != z_next.rows() || z.cols() != z_next.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "loss_l1: z and z_next shapes differ");
  }
  if (z.cols() < 1 || z.isZero(0.0)) {
    throw Error(ErrorKind::DegenerateBatch, "loss_l1: every lifted state in the batch is zero");
  }
}

}  // namespace

L1Result loss_l1(const Mat& z, const Mat& z_next, double tol) {
  check_batch(z, z_next);
  L1Result out;
  out.k = z_next * pseudo_inverse(z, tol);
  Mat unit;
  out.value = residual_norms(z_next - out.k * z, unit);
  out.grad_znext = unit;
  out.grad_z = -(out.k.transpose() * unit);
  return out;
}

L1Result loss_l1(const Mat& z, const Mat& z_next, const Mat& v, double tol) {
  check_batch(z, z_next);
  if (v.cols() != z.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "loss_l1: v has the wrong number of columns");
  }
  const Eigen::Index big_n = z.rows();
  Mat w(big_n + v.rows(), z.cols());
  w << z, v;
  L1Result out;
  out.k = z_next * pseudo_inverse(w, tol);
  Mat unit;
  out.value = residual_norms(z_next - out.k * w, unit);
  out.grad_znext = unit;
  const Mat grad_w = -(out.k.transpose() * unit);
  out.grad_z = grad_w.topRows(big_n);
  out.grad_v = grad_w.bottomRows(v.rows());
  return out;
}

double loss_l1(const LiftedModel& model, const Mat& x, const Mat& x_next, double tol) {
  return loss_l1(lift(model, x), lift(model, x_next), tol).value;
}

L2Terms loss_l2(const Mat& a, const Mat& b, double tol, bool smooth, double smooth_eps) {
  L2Terms t;
  const Mat ctrb = linalg::controllability_matrix(a, b);
  const auto n = static_cast<double>(a.rows());
  t.rank = linalg::matrix_rank(ctrb, tol);
  if (smooth) {
    const linalg::Svd d = linalg::svd(ctrb);
    double soft = 0.0;
    const double smax = d.s.size() > 0 ? d.s(0) : 0.0;
    if (smax > 0.0) {
      for (Eigen::Index i = 0; i < d.s.size(); ++i)
        soft += d.s(i) / (d.s(i) + smooth_eps * smax);
    }
    t.rank_term = n - soft;
  } else {
    t.rank_term = n - t.rank;
  }
  t.a_norm = linalg::entrywise_l1(a);
  t.b_norm = linalg::entrywise_l1(b);
  return t;
}

AbPair fit_ab(const Mat& z, const Mat& z_next, const Mat& v, double tol) {
  if (z.cols() != z_next.cols() || z.cols() != v.cols() || z.rows() != z_next.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "fit_ab: column counts or lifted dims differ");
  }
  const Eigen::Index n = z.rows();
  const Eigen::Index m = v.rows();
  Mat w(n + m, z.cols());
  w << z, v;
  const Mat ab = (z_next * w.transpose()) * pseudo_inverse(w * w.transpose(), tol);
  return AbPair{ab.leftCols(n), ab.rightCols(m)};
}

AbPair update_ab(const AbPair& old, const Mat& z, const Mat& z_next, const Mat& v,
                 double blend, double tol) {
  if (old.a.rows() != z.rows() || old.a.cols() != z.rows() || old.b.rows() != z.rows() ||
      old.b.cols() != v.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "update_ab: previous A/B shapes do not match data");
  }
  if (blend == 0.0) return old;
  const AbPair fit = fit_ab(z, z_next, v, tol);
  return AbPair{(1.0 - blend) * old.a + blend * fit.a, (1.0 - blend) * old.b + blend * fit.b};
}

Mat solve_c(const Mat& x, const Mat& psi_x, const Vec& psi0, const Vec& goal,
            bool constrained, double tol) {
  if (x.cols() != psi_x.cols() || psi0.size() != psi_x.rows() || goal.size() != x.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "solve_c: sample counts or dimensions differ");
  }
  if (linalg::matrix_rank(psi_x, tol) == 0) {
    throw Error(ErrorKind::DegenerateLift, "solve_c: lifted data has rank 0");
  }
  Mat target = x;
  target.colwise() -= goal;
  const Eigen::Index big_n = psi_x.rows();

  if (!constrained || psi0.norm() == 0.0) {
    return target * pseudo_inverse(psi_x, tol);
  }
  // Columns 1..N-1 of the Householder Q of psi0 span its orthogonal
  // complement; C = D Q_perp^T satisfies C psi0 = 0 by construction.
  Eigen::HouseholderQR<Mat> qr(psi0);
  const Mat q = qr.householderQ() * Mat::Identity(big_n, big_n);
  const Mat q_perp = q.rightCols(big_n - 1);
  const Mat d = target * pseudo_inverse(q_perp.transpose() * psi_x, tol);
  return d * q_perp.transpose();
}

double one_step_error(const LiftedModel& model, const Mat& x, const Mat& x_next,
                      const Mat& u) {
  if (x.cols() == 0) return 0.0;
  Mat v = u;
  v.colwise() -= model.u0;
  const Mat r = lift(model, x_next) - model.a * lift(model, x) - model.b * v;
  return r.colwise().norm().mean();
}

void save_report_csv(const TrainReport& report, const std::string& path) {
  std::ostringstream out;
  out << "epoch,l1,l2,total,rank,val_err\n";
  for (const EpochReport& e : report.epochs) {
    out << e.epoch << ',' << csv::format_double(e.l1) << ',' << csv::format_double(e.l2)
        << ',' << csv::format_double(e.total) << ',' << e.rank << ','
        << csv::format_double(e.val_err) << '\n';
  }
  csv::write_file(path, out.str());
}

namespace {

struct Snapshot {
  net::MlpParams psi;
  Vec u0;
  AbPair ab;
  int epoch = -1;
  int rank = -1;
  double val_err = 0.0;
};

bool better(const Snapshot& cand, const Snapshot& best, int full_rank) {
  if (best.epoch < 0) return true;
  const bool cand_full = cand.rank == full_rank;
  const bool best_full = best.rank == full_rank;
  if (cand_full != best_full) return cand_full;
  return cand.val_err < best.val_err;
}

// Gradient of mean_j ||z'_j - A z_j - B (u_j - u0)|| with respect to u0,
// with psi, A and B fixed.
Vec u0_gradient(const Mat& z, const Mat& z_next, const Mat& u, const Vec& u0,
                const AbPair& ab) {
  Mat v = u;
  v.colwise() -= u0;
  const Mat r = z_next - ab.a * z - ab.b * v;
  Vec g = Vec::Zero(u0.size());
  for (Eigen::Index j = 0; j < r.cols(); ++j) {
    const double norm = r.col(j).norm();
    if (norm > 0.0) g += ab.b.transpose() * r.col(j) / norm;
  }
  return g / static_cast<double>(std::max<Eigen::Index>(r.cols(), 1));
}

L1Result frozen_ab_loss(const Mat& z, const Mat& z_next, const Mat& v, const AbPair& ab) {
  L1Result out;
  Mat unit;
  out.value = residual_norms(z_next - ab.a * z - ab.b * v, unit);
  out.grad_znext = unit;
  out.grad_z = -(ab.a.transpose() * unit);
  out.grad_v = -(ab.b.transpose() * unit);
  return out;
}

L1Result batch_loss(L1Form form, const Mat& z, const Mat& z_next, const Mat& v,
                    const AbPair& ab, double tol) {
  switch (form) {
    case L1Form::Batch: return loss_l1(z, z_next, tol);
    case L1Form::BatchControls: return loss_l1(z, z_next, v, tol);
    case L1Form::FrozenAb: return frozen_ab_loss(z, z_next, v, ab);
  }
  return {};
}

}  // namespace

const char* to_string(L1Form f) {
  switch (f) {
    case L1Form::Batch: return "batch";
    case L1Form::BatchControls: return "batch_controls";
    case L1Form::FrozenAb: return "frozen_ab";
  }
  return "?";
}

L1Form parse_l1_form(const std::string& s) {
  if (s == "batch") return L1Form::Batch;
  if (s == "batch_controls") return L1Form::BatchControls;
  if (s == "frozen_ab") return L1Form::FrozenAb;
  throw Error(ErrorKind::Config, "unknown l1 form '" + s + "' (batch, batch_controls, frozen_ab)");
}

TrainResult train(const data::Dataset& dataset, const Vec& goal, const TrainConfig& cfg) {
  const int n = dataset.obs_dim;
  const int m = dataset.control_dim;
  const int big_n = cfg.lifted_dim;
  if (goal.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "train: goal dimension does not match dataset");
  }
  if (cfg.batch < 2) throw Error(ErrorKind::BadDims, "train: batch size must be >= 2");

  std::vector<std::size_t> train_idx = dataset.indices(data::Split::Train);
  std::vector<std::size_t> val_idx = dataset.indices(data::Split::Val);
  if (train_idx.size() < 2) {
    throw Error(ErrorKind::DegenerateBatch, "train: need at least two training triples");
  }
  if (val_idx.empty()) val_idx = train_idx;

  const Mat x_train = dataset.stack_x(train_idx);
  const Mat y_train = dataset.stack_y(train_idx);
  const Mat u_train = dataset.stack_u(train_idx);
  const Mat x_val = dataset.stack_x(val_idx);
  const Mat y_val = dataset.stack_y(val_idx);
  const Mat u_val = dataset.stack_u(val_idx);

  LiftedModel model;
  model.state_in_lift = cfg.state_in_lift;
  const int net_out = cfg.state_in_lift ? big_n - n : big_n;
  if (cfg.state_in_lift && net_out < 1) {
    throw Error(ErrorKind::BadDims, "train: lifted dimension must exceed the state dimension");
  }
  model.psi = net::init(n, std::max(net_out, cfg.state_in_lift ? n + 1 : net_out), cfg.hidden,
                        derive_seed(cfg.seed, SeedStream::NetInit));
  if (cfg.state_in_lift && net_out <= n) {
    // init() insists on out > in; keep the leading rows.
    net::Layer& last = model.psi.layers.back();
    last.weight = Mat(last.weight.topRows(net_out));
    last.bias = Vec(last.bias.head(net_out));
  }
  if (cfg.normalize_input) {
    model.in_shift = x_train.rowwise().mean();
    model.in_scale = ((x_train.colwise() - model.in_shift).rowwise().norm() /
                      std::sqrt(static_cast<double>(x_train.cols())))
                         .cwiseMax(1e-8);
  }
  model.u0 = Vec::Zero(m);
  model.goal = goal;
  {
    Rng rng(derive_seed(cfg.seed, SeedStream::ModelInit));
    const double scale = 1.0 / std::sqrt(static_cast<double>(big_n));
    std::uniform_real_distribution<double> dist(-scale, scale);
    model.a = Mat::NullaryExpr(big_n, big_n, [&] { return dist(rng); });
    model.b = Mat::NullaryExpr(big_n, m, [&] { return dist(rng); });
  }

  net::AdamState psi_opt;
  psi_opt.lr = cfg.lr;
  psi_opt.beta1 = cfg.beta1;
  psi_opt.beta2 = cfg.beta2;
  psi_opt.eps = cfg.adam_eps;
  net::AdamState u0_opt = psi_opt;
  Rng shuffle_rng(derive_seed(cfg.seed, SeedStream::Shuffle));

  TrainResult result;
  Snapshot best;
  std::vector<std::size_t> order(train_idx.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const AbPair frozen{model.a, model.b};
    const L2Terms l2 = loss_l2(frozen.a, frozen.b, cfg.rank_tol, cfg.smooth_rank, cfg.smooth_eps);

    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double l1_sum = 0.0;
    int batches = 0;
    std::size_t start = 0;
    while (order.size() - start >= 2) {
      std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch), order.size() - start);
      // Fold a trailing singleton into this batch rather than dropping it.
      if (order.size() - (start + len) == 1) ++len;

      const auto bl = static_cast<Eigen::Index>(len);
      Mat input(n, 2 * bl + 1);
      Mat u_batch(m, bl);
      for (Eigen::Index j = 0; j < bl; ++j) {
        const std::size_t col = order[start + static_cast<std::size_t>(j)];
        input.col(j) = x_train.col(static_cast<Eigen::Index>(col));
        input.col(bl + j) = y_train.col(static_cast<Eigen::Index>(col));
        u_batch.col(j) = u_train.col(static_cast<Eigen::Index>(col));
      }
      input.col(2 * bl) = goal;

      const Mat net_in = net_input(model, input);
      const Mat psi = stack_features(model, input, net::forward(model.psi, net_in));
      const Vec psi0 = psi.col(2 * bl);
      Mat z = psi.leftCols(bl);
      Mat z_next = psi.middleCols(bl, bl);
      z.colwise() -= psi0;
      z_next.colwise() -= psi0;

      Mat v_batch = u_batch;
      v_batch.colwise() -= model.u0;
      const L1Result l1 = batch_loss(cfg.l1_form, z, z_next, v_batch, frozen, cfg.rank_tol);
      if (!std::isfinite(l1.value)) {
        throw Error(ErrorKind::NonFiniteLoss, "non-finite L1 at epoch " + std::to_string(epoch));
      }
      l1_sum += l1.value;
      ++batches;

      // z = psi(x) - psi(x*): the goal column collects the negated sum.
      Mat upstream(big_n, 2 * bl + 1);
      upstream.leftCols(bl) = l1.grad_z;
      upstream.middleCols(bl, bl) = l1.grad_znext;
      upstream.col(2 * bl) = -(l1.grad_z.rowwise().sum() + l1.grad_znext.rowwise().sum());

      // v = u - u0, so u0 receives the negated v gradient.
      const Vec g_u0 = cfg.l1_form == L1Form::Batch
                           ? u0_gradient(z, z_next, u_batch, model.u0, frozen)
                           : Vec(-l1.grad_v.rowwise().sum());
      const Eigen::Index skip = model.state_in_lift ? n : 0;
      const net::Gradients grads =
          net::backward(model.psi, net_in, upstream.bottomRows(big_n - skip));
      net::adam_step(psi_opt, model.psi, grads);
      net::adam_step(u0_opt, model.u0, g_u0);
      start += len;
    }

    // Analytic A/B refresh on the full training split.
    model.psi0 = features(model, goal).col(0);
    Mat z_all = lift(model, x_train);
    Mat z_next_all = lift(model, y_train);
    Mat v_all = u_train;
    v_all.colwise() -= model.u0;
    const AbPair updated = update_ab(AbPair{model.a, model.b}, z_all, z_next_all, v_all,
                                     cfg.blend, cfg.rank_tol);
    model.a = updated.a;
    model.b = updated.b;

    EpochReport row;
    row.epoch = epoch;
    row.l1 = batches > 0 ? l1_sum / batches : 0.0;
    const L2Terms l2_after = loss_l2(model.a, model.b, cfg.rank_tol, cfg.smooth_rank, cfg.smooth_eps);
    row.l2 = l2.value();
    row.total = row.l1 + row.l2;
    row.rank = l2_after.rank;
    row.val_err = one_step_error(model, x_val, y_val, u_val);
    if (!std::isfinite(row.total) || !std::isfinite(row.val_err) || !model.a.allFinite() ||
        !model.b.allFinite()) {
      throw Error(ErrorKind::NonFiniteLoss, "non-finite loss at epoch " + std::to_string(epoch));
    }
    result.report.epochs.push_back(row);

    if (cfg.keep_best) {
      Snapshot cand{model.psi, model.u0, AbPair{model.a, model.b}, epoch, row.rank, row.val_err};
      if (better(cand, best, big_n)) best = std::move(cand);
    }
  }

  if (cfg.keep_best && best.epoch >= 0) {
    model.psi = best.psi;
    model.u0 = best.u0;
    model.a = best.ab.a;
    model.b = best.ab.b;
    result.report.selected_epoch = best.epoch;
  } else if (cfg.epochs > 0) {
    result.report.selected_epoch = cfg.epochs - 1;
  }

  model.psi0 = features(model, goal).col(0);
  model.c = solve_c(x_train, features(model, x_train), model.psi0, goal,
                    cfg.constrained_c, cfg.rank_tol);
  result.model = std::move(model);
  return result;
}

Mat predict(const LiftedModel& model, const Vec& x, const Mat& v) {
  if (v.rows() != model.control_dim() && v.cols() > 0) {
    throw Error(ErrorKind::DimensionMismatch, "predict: control dimension mismatch");
  }
  Mat out(model.obs_dim(), v.cols());
  if (v.cols() == 0) return out;
  Vec z = lift(model, x);
  for (Eigen::Index t = 0; t < v.cols(); ++t) {
    z = model.a * z + model.b * v.col(t);
    out.col(t) = model.c * z + model.goal;
  }
  return out;
}

namespace {

using nlohmann::json;

json mat_to_json(const Mat& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Mat mat_from_json(const json& j, const char* what) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw Error(ErrorKind::ParseError, std::string("model field '") + what +
                                           "' has wrong number of entries");
  }
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data[static_cast<std::size_t>(i * cols + k)];
  linalg::require_finite(m, what);
  return m;
}

json vec_to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec vec_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(data.data(), static_cast<Eigen::Index>(data.size()));
}

json config_to_json(const TrainConfig& c) {
  return json{{"lifted_dim", c.lifted_dim}, {"hidden", c.hidden},
              {"epochs", c.epochs},         {"batch", c.batch},
              {"blend", c.blend},           {"lr", c.lr},
              {"beta1", c.beta1},           {"beta2", c.beta2},
              {"adam_eps", c.adam_eps},     {"rank_tol", c.rank_tol},
              {"smooth_rank", c.smooth_rank}, {"smooth_eps", c.smooth_eps},
              {"l1_form", to_string(c.l1_form)},
              {"constrained_c", c.constrained_c}, {"keep_best", c.keep_best},
              {"normalize_input", c.normalize_input}, {"state_in_lift", c.state_in_lift},
              {"seed", c.seed}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.lifted_dim = j.value("lifted_dim", c.lifted_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  c.blend = j.value("blend", c.blend);
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.rank_tol = j.value("rank_tol", c.rank_tol);
  c.smooth_rank = j.value("smooth_rank", c.smooth_rank);
  c.smooth_eps = j.value("smooth_eps", c.smooth_eps);
  c.l1_form = parse_l1_form(j.value("l1_form", std::string(to_string(c.l1_form))));
  c.constrained_c = j.value("constrained_c", c.constrained_c);
  c.normalize_input = j.value("normalize_input", c.normalize_input);
  c.state_in_lift = j.value("state_in_lift", c.state_in_lift);
  c.keep_best = j.value("keep_best", c.keep_best);
  c.seed = j.value("seed", c.seed);
  return c;
}

constexpr int kModelVersion = 1;

}  // namespace

void save_model(const LiftedModel& model, const TrainConfig& config, const std::string& path) {
  json layers = json::array();
  for (const net::Layer& l : model.psi.layers) {
    layers.push_back(json{{"weight", mat_to_json(l.weight)}, {"bias", vec_to_json(l.bias)}});
  }
  const json doc{{"format", "dkrc-model"},
                 {"version", kModelVersion},
                 {"obs_dim", model.obs_dim()},
                 {"lifted_dim", model.lifted_dim()},
                 {"control_dim", model.control_dim()},
                 {"psi", json{{"activation", "tanh"}, {"layers", layers}}},
                 {"state_in_lift", model.state_in_lift},
                 {"in_shift", vec_to_json(model.in_shift)},
                 {"in_scale", vec_to_json(model.in_scale)},
                 {"u0", vec_to_json(model.u0)},
                 {"A", mat_to_json(model.a)},
                 {"B", mat_to_json(model.b)},
                 {"C", mat_to_json(model.c)},
                 {"psi0", vec_to_json(model.psi0)},
                 {"goal", vec_to_json(model.goal)},
                 {"config", config_to_json(config)}};
  csv::write_file(path, doc.dump(1) + "\n");
}

LiftedModel load_model(const std::string& path, TrainConfig* config) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open model file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, "model file '" + path + "': " + e.what());
  }
  try {
    if (doc.at("format") != "dkrc-model") {
      throw Error(ErrorKind::ParseError, "'" + path + "' is not a model file");
    }
    if (doc.at("version").get<int>() != kModelVersion) {
      throw Error(ErrorKind::ParseError, "unsupported model version in '" + path + "'");
    }
    LiftedModel model;
    for (const json& l : doc.at("psi").at("layers")) {
      model.psi.layers.push_back(
          net::Layer{mat_from_json(l.at("weight"), "psi.weight"), vec_from_json(l.at("bias"))});
    }
    model.state_in_lift = doc.value("state_in_lift", false);
    if (doc.contains("in_shift")) {
      model.in_shift = vec_from_json(doc.at("in_shift"));
      model.in_scale = vec_from_json(doc.at("in_scale"));
    }
    model.u0 = vec_from_json(doc.at("u0"));
    model.a = mat_from_json(doc.at("A"), "A");
    model.b = mat_from_json(doc.at("B"), "B");
    model.c = mat_from_json(doc.at("C"), "C");
    model.psi0 = vec_from_json(doc.at("psi0"));
    model.goal = vec_from_json(doc.at("goal"));
    const int big_n = model.lifted_dim();
    if (model.a.rows() != big_n || model.a.cols() != big_n || model.b.rows() != big_n ||
        model.c.cols() != big_n || model.c.rows() != model.obs_dim() ||
        model.psi0.size() != big_n || model.goal.size() != model.obs_dim() ||
        model.u0.size() != model.b.cols() || model.in_shift.size() != model.in_scale.size() ||
        (model.in_shift.size() != 0 && model.in_shift.size() != model.obs_dim()) ||
        (model.in_scale.array() <= 0.0).any()) {
      throw Error(ErrorKind::ParseError, "model file '" + path + "' has inconsistent dimensions");
    }
    if (config) *config = config_from_json(doc.value("config", json::object()));
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, "model file '" + path + "': " + e.what());
  }
}

}  // namespace dkrc::koopman
