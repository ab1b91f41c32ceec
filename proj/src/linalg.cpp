#include "dkrc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dkrc/error.hpp"

namespace dkrc::linalg {

namespace {

constexpr int kMaxJacobiSweeps = 80;

// Hestenes iteration on the columns of `w` (rows >= cols). On return the
// columns of `w` are mutually orthogonal and `v` holds the accumulated
// rotations, so that input = w * v^T.
void orthogonalize_columns(Mat& w, Mat& v) {
  const Eigen::Index n = w.cols();
  constexpr double eps = 1e-15;
  for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        const double gamma = w.col(p).dot(w.col(q));
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
          const double wp = w(i, p);
          const double wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
          const double vp = v(i, p);
          const double vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) return;
  }
  throw Error(ErrorKind::NoConvergence,
              "Jacobi SVD did not converge in " +
                  std::to_string(kMaxJacobiSweeps) + " sweeps");
}

Svd svd_tall(const Mat& m) {
  Mat w = m;
  Mat v = Mat::Identity(m.cols(), m.cols());
  orthogonalize_columns(w, v);

  const Eigen::Index k = m.cols();
  Vec norms(k);
  for (Eigen::Index j = 0; j < k; ++j) norms(j) = w.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return norms(a) > norms(b);
                   });

  Svd out{Mat::Zero(m.rows(), k), Vec(k), Mat(m.cols(), k)};
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    out.s(j) = norms(src);
    out.v.col(j) = v.col(src);
    if (norms(src) > 0.0) out.u.col(j) = w.col(src) / norms(src);
  }
  return out;
}

}  // namespace

void require_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::NonFinite,
                std::string(what) + " contains NaN or Inf entries");
  }
}

Svd svd(const Mat& m) {
  require_finite(m, "svd input");
  if (m.rows() >= m.cols()) return svd_tall(m);
  Svd t = svd_tall(m.transpose());
  return Svd{std::move(t.v), std::move(t.s), std::move(t.u)};
}

Mat pseudo_inverse(const Mat& m, double tol) {
  if (m.size() == 0) return Mat::Zero(m.cols(), m.rows());
  const Svd d = svd(m);
  const double cutoff = tol * (d.s.size() > 0 ? d.s(0) : 0.0);
  Mat out = Mat::Zero(m.cols(), m.rows());
  for (Eigen::Index j = 0; j < d.s.size(); ++j) {
    if (d.s(j) <= cutoff || d.s(j) == 0.0) break;
    out.noalias() += (d.v.col(j) / d.s(j)) * d.u.col(j).transpose();
  }
  return out;
}

int matrix_rank(const Mat& m, double tol) {
  if (m.size() == 0) return 0;
  const Svd d = svd(m);
  if (d.s(0) == 0.0) return 0;
  const double cutoff = tol * d.s(0);
  int rank = 0;
  for (Eigen::Index j = 0; j < d.s.size(); ++j) {
    if (d.s(j) > cutoff) ++rank;
  }
  return rank;
}

Mat controllability_matrix(const Mat& a, const Mat& b) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) {
    throw Error(ErrorKind::DimensionMismatch,
                "controllability_matrix needs A N x N and B N x m, got A " +
                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                    ", B " + std::to_string(b.rows()) + "x" +
                    std::to_string(b.cols()));
  }
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  Mat out(n, n * m);
  Mat block = b;
  for (Eigen::Index k = 0; k < n; ++k) {
    out.middleCols(k * m, m) = block;
    if (k + 1 < n) block = a * block;
  }
  return out;
}

std::vector<EigPair> eig_left(const Mat& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "eig_left needs a square matrix");
  }
  require_finite(a, "eig_left input");
  const Eigen::Index n = a.rows();
  std::vector<EigPair> pairs;
  if (n == 0) return pairs;

  // Left eigenvectors of A are right eigenvectors of A^T.
  Eigen::EigenSolver<Mat> solver;
  solver.setMaxIterations(static_cast<Eigen::Index>(100) * n);
  solver.compute(a.transpose(), true);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NoConvergence,
                "Hessenberg-QR eigensolver exceeded " +
                    std::to_string(100 * n) + " iterations");
  }
  const Eigen::VectorXcd values = solver.eigenvalues();
  const Eigen::MatrixXcd vectors = solver.eigenvectors();

  pairs.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    CVec w = vectors.col(j);
    const double norm = w.norm();
    if (norm > 0.0) w /= norm;
    pairs.push_back(EigPair{values(j), std::move(w)});
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const EigPair& x, const EigPair& y) {
                     const double ax = std::abs(x.value);
                     const double ay = std::abs(y.value);
                     if (ax != ay) return ax > ay;
                     if (x.value.real() != y.value.real())
                       return x.value.real() > y.value.real();
                     return x.value.imag() > y.value.imag();
                   });
  return pairs;
}

Mat lstsq(const Mat& a, const Mat& y, double tol) {
  if (a.rows() != y.rows()) {
    throw Error(ErrorKind::DimensionMismatch,
                "lstsq row counts differ: " + std::to_string(a.rows()) +
                    " vs " + std::to_string(y.rows()));
  }
  require_finite(y, "lstsq right-hand side");
  return pseudo_inverse(a, tol) * y;
}

}  // namespace dkrc::linalg
