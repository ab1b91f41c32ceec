#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace dkrc::linalg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

// Relative singular-value cutoff used wherever a rank or pseudo-inverse is
// taken, unless the caller passes its own.
inline constexpr double kDefaultRankTol = 1e-9;

/// Thin singular value decomposition m = U * diag(s) * V^T with s sorted
/// descending. U is rows x k, V is cols x k, k = min(rows, cols).
struct Svd {
  Mat u;
  Vec s;
  Mat v;
};

/// One-sided (Hestenes) Jacobi SVD. Throws NonFinite on NaN/Inf input and
/// NoConvergence if the rotation sweeps do not settle.
Svd svd(const Mat& m);

/// Moore-Penrose pseudo-inverse; singular values <= tol * s_max are dropped.
Mat pseudo_inverse(const Mat& m, double tol = kDefaultRankTol);

/// Number of singular values > tol * s_max (0 for the zero matrix).
int matrix_rank(const Mat& m, double tol = kDefaultRankTol);

/// [B, AB, A^2 B, ..., A^{N-1} B].
Mat controllability_matrix(const Mat& a, const Mat& b);

/// Left eigenpair w^T A = lambda w^T with ||w||_2 = 1.
struct EigPair {
  std::complex<double> value;
  CVec left_vector;
};

/// All N left eigenpairs sorted by descending |lambda|; conjugate pairs are
/// adjacent with the positive imaginary part first.
std::vector<EigPair> eig_left(const Mat& a);

/// Minimum-Frobenius-norm X with A X ~= Y.
Mat lstsq(const Mat& a, const Mat& y, double tol = kDefaultRankTol);

/// Throws NonFinite naming `what` if any entry is NaN or Inf.
void require_finite(const Mat& m, const char* what);

/// Sum of absolute entries.
inline double entrywise_l1(const Mat& m) { return m.cwiseAbs().sum(); }

}  // namespace dkrc::linalg
