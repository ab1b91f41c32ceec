#pragma once

#include <random>

#include "dkrc/linalg.hpp"

namespace dkrc::testing {

inline linalg::Mat random_mat(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                              double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  return linalg::Mat::NullaryExpr(rows, cols, [&] { return d(rng); });
}

inline double rel_err(const linalg::Mat& a, const linalg::Mat& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace dkrc::testing
