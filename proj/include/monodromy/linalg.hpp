#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace monodromy {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Minimum-norm least-squares solution of A x = b. Singular values below
/// `abs_cut` (absolute) are treated as zero, so an all-zero A yields x = 0.
inline Vec min_norm_solve(const Mat& a, const Vec& b, double abs_cut) {
  if (a.rows() == 0 || a.cols() == 0) return Vec::Zero(a.cols());
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Vec ub = svd.matrixU().transpose() * b;
  for (Eigen::Index i = 0; i < s.size(); ++i) ub[i] = s[i] > abs_cut ? ub[i] / s[i] : 0.0;
  return svd.matrixV() * ub;
}

/// Orthonormal basis of ker(A) as columns. Singular values below
/// `rel_cut * max(1, sigma_max)` count as zero.
inline Mat null_space(const Mat& a, int cols, double rel_cut = 1e-10) {
  if (a.rows() == 0) return Mat::Identity(cols, cols);
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  double cut = rel_cut * std::max(1.0, s.size() > 0 ? s[0] : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > cut) ++rank;
  return svd.matrixV().rightCols(cols - rank);
}

/// Pfaffian of a 4x4 antisymmetric matrix.
inline double pfaffian4(const Mat& a) {
  return a(0, 1) * a(2, 3) - a(0, 2) * a(1, 3) + a(0, 3) * a(1, 2);
}

}  // namespace monodromy
