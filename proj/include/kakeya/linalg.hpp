#pragma once

// Kernel vectors of dense constraint matrices (evaluation or moment
// matrices), used by the polynomial fitting routines.

#include "kakeya/core.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>

namespace kakeya {

struct KernelResult {
  Eigen::VectorXd vector;   // unit-scaled so that max |entry| = 1
  double residual = 0.0;    // max_i |(A v)_i|
  double relative = 0.0;    // residual / max_i sum_j |A_ij v_j|
  int kernel_dim = 0;       // estimated dimension of the numerical kernel
};

struct KernelOptions {
  double tolerance = 1e-8;        // acceptable relative residual
  double rank_tolerance = 1e-10;  // singular values below this (relative) count as zero
  Eigen::Index svd_limit = 600;   // use QR of A^T above this many columns
};

/// A non-zero v with A v = 0, from column-scaled A.
///
/// Underdetermined systems always have a kernel; the trailing right singular
/// vector (small problems) or the trailing column of Q in A^T = QR (large
/// problems) is returned. Square or overdetermined systems are accepted only
/// when the smallest singular value is separated from zero by rank_tolerance;
/// otherwise PreconditionError reports the violated parameter count.
inline KernelResult kernel_vector(const Eigen::MatrixXd& A, const KernelOptions& opt = {}) {
  const Eigen::Index n = A.rows(), m = A.cols();
  require(m >= 1, "kernel_vector: no unknowns");
  Eigen::VectorXd scale(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double c = A.col(j).norm();
    scale[j] = c > 0 ? 1.0 / c : 1.0;
  }
  const Eigen::MatrixXd As = A * scale.asDiagonal();

  KernelResult out;
  Eigen::VectorXd y;
  if (n < m && m > opt.svd_limit) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(As.transpose());
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    e[m - 1] = 1.0;
    y = qr.householderQ() * e;
    const auto R = qr.matrixQR().diagonal();
    const double rmax = R.cwiseAbs().maxCoeff();
    int deficient = 0;
    for (Eigen::Index i = 0; i < R.size(); ++i) deficient += std::abs(R[i]) <= opt.rank_tolerance * rmax;
    out.kernel_dim = static_cast<int>(m - n) + deficient;
  } else {
    Eigen::MatrixXd work = As;
    if (n < m) {
      // Pad with zero rows so the full right singular basis is available.
      work = Eigen::MatrixXd::Zero(m, m);
      work.topRows(n) = As;
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(work, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double smax = s.size() ? s[0] : 0.0;
    int zero = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) zero += s[i] <= opt.rank_tolerance * smax;
    out.kernel_dim = zero;
    if (n >= m && zero == 0)
      throw PreconditionError("kernel_vector: " + std::to_string(n) + " constraints on " + std::to_string(m) +
                              " unknowns and no numerical kernel (parameter count violated)");
    y = svd.matrixV().col(m - 1);
  }
  Eigen::VectorXd v = scale.asDiagonal() * y;
  const double vmax = v.cwiseAbs().maxCoeff();
  if (!(vmax > 0)) throw NumericalError("kernel_vector: degenerate kernel vector");
  v /= vmax;
  const Eigen::VectorXd r = A * v;
  const Eigen::VectorXd mag = A.cwiseAbs() * v.cwiseAbs();
  out.residual = n ? r.cwiseAbs().maxCoeff() : 0.0;
  const double denom = n ? mag.maxCoeff() : 1.0;
  out.relative = denom > 0 ? out.residual / denom : 0.0;
  if (out.relative > opt.tolerance)
    throw NumericalError("kernel_vector: degraded conditioning, relative residual " + std::to_string(out.relative));
  out.vector = std::move(v);
  return out;
}

}  // namespace kakeya
