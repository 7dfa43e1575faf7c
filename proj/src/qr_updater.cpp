#include "covtest/qr_updater.hpp"

#include <cmath>
#include <stdexcept>

namespace covtest {

QrUpdater::QrUpdater(int rows) : rows_(rows) {
  const int cap = 8;
  q_.resize(rows_, cap);
  r_.setZero(cap, cap);
}

void QrUpdater::grow(int needed) {
  if (needed <= q_.cols()) return;
  int cap = static_cast<int>(q_.cols());
  while (cap < needed) cap *= 2;
  Eigen::MatrixXd q_new(rows_, cap);
  q_new.leftCols(cols_) = q_.leftCols(cols_);
  Eigen::MatrixXd r_new = Eigen::MatrixXd::Zero(cap, cap);
  r_new.topLeftCorner(cols_, cols_) = r_.topLeftCorner(cols_, cols_);
  q_ = std::move(q_new);
  r_ = std::move(r_new);
}

bool QrUpdater::try_add_column(const Eigen::VectorXd& x, double tol) {
  if (x.size() != rows_) {
    throw std::invalid_argument("QrUpdater: column length mismatch");
  }
  grow(cols_ + 1);
  Eigen::VectorXd u = x;
  Eigen::VectorXd proj = Eigen::VectorXd::Zero(cols_);
  // Two Gram-Schmidt passes keep Q orthonormal to machine precision.
  for (int pass = 0; pass < 2; ++pass) {
    if (cols_ == 0) break;
    Eigen::VectorXd h = q_.leftCols(cols_).transpose() * u;
    u.noalias() -= q_.leftCols(cols_) * h;
    proj += h;
  }
  const double rho = u.norm();
  const double largest = cols_ == 0 ? rho : std::max(max_abs_diag(), rho);
  if (!(rho > tol * largest) || rho == 0.0) {
    return false;
  }
  r_.col(cols_).head(cols_) = proj;
  r_(cols_, cols_) = rho;
  q_.col(cols_) = u / rho;
  ++cols_;
  return true;
}

void QrUpdater::remove_column(int pos) {
  if (pos < 0 || pos >= cols_) {
    throw std::invalid_argument("QrUpdater: remove position out of range");
  }
  // Shift the trailing columns of R left; the block becomes upper Hessenberg.
  for (int j = pos; j + 1 < cols_; ++j) {
    r_.col(j).head(cols_) = r_.col(j + 1).head(cols_);
  }
  const int new_cols = cols_ - 1;
  for (int i = pos; i < new_cols; ++i) {
    const double a = r_(i, i);
    const double b = r_(i + 1, i);
    const double norm = std::hypot(a, b);
    if (norm == 0.0) continue;
    const double c = a / norm;
    const double s = b / norm;
    for (int j = i; j < new_cols; ++j) {
      const double t1 = r_(i, j);
      const double t2 = r_(i + 1, j);
      r_(i, j) = c * t1 + s * t2;
      r_(i + 1, j) = -s * t1 + c * t2;
    }
    // X = Q R is preserved: Q <- Q G^T, R <- G R.
    for (int k = 0; k < rows_; ++k) {
      const double t1 = q_(k, i);
      const double t2 = q_(k, i + 1);
      q_(k, i) = c * t1 + s * t2;
      q_(k, i + 1) = -s * t1 + c * t2;
    }
  }
  r_.row(new_cols).head(cols_).setZero();
  r_.col(new_cols).head(cols_).setZero();
  cols_ = new_cols;
}

Eigen::VectorXd QrUpdater::qt_apply(const Eigen::VectorXd& v) const {
  return q_.leftCols(cols_).transpose() * v;
}

Eigen::VectorXd QrUpdater::q_apply(const Eigen::VectorXd& h) const {
  return q_.leftCols(cols_) * h;
}

Eigen::VectorXd QrUpdater::solve_r(const Eigen::VectorXd& b) const {
  return r_.topLeftCorner(cols_, cols_)
      .triangularView<Eigen::Upper>()
      .solve(b);
}

Eigen::VectorXd QrUpdater::solve_rt(const Eigen::VectorXd& b) const {
  return r_.topLeftCorner(cols_, cols_)
      .triangularView<Eigen::Upper>()
      .transpose()
      .solve(b);
}

double QrUpdater::min_abs_diag() const {
  double m = 0.0;
  for (int i = 0; i < cols_; ++i) {
    const double d = std::fabs(r_(i, i));
    if (i == 0 || d < m) m = d;
  }
  return m;
}

double QrUpdater::max_abs_diag() const {
  double m = 0.0;
  for (int i = 0; i < cols_; ++i) {
    m = std::max(m, std::fabs(r_(i, i)));
  }
  return m;
}

}  // namespace covtest
