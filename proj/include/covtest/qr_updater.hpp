#pragma once

#include <Eigen/Dense>

namespace covtest {

/// Thin QR factorization of a column subset, maintained incrementally.
///
/// Columns are appended by Gram-Schmidt with one reorthogonalization pass and
/// removed with Givens rotations, so the path algorithm pays O(nk) per event
/// instead of refactorizing from scratch.
class QrUpdater {
 public:
  explicit QrUpdater(int rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  /// Appends a column. Returns false (leaving the factorization unchanged)
  /// when the new diagonal would fall below tol times the largest diagonal,
  /// i.e. the column is numerically dependent on the current set.
  bool try_add_column(const Eigen::VectorXd& x, double tol);

  /// Removes the column at `pos` (0-based) and restores triangularity.
  void remove_column(int pos);

  /// Q^T v (length cols()).
  Eigen::VectorXd qt_apply(const Eigen::VectorXd& v) const;
  /// Q h (length rows()).
  Eigen::VectorXd q_apply(const Eigen::VectorXd& h) const;
  /// Solves R z = b.
  Eigen::VectorXd solve_r(const Eigen::VectorXd& b) const;
  /// Solves R^T z = b.
  Eigen::VectorXd solve_rt(const Eigen::VectorXd& b) const;

  double min_abs_diag() const;
  double max_abs_diag() const;

 private:
  int rows_;
  int cols_ = 0;
  Eigen::MatrixXd q_;  // rows_ x capacity, first cols_ columns valid
  Eigen::MatrixXd r_;  // capacity x capacity, leading cols_ block valid

  void grow(int needed);
};

}  // namespace covtest
