#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "covtest/errors.hpp"

namespace covtest {

inline constexpr double kDefaultRankTol = 1e-10;

/// Predictor matrix plus the centering/standardization bookkeeping needed to
/// report coefficients on the original scale.
struct DesignMatrix {
  Eigen::MatrixXd values;          // n x p
  Eigen::VectorXd column_means;    // zeros when uncentered
  Eigen::VectorXd column_scales;   // ones when unstandardized
  double response_mean = 0.0;
  bool centered = false;
  bool standardized = false;

  int n() const { return static_cast<int>(values.rows()); }
  int p() const { return static_cast<int>(values.cols()); }

  /// Validates n >= 2, p >= 1, finite entries, and the centering /
  /// standardization invariants when the flags are set.
  static DesignMatrix from_raw(Eigen::MatrixXd values);

  void validate() const;
};

/// Ordered active set with entry signs.
struct ActiveSet {
  std::vector<int> indices;
  std::vector<int> signs;  // each +1 or -1, aligned with indices

  int size() const { return static_cast<int>(indices.size()); }
  bool contains(int j) const;
  Eigen::VectorXd sign_vector() const;
  void validate(int p) const;
};

/// Removes column means from x and the mean from y, recording both.
std::pair<DesignMatrix, Eigen::VectorXd> center(const Eigen::MatrixXd& x,
                                                const Eigen::VectorXd& y);

/// Scales every column to unit Euclidean norm, recording the scales.
DesignMatrix standardize(const DesignMatrix& x);

/// (I - P_A) v for the projection P_A onto the span of the active columns.
Eigen::VectorXd project_residual(const DesignMatrix& x, const ActiveSet& a,
                                 const Eigen::VectorXd& v);

/// (X_A^T)^+ s_A = X_A (X_A^T X_A)^{-1} s_A.
Eigen::VectorXd pinv_transpose_apply(const DesignMatrix& x, const ActiveSet& a);

/// True iff X_A has full column rank: every R diagonal of an incremental
/// factorization stays above tol times the largest.
bool rank_guard(const DesignMatrix& x, const ActiveSet& a,
                double tol = kDefaultRankTol);

}  // namespace covtest
