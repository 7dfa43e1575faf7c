#include "covtest/design.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

#include "covtest/qr_updater.hpp"

namespace covtest {

namespace {

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  for (int j = 0; j < m.cols(); ++j) {
    for (int i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, j))) {
        throw InvalidInput(std::string(what) + ": non-finite entry at row " +
                           std::to_string(i) + ", column " + std::to_string(j));
      }
    }
  }
}

// Builds the incremental factorization of X_A, throwing with the offending
// column on rank failure.
QrUpdater factorize_active(const DesignMatrix& x, const ActiveSet& a,
                           double tol) {
  QrUpdater qr(x.n());
  for (int k = 0; k < a.size(); ++k) {
    const int j = a.indices[k];
    if (!qr.try_add_column(x.values.col(j), tol)) {
      throw SingularityError(
          "active set is rank deficient at column " + std::to_string(j), j);
    }
  }
  return qr;
}

}  // namespace

DesignMatrix DesignMatrix::from_raw(Eigen::MatrixXd values) {
  DesignMatrix x;
  x.values = std::move(values);
  x.column_means = Eigen::VectorXd::Zero(x.p());
  x.column_scales = Eigen::VectorXd::Ones(x.p());
  x.validate();
  return x;
}

void DesignMatrix::validate() const {
  if (values.rows() < 2) throw InvalidInput("design matrix needs n >= 2");
  if (values.cols() < 1) throw InvalidInput("design matrix needs p >= 1");
  check_finite(values, "design matrix");
  if (centered) {
    const double bound =
        1e-10 * values.rows() * values.cwiseAbs().maxCoeff();
    for (int j = 0; j < p(); ++j) {
      if (std::fabs(values.col(j).sum()) > std::max(bound, 1e-300)) {
        throw InvalidInput("centered flag set but column " +
                           std::to_string(j) + " does not sum to zero");
      }
    }
  }
  if (standardized) {
    for (int j = 0; j < p(); ++j) {
      if (std::fabs(values.col(j).norm() - 1.0) > 1e-10) {
        throw InvalidInput("standardized flag set but column " +
                           std::to_string(j) + " is not unit norm");
      }
    }
  }
}

bool ActiveSet::contains(int j) const {
  for (int i : indices) {
    if (i == j) return true;
  }
  return false;
}

Eigen::VectorXd ActiveSet::sign_vector() const {
  Eigen::VectorXd s(size());
  for (int k = 0; k < size(); ++k) s[k] = signs[k];
  return s;
}

void ActiveSet::validate(int p) const {
  if (indices.size() != signs.size()) {
    throw InvalidInput("active set: indices and signs differ in length");
  }
  std::unordered_set<int> seen;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const int j = indices[k];
    if (j < 0 || j >= p) {
      throw InvalidInput("active set index " + std::to_string(j) +
                         " out of range");
    }
    if (!seen.insert(j).second) {
      throw InvalidInput("active set index " + std::to_string(j) +
                         " repeated");
    }
    if (signs[k] != 1 && signs[k] != -1) {
      throw InvalidInput("active set signs must be +1 or -1");
    }
  }
}

std::pair<DesignMatrix, Eigen::VectorXd> center(const Eigen::MatrixXd& x,
                                                const Eigen::VectorXd& y) {
  if (x.rows() < 2) throw InvalidInput("center: need n >= 2");
  if (y.size() != x.rows()) {
    throw InvalidInput("center: response length does not match row count");
  }
  check_finite(x, "center: design");
  check_finite(y, "center: response");

  DesignMatrix out;
  out.values = x;
  out.column_means = x.colwise().mean();
  out.values.rowwise() -= out.column_means.transpose();
  out.response_mean = y.mean();
  out.column_scales = Eigen::VectorXd::Ones(x.cols());
  out.centered = true;
  Eigen::VectorXd y_centered = y.array() - out.response_mean;
  return {std::move(out), std::move(y_centered)};
}

DesignMatrix standardize(const DesignMatrix& x) {
  DesignMatrix out = x;
  for (int j = 0; j < x.p(); ++j) {
    const double norm = x.values.col(j).norm();
    if (norm == 0.0) {
      throw InvalidInput("standardize: column " + std::to_string(j) +
                         " is identically zero");
    }
    out.values.col(j) /= norm;
    out.column_scales[j] = x.column_scales[j] * norm;
  }
  out.standardized = true;
  return out;
}

Eigen::VectorXd project_residual(const DesignMatrix& x, const ActiveSet& a,
                                 const Eigen::VectorXd& v) {
  a.validate(x.p());
  if (v.size() != x.n()) {
    throw InvalidInput("project_residual: vector length mismatch");
  }
  if (a.size() == 0) return v;
  QrUpdater qr = factorize_active(x, a, kDefaultRankTol);
  return v - qr.q_apply(qr.qt_apply(v));
}

Eigen::VectorXd pinv_transpose_apply(const DesignMatrix& x,
                                     const ActiveSet& a) {
  a.validate(x.p());
  if (a.size() == 0) return Eigen::VectorXd::Zero(x.n());
  QrUpdater qr = factorize_active(x, a, kDefaultRankTol);
  return qr.q_apply(qr.solve_rt(a.sign_vector()));
}

bool rank_guard(const DesignMatrix& x, const ActiveSet& a, double tol) {
  a.validate(x.p());
  if (a.size() == 0) return true;
  QrUpdater qr(x.n());
  for (int k = 0; k < a.size(); ++k) {
    if (!qr.try_add_column(x.values.col(a.indices[k]), tol)) return false;
  }
  return true;
}

}  // namespace covtest
