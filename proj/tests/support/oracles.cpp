#include "support/oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace covtest::testing {

namespace {

double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

// Lasso duality gap at beta: primal minus the dual value of the scaled
// residual. Nonnegative, zero exactly at the optimum.
double lasso_gap(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                 const Eigen::VectorXd& beta, double lambda,
                 const Eigen::VectorXd& residual) {
  const double primal =
      0.5 * residual.squaredNorm() + lambda * beta.lpNorm<1>();
  const double max_corr = (x.transpose() * residual).cwiseAbs().maxCoeff();
  const double scale = max_corr > lambda ? lambda / max_corr : 1.0;
  const Eigen::VectorXd theta = scale * residual;
  const double dual = 0.5 * y.squaredNorm() - 0.5 * (y - theta).squaredNorm();
  return primal - dual;
}

}  // namespace

Eigen::VectorXd cd_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         double lambda, double gap_tol, int max_sweeps) {
  const int p = static_cast<int>(x.cols());
  Eigen::VectorXd col_sq(p);
  for (int j = 0; j < p; ++j) col_sq[j] = x.col(j).squaredNorm();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd residual = y;
  const double tol = gap_tol * std::max(1.0, 0.5 * y.squaredNorm());

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (int j = 0; j < p; ++j) {
      if (col_sq[j] == 0.0) continue;
      const double old = beta[j];
      const double rho = x.col(j).dot(residual) + col_sq[j] * old;
      const double updated = soft_threshold(rho, lambda) / col_sq[j];
      if (updated != old) {
        residual += x.col(j) * (old - updated);
        beta[j] = updated;
      }
    }
    if (sweep % 8 == 7 || sweep == max_sweeps - 1) {
      if (lasso_gap(x, y, beta, lambda, residual) <= tol) return beta;
    }
  }
  if (lasso_gap(x, y, beta, lambda, y - x * beta) <= tol) return beta;
  throw std::runtime_error("cd_lasso oracle did not reach the gap tolerance");
}

Eigen::VectorXd prox_elastic_net(const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& y, double lambda,
                                 double gamma, double gap_tol, int max_iters) {
  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());

  // The augmented lasso is the certification vehicle; the iteration itself
  // works on the original objective.
  Eigen::MatrixXd x_aug(n + p, p);
  x_aug.topRows(n) = x;
  x_aug.bottomRows(p) = std::sqrt(gamma) * Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd y_aug = Eigen::VectorXd::Zero(n + p);
  y_aug.head(n) = y;

  const Eigen::MatrixXd gram = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double lipschitz = eig.eigenvalues().maxCoeff() + gamma;
  const double step = 1.0 / lipschitz;
  const double tol = gap_tol * std::max(1.0, 0.5 * y.squaredNorm());

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int iter = 0; iter < max_iters; ++iter) {
    const Eigen::VectorXd grad =
        x.transpose() * (x * beta - y) + gamma * beta;
    Eigen::VectorXd next = beta - step * grad;
    for (int j = 0; j < p; ++j) {
      next[j] = soft_threshold(next[j], step * lambda);
    }
    beta = next;
    if (iter % 32 == 31) {
      const Eigen::VectorXd residual_aug = y_aug - x_aug * beta;
      if (lasso_gap(x_aug, y_aug, beta, lambda, residual_aug) <= tol) {
        return beta;
      }
    }
  }
  if (lasso_gap(x_aug, y_aug, beta, lambda, y_aug - x_aug * beta) <= tol) {
    return beta;
  }
  throw std::runtime_error(
      "prox_elastic_net oracle did not reach the gap tolerance");
}

Eigen::VectorXd normal_equations_ls(const Eigen::MatrixXd& x,
                                    const Eigen::VectorXd& y) {
  const Eigen::MatrixXd gram = x.transpose() * x;
  return gram.ldlt().solve(x.transpose() * y);
}

}  // namespace covtest::testing
