#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "covtest/covariance_test.hpp"
#include "covtest/design.hpp"

namespace covtest {

/// Elastic net as a lasso on the augmented design [X; sqrt(gamma) I] with
/// the response padded by p zeros.
struct ElasticNetProblem {
  double gamma = 0.0;  // ridge penalty, >= 0
  DesignMatrix base;
  Eigen::VectorXd response;
};

/// Builds the augmented design and response. gamma = 0 stacks a zero block.
std::pair<DesignMatrix, Eigen::VectorXd> augment(
    const ElasticNetProblem& problem);

struct EnetTestResult {
  CovTestResult base;
  double scaled_statistic = 0.0;  // (1 + gamma) * T_k
};

/// Covariance tests along the elastic net path. The zero padding makes the
/// augmented-problem statistic coincide with the inner products against the
/// original y, so the plain machinery applies; gamma = 0 delegates to the
/// unaugmented problem so the reduction is exact.
std::vector<EnetTestResult> enet_test_sequence(const ElasticNetProblem& problem,
                                               const SigmaSpec& sigma,
                                               const TestOptions& options = {});

}  // namespace covtest
