#include "covtest/elastic_net.hpp"

#include <cmath>

namespace covtest {

std::pair<DesignMatrix, Eigen::VectorXd> augment(
    const ElasticNetProblem& problem) {
  if (problem.gamma < 0.0) {
    throw InvalidInput("elastic net: gamma must be >= 0");
  }
  const int n = problem.base.n();
  const int p = problem.base.p();
  if (problem.response.size() != n) {
    throw InvalidInput("elastic net: response length does not match n");
  }

  DesignMatrix aug;
  aug.values.resize(n + p, p);
  aug.values.topRows(n) = problem.base.values;
  aug.values.bottomRows(p) =
      std::sqrt(problem.gamma) * Eigen::MatrixXd::Identity(p, p);
  aug.column_means = Eigen::VectorXd::Zero(p);
  aug.column_scales = problem.base.column_scales;
  aug.centered = false;
  aug.standardized = false;

  Eigen::VectorXd y_aug = Eigen::VectorXd::Zero(n + p);
  y_aug.head(n) = problem.response;
  return {std::move(aug), std::move(y_aug)};
}

std::vector<EnetTestResult> enet_test_sequence(const ElasticNetProblem& problem,
                                               const SigmaSpec& sigma,
                                               const TestOptions& options) {
  if (problem.gamma < 0.0) {
    throw InvalidInput("elastic net: gamma must be >= 0");
  }

  // sigma^2 is always estimated from the original full model; the augmented
  // rows are penalty bookkeeping, not observations.
  SigmaSpec effective = sigma;
  if (!sigma.known) {
    effective = SigmaSpec::known_variance(
        estimate_sigma_full(problem.base, problem.response));
  }

  std::vector<CovTestResult> base_results;
  if (problem.gamma == 0.0) {
    base_results =
        test_sequence(problem.base, problem.response, effective, options);
  } else {
    auto [aug, y_aug] = augment(problem);
    TestOptions aug_options = options;
    if (aug_options.max_steps < 0) {
      aug_options.max_steps = default_max_steps(problem.base);
    }
    base_results = test_sequence(aug, y_aug, effective, aug_options);
  }

  std::vector<EnetTestResult> results;
  results.reserve(base_results.size());
  for (CovTestResult& r : base_results) {
    if (!sigma.known) {
      r.sigma_source = SigmaSource::kEstimatedFullModel;
      r.null_law = NullLaw::f_two(problem.base.n() - problem.base.p());
      r.p_value = p_value(std::max(0.0, r.statistic), r.null_law);
    }
    EnetTestResult out;
    out.scaled_statistic = (1.0 + problem.gamma) * r.statistic;
    out.base = std::move(r);
    results.push_back(std::move(out));
  }
  return results;
}

}  // namespace covtest
