#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "covtest/covariance_test.hpp"
#include "covtest/design.hpp"
#include "covtest/rng.hpp"

namespace covtest {

enum class CorrelationKind {
  kOrthogonal,
  kEqualDataCorr,
  kEqualPopulationCorr,
  kAr1,
  kBlockDiagonal,
};

struct SimulationConfig {
  int n = 100;
  int p = 10;
  CorrelationKind correlation = CorrelationKind::kEqualDataCorr;
  double rho = 0.0;
  std::vector<std::pair<int, double>> beta_spec;  // (index, value)
  double sigma = 1.0;
  int replications = 500;
  std::uint64_t seed = 1;
  int step_to_test = 1;        // entry ordinal to record
  bool estimate_sigma = false; // refer to F(2, n-p) with the full-model MSE

  void validate() const;
};

/// Monte Carlo summary in the shape of one table row: moments, tail mass
/// beyond the reference 95% point, their standard errors, and the fraction
/// of replications discarded by the known-support protocol.
struct NullSummary {
  double mean = 0.0;
  double variance = 0.0;
  double tail_prob = 0.0;
  double se_mean = 0.0;
  double se_variance = 0.0;
  double se_tail = 0.0;
  double discarded_fraction = 0.0;
  double q95_reference = 0.0;
  int replications = 0;
  int kept = 0;
};

/// Sample moments/tail of `samples` against `law`'s 95% point.
NullSummary summarize_null_samples(const std::vector<double>& samples,
                                   const NullLaw& law);

/// Draws one design: orthonormal columns for kOrthogonal, exact sample
/// correlations for kEqualDataCorr, rows i.i.d. from the population
/// covariance otherwise (then centered and standardized).
DesignMatrix gen_design(const SimulationConfig& config, CounterRng& rng);
DesignMatrix gen_design(const SimulationConfig& config);

/// y = X beta* + N(0, sigma^2 I) noise.
Eigen::VectorXd gen_response(const DesignMatrix& x,
                             const std::vector<std::pair<int, double>>& beta_spec,
                             double sigma, CounterRng& rng);
Eigen::VectorXd gen_response(const DesignMatrix& x,
                             const std::vector<std::pair<int, double>>& beta_spec,
                             double sigma, std::uint64_t seed);

/// Null-distribution table cell: per replication draw (X, y), run the
/// sequential covariance test, and record the statistic at step_to_test.
/// Replications where the first k entries are not exactly the true support
/// are discarded (k = number of nonzero true coefficients).
NullSummary null_table(const SimulationConfig& config, int threads = 1);

struct StepwiseStep {
  int variable = -1;
  double rss_before = 0.0;
  double rss_after = 0.0;
  double statistic = 0.0;  // RSS drop over sigma^2 (known or estimated)
  double p_value = 1.0;    // chi^2_1 (known) or F(1, n-p) (estimated)
};

struct StepwiseResult {
  std::vector<StepwiseStep> steps;
  SigmaSource sigma_source = SigmaSource::kKnown;
  double sigma2_used = 1.0;
  int df2 = 0;  // n - p when sigma^2 is estimated
};

/// Greedy forward selection by largest RSS drop.
StepwiseResult forward_stepwise(const DesignMatrix& x, const Eigen::VectorXd& y,
                                int steps, const SigmaSpec& sigma);

struct PowerPoint {
  double effect = 0.0;
  double cov_power_exp1 = 0.0;
  double se_cov_exp1 = 0.0;
  double cov_power_calibrated = 0.0;
  double se_cov_calibrated = 0.0;
  double fs_power_calibrated = 0.0;
  double se_fs_calibrated = 0.0;
};

struct PowerCurve {
  std::vector<PowerPoint> points;
  double cov_cutoff_exp1 = 0.0;        // Exp(1) 95% point
  double cov_cutoff_calibrated = 0.0;  // null-simulation 95th percentile
  double fs_cutoff_calibrated = 0.0;
  int test_step = 1;
};

/// Rejection rates over an effect-size grid. The varying coefficient sits at
/// the first index not used by config.beta_spec and is tested at the step
/// after the fixed signals; forward stepwise and the lasso get
/// simulation-calibrated 5% cutpoints from a null run of the same shape.
PowerCurve power_curve(const SimulationConfig& config,
                       const std::vector<double>& effect_grid,
                       int threads = 1);

/// (theoretical, empirical) quantile pairs at plotting positions
/// (i - 0.5) / N.
std::vector<std::pair<double, double>> qq_data(std::vector<double> samples,
                                               const NullLaw& law);

}  // namespace covtest
