#include "covtest/simulation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include "covtest/distributions.hpp"
#include "covtest/lasso_path.hpp"
#include "covtest/qr_updater.hpp"

namespace covtest {

namespace {

// Packs a purpose tag and an effect-grid slot into the Philox stream word.
std::uint32_t stream_id(std::uint32_t purpose, std::uint32_t slot = 0) {
  return purpose | (slot << 4);
}

Eigen::MatrixXd gaussian_matrix(int n, int p, CounterRng& rng) {
  Eigen::MatrixXd z(n, p);
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i < n; ++i) z(i, j) = rng.gaussian();
  }
  return z;
}

// Thin Q factor with column signs fixed by the R diagonal.
Eigen::MatrixXd thin_orthonormal(const Eigen::MatrixXd& z) {
  const int n = static_cast<int>(z.rows());
  const int p = static_cast<int>(z.cols());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  const Eigen::MatrixXd r =
      qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  for (int j = 0; j < p; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

void center_standardize_in_place(DesignMatrix& x) {
  x.column_means = x.values.colwise().mean();
  x.values.rowwise() -= x.column_means.transpose();
  for (int j = 0; j < x.p(); ++j) {
    const double norm = x.values.col(j).norm();
    if (norm == 0.0) {
      throw NumericalDegeneracy("generated design has a zero column");
    }
    x.values.col(j) /= norm;
    x.column_scales[j] = norm;
  }
  x.centered = true;
  x.standardized = true;
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& sigma,
                                const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw InvalidInput(std::string(what) +
                       ": target correlation matrix is not positive definite");
  }
  return llt.matrixL();
}

Eigen::MatrixXd equicorrelation(int p, double rho) {
  return (1.0 - rho) * Eigen::MatrixXd::Identity(p, p) +
         rho * Eigen::MatrixXd::Ones(p, p);
}

// Runs fn(rep) for rep in [0, count) over `threads` workers. Work items are
// strided so the assignment is deterministic; callers store results by index.
template <typename Fn>
void run_replications(int count, int threads, const Fn& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int rep = 0; rep < count; ++rep) fn(rep);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (int rep = t; rep < count; rep += threads) fn(rep);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double empirical_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

double rejection_se(double rate, int n) {
  return std::sqrt(rate * (1.0 - rate) / n);
}

}  // namespace

void SimulationConfig::validate() const {
  if (n < 2 || p < 1) throw InvalidInput("simulation: need n >= 2 and p >= 1");
  if (!(std::fabs(rho) < 1.0)) throw InvalidInput("simulation: |rho| must be < 1");
  if (!(sigma > 0.0)) throw InvalidInput("simulation: sigma must be > 0");
  if (replications < 1) throw InvalidInput("simulation: replications < 1");
  if (step_to_test < 1) throw InvalidInput("simulation: step_to_test < 1");
  if (step_to_test > p) throw InvalidInput("simulation: step_to_test > p");
  if (correlation == CorrelationKind::kOrthogonal && p > n) {
    throw InvalidInput("orthogonal design needs p <= n");
  }
  if (correlation == CorrelationKind::kEqualDataCorr && p > n - 1) {
    throw InvalidInput(
        "equal data correlation needs p <= n - 1 (exact sample correlations "
        "live in the centered subspace)");
  }
  std::set<int> seen;
  for (const auto& [idx, value] : beta_spec) {
    if (idx < 0 || idx >= p) {
      throw InvalidInput("beta index " + std::to_string(idx) + " out of range");
    }
    if (!seen.insert(idx).second) {
      throw InvalidInput("beta index " + std::to_string(idx) + " repeated");
    }
    if (!std::isfinite(value)) throw InvalidInput("beta value not finite");
  }
  if (estimate_sigma && n <= p) {
    throw InvalidInput(
        "sigma^2 estimation needs n > p; supply a known variance instead");
  }
}

NullSummary summarize_null_samples(const std::vector<double>& samples,
                                   const NullLaw& law) {
  const int n = static_cast<int>(samples.size());
  if (n < 2) throw InvalidInput("summary needs at least 2 samples");
  NullSummary s;
  s.kept = n;
  s.q95_reference = law.quantile(0.95);

  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  int tail = 0;
  for (double v : samples) {
    const double d = v - mean;
    m2 += d * d;
    m4 += d * d * d * d;
    if (v > s.q95_reference) ++tail;
  }
  const double var_unbiased = m2 / (n - 1);
  m2 /= n;
  m4 /= n;

  s.mean = mean;
  s.variance = var_unbiased;
  s.tail_prob = static_cast<double>(tail) / n;
  s.se_mean = std::sqrt(var_unbiased / n);
  const double var_of_var =
      (m4 - var_unbiased * var_unbiased * (n - 3.0) / (n - 1.0)) / n;
  s.se_variance = std::sqrt(std::max(0.0, var_of_var));
  s.se_tail = rejection_se(s.tail_prob, n);
  return s;
}

DesignMatrix gen_design(const SimulationConfig& config, CounterRng& rng) {
  config.validate();
  const int n = config.n;
  const int p = config.p;

  DesignMatrix x;
  x.column_means = Eigen::VectorXd::Zero(p);
  x.column_scales = Eigen::VectorXd::Ones(p);

  switch (config.correlation) {
    case CorrelationKind::kOrthogonal: {
      x.values = thin_orthonormal(gaussian_matrix(n, p, rng));
      x.centered = false;
      x.standardized = true;
      return x;
    }
    case CorrelationKind::kEqualDataCorr: {
      Eigen::MatrixXd z = gaussian_matrix(n, p, rng);
      z.rowwise() -= z.colwise().mean();
      const Eigen::MatrixXd q = thin_orthonormal(z);
      const Eigen::MatrixXd chol = cholesky_factor(
          equicorrelation(p, config.rho), "equal data correlation");
      x.values = q * chol.transpose();
      x.centered = true;
      x.standardized = true;
      // The construction is exact up to factorization roundoff; check it.
      for (int j = 0; j < p; ++j) {
        for (int k = j + 1; k < p; ++k) {
          const double r = x.values.col(j).dot(x.values.col(k));
          if (std::fabs(r - config.rho) > 1e-8) {
            throw NumericalDegeneracy(
                "equal data correlation construction drifted beyond 1e-8");
          }
        }
      }
      return x;
    }
    case CorrelationKind::kEqualPopulationCorr: {
      const Eigen::MatrixXd chol = cholesky_factor(
          equicorrelation(p, config.rho), "equal population correlation");
      x.values = gaussian_matrix(n, p, rng) * chol.transpose();
      break;
    }
    case CorrelationKind::kAr1: {
      Eigen::MatrixXd sigma(p, p);
      for (int j = 0; j < p; ++j) {
        for (int k = 0; k < p; ++k) {
          sigma(j, k) = std::pow(config.rho, std::abs(j - k));
        }
      }
      x.values = gaussian_matrix(n, p, rng) *
                 cholesky_factor(sigma, "AR(1)").transpose();
      break;
    }
    case CorrelationKind::kBlockDiagonal: {
      const int first = (p + 1) / 2;
      Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(p, p);
      sigma.topLeftCorner(first, first) = equicorrelation(first, config.rho);
      sigma.bottomRightCorner(p - first, p - first) =
          equicorrelation(p - first, config.rho);
      x.values = gaussian_matrix(n, p, rng) *
                 cholesky_factor(sigma, "block diagonal").transpose();
      break;
    }
  }
  center_standardize_in_place(x);
  return x;
}

DesignMatrix gen_design(const SimulationConfig& config) {
  CounterRng rng(config.seed, stream_id(rng_stream::kDesign), 0);
  return gen_design(config, rng);
}

Eigen::VectorXd gen_response(
    const DesignMatrix& x, const std::vector<std::pair<int, double>>& beta_spec,
    double sigma, CounterRng& rng) {
  Eigen::VectorXd y(x.n());
  for (int i = 0; i < x.n(); ++i) y[i] = sigma * rng.gaussian();
  for (const auto& [idx, value] : beta_spec) {
    if (idx < 0 || idx >= x.p()) {
      throw InvalidInput("gen_response: beta index out of range");
    }
    y += value * x.values.col(idx);
  }
  return y;
}

Eigen::VectorXd gen_response(
    const DesignMatrix& x, const std::vector<std::pair<int, double>>& beta_spec,
    double sigma, std::uint64_t seed) {
  CounterRng rng(seed, stream_id(rng_stream::kResponse), 0);
  return gen_response(x, beta_spec, sigma, rng);
}

NullSummary null_table(const SimulationConfig& config, int threads) {
  config.validate();
  const int k_true = static_cast<int>(config.beta_spec.size());
  const int steps_needed = std::max(config.step_to_test, k_true);
  std::set<int> support;
  for (const auto& [idx, value] : config.beta_spec) {
    if (value != 0.0) support.insert(idx);
  }

  const SigmaSpec sigma = config.estimate_sigma
                              ? SigmaSpec::estimate()
                              : SigmaSpec::known_variance(config.sigma *
                                                          config.sigma);
  TestOptions options;
  options.max_steps = steps_needed;

  std::vector<double> stats(config.replications, 0.0);
  std::vector<char> kept(config.replications, 0);

  run_replications(config.replications, threads, [&](int rep) {
    CounterRng design_rng(config.seed, stream_id(rng_stream::kDesign),
                          static_cast<std::uint32_t>(rep));
    CounterRng response_rng(config.seed, stream_id(rng_stream::kResponse),
                            static_cast<std::uint32_t>(rep));
    const DesignMatrix x = gen_design(config, design_rng);
    const Eigen::VectorXd y =
        gen_response(x, config.beta_spec, config.sigma, response_rng);

    const auto results = test_sequence(x, y, sigma, options);
    if (static_cast<int>(results.size()) < steps_needed) {
      throw NumericalDegeneracy(
          "replication terminated before the tested step");
    }
    // Known-support protocol: the first k entries must be the true support.
    std::set<int> entered;
    for (int s = 0; s < static_cast<int>(support.size()); ++s) {
      entered.insert(results[s].variable);
    }
    if (entered != support) return;
    stats[rep] = results[config.step_to_test - 1].statistic;
    kept[rep] = 1;
  });

  std::vector<double> retained;
  retained.reserve(config.replications);
  for (int rep = 0; rep < config.replications; ++rep) {
    if (kept[rep]) retained.push_back(stats[rep]);
  }

  const NullLaw law = config.estimate_sigma
                          ? NullLaw::f_two(config.n - config.p)
                          : NullLaw::exp_scale(1.0);
  NullSummary summary = summarize_null_samples(retained, law);
  summary.replications = config.replications;
  summary.discarded_fraction =
      1.0 - static_cast<double>(retained.size()) / config.replications;
  return summary;
}

StepwiseResult forward_stepwise(const DesignMatrix& x, const Eigen::VectorXd& y,
                                int steps, const SigmaSpec& sigma) {
  if (y.size() != x.n()) {
    throw InvalidInput("forward_stepwise: response length mismatch");
  }
  if (steps < 1 || steps > default_max_steps(x)) {
    throw InvalidInput("forward_stepwise: steps must be in [1, min(n-1, p)]");
  }

  StepwiseResult result;
  if (sigma.known) {
    if (!(sigma.value > 0.0)) {
      throw InvalidInput("forward_stepwise: sigma^2 must be > 0");
    }
    result.sigma2_used = sigma.value;
    result.sigma_source = SigmaSource::kKnown;
  } else {
    result.sigma2_used = estimate_sigma_full(x, y);
    result.sigma_source = SigmaSource::kEstimatedFullModel;
    result.df2 = x.n() - x.p();
  }

  QrUpdater qr(x.n());
  std::vector<char> in_model(x.p(), 0);
  Eigen::VectorXd residual = y;
  double rss = residual.squaredNorm();

  for (int step = 0; step < steps; ++step) {
    int best = -1;
    double best_drop = -1.0;
    for (int j = 0; j < x.p(); ++j) {
      if (in_model[j]) continue;
      Eigen::VectorXd u = x.values.col(j);
      if (qr.cols() > 0) u -= qr.q_apply(qr.qt_apply(u));
      const double denom = u.squaredNorm();
      if (denom <= 1e-20 * x.values.col(j).squaredNorm()) continue;
      const double corr = u.dot(residual);
      const double drop = corr * corr / denom;
      if (drop > best_drop) {
        best_drop = drop;
        best = j;
      }
    }
    if (best < 0) {
      throw SingularityError(
          "forward stepwise: no remaining column adds rank", -1);
    }
    if (!qr.try_add_column(x.values.col(best), kDefaultRankTol)) {
      throw SingularityError("forward stepwise: rank failure at column " +
                                 std::to_string(best),
                             best);
    }
    in_model[best] = 1;
    residual = y - qr.q_apply(qr.qt_apply(y));
    const double rss_after = residual.squaredNorm();

    StepwiseStep s;
    s.variable = best;
    s.rss_before = rss;
    s.rss_after = rss_after;
    s.statistic = (rss - rss_after) / result.sigma2_used;
    s.p_value = sigma.known
                    ? dist::chisq1_survival(s.statistic)
                    : dist::f_survival(s.statistic, 1.0, result.df2);
    result.steps.push_back(s);
    rss = rss_after;
  }
  return result;
}

PowerCurve power_curve(const SimulationConfig& config,
                       const std::vector<double>& effect_grid, int threads) {
  config.validate();
  if (effect_grid.empty()) throw InvalidInput("power_curve: empty effect grid");
  const int k_true = static_cast<int>(config.beta_spec.size());
  const int test_step = k_true + 1;
  if (test_step > config.p) {
    throw InvalidInput("power_curve: no free predictor left to test");
  }
  std::set<int> used;
  for (const auto& [idx, value] : config.beta_spec) used.insert(idx);
  int effect_index = 0;
  while (used.count(effect_index)) ++effect_index;

  const SigmaSpec sigma =
      SigmaSpec::known_variance(config.sigma * config.sigma);
  TestOptions options;
  options.max_steps = test_step;

  // One replication: covariance statistic and stepwise RSS drop at the
  // tested step, under the given effect size.
  auto simulate_pair = [&](std::uint32_t slot, int rep,
                           double effect) -> std::pair<double, double> {
    CounterRng design_rng(config.seed, stream_id(rng_stream::kDesign, slot),
                          static_cast<std::uint32_t>(rep));
    CounterRng response_rng(config.seed,
                            stream_id(rng_stream::kResponse, slot),
                            static_cast<std::uint32_t>(rep));
    const DesignMatrix x = gen_design(config, design_rng);
    auto beta = config.beta_spec;
    if (effect != 0.0) beta.emplace_back(effect_index, effect);
    const Eigen::VectorXd y =
        gen_response(x, beta, config.sigma, response_rng);

    const auto cov = test_sequence(x, y, sigma, options);
    if (static_cast<int>(cov.size()) < test_step) {
      throw NumericalDegeneracy("power replication terminated early");
    }
    const auto fs = forward_stepwise(x, y, test_step, sigma);
    return {cov[test_step - 1].statistic,
            fs.steps[test_step - 1].statistic};
  };

  PowerCurve curve;
  curve.test_step = test_step;
  curve.cov_cutoff_exp1 = NullLaw::exp_scale(1.0).quantile(0.95);

  // Calibration: a null run of the same shape fixes the 5% cutpoints.
  std::vector<double> null_cov(config.replications);
  std::vector<double> null_fs(config.replications);
  run_replications(config.replications, threads, [&](int rep) {
    // Slot 0 is reserved for calibration; grid points use slots >= 1.
    CounterRng design_rng(config.seed,
                          stream_id(rng_stream::kCalibration, 0),
                          static_cast<std::uint32_t>(rep));
    CounterRng response_rng(config.seed,
                            stream_id(rng_stream::kCalibration, 1),
                            static_cast<std::uint32_t>(rep));
    const DesignMatrix x = gen_design(config, design_rng);
    const Eigen::VectorXd y =
        gen_response(x, config.beta_spec, config.sigma, response_rng);
    const auto cov = test_sequence(x, y, sigma, options);
    if (static_cast<int>(cov.size()) < test_step) {
      throw NumericalDegeneracy("calibration replication terminated early");
    }
    const auto fs = forward_stepwise(x, y, test_step, sigma);
    null_cov[rep] = cov[test_step - 1].statistic;
    null_fs[rep] = fs.steps[test_step - 1].statistic;
  });
  curve.cov_cutoff_calibrated = empirical_quantile(null_cov, 0.95);
  curve.fs_cutoff_calibrated = empirical_quantile(null_fs, 0.95);

  for (std::size_t g = 0; g < effect_grid.size(); ++g) {
    std::vector<double> cov_stats(config.replications);
    std::vector<double> fs_stats(config.replications);
    run_replications(config.replications, threads, [&](int rep) {
      const auto [cov_t, fs_r] =
          simulate_pair(static_cast<std::uint32_t>(g + 1), rep,
                        effect_grid[g]);
      cov_stats[rep] = cov_t;
      fs_stats[rep] = fs_r;
    });

    PowerPoint point;
    point.effect = effect_grid[g];
    int cov_exp1 = 0, cov_cal = 0, fs_cal = 0;
    for (int rep = 0; rep < config.replications; ++rep) {
      if (cov_stats[rep] > curve.cov_cutoff_exp1) ++cov_exp1;
      if (cov_stats[rep] > curve.cov_cutoff_calibrated) ++cov_cal;
      if (fs_stats[rep] > curve.fs_cutoff_calibrated) ++fs_cal;
    }
    const int n = config.replications;
    point.cov_power_exp1 = static_cast<double>(cov_exp1) / n;
    point.cov_power_calibrated = static_cast<double>(cov_cal) / n;
    point.fs_power_calibrated = static_cast<double>(fs_cal) / n;
    point.se_cov_exp1 = rejection_se(point.cov_power_exp1, n);
    point.se_cov_calibrated = rejection_se(point.cov_power_calibrated, n);
    point.se_fs_calibrated = rejection_se(point.fs_power_calibrated, n);
    curve.points.push_back(point);
  }
  return curve;
}

std::vector<std::pair<double, double>> qq_data(std::vector<double> samples,
                                               const NullLaw& law) {
  const int n = static_cast<int>(samples.size());
  if (n < 2) throw InvalidInput("qq_data: need at least 2 samples");
  std::sort(samples.begin(), samples.end());
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double q = (i + 0.5) / n;
    pairs.emplace_back(law.quantile(q), samples[i]);
  }
  return pairs;
}

}  // namespace covtest
