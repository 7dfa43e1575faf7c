#include "covtest/covariance_test.hpp"

#include <cmath>
#include <string>

#include "covtest/distributions.hpp"
#include "covtest/qr_updater.hpp"

namespace covtest {

namespace {

const PathEvent& entry_event(const LassoPath& path, int knot_index) {
  if (knot_index < 1 || knot_index > static_cast<int>(path.events.size())) {
    throw InvalidInput("covariance test: knot index " +
                       std::to_string(knot_index) + " out of range");
  }
  const PathEvent& ev = path.events[knot_index - 1];
  if (ev.kind != EventKind::kLeave) return ev;
  throw InvalidInput(
      "covariance test: knot " + std::to_string(knot_index) +
      " is a deletion; the test applies to entry events only");
}

int entry_ordinal(const LassoPath& path, int knot_index) {
  int ordinal = 0;
  for (int k = 0; k < knot_index; ++k) {
    if (path.events[k].kind == EventKind::kJoin) ++ordinal;
  }
  return ordinal;
}

double require_next_knot(const LassoPath& path, int knot_index) {
  if (knot_index == static_cast<int>(path.events.size()) && !path.complete &&
      path.terminal_lambda <= 0.0) {
    throw InvalidInput("covariance test: knot " + std::to_string(knot_index) +
                       " has no successor in the computed path");
  }
  return path.lambda_after(knot_index);
}

Eigen::VectorXd least_squares_on(const DesignMatrix& x, const ActiveSet& a,
                                 const Eigen::VectorXd& y) {
  QrUpdater qr(x.n());
  for (int k = 0; k < a.size(); ++k) {
    const int j = a.indices[k];
    if (!qr.try_add_column(x.values.col(j), kDefaultRankTol)) {
      throw SingularityError(
          "active set rank deficient at column " + std::to_string(j), j);
    }
  }
  return qr.solve_r(qr.qt_apply(y));
}

// Fitted-value inner product drop between the full solution and the reduced
// problem on A, evaluated at lambda_next.
double statistic_numerator(const DesignMatrix& x, const Eigen::VectorXd& y,
                           const LassoPath& path, const PathEvent& ev,
                           double lambda_next) {
  const Eigen::VectorXd beta_full = solution_at(path, x, y, lambda_next);
  const double fit_full = y.dot(x.values * beta_full);
  double fit_reduced = 0.0;
  if (ev.active_before.size() > 0) {
    const Eigen::VectorXd beta_reduced =
        reduced_solution(x, ev.active_before, y, lambda_next);
    Eigen::VectorXd fitted = Eigen::VectorXd::Zero(x.n());
    for (int k = 0; k < ev.active_before.size(); ++k) {
      fitted += x.values.col(ev.active_before.indices[k]) * beta_reduced[k];
    }
    fit_reduced = y.dot(fitted);
  }
  return fit_full - fit_reduced;
}

void finalize(CovTestResult& result, double raw_statistic, double sigma2) {
  if (raw_statistic < -1e-9 * std::max(1.0, std::fabs(raw_statistic))) {
    throw NumericalDegeneracy(
        "covariance statistic came out negative (" +
        std::to_string(raw_statistic) + "); numerical inconsistency");
  }
  result.statistic = raw_statistic;
  result.sigma2_used = sigma2;
  result.p_value = p_value(std::max(0.0, raw_statistic), result.null_law);
}

}  // namespace

double NullLaw::survival(double t) const {
  switch (kind) {
    case Kind::kExpScale:
      return dist::exp_survival(t, param);
    case Kind::kFTwo:
      return dist::f2_survival(t, param);
    case Kind::kChiSqOne:
      return dist::chisq1_survival(t);
  }
  return 0.0;
}

double NullLaw::quantile(double q) const {
  switch (kind) {
    case Kind::kExpScale:
      return dist::exp_quantile(q, param);
    case Kind::kFTwo:
      return dist::f2_quantile(q, param);
    case Kind::kChiSqOne:
      return dist::chisq1_quantile(q);
  }
  return 0.0;
}

double p_value(double statistic, const NullLaw& law) {
  if (statistic < 0.0) {
    throw InvalidInput("p_value: negative statistic");
  }
  return law.survival(statistic);
}

double scaling_factor(const DesignMatrix& x, const ActiveSet& a, int j,
                      int sign) {
  a.validate(x.p());
  if (a.contains(j)) {
    throw InvalidInput("scaling_factor: variable already active");
  }
  if (sign != 1 && sign != -1) {
    throw InvalidInput("scaling_factor: sign must be +1 or -1");
  }
  ActiveSet joined = a;
  joined.indices.push_back(j);
  joined.signs.push_back(sign);
  const Eigen::VectorXd after = pinv_transpose_apply(x, joined);
  const Eigen::VectorXd before = pinv_transpose_apply(x, a);
  return (after - before).squaredNorm();
}

bool sign_condition_holds(const DesignMatrix& x, const ActiveSet& a,
                          const Eigen::VectorXd& y, double lambda_k,
                          double lambda_k1) {
  a.validate(x.p());
  if (a.size() == 0) return true;  // covers the first step
  if (!(lambda_k1 <= lambda_k)) {
    throw InvalidInput("sign_condition_holds: lambda_k1 > lambda_k");
  }
  // Third sufficient scenario: s_A already matches the least squares signs,
  // so the same set and signs cannot recur at a lower knot.
  const Eigen::VectorXd ls = least_squares_on(x, a, y);
  bool ls_match = true;
  for (int k = 0; k < a.size(); ++k) {
    if (ls[k] == 0.0 || (ls[k] > 0.0 ? 1 : -1) != a.signs[k]) {
      ls_match = false;
      break;
    }
  }
  if (ls_match) return true;

  const Eigen::VectorXd reduced = reduced_solution(x, a, y, lambda_k1);
  for (int k = 0; k < a.size(); ++k) {
    if (reduced[k] == 0.0 || (reduced[k] > 0.0 ? 1 : -1) != a.signs[k]) {
      return false;
    }
  }
  return true;
}

double estimate_sigma_full(const DesignMatrix& x, const Eigen::VectorXd& y) {
  if (x.n() <= x.p()) {
    throw InvalidInput(
        "sigma^2 estimation needs n > p; supply a known variance instead");
  }
  QrUpdater qr(x.n());
  for (int j = 0; j < x.p(); ++j) {
    if (!qr.try_add_column(x.values.col(j), kDefaultRankTol)) {
      throw SingularityError(
          "full design is rank deficient at column " + std::to_string(j), j);
    }
  }
  const Eigen::VectorXd fitted = qr.q_apply(qr.qt_apply(y));
  return (y - fitted).squaredNorm() / (x.n() - x.p());
}

CovTestResult statistic_definition(const DesignMatrix& x,
                                   const Eigen::VectorXd& y,
                                   const LassoPath& path, int knot_index,
                                   double sigma2) {
  if (!(sigma2 > 0.0)) throw InvalidInput("statistic: sigma^2 must be > 0");
  const PathEvent& ev = entry_event(path, knot_index);
  const double lambda_next = require_next_knot(path, knot_index);

  CovTestResult result;
  result.knot_index = knot_index;
  result.entry_number = entry_ordinal(path, knot_index);
  result.variable = ev.variable;
  result.lambda_k = ev.lambda;
  result.lambda_k_plus_1 = lambda_next;
  result.form = StatisticForm::kDefinition;
  result.next_knot_is_leave = path.next_is_leave(knot_index);
  result.sign_condition_held = sign_condition_holds(
      x, ev.active_before, y, ev.lambda, lambda_next);
  result.scaling_c =
      scaling_factor(x, ev.active_before, ev.variable, ev.sign_on_entry);
  result.null_law = NullLaw::exp_scale(1.0);
  finalize(result, statistic_numerator(x, y, path, ev, lambda_next) / sigma2,
           sigma2);
  return result;
}

CovTestResult statistic_knot_form(const DesignMatrix& x,
                                  const Eigen::VectorXd& y,
                                  const LassoPath& path, int knot_index,
                                  double sigma2) {
  if (!(sigma2 > 0.0)) throw InvalidInput("statistic: sigma^2 must be > 0");
  const PathEvent& ev = entry_event(path, knot_index);
  const double lambda_next = require_next_knot(path, knot_index);

  CovTestResult result;
  result.knot_index = knot_index;
  result.entry_number = entry_ordinal(path, knot_index);
  result.variable = ev.variable;
  result.lambda_k = ev.lambda;
  result.lambda_k_plus_1 = lambda_next;
  result.form = StatisticForm::kKnot;
  result.next_knot_is_leave = path.next_is_leave(knot_index);
  result.sign_condition_held = sign_condition_holds(
      x, ev.active_before, y, ev.lambda, lambda_next);
  if (!result.sign_condition_held) {
    // Report which coordinate broke the condition.
    const Eigen::VectorXd reduced =
        reduced_solution(x, ev.active_before, y, lambda_next);
    int violator = -1;
    for (int k = 0; k < ev.active_before.size(); ++k) {
      if (reduced[k] == 0.0 ||
          (reduced[k] > 0.0 ? 1 : -1) != ev.active_before.signs[k]) {
        violator = ev.active_before.indices[k];
        break;
      }
    }
    throw NumericalDegeneracy(
        "knot form unavailable: reduced solution changes sign on variable " +
        std::to_string(violator) + "; use the definition form");
  }
  result.scaling_c =
      scaling_factor(x, ev.active_before, ev.variable, ev.sign_on_entry);
  result.null_law = NullLaw::exp_scale(1.0);
  finalize(result,
           result.scaling_c * ev.lambda * (ev.lambda - lambda_next) / sigma2,
           sigma2);
  return result;
}

std::vector<CovTestResult> test_sequence(const DesignMatrix& x,
                                         const Eigen::VectorXd& y,
                                         const SigmaSpec& sigma,
                                         const TestOptions& options) {
  double sigma2;
  SigmaSource source;
  if (sigma.known) {
    if (!(sigma.value > 0.0)) {
      throw InvalidInput("test_sequence: known sigma^2 must be > 0");
    }
    sigma2 = sigma.value;
    source = SigmaSource::kKnown;
  } else {
    sigma2 = estimate_sigma_full(x, y);
    source = SigmaSource::kEstimatedFullModel;
  }

  const int max_steps =
      options.max_steps < 0 ? default_max_steps(x) : options.max_steps;
  const LassoPath path = compute_path(x, y, max_steps, 0.0);

  std::vector<CovTestResult> results;
  for (const PathEvent& ev : path.events) {
    if (ev.kind != EventKind::kJoin) continue;
    const int k = ev.knot_index;
    // The final knot of an exhausted-but-incomplete path has no successor.
    if (k == static_cast<int>(path.events.size()) && !path.complete &&
        path.terminal_lambda <= 0.0) {
      break;
    }

    CovTestResult result;
    const bool next_leave = path.next_is_leave(k);
    bool knot_form_ok = !next_leave;
    if (knot_form_ok) {
      knot_form_ok = sign_condition_holds(x, ev.active_before, y, ev.lambda,
                                          path.lambda_after(k));
    }
    result = knot_form_ok ? statistic_knot_form(x, y, path, k, sigma2)
                          : statistic_definition(x, y, path, k, sigma2);

    if (!sigma.known) {
      result.null_law = NullLaw::f_two(x.n() - x.p());
      result.sigma_source = source;
      result.p_value = p_value(std::max(0.0, result.statistic),
                               result.null_law);
    } else if (options.exp_ladder_from &&
               result.entry_number >= *options.exp_ladder_from) {
      const int depth = result.entry_number - *options.exp_ladder_from + 1;
      result.null_law = NullLaw::exp_scale(1.0 / depth);
      result.p_value = p_value(std::max(0.0, result.statistic),
                               result.null_law);
    }
    results.push_back(std::move(result));
  }
  return results;
}

}  // namespace covtest
