#pragma once

#include <Eigen/Dense>
#include <vector>

#include "covtest/design.hpp"

namespace covtest {

enum class EventKind { kJoin, kLeave };

/// One knot of the solution path: a variable joining or leaving the active
/// set, with the state needed to reconstruct the solution on either side.
struct PathEvent {
  int knot_index = 0;     // 1-based position in the knot sequence
  double lambda = 0.0;
  EventKind kind = EventKind::kJoin;
  int variable = -1;
  int sign_on_entry = 0;  // +1/-1 for joins, 0 for leaves
  ActiveSet active_before;
  ActiveSet active_after;
  Eigen::VectorXd coefficients_at_knot;  // length p
};

/// The piecewise-linear solution path. Knot lambdas decrease strictly.
///
/// terminal_lambda is 0 when the path ran to completion; when the path was
/// truncated (by max_steps or lambda_min) it holds the lambda of the first
/// event that was NOT processed, i.e. the path is valid on
/// [terminal_lambda, infinity).
struct LassoPath {
  std::vector<PathEvent> events;
  double lambda_max = 0.0;
  double terminal_lambda = 0.0;
  EventKind terminal_kind = EventKind::kJoin;  // kind of the pending event
  bool complete = true;  // no events remain below terminal_lambda
  int n = 0;
  int p = 0;

  int join_count() const;
  /// Lambda of the knot after `knot_index`, falling back to the pending
  /// event (truncated paths) or 0 (complete paths).
  double lambda_after(int knot_index) const;
  /// True when the knot after `knot_index` is a deletion.
  bool next_is_leave(int knot_index) const;
};

/// Saturation bound on the number of joins: min(n - 1, p) for centered
/// designs and min(n, p) otherwise.
int default_max_steps(const DesignMatrix& x);

/// Traces the lasso path by least angle regression with joining and leaving
/// events, down to lambda_min or max_steps joins.
LassoPath compute_path(const DesignMatrix& x, const Eigen::VectorXd& y,
                       int max_steps, double lambda_min);

/// The exact path solution at lambda (length p). Requires
/// lambda >= path.terminal_lambda.
Eigen::VectorXd solution_at(const LassoPath& path, const DesignMatrix& x,
                            const Eigen::VectorXd& y, double lambda);

/// Solves the lasso restricted to the active columns at the given lambda,
/// returning coefficients in active-set order (length |A|).
Eigen::VectorXd reduced_solution(const DesignMatrix& x, const ActiveSet& a,
                                 const Eigen::VectorXd& y, double lambda);

/// Per-variable stationarity report for a candidate solution.
struct KktEntry {
  int variable = -1;
  bool active = false;
  double stationarity = 0.0;  // X_j^T (y - X beta) - lambda sign(beta_j)
  double slack = 0.0;         // lambda - |X_j^T (y - X beta)| when inactive
  bool violation = false;
};

std::vector<KktEntry> kkt_report(const DesignMatrix& x,
                                 const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& beta, double lambda,
                                 double tol);

}  // namespace covtest
