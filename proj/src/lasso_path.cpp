#include "covtest/lasso_path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "covtest/qr_updater.hpp"

namespace covtest {

namespace {

// Knots closer than this (relative) are treated as ties, and candidates
// this close below the current knot are excluded to keep the sequence
// strictly decreasing.
constexpr double kKnotTieTol = 1e-12;

struct Candidate {
  double lambda = -std::numeric_limits<double>::infinity();
  EventKind kind = EventKind::kJoin;
  int variable = -1;
  int sign = 0;      // entry sign for joins
  int position = -1; // active-set position for leaves
};

// State of one path computation; owns the incremental factorization.
class PathState {
 public:
  PathState(const DesignMatrix& x, const Eigen::VectorXd& y)
      : x_(x), y_(y), qr_(x.n()) {}

  const ActiveSet& active() const { return active_; }

  void add(int j, int sign) {
    if (!qr_.try_add_column(x_.values.col(j), kDefaultRankTol)) {
      throw SingularityError(
          "joining column " + std::to_string(j) +
              " makes the active set rank deficient",
          j);
    }
    active_.indices.push_back(j);
    active_.signs.push_back(sign);
  }

  void drop(int position) {
    qr_.remove_column(position);
    active_.indices.erase(active_.indices.begin() + position);
    active_.signs.erase(active_.signs.begin() + position);
  }

  // Least squares coefficients on the active set: (X_A)^+ y.
  Eigen::VectorXd ls_coefficients() const {
    return qr_.solve_r(qr_.qt_apply(y_));
  }

  // Shrinkage direction (X_A^T X_A)^{-1} s_A.
  Eigen::VectorXd shrink_direction() const {
    return qr_.solve_r(qr_.solve_rt(active_.sign_vector()));
  }

  // Active-set coefficients at lambda within the current segment.
  Eigen::VectorXd coefficients_at(double lambda) const {
    if (active_.size() == 0) return Eigen::VectorXd();
    return ls_coefficients() - lambda * shrink_direction();
  }

  Eigen::VectorXd residual() const {
    if (active_.size() == 0) return y_;
    return y_ - qr_.q_apply(qr_.qt_apply(y_));
  }

  // (X_A^T)^+ s_A, the equiangular direction scaled by the signs.
  Eigen::VectorXd sign_pseudo() const {
    if (active_.size() == 0) return Eigen::VectorXd::Zero(x_.n());
    return qr_.q_apply(qr_.solve_rt(active_.sign_vector()));
  }

 private:
  const DesignMatrix& x_;
  const Eigen::VectorXd& y_;
  QrUpdater qr_;
  ActiveSet active_;
};

Eigen::VectorXd scatter(const ActiveSet& a, const Eigen::VectorXd& packed,
                        int p) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(p);
  for (int k = 0; k < a.size(); ++k) full[a.indices[k]] = packed[k];
  return full;
}

}  // namespace

int LassoPath::join_count() const {
  int c = 0;
  for (const auto& e : events) {
    if (e.kind == EventKind::kJoin) ++c;
  }
  return c;
}

double LassoPath::lambda_after(int knot_index) const {
  if (knot_index < 1 || knot_index > static_cast<int>(events.size())) {
    throw InvalidInput("lambda_after: knot index out of range");
  }
  if (knot_index < static_cast<int>(events.size())) {
    return events[knot_index].lambda;
  }
  return terminal_lambda;
}

bool LassoPath::next_is_leave(int knot_index) const {
  if (knot_index < static_cast<int>(events.size())) {
    return events[knot_index].kind == EventKind::kLeave;
  }
  return !complete && terminal_kind == EventKind::kLeave;
}

int default_max_steps(const DesignMatrix& x) {
  const int effective_rows = x.centered ? x.n() - 1 : x.n();
  return std::min(effective_rows, x.p());
}

LassoPath compute_path(const DesignMatrix& x, const Eigen::VectorXd& y,
                       int max_steps, double lambda_min) {
  if (y.size() != x.n()) {
    throw InvalidInput("compute_path: response length does not match n");
  }
  if (!y.allFinite()) throw InvalidInput("compute_path: non-finite response");
  if (max_steps < 0) max_steps = default_max_steps(x);
  if (lambda_min < 0.0) throw InvalidInput("compute_path: lambda_min < 0");

  const int p = x.p();
  LassoPath path;
  path.n = x.n();
  path.p = p;

  PathState state(x, y);
  double lambda_k = std::numeric_limits<double>::infinity();
  int joins = 0;
  // Loose guard against FP-driven join/leave cycling on degenerate inputs.
  const int max_events = 16 + 12 * std::max(max_steps, 1);

  while (true) {
    const ActiveSet& a = state.active();
    const Eigen::VectorXd r = state.residual();
    const Eigen::VectorXd w = state.sign_pseudo();

    const Eigen::VectorXd num = x.values.transpose() * r;  // X_j^T (I-P_A) y
    const Eigen::VectorXd den_base = x.values.transpose() * w;

    // Candidates below this are the path terminus; candidates above this
    // would violate strict knot decrease.
    const double floor_lambda =
        path.events.empty() ? 0.0 : kKnotTieTol * path.lambda_max;
    const double ceil_lambda = std::isinf(lambda_k)
                                   ? std::numeric_limits<double>::infinity()
                                   : lambda_k * (1.0 - kKnotTieTol);

    Candidate best, second;
    auto offer = [&](const Candidate& c) {
      if (c.lambda > best.lambda) {
        second = best;
        best = c;
      } else if (c.lambda > second.lambda) {
        second = c;
      }
    };

    for (int j = 0; j < p; ++j) {
      if (a.contains(j)) continue;
      for (int sign = -1; sign <= 1; sign += 2) {
        const double den = sign - den_base[j];
        if (den == 0.0) continue;
        const double cand = num[j] / den;
        if (cand <= floor_lambda || cand >= ceil_lambda) continue;
        offer({cand, EventKind::kJoin, j, sign, -1});
      }
    }

    if (a.size() > 0) {
      const Eigen::VectorXd ls = state.ls_coefficients();
      const Eigen::VectorXd dir = state.shrink_direction();
      for (int k = 0; k < a.size(); ++k) {
        if (dir[k] == 0.0 || !std::isfinite(ls[k] / dir[k])) continue;
        const double cand = ls[k] / dir[k];
        if (cand <= floor_lambda || cand >= ceil_lambda) continue;
        offer({cand, EventKind::kLeave, a.indices[k], 0, k});
      }
    }

    if (best.variable < 0) {
      // No further events: the path extends linearly to lambda = 0.
      path.terminal_lambda = 0.0;
      path.complete = true;
      break;
    }

    if (second.variable >= 0 &&
        !(best.variable == second.variable && best.kind == second.kind) &&
        best.lambda - second.lambda <= kKnotTieTol * best.lambda) {
      throw KnotTieError(
          "knots tie at lambda = " + std::to_string(best.lambda) +
          " (variables " + std::to_string(best.variable) + " and " +
          std::to_string(second.variable) + "); input is degenerate");
    }

    if (best.lambda < lambda_min ||
        (best.kind == EventKind::kJoin && joins >= max_steps)) {
      path.terminal_lambda = best.lambda;
      path.terminal_kind = best.kind;
      path.complete = false;
      break;
    }

    PathEvent ev;
    ev.knot_index = static_cast<int>(path.events.size()) + 1;
    ev.lambda = best.lambda;
    ev.kind = best.kind;
    ev.variable = best.variable;
    ev.sign_on_entry = best.kind == EventKind::kJoin ? best.sign : 0;
    ev.active_before = a;
    ev.coefficients_at_knot = scatter(a, state.coefficients_at(best.lambda), p);
    if (best.kind == EventKind::kLeave) {
      // The leaving coordinate crosses zero at this knot by definition.
      ev.coefficients_at_knot[best.variable] = 0.0;
    }

    if (best.kind == EventKind::kJoin) {
      state.add(best.variable, best.sign);
      ++joins;
    } else {
      state.drop(best.position);
    }
    ev.active_after = state.active();
    if (path.events.empty()) path.lambda_max = best.lambda;
    lambda_k = best.lambda;
    path.events.push_back(std::move(ev));

    if (static_cast<int>(path.events.size()) > max_events) {
      throw NumericalDegeneracy(
          "path exceeded the event budget; input is degenerate");
    }
  }

  if (path.events.empty()) {
    path.lambda_max = 0.0;
    path.terminal_lambda = 0.0;
    path.complete = true;
  }
  return path;
}

Eigen::VectorXd solution_at(const LassoPath& path, const DesignMatrix& x,
                            const Eigen::VectorXd& y, double lambda) {
  if (!(lambda >= path.terminal_lambda)) {
    throw InvalidInput(
        "solution_at: lambda below the computed path range (terminal " +
        std::to_string(path.terminal_lambda) + ")");
  }
  if (path.events.empty() || lambda >= path.lambda_max) {
    return Eigen::VectorXd::Zero(x.p());
  }
  // Find the last knot with lambda_k >= lambda; the segment below it applies.
  int idx = 0;
  for (int k = 1; k < static_cast<int>(path.events.size()); ++k) {
    if (path.events[k].lambda >= lambda) idx = k;
  }
  const ActiveSet& a = path.events[idx].active_after;
  if (a.size() == 0) return Eigen::VectorXd::Zero(x.p());

  QrUpdater qr(x.n());
  for (int k = 0; k < a.size(); ++k) {
    const int j = a.indices[k];
    if (!qr.try_add_column(x.values.col(j), kDefaultRankTol)) {
      throw SingularityError("active set rank deficient at column " +
                                 std::to_string(j),
                             j);
    }
  }
  const Eigen::VectorXd ls = qr.solve_r(qr.qt_apply(y));
  const Eigen::VectorXd dir = qr.solve_r(qr.solve_rt(a.sign_vector()));
  return scatter(a, ls - lambda * dir, x.p());
}

Eigen::VectorXd reduced_solution(const DesignMatrix& x, const ActiveSet& a,
                                 const Eigen::VectorXd& y, double lambda) {
  a.validate(x.p());
  if (a.size() == 0) return Eigen::VectorXd();
  DesignMatrix sub;
  sub.values.resize(x.n(), a.size());
  sub.column_means.resize(a.size());
  sub.column_scales.resize(a.size());
  for (int k = 0; k < a.size(); ++k) {
    sub.values.col(k) = x.values.col(a.indices[k]);
    sub.column_means[k] = x.column_means[a.indices[k]];
    sub.column_scales[k] = x.column_scales[a.indices[k]];
  }
  sub.centered = x.centered;
  sub.standardized = x.standardized;
  sub.response_mean = x.response_mean;

  // Generous join budget: variables may leave and rejoin above lambda.
  LassoPath sub_path = compute_path(sub, y, 4 * a.size() + 16, lambda);
  return solution_at(sub_path, sub, y, lambda);
}

std::vector<KktEntry> kkt_report(const DesignMatrix& x,
                                 const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& beta, double lambda,
                                 double tol) {
  if (beta.size() != x.p()) {
    throw InvalidInput("kkt_report: beta length does not match p");
  }
  const Eigen::VectorXd r = y - x.values * beta;
  const Eigen::VectorXd grad = x.values.transpose() * r;
  std::vector<KktEntry> out(x.p());
  for (int j = 0; j < x.p(); ++j) {
    KktEntry& e = out[j];
    e.variable = j;
    e.active = beta[j] != 0.0;
    if (e.active) {
      const double sign = beta[j] > 0.0 ? 1.0 : -1.0;
      e.stationarity = grad[j] - lambda * sign;
      e.slack = 0.0;
      e.violation = std::fabs(e.stationarity) > tol;
    } else {
      e.stationarity = grad[j];
      e.slack = lambda - std::fabs(grad[j]);
      e.violation = e.slack < -tol;
    }
  }
  return out;
}

}  // namespace covtest
