#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hqcgbda/error.hpp"
#include "hqcgbda/uc_model.hpp"

namespace hqcgbda {

// Economic dispatch for one microgrid under a fixed commitment. Sign
// convention for the multipliers (all >= 0):
//   L = sum(a p^2 + b p) + sum_t l_t (D_t - sum_i p_it)
//       + sum m_it (p_min u_it - p_it) + sum n_it (p_it - p_max u_it)
// so stationarity reads 2 a p + b - l - m + n = 0 for every (i, t).

struct DualBundle {
  std::vector<double> l;  // per period
  Matrix<double> m;       // per (local unit, period), lower box
  Matrix<double> n;       // per (local unit, period), upper box

  DualBundle() = default;
  DualBundle(std::size_t units, std::size_t periods) : l(periods, 0.0), m(units, periods), n(units, periods) {}
};

enum class SubproblemStatus { Optimal, Infeasible };

struct DispatchResult {
  SubproblemStatus status = SubproblemStatus::Optimal;
  Dispatch p;  // local units x periods
  DualBundle duals;
  double objective = 0.0;  // +inf when infeasible
  std::vector<std::uint8_t> period_feasible;
};

struct FeasibilityResult {
  Dispatch p;
  std::vector<double> slack;  // per period
  DualBundle duals;
  double objective = 0.0;  // sum of slack
};

namespace detail {

struct PeriodSolution {
  bool feasible = true;
  double lambda = 0.0;
};

// Best response of a convex unit to price lambda. For a = 0 the response at
// lambda == b is an interval; `upper` selects its top end.
inline double unit_response(const UnitParams& u, double lambda, bool upper) {
  if (u.a > 0.0) return std::clamp((lambda - u.b) / (2.0 * u.a), u.p_min, u.p_max);
  if (lambda > u.b) return u.p_max;
  if (lambda < u.b) return u.p_min;
  return upper ? u.p_max : u.p_min;
}

// Lambda iteration for one period over the committed units `on`. Writes p
// for those units.
inline PeriodSolution solve_period(const std::vector<UnitParams>& units, const std::vector<std::size_t>& on,
                                   double demand, double tol, std::vector<double>& p) {
  double cap = 0.0;
  for (auto i : on) cap += units[i].p_max;
  if (cap < demand - tol) {
    for (auto i : on) p[i] = units[i].p_max;
    return {false, 0.0};
  }

  auto total = [&](double lambda, bool upper) {
    double s = 0.0;
    for (auto i : on) s += unit_response(units[i], lambda, upper);
    return s;
  };

  // Demand not binding: every unit sits at its own cost minimiser.
  if (total(0.0, false) >= demand) {
    for (auto i : on) p[i] = unit_response(units[i], 0.0, false);
    return {true, 0.0};
  }

  std::vector<double> breaks;
  for (auto i : on) {
    const auto& u = units[i];
    if (u.a > 0.0) {
      breaks.push_back(u.b + 2.0 * u.a * u.p_min);
      breaks.push_back(u.b + 2.0 * u.a * u.p_max);
    } else {
      breaks.push_back(u.b);
    }
  }
  std::erase_if(breaks, [](double x) { return x < 0.0; });
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  if (breaks.empty() || total(breaks.back(), true) < demand) {
    // Capacity covers demand only within tolerance.
    for (auto i : on) p[i] = units[i].p_max;
    return {true, breaks.empty() ? 0.0 : breaks.back()};
  }

  // Bisect for the first breakpoint whose upper supply reaches demand.
  std::size_t lo = 0, hi = breaks.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (total(breaks[mid], true) >= demand) hi = mid;
    else lo = mid + 1;
  }
  const double beta = breaks[lo];
  const double left = lo == 0 ? 0.0 : breaks[lo - 1];

  if (total(beta, false) >= demand) {
    // Supply is affine on (left, beta]; solve it exactly.
    const double probe = 0.5 * (left + beta);
    double fixed = 0.0, slope = 0.0, intercept = 0.0;
    for (auto i : on) {
      const auto& u = units[i];
      const double r = unit_response(u, probe, false);
      if (u.a > 0.0 && r > u.p_min && r < u.p_max) {
        slope += 1.0 / (2.0 * u.a);
        intercept -= u.b / (2.0 * u.a);
      } else {
        fixed += r;
      }
    }
    double lambda = slope > 0.0 ? (demand - fixed - intercept) / slope : beta;
    lambda = std::clamp(lambda, left, beta);
    for (auto i : on) p[i] = unit_response(units[i], lambda, false);
    // Remove rounding drift so that sum p == demand when the demand binds.
    double residual = demand;
    for (auto i : on) residual -= p[i];
    for (auto i : on) {
      const auto& u = units[i];
      if (residual == 0.0) break;
      if (u.a > 0.0 && p[i] > u.p_min && p[i] < u.p_max) {
        const double moved = std::clamp(p[i] + residual, u.p_min, u.p_max);
        residual -= moved - p[i];
        p[i] = moved;
      }
    }
    return {true, lambda};
  }

  // Jump at beta: flat-cost units priced exactly at beta absorb the rest,
  // in unit-index order.
  double residual = demand;
  for (auto i : on) {
    p[i] = unit_response(units[i], beta, false);
    residual -= p[i];
  }
  for (auto i : on) {
    const auto& u = units[i];
    if (residual <= 0.0) break;
    if (u.a == 0.0 && u.b == beta) {
      const double add = std::min(residual, u.p_max - p[i]);
      p[i] += add;
      residual -= add;
    }
  }
  return {true, beta};
}

}  // namespace detail

inline void check_convex(const Microgrid& mg) {
  for (const auto& u : mg.units) {
    if (u.a < 0.0) throw Error(ErrorCode::NonConvexUnit, "unit with a < 0 in microgrid " + std::to_string(mg.id));
  }
}

inline void check_slice(const Microgrid& mg, const Schedule& u_mg) {
  if (u_mg.rows() != mg.units.size() || u_mg.cols() != mg.demand.size()) {
    throw Error(ErrorCode::DimensionMismatch, "schedule slice does not match microgrid");
  }
}

/// Economic dispatch of one microgrid for commitment u_mg (local units x
/// periods). Periods are independent. Off units get p = 0 with box
/// multipliers chosen to satisfy stationarity at p = 0, which keeps the
/// resulting optimality cut a valid under-estimator when the unit is turned
/// on later.
inline DispatchResult solve_dispatch(const Microgrid& mg, const Schedule& u_mg, double tol = 1e-9) {
  check_slice(mg, u_mg);
  check_convex(mg);
  if (!(tol > 0.0) || !std::isfinite(tol)) throw Error(ErrorCode::ToleranceTooTight, "tolerance must be positive");

  const std::size_t units = mg.units.size();
  const std::size_t periods = mg.demand.size();
  DispatchResult res;
  res.p = Dispatch(units, periods, 0.0);
  res.duals = DualBundle(units, periods);
  res.period_feasible.assign(periods, 1);

  std::vector<double> p(units, 0.0);
  std::vector<std::size_t> on;
  double objective = 0.0;
  for (std::size_t t = 0; t < periods; ++t) {
    on.clear();
    std::fill(p.begin(), p.end(), 0.0);
    for (std::size_t i = 0; i < units; ++i) {
      if (u_mg(i, t)) on.push_back(i);
    }
    const auto sol = detail::solve_period(mg.units, on, mg.demand[t], tol, p);
    if (!sol.feasible) {
      res.status = SubproblemStatus::Infeasible;
      res.period_feasible[t] = 0;
      for (auto i : on) res.p(i, t) = p[i];
      continue;
    }
    const double lambda = sol.lambda;
    res.duals.l[t] = lambda;
    for (std::size_t i = 0; i < units; ++i) {
      const auto& u = mg.units[i];
      if (!u_mg(i, t)) {
        res.duals.m(i, t) = std::max(0.0, u.b - lambda);
        res.duals.n(i, t) = std::max(0.0, lambda - u.b);
        continue;
      }
      const double x = p[i];
      res.p(i, t) = x;
      const double grad = 2.0 * u.a * x + u.b - lambda;
      const double eps = 1e-12 * std::max(1.0, std::abs(u.p_max));
      if (grad > 0.0 && x <= u.p_min + eps) res.duals.m(i, t) = grad;
      else if (grad < 0.0 && x >= u.p_max - eps) res.duals.n(i, t) = -grad;
      objective += u.a * x * x + u.b * x + u.c + u.d;
    }
  }
  res.objective = res.status == SubproblemStatus::Optimal ? objective : std::numeric_limits<double>::infinity();
  return res;
}

/// Slack-relaxed dispatch: per period, minimise s_t subject to
/// sum p + s_t >= D_t and the gated boxes. Returns a vertex optimum and LP
/// duals (l = 1, n = 1 on every unit in periods with positive slack; all
/// zero otherwise).
inline FeasibilityResult solve_feasibility(const Microgrid& mg, const Schedule& u_mg, double tol = 1e-9) {
  check_slice(mg, u_mg);
  const std::size_t units = mg.units.size();
  const std::size_t periods = mg.demand.size();
  FeasibilityResult res;
  res.p = Dispatch(units, periods, 0.0);
  res.slack.assign(periods, 0.0);
  res.duals = DualBundle(units, periods);

  for (std::size_t t = 0; t < periods; ++t) {
    double cap = 0.0;
    for (std::size_t i = 0; i < units; ++i) {
      if (u_mg(i, t)) cap += mg.units[i].p_max;
    }
    const double demand = mg.demand[t];
    if (cap >= demand - tol) {
      double residual = demand;
      for (std::size_t i = 0; i < units; ++i) {
        if (!u_mg(i, t)) continue;
        res.p(i, t) = mg.units[i].p_min;
        residual -= mg.units[i].p_min;
      }
      for (std::size_t i = 0; i < units && residual > 0.0; ++i) {
        if (!u_mg(i, t)) continue;
        const double add = std::min(residual, mg.units[i].p_max - res.p(i, t));
        res.p(i, t) += add;
        residual -= add;
      }
      continue;
    }
    res.slack[t] = demand - cap;
    res.duals.l[t] = 1.0;
    for (std::size_t i = 0; i < units; ++i) {
      res.p(i, t) = u_mg(i, t) ? mg.units[i].p_max : 0.0;
      res.duals.n(i, t) = 1.0;
    }
  }
  for (double s : res.slack) res.objective += s;
  return res;
}

/// Rows of the global schedule that belong to microgrid `mg_index`.
inline Schedule schedule_slice(const Instance& inst, const Schedule& u, std::size_t mg_index) {
  const auto offsets = inst.unit_offsets();
  const auto& mg = inst.microgrids.at(mg_index);
  Schedule out(mg.units.size(), inst.horizon());
  for (std::size_t i = 0; i < mg.units.size(); ++i) {
    for (std::size_t t = 0; t < inst.horizon(); ++t) out(i, t) = u(offsets[mg_index] + i, t);
  }
  return out;
}

}  // namespace hqcgbda
