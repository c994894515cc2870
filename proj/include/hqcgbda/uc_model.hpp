#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hqcgbda/error.hpp"
#include "hqcgbda/matrix.hpp"

namespace hqcgbda {

/// Generator parameters. Fuel cost of an online unit is a p^2 + b p + c, and
/// d is charged for every online hour.
struct UnitParams {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  double p_min = 0.0;
  double p_max = 0.0;
  int t_on = 1;
  int t_off = 1;
};

/// Commitment history before the first period: the unit spent the last
/// `duration` hours in state `was_on`, and before that was in the opposite
/// state long enough to satisfy any minimum-time rule. duration == 0 therefore
/// means "settled in the opposite state".
struct InitialState {
  bool was_on = false;
  int duration = 0;
};

struct Microgrid {
  int id = 0;
  std::vector<UnitParams> units;
  std::vector<double> demand;  // MW per period
};

/// On/off matrix indexed (global unit, period).
using Schedule = Matrix<std::uint8_t>;
/// Power output matrix in MW indexed (global unit, period).
using Dispatch = Matrix<double>;

/// Full problem statement. Global unit indices concatenate the per-microgrid
/// unit lists in order.
struct Instance {
  std::vector<Microgrid> microgrids;
  int horizon_t = 0;
  std::vector<InitialState> initial_state;  // one per global unit

  std::size_t num_units() const {
    std::size_t n = 0;
    for (const auto& mg : microgrids) n += mg.units.size();
    return n;
  }

  std::size_t horizon() const { return static_cast<std::size_t>(horizon_t); }

  /// First global unit index of each microgrid.
  std::vector<std::size_t> unit_offsets() const {
    std::vector<std::size_t> out;
    out.reserve(microgrids.size());
    std::size_t n = 0;
    for (const auto& mg : microgrids) {
      out.push_back(n);
      n += mg.units.size();
    }
    return out;
  }

  const UnitParams& unit(std::size_t global) const {
    for (const auto& mg : microgrids) {
      if (global < mg.units.size()) return mg.units[global];
      global -= mg.units.size();
    }
    throw Error(ErrorCode::DimensionMismatch, "unit index out of range");
  }
};

/// The pure-binary side of a unit: what the master problem is allowed to see.
/// Carries no cost or capacity data.
struct CommitmentRules {
  int t_on = 1;
  int t_off = 1;
  InitialState initial;
};

inline std::vector<CommitmentRules> commitment_rules(const Instance& inst) {
  std::vector<CommitmentRules> rules;
  rules.reserve(inst.num_units());
  std::size_t g = 0;
  for (const auto& mg : inst.microgrids) {
    for (const auto& unit : mg.units) {
      rules.push_back({unit.t_on, unit.t_off, inst.initial_state.at(g)});
      ++g;
    }
  }
  return rules;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationIssue {
  ErrorCode code;
  std::string field;
  int mg = -1;
  int index = -1;
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<ValidationIssue> issues)
      : Error(issues.empty() ? ErrorCode::InvalidParameter : issues.front().code, summarize(issues)),
        issues_(std::move(issues)) {}

  const std::vector<ValidationIssue>& issues() const noexcept { return issues_; }

 private:
  static std::string summarize(const std::vector<ValidationIssue>& issues) {
    std::string s = std::to_string(issues.size()) + " validation issue(s)";
    for (const auto& issue : issues) s += "; " + issue.message;
    return s;
  }

  std::vector<ValidationIssue> issues_;
};

inline std::vector<ValidationIssue> find_instance_issues(const Instance& inst) {
  std::vector<ValidationIssue> out;
  auto add = [&](ErrorCode code, std::string field, int mg, int idx, std::string msg) {
    out.push_back({code, std::move(field), mg, idx, std::move(msg)});
  };
  if (inst.horizon_t < 1) add(ErrorCode::InvalidParameter, "horizon_t", -1, -1, "horizon_t must be >= 1");
  if (inst.microgrids.empty()) add(ErrorCode::EmptyInstance, "microgrids", -1, -1, "instance has no microgrids");

  for (std::size_t m = 0; m < inst.microgrids.size(); ++m) {
    const auto& mg = inst.microgrids[m];
    const int mi = static_cast<int>(m);
    if (mg.units.empty()) add(ErrorCode::EmptyMicrogrid, "units", mi, -1, "microgrid " + std::to_string(m) + " has no units");
    if (inst.horizon_t >= 1 && mg.demand.size() != inst.horizon()) {
      add(ErrorCode::DemandLengthMismatch, "demand", mi, -1,
          "microgrid " + std::to_string(m) + " demand length " + std::to_string(mg.demand.size()) +
              " != horizon " + std::to_string(inst.horizon_t));
    }
    for (std::size_t t = 0; t < mg.demand.size(); ++t) {
      if (!std::isfinite(mg.demand[t]) || mg.demand[t] < 0.0) {
        add(ErrorCode::InvalidParameter, "demand", mi, static_cast<int>(t), "demand must be finite and >= 0");
      }
    }
    for (std::size_t i = 0; i < mg.units.size(); ++i) {
      const auto& u = mg.units[i];
      const int ui = static_cast<int>(i);
      const std::string where = "microgrid " + std::to_string(m) + " unit " + std::to_string(i);
      for (double v : {u.a, u.b, u.c, u.d, u.p_min, u.p_max}) {
        if (!std::isfinite(v)) {
          add(ErrorCode::InvalidParameter, "cost", mi, ui, where + ": parameters must be finite");
          break;
        }
      }
      if (u.p_min > u.p_max) add(ErrorCode::BoundsInverted, "p_min", mi, ui, where + ": p_min > p_max");
      if (u.p_min < 0.0) add(ErrorCode::InvalidParameter, "p_min", mi, ui, where + ": p_min < 0");
      if (u.a < 0.0) add(ErrorCode::NegativeCostCurvature, "a", mi, ui, where + ": a < 0");
      if (u.t_on < 1) add(ErrorCode::InvalidParameter, "t_on", mi, ui, where + ": t_on < 1");
      if (u.t_off < 1) add(ErrorCode::InvalidParameter, "t_off", mi, ui, where + ": t_off < 1");
    }
  }
  if (inst.initial_state.size() != inst.num_units()) {
    add(ErrorCode::DimensionMismatch, "initial_state", -1, -1, "initial_state must have one entry per unit");
  }
  for (std::size_t g = 0; g < inst.initial_state.size(); ++g) {
    if (inst.initial_state[g].duration < 0) {
      add(ErrorCode::InvalidParameter, "init_duration", -1, static_cast<int>(g), "initial duration < 0");
    }
  }
  return out;
}

/// Returns the instance unchanged if it satisfies every invariant, otherwise
/// throws ValidationError listing all violations.
inline Instance validate_instance(Instance raw) {
  auto issues = find_instance_issues(raw);
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return raw;
}

inline void require_dims(const Instance& inst, std::size_t rows, std::size_t cols, const char* what) {
  if (rows != inst.num_units() || cols != inst.horizon()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " dimensions do not match instance");
  }
}

// ---------------------------------------------------------------------------
// Cost

/// Operating cost of (u, p). Fuel and on-hour charges apply only where
/// u = 1.
inline double total_cost(const Instance& inst, const Schedule& u, const Dispatch& p) {
  require_dims(inst, u.rows(), u.cols(), "schedule");
  require_dims(inst, p.rows(), p.cols(), "dispatch");
  double sum = 0.0;
  std::size_t g = 0;
  for (const auto& mg : inst.microgrids) {
    for (const auto& unit : mg.units) {
      for (std::size_t t = 0; t < inst.horizon(); ++t) {
        if (!u(g, t)) continue;
        const double x = p(g, t);
        sum += unit.a * x * x + unit.b * x + unit.c + unit.d;
      }
      ++g;
    }
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Minimum up/down time

enum class UpDownKind { MinUp, MinDown };

struct UpDownViolation {
  std::size_t unit = 0;
  std::size_t time = 0;  // first period of the new state
  UpDownKind kind = UpDownKind::MinUp;
  int run_length = 0;
  int required = 0;

  bool operator==(const UpDownViolation&) const = default;
};

/// Value of u at a pre-horizon hour j < 0 under the history convention of
/// InitialState.
inline bool history_state(const InitialState& init, long j) {
  return j >= -static_cast<long>(init.duration) ? init.was_on : !init.was_on;
}

/// Checks one unit's row. Runs that end inside the horizon must be at least
/// t_on (on) or t_off (off) long; the run still open at the horizon end is
/// never a violation.
inline void check_unit_updown(const CommitmentRules& rules, std::span<const std::uint8_t> row, std::size_t unit,
                              std::vector<UpDownViolation>& out) {
  constexpr int kUnbounded = std::numeric_limits<int>::max() / 2;
  bool state = rules.initial.duration > 0 ? rules.initial.was_on : !rules.initial.was_on;
  int run = rules.initial.duration > 0 ? rules.initial.duration : kUnbounded;
  for (std::size_t t = 0; t < row.size(); ++t) {
    const bool now = row[t] != 0;
    if (now == state) {
      if (run < kUnbounded) ++run;
      continue;
    }
    const int required = state ? rules.t_on : rules.t_off;
    if (run < required) {
      out.push_back({unit, t, state ? UpDownKind::MinUp : UpDownKind::MinDown, run, required});
    }
    state = now;
    run = 1;
  }
}

inline std::vector<UpDownViolation> check_min_updown(std::span<const CommitmentRules> rules, const Schedule& u) {
  if (rules.size() != u.rows()) throw Error(ErrorCode::DimensionMismatch, "schedule rows != unit count");
  std::vector<UpDownViolation> out;
  for (std::size_t i = 0; i < u.rows(); ++i) check_unit_updown(rules[i], u.row(i), i, out);
  return out;
}

inline std::vector<UpDownViolation> check_min_updown(const Instance& inst, const Schedule& u) {
  require_dims(inst, u.rows(), u.cols(), "schedule");
  const auto rules = commitment_rules(inst);
  return check_min_updown(std::span<const CommitmentRules>(rules), u);
}

inline bool satisfies_min_updown(const CommitmentRules& rules, std::span<const std::uint8_t> row) {
  std::vector<UpDownViolation> scratch;
  check_unit_updown(rules, row, 0, scratch);
  return scratch.empty();
}

// ---------------------------------------------------------------------------
// Dispatch constraints

enum class DispatchViolationKind { DemandShortfall, BelowMinimum, AboveMaximum, Negative };

struct DispatchViolation {
  DispatchViolationKind kind;
  std::size_t mg_or_unit = 0;  // microgrid index for shortfalls, global unit otherwise
  std::size_t time = 0;
  double magnitude = 0.0;
};

inline std::vector<DispatchViolation> check_dispatch_constraints(const Instance& inst, const Schedule& u,
                                                                 const Dispatch& p, double tol = 1e-9) {
  require_dims(inst, u.rows(), u.cols(), "schedule");
  require_dims(inst, p.rows(), p.cols(), "dispatch");
  std::vector<DispatchViolation> out;
  std::size_t g = 0;
  for (std::size_t m = 0; m < inst.microgrids.size(); ++m) {
    const auto& mg = inst.microgrids[m];
    std::vector<double> supplied(inst.horizon(), 0.0);
    for (const auto& unit : mg.units) {
      for (std::size_t t = 0; t < inst.horizon(); ++t) {
        const double x = p(g, t);
        const double lo = unit.p_min * u(g, t);
        const double hi = unit.p_max * u(g, t);
        if (x < 0.0 - tol) out.push_back({DispatchViolationKind::Negative, g, t, -x});
        if (x < lo - tol) out.push_back({DispatchViolationKind::BelowMinimum, g, t, lo - x});
        if (x > hi + tol) out.push_back({DispatchViolationKind::AboveMaximum, g, t, x - hi});
        supplied[t] += x;
      }
      ++g;
    }
    for (std::size_t t = 0; t < inst.horizon(); ++t) {
      const double gap = mg.demand[t] - supplied[t];
      if (gap > tol) out.push_back({DispatchViolationKind::DemandShortfall, m, t, gap});
    }
  }
  return out;
}

}  // namespace hqcgbda
