#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hqcgbda/dispatch.hpp"
#include "hqcgbda/error.hpp"
#include "hqcgbda/uc_model.hpp"

namespace hqcgbda {

struct CutCoeff {
  std::size_t unit = 0;  // global unit index
  std::size_t t = 0;
  double f = 0.0;

  bool operator==(const CutCoeff&) const = default;
};

/// Z >= constant() + sum f(i,t) u(i,t).
struct OptimalityCut {
  int iter = 0;
  Matrix<double> f;        // global units x periods
  double c_value = 0.0;    // sum of (b - m + n) p + a p^2 over committed units
  double c_demand = 0.0;   // sum of l_t (D_t - sum p)

  double constant() const { return c_value + c_demand; }
};

/// 0 >= c + sum f u. `t` is the covered period for per-period cuts and empty
/// for a cut aggregated over the whole horizon.
struct FeasibilityCut {
  int iter = 0;
  std::optional<int> t;
  std::vector<CutCoeff> coeffs;  // sorted by (unit, t), unique
  double c = 0.0;
};

enum class FeasibilityCutMode { Single, Multi };

/// Every cut ever generated; cuts are never dropped.
class CutPool {
 public:
  const std::vector<OptimalityCut>& optimality() const noexcept { return optimality_; }
  const std::vector<FeasibilityCut>& feasibility() const noexcept { return feasibility_; }

  void add(OptimalityCut cut) {
    if (!optimality_.empty() && cut.iter < optimality_.back().iter) {
      throw Error(ErrorCode::InvalidParameter, "optimality cut iteration goes backwards");
    }
    optimality_.push_back(std::move(cut));
  }

  void add(FeasibilityCut cut) {
    if (!feasibility_.empty() && cut.iter < feasibility_.back().iter) {
      throw Error(ErrorCode::InvalidParameter, "feasibility cut iteration goes backwards");
    }
    for (const auto& other : feasibility_) {
      if (other.iter == cut.iter && other.t == cut.t) {
        throw Error(ErrorCode::InvalidParameter, "duplicate feasibility cut key");
      }
    }
    feasibility_.push_back(std::move(cut));
  }

 private:
  std::vector<OptimalityCut> optimality_;
  std::vector<FeasibilityCut> feasibility_;
};

// ---------------------------------------------------------------------------
// Cut records: what one microgrid controller sends to the operator. They hold
// derived constants and u-coefficients only, never the fuel parameters.

enum class CutKind { Optimality, Feasibility };

struct CutRecord {
  CutKind kind = CutKind::Optimality;
  int iter = 0;
  int mg = 0;
  std::optional<int> t;      // feasibility records only
  double c_value = 0.0;      // optimality: value part; feasibility: the constant
  double c_demand = 0.0;     // optimality only
  std::vector<CutCoeff> coeffs;
};

/// Optimality-cut contribution of one microgrid from an optimal dispatch.
/// The fixed charge c is attached to u like d, since it is only paid by
/// committed units.
inline CutRecord optimality_contribution(const Microgrid& mg, int mg_index, std::size_t unit_offset,
                                         const Schedule& u_mg, const DispatchResult& res, int iter) {
  if (res.status != SubproblemStatus::Optimal) {
    throw Error(ErrorCode::MixedStatus, "optimality contribution from an infeasible dispatch");
  }
  CutRecord rec;
  rec.kind = CutKind::Optimality;
  rec.iter = iter;
  rec.mg = mg_index;
  const std::size_t periods = mg.demand.size();
  for (std::size_t i = 0; i < mg.units.size(); ++i) {
    const auto& unit = mg.units[i];
    for (std::size_t t = 0; t < periods; ++t) {
      const double m = res.duals.m(i, t);
      const double n = res.duals.n(i, t);
      const double p = res.p(i, t);
      if (u_mg(i, t)) rec.c_value += (unit.b - m + n) * p + unit.a * p * p;
      const double f = unit.c + unit.d + m * unit.p_min - n * unit.p_max;
      if (f != 0.0) rec.coeffs.push_back({unit_offset + i, t, f});
    }
  }
  for (std::size_t t = 0; t < periods; ++t) {
    double supplied = 0.0;
    for (std::size_t i = 0; i < mg.units.size(); ++i) supplied += res.p(i, t);
    rec.c_demand += res.duals.l[t] * (mg.demand[t] - supplied);
  }
  return rec;
}

/// One feasibility record per period with positive slack.
inline std::vector<CutRecord> feasibility_contributions(const Microgrid& mg, int mg_index, std::size_t unit_offset,
                                                        const FeasibilityResult& res, int iter) {
  std::vector<CutRecord> out;
  for (std::size_t t = 0; t < mg.demand.size(); ++t) {
    if (!(res.slack[t] > 0.0)) continue;
    CutRecord rec;
    rec.kind = CutKind::Feasibility;
    rec.iter = iter;
    rec.mg = mg_index;
    rec.t = static_cast<int>(t);
    double supplied = 0.0;
    for (std::size_t i = 0; i < mg.units.size(); ++i) {
      const auto& unit = mg.units[i];
      const double m = res.duals.m(i, t);
      const double n = res.duals.n(i, t);
      const double p = res.p(i, t);
      rec.c_value += (n - m) * p;
      supplied += p;
      const double f = m * unit.p_min - n * unit.p_max;
      if (f != 0.0) rec.coeffs.push_back({unit_offset + i, t, f});
    }
    rec.c_value += res.duals.l[t] * (mg.demand[t] - supplied);
    out.push_back(std::move(rec));
  }
  return out;
}

/// Sums the optimality records of all microgrids into one cut.
inline OptimalityCut aggregate_optimality(std::span<const CutRecord> records, std::size_t units, std::size_t periods,
                                          int iter) {
  OptimalityCut cut;
  cut.iter = iter;
  cut.f = Matrix<double>(units, periods, 0.0);
  for (const auto& rec : records) {
    if (rec.kind != CutKind::Optimality) continue;
    cut.c_value += rec.c_value;
    cut.c_demand += rec.c_demand;
    for (const auto& c : rec.coeffs) {
      if (c.unit >= units || c.t >= periods) throw Error(ErrorCode::DimensionMismatch, "cut coefficient out of range");
      cut.f(c.unit, c.t) += c.f;
    }
  }
  return cut;
}

/// Multi mode: one cut per period (summed over microgrids). Single mode: one
/// cut summed over everything.
inline std::vector<FeasibilityCut> aggregate_feasibility(std::span<const CutRecord> records, FeasibilityCutMode mode,
                                                         int iter) {
  std::map<int, std::pair<double, std::map<std::pair<std::size_t, std::size_t>, double>>> groups;
  for (const auto& rec : records) {
    if (rec.kind != CutKind::Feasibility) continue;
    const int key = mode == FeasibilityCutMode::Multi ? rec.t.value_or(-1) : -1;
    auto& [c, coeffs] = groups[key];
    c += rec.c_value;
    for (const auto& cc : rec.coeffs) coeffs[{cc.unit, cc.t}] += cc.f;
  }
  std::vector<FeasibilityCut> out;
  for (auto& [key, group] : groups) {
    FeasibilityCut cut;
    cut.iter = iter;
    if (mode == FeasibilityCutMode::Multi) cut.t = key;
    cut.c = group.first;
    for (const auto& [ut, f] : group.second) cut.coeffs.push_back({ut.first, ut.second, f});
    out.push_back(std::move(cut));
  }
  return out;
}

/// Optimality cut from every microgrid's optimal dispatch under u.
inline OptimalityCut build_optimality_cut(std::span<const DispatchResult> results, const Instance& inst,
                                          const Schedule& u, int iter) {
  if (results.size() != inst.microgrids.size()) throw Error(ErrorCode::DimensionMismatch, "one result per microgrid");
  const auto offsets = inst.unit_offsets();
  std::vector<CutRecord> records;
  for (std::size_t k = 0; k < results.size(); ++k) {
    if (results[k].status != SubproblemStatus::Optimal) {
      throw Error(ErrorCode::MixedStatus, "microgrid " + std::to_string(k) + " is infeasible");
    }
    records.push_back(optimality_contribution(inst.microgrids[k], static_cast<int>(k), offsets[k],
                                              schedule_slice(inst, u, k), results[k], iter));
  }
  return aggregate_optimality(records, inst.num_units(), inst.horizon(), iter);
}

/// Feasibility cuts from the relaxed subproblems. `results` is aligned with
/// the microgrids; feasible microgrids may be left empty.
inline std::vector<FeasibilityCut> build_feasibility_cuts(std::span<const std::optional<FeasibilityResult>> results,
                                                          const Instance& inst, int iter, FeasibilityCutMode mode) {
  if (results.size() != inst.microgrids.size()) throw Error(ErrorCode::DimensionMismatch, "one result per microgrid");
  const auto offsets = inst.unit_offsets();
  std::vector<CutRecord> records;
  for (std::size_t k = 0; k < results.size(); ++k) {
    if (!results[k]) continue;
    auto recs = feasibility_contributions(inst.microgrids[k], static_cast<int>(k), offsets[k], *results[k], iter);
    records.insert(records.end(), recs.begin(), recs.end());
  }
  if (records.empty()) throw Error(ErrorCode::NoViolation, "no period has positive slack");
  return aggregate_feasibility(records, mode, iter);
}

inline double eval_optimality_cut(const OptimalityCut& cut, const Schedule& u) {
  if (u.rows() != cut.f.rows() || u.cols() != cut.f.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "schedule does not match cut");
  }
  double v = cut.constant();
  const auto f = cut.f.flat();
  const auto x = u.flat();
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (x[k]) v += f[k];
  }
  return v;
}

/// Positive means the cut rejects u.
inline double eval_feasibility_cut(const FeasibilityCut& cut, const Schedule& u) {
  double v = cut.c;
  for (const auto& c : cut.coeffs) {
    if (c.unit >= u.rows() || c.t >= u.cols()) throw Error(ErrorCode::DimensionMismatch, "schedule does not match cut");
    if (u(c.unit, c.t)) v += c.f;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Wire format, one JSON object per line:
//   {"kind":"opt","iter":e,"mg":k,"constants":{"value":v,"demand":w},"coeffs":[[i,t,f],...]}
//   {"kind":"feas","iter":e,"mg":k,"t":t,"constants":{"c":c},"coeffs":[[i,t,f],...]}

inline nlohmann::json to_json(const CutRecord& rec) {
  nlohmann::json j;
  j["kind"] = rec.kind == CutKind::Optimality ? "opt" : "feas";
  j["iter"] = rec.iter;
  j["mg"] = rec.mg;
  if (rec.kind == CutKind::Feasibility) {
    j["t"] = rec.t.value_or(-1);
    j["constants"] = {{"c", rec.c_value}};
  } else {
    j["constants"] = {{"value", rec.c_value}, {"demand", rec.c_demand}};
  }
  auto coeffs = nlohmann::json::array();
  for (const auto& c : rec.coeffs) coeffs.push_back({c.unit, c.t, c.f});
  j["coeffs"] = std::move(coeffs);
  return j;
}

inline std::string to_wire(const CutRecord& rec) { return to_json(rec).dump(); }

inline CutRecord from_wire(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    CutRecord rec;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "opt") {
      rec.kind = CutKind::Optimality;
      rec.c_value = j.at("constants").at("value").get<double>();
      rec.c_demand = j.at("constants").at("demand").get<double>();
    } else if (kind == "feas") {
      rec.kind = CutKind::Feasibility;
      rec.t = j.at("t").get<int>();
      rec.c_value = j.at("constants").at("c").get<double>();
    } else {
      throw Error(ErrorCode::ParseError, "unknown cut kind " + kind);
    }
    rec.iter = j.at("iter").get<int>();
    rec.mg = j.at("mg").get<int>();
    for (const auto& c : j.at("coeffs")) {
      rec.coeffs.push_back({c.at(0).get<std::size_t>(), c.at(1).get<std::size_t>(), c.at(2).get<double>()});
    }
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("cut record: ") + e.what());
  }
}

}  // namespace hqcgbda
