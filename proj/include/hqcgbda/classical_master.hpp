#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "hqcgbda/cuts.hpp"
#include "hqcgbda/error.hpp"
#include "hqcgbda/uc_model.hpp"

namespace hqcgbda {

enum class MasterStrategy { Exhaustive, LocalSearch };
enum class MasterStatus { Optimal, Infeasible };

/// Returned z is the largest optimality-cut value at u, or -infinity when the
/// pool has no optimality cut.
struct MasterSolution {
  Schedule u;
  double z = -std::numeric_limits<double>::infinity();
  MasterStatus status = MasterStatus::Infeasible;
  bool stalled = false;  // local search found nothing feasible
};

struct LocalSearchParams {
  int restarts = 20;
  std::uint64_t seed = 1;
};

inline constexpr std::size_t kMaxExhaustiveBits = 24;

inline bool lex_less(const Schedule& a, const Schedule& b) {
  const auto x = a.flat();
  const auto y = b.flat();
  return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
}

/// Largest optimality-cut value at u; -inf for an empty pool.
inline double max_cut_value(const CutPool& pool, const Schedule& u) {
  double z = -std::numeric_limits<double>::infinity();
  for (const auto& cut : pool.optimality()) z = std::max(z, eval_optimality_cut(cut, u));
  return z;
}

inline bool satisfies_cuts(const CutPool& pool, const Schedule& u, double tol = 1e-9) {
  for (const auto& cut : pool.feasibility()) {
    if (eval_feasibility_cut(cut, u) > tol) return false;
  }
  return true;
}

namespace detail {

// All rows of length `periods` that satisfy the unit's up/down rules, in
// lexicographic order (period 0 most significant).
inline std::vector<std::vector<std::uint8_t>> admissible_rows(const CommitmentRules& rules, std::size_t periods) {
  std::vector<std::vector<std::uint8_t>> rows;
  std::vector<std::uint8_t> row(periods);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << periods); ++mask) {
    for (std::size_t t = 0; t < periods; ++t) row[t] = (mask >> (periods - 1 - t)) & 1U;
    if (satisfies_min_updown(rules, row)) rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

/// Exact master by enumeration: admissible rows per unit combined in
/// lexicographic order, so the first schedule reaching the minimum wins ties.
inline MasterSolution solve_master_exhaustive(const CutPool& pool, std::span<const CommitmentRules> rules,
                                              std::size_t periods, double tol = 1e-9) {
  const std::size_t units = rules.size();
  if (units * periods > kMaxExhaustiveBits) {
    throw Error(ErrorCode::TooLargeForExhaustive, std::to_string(units * periods) + " binaries");
  }
  const auto& opt = pool.optimality();
  const auto& fea = pool.feasibility();
  const std::size_t n_opt = opt.size();
  const std::size_t n_fea = fea.size();
  const std::size_t width = n_opt + n_fea;

  std::vector<std::vector<std::vector<std::uint8_t>>> rows(units);
  // contrib[i][r * width + k]: contribution of unit i taking row r to cut k.
  std::vector<std::vector<double>> contrib(units);
  for (std::size_t i = 0; i < units; ++i) {
    rows[i] = detail::admissible_rows(rules[i], periods);
    if (rows[i].empty()) return {Schedule(units, periods), -std::numeric_limits<double>::infinity(), MasterStatus::Infeasible};
    contrib[i].assign(rows[i].size() * width, 0.0);
    for (std::size_t r = 0; r < rows[i].size(); ++r) {
      double* dst = contrib[i].data() + r * width;
      for (std::size_t k = 0; k < n_opt; ++k) {
        for (std::size_t t = 0; t < periods; ++t) {
          if (rows[i][r][t]) dst[k] += opt[k].f(i, t);
        }
      }
      for (std::size_t k = 0; k < n_fea; ++k) {
        for (const auto& c : fea[k].coeffs) {
          if (c.unit == i && rows[i][r][c.t]) dst[n_opt + k] += c.f;
        }
      }
    }
  }

  // partial[d] holds cut sums over units < d.
  std::vector<std::vector<double>> partial(units + 1, std::vector<double>(width, 0.0));
  for (std::size_t k = 0; k < n_opt; ++k) partial[0][k] = opt[k].constant();
  for (std::size_t k = 0; k < n_fea; ++k) partial[0][n_opt + k] = fea[k].c;

  MasterSolution best;
  best.u = Schedule(units, periods);
  bool found = false;
  std::vector<std::size_t> choice(units, 0);

  auto refresh = [&](std::size_t from) {
    for (std::size_t d = from; d < units; ++d) {
      const double* add = contrib[d].data() + choice[d] * width;
      for (std::size_t k = 0; k < width; ++k) partial[d + 1][k] = partial[d][k] + add[k];
    }
  };
  refresh(0);

  while (true) {
    const auto& sums = partial[units];
    bool feasible = true;
    for (std::size_t k = 0; k < n_fea; ++k) {
      if (sums[n_opt + k] > tol) {
        feasible = false;
        break;
      }
    }
    if (feasible) {
      double z = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n_opt; ++k) z = std::max(z, sums[k]);
      if (!found || z < best.z) {
        found = true;
        best.z = z;
        for (std::size_t i = 0; i < units; ++i) {
          for (std::size_t t = 0; t < periods; ++t) best.u(i, t) = rows[i][choice[i]][t];
        }
        if (n_opt == 0) break;
      }
    }
    // Odometer with unit 0 most significant.
    std::size_t d = units;
    while (d > 0) {
      --d;
      if (++choice[d] < rows[d].size()) break;
      choice[d] = 0;
      if (d == 0) {
        d = units;
        break;
      }
    }
    if (d == units) break;
    refresh(d);
  }
  best.status = found ? MasterStatus::Optimal : MasterStatus::Infeasible;
  return best;
}

/// Multi-restart single-flip descent on max-cut value plus a large penalty
/// for violated feasibility cuts and up/down rules.
inline MasterSolution solve_master_local(const CutPool& pool, std::span<const CommitmentRules> rules,
                                         std::size_t periods, const LocalSearchParams& params = {},
                                         double tol = 1e-9) {
  const std::size_t units = rules.size();
  double scale = 1.0;
  for (const auto& c : pool.optimality()) scale = std::max(scale, std::abs(c.constant()));
  for (const auto& c : pool.feasibility()) scale = std::max(scale, std::abs(c.c));
  const double penalty = 1e6 * scale;

  auto violation = [&](const Schedule& u) {
    double v = 0.0;
    for (const auto& cut : pool.feasibility()) v += std::max(0.0, eval_feasibility_cut(cut, u) - tol);
    v += static_cast<double>(check_min_updown(rules, u).size());
    return v;
  };
  auto score = [&](const Schedule& u) {
    const double z = pool.optimality().empty() ? 0.0 : max_cut_value(pool, u);
    return z + penalty * violation(u);
  };

  std::mt19937_64 rng(params.seed);
  std::bernoulli_distribution coin(0.5);
  MasterSolution best;
  best.u = Schedule(units, periods);
  bool found = false;

  for (int r = 0; r < std::max(1, params.restarts); ++r) {
    Schedule u(units, periods);
    if (r > 0) {
      for (auto& x : u.flat()) x = coin(rng) ? 1 : 0;
    }
    double current = score(u);
    while (true) {
      double best_step = current;
      std::size_t best_k = u.size();
      for (std::size_t k = 0; k < u.size(); ++k) {
        u.flat()[k] ^= 1U;
        const double s = score(u);
        u.flat()[k] ^= 1U;
        if (s < best_step) {
          best_step = s;
          best_k = k;
        }
      }
      if (best_k == u.size()) break;
      u.flat()[best_k] ^= 1U;
      current = best_step;
    }
    if (violation(u) > 0.0) continue;
    const double z = max_cut_value(pool, u);
    if (!found || z < best.z || (z == best.z && lex_less(u, best.u))) {
      found = true;
      best.z = z;
      best.u = u;
    }
  }
  best.status = found ? MasterStatus::Optimal : MasterStatus::Infeasible;
  best.stalled = !found;
  return best;
}

inline MasterSolution solve_master(const CutPool& pool, std::span<const CommitmentRules> rules, std::size_t periods,
                                   MasterStrategy strategy, const LocalSearchParams& params = {}) {
  if (strategy == MasterStrategy::Exhaustive) return solve_master_exhaustive(pool, rules, periods);
  return solve_master_local(pool, rules, periods, params);
}

inline MasterSolution solve_master(const CutPool& pool, const Instance& inst, MasterStrategy strategy,
                                   const LocalSearchParams& params = {}) {
  const auto rules = commitment_rules(inst);
  return solve_master(pool, std::span<const CommitmentRules>(rules), inst.horizon(), strategy, params);
}

}  // namespace hqcgbda
