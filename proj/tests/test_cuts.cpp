#include <gtest/gtest.h>

#include <random>

#include "hqcgbda/cuts.hpp"
#include "oracles.hpp"

using namespace hqcgbda;

namespace {

Instance make_instance(std::vector<UnitParams> units, std::vector<double> demand) {
  Instance inst;
  inst.horizon_t = static_cast<int>(demand.size());
  inst.microgrids.push_back({0, std::move(units), std::move(demand)});
  inst.initial_state.assign(inst.num_units(), {});
  return inst;
}

Schedule from_rows(std::vector<std::vector<std::uint8_t>> rows) {
  Schedule u(rows.size(), rows.at(0).size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t t = 0; t < rows[i].size(); ++t) u(i, t) = rows[i][t];
  }
  return u;
}

std::vector<DispatchResult> dispatch_all(const Instance& inst, const Schedule& u) {
  std::vector<DispatchResult> out;
  for (std::size_t k = 0; k < inst.microgrids.size(); ++k) {
    out.push_back(solve_dispatch(inst.microgrids[k], schedule_slice(inst, u, k)));
  }
  return out;
}

std::vector<std::optional<FeasibilityResult>> relax_all(const Instance& inst, const Schedule& u) {
  std::vector<std::optional<FeasibilityResult>> out;
  for (std::size_t k = 0; k < inst.microgrids.size(); ++k) {
    const auto slice = schedule_slice(inst, u, k);
    if (solve_dispatch(inst.microgrids[k], slice).status == SubproblemStatus::Optimal) out.emplace_back();
    else out.emplace_back(solve_feasibility(inst.microgrids[k], slice));
  }
  return out;
}

bool all_optimal(const std::vector<DispatchResult>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const auto& r) { return r.status == SubproblemStatus::Optimal; });
}

}  // namespace

TEST(OptimalityCut, SingleLinearUnit) {
  const auto inst = make_instance({{0, 1, 0, 0, 0, 10, 1, 1}}, {5});
  const auto u = from_rows({{1}});
  const auto results = dispatch_all(inst, u);
  const auto cut = build_optimality_cut(results, inst, u, 1);
  EXPECT_DOUBLE_EQ(cut.f(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(cut.c_value, 5.0);
  EXPECT_DOUBLE_EQ(cut.c_demand, 0.0);
  EXPECT_DOUBLE_EQ(eval_optimality_cut(cut, u), 5.0);
}

TEST(OptimalityCut, ZeroDualsGiveFixedChargeOnly) {
  const auto inst = make_instance({{0, 0, 3, 2, 0, 10, 1, 1}}, {0});
  const auto u = from_rows({{1}});
  const auto cut = build_optimality_cut(dispatch_all(inst, u), inst, u, 1);
  EXPECT_DOUBLE_EQ(cut.constant(), 0.0);
  EXPECT_DOUBLE_EQ(cut.f(0, 0), 5.0);
  EXPECT_DOUBLE_EQ(eval_optimality_cut(cut, from_rows({{0}})), 0.0);
}

TEST(OptimalityCut, RejectsInfeasibleResults) {
  const auto inst = make_instance({{0, 1, 0, 0, 0, 3, 1, 1}}, {5});
  const auto u = from_rows({{1}});
  try {
    build_optimality_cut(dispatch_all(inst, u), inst, u, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MixedStatus);
  }
}

TEST(FeasibilityCut, SingleUnitShortfall) {
  const auto inst = make_instance({{0, 1, 0, 0, 0, 3, 1, 1}}, {5});
  const auto cuts = build_feasibility_cuts(relax_all(inst, from_rows({{1}})), inst, 1, FeasibilityCutMode::Multi);
  ASSERT_EQ(cuts.size(), 1u);
  ASSERT_EQ(cuts[0].coeffs.size(), 1u);
  EXPECT_DOUBLE_EQ(cuts[0].coeffs[0].f, -3.0);
  EXPECT_DOUBLE_EQ(cuts[0].c, 5.0);
  EXPECT_DOUBLE_EQ(eval_feasibility_cut(cuts[0], from_rows({{1}})), 2.0);
  EXPECT_DOUBLE_EQ(eval_feasibility_cut(cuts[0], from_rows({{0}})), 5.0);
}

TEST(FeasibilityCut, TwoUnitsAdmitOnlyBothOn) {
  const auto inst = make_instance({{0, 1, 0, 0, 0, 3, 1, 1}, {0, 1, 0, 0, 0, 4, 1, 1}}, {5});
  const auto cuts = build_feasibility_cuts(relax_all(inst, from_rows({{1}, {0}})), inst, 1, FeasibilityCutMode::Multi);
  ASSERT_EQ(cuts.size(), 1u);
  for (std::uint64_t m = 0; m < 4; ++m) {
    const auto u = oracle::schedule_from_mask(2, 1, m);
    const bool enough = 3.0 * u(0, 0) + 4.0 * u(1, 0) >= 5.0;
    EXPECT_EQ(eval_feasibility_cut(cuts[0], u) <= 0.0, enough) << m;
  }
}

TEST(FeasibilityCut, SingleModeSumsPeriodCuts) {
  const auto inst = make_instance({{0, 1, 0, 0, 0, 3, 1, 1}, {0, 1, 0, 0, 1, 4, 1, 1}}, {5, 8});
  const auto u = from_rows({{1, 1}, {0, 0}});
  const auto relaxed = relax_all(inst, u);
  const auto multi = build_feasibility_cuts(relaxed, inst, 1, FeasibilityCutMode::Multi);
  const auto single = build_feasibility_cuts(relaxed, inst, 1, FeasibilityCutMode::Single);
  ASSERT_EQ(multi.size(), 2u);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_FALSE(single[0].t.has_value());
  EXPECT_EQ(*multi[0].t, 0);
  EXPECT_EQ(*multi[1].t, 1);
  EXPECT_DOUBLE_EQ(single[0].c, multi[0].c + multi[1].c);
  for (std::uint64_t m = 0; m < 16; ++m) {
    const auto v = oracle::schedule_from_mask(2, 2, m);
    EXPECT_NEAR(eval_feasibility_cut(single[0], v), eval_feasibility_cut(multi[0], v) + eval_feasibility_cut(multi[1], v),
                1e-12);
  }
}

TEST(FeasibilityCut, NoViolationWhenEverythingIsCovered) {
  const auto inst = make_instance({{0, 1, 0, 0, 0, 10, 1, 1}}, {5});
  std::vector<std::optional<FeasibilityResult>> relaxed{solve_feasibility(inst.microgrids[0], from_rows({{1}}))};
  try {
    build_feasibility_cuts(relaxed, inst, 1, FeasibilityCutMode::Multi);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoViolation);
  }
}

TEST(CutEval, AffineInUnitVectors) {
  std::mt19937_64 rng(3);
  OptimalityCut cut;
  cut.f = Matrix<double>(3, 2);
  for (auto& v : cut.f.flat()) v = static_cast<double>(rng() % 100) - 50.0;
  cut.c_value = 7;
  cut.c_demand = -2;
  EXPECT_DOUBLE_EQ(eval_optimality_cut(cut, Schedule(3, 2)), 5.0);
  for (std::uint64_t m = 0; m < 64; ++m) {
    const auto u = oracle::schedule_from_mask(3, 2, m);
    double expected = cut.constant();
    for (std::size_t k = 0; k < 6; ++k) {
      if ((m >> k) & 1U) expected += eval_optimality_cut(cut, oracle::schedule_from_mask(3, 2, 1ULL << k)) - 5.0;
    }
    EXPECT_NEAR(eval_optimality_cut(cut, u), expected, 1e-12);
  }
  FeasibilityCut zero;
  EXPECT_DOUBLE_EQ(eval_feasibility_cut(zero, oracle::schedule_from_mask(3, 2, 63)), 0.0);
}

TEST(CutValidity, RandomInstancesWeakAndStrongDuality) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto inst = oracle::small_instance(seed);
    const std::size_t n = inst.num_units(), T = inst.horizon();
    const std::size_t count = std::size_t{1} << (n * T);
    std::vector<double> z(count);
    for (std::uint64_t m = 0; m < count; ++m) z[m] = oracle::value_function(inst, oracle::schedule_from_mask(n, T, m));
    for (std::uint64_t g = 0; g < count; g += 1 + count / 24) {
      const auto u = oracle::schedule_from_mask(n, T, g);
      const auto results = dispatch_all(inst, u);
      if (all_optimal(results)) {
        const auto cut = build_optimality_cut(results, inst, u, 1);
        EXPECT_NEAR(eval_optimality_cut(cut, u), z[g], 1e-6 * std::max(1.0, z[g])) << "seed " << seed;
        for (std::uint64_t m = 0; m < count; ++m) {
          if (!std::isfinite(z[m])) continue;
          EXPECT_LE(eval_optimality_cut(cut, oracle::schedule_from_mask(n, T, m)), z[m] + 1e-6) << "seed " << seed;
        }
      } else {
        for (auto mode : {FeasibilityCutMode::Single, FeasibilityCutMode::Multi}) {
          const auto cuts = build_feasibility_cuts(relax_all(inst, u), inst, 1, mode);
          double worst = -1e300;
          for (const auto& c : cuts) worst = std::max(worst, eval_feasibility_cut(c, u));
          EXPECT_GT(worst, 1e-9) << "seed " << seed;
          for (std::uint64_t m = 0; m < count; ++m) {
            if (!std::isfinite(z[m])) continue;
            for (const auto& c : cuts) EXPECT_LE(eval_feasibility_cut(c, oracle::schedule_from_mask(n, T, m)), 1e-9);
          }
        }
      }
    }
  }
}

TEST(CutPoolTest, RejectsBackwardsAndDuplicates) {
  CutPool pool;
  FeasibilityCut a;
  a.iter = 2;
  a.t = 0;
  pool.add(a);
  EXPECT_THROW(pool.add(a), Error);
  FeasibilityCut b;
  b.iter = 1;
  EXPECT_THROW(pool.add(b), Error);
  OptimalityCut o;
  o.iter = 3;
  pool.add(o);
  o.iter = 2;
  EXPECT_THROW(pool.add(o), Error);
  EXPECT_EQ(pool.feasibility().size(), 1u);
  EXPECT_EQ(pool.optimality().size(), 1u);
}

TEST(WireFormat, RoundTripAndPrivacy) {
  const auto inst = make_instance({{0.5, 7, 3, 1, 1, 4, 1, 1}, {0.2, 3, 2, 2, 0, 5, 1, 1}}, {6, 8});
  const auto u = from_rows({{1, 1}, {1, 1}});
  const auto results = dispatch_all(inst, u);
  std::vector<CutRecord> records{optimality_contribution(inst.microgrids[0], 0, 0, u, results[0], 4)};
  const auto short_u = from_rows({{1, 1}, {1, 0}});
  const auto feas =
      feasibility_contributions(inst.microgrids[0], 0, 0, solve_feasibility(inst.microgrids[0], short_u), 4);
  records.insert(records.end(), feas.begin(), feas.end());
  ASSERT_EQ(feas.size(), 1u);
  for (const auto& rec : records) {
    const auto line = to_wire(rec);
    const auto back = from_wire(line);
    EXPECT_EQ(back.kind, rec.kind);
    EXPECT_EQ(back.iter, rec.iter);
    EXPECT_EQ(back.t, rec.t);
    EXPECT_DOUBLE_EQ(back.c_value, rec.c_value);
    EXPECT_DOUBLE_EQ(back.c_demand, rec.c_demand);
    EXPECT_EQ(back.coeffs, rec.coeffs);
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"a", "b", "c", "d", "p_min", "p_max", "demand"}) EXPECT_FALSE(j.contains(key)) << key;
  }
  EXPECT_THROW(from_wire("{\"kind\":\"x\"}"), Error);
  EXPECT_THROW(from_wire("not json"), Error);
}
