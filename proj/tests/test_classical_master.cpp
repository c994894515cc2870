#include <gtest/gtest.h>

#include <random>

#include "hqcgbda/classical_master.hpp"
#include "oracles.hpp"

using namespace hqcgbda;

using oracle::oracle_master;
using oracle::random_pool;

TEST(ClassicalMaster, EmptyPoolGivesFirstAdmissibleSchedule) {
  std::vector<CommitmentRules> rules{{1, 1, {false, 1}}};
  CutPool pool;
  const auto sol = solve_master_exhaustive(pool, rules, 2);
  EXPECT_EQ(sol.status, MasterStatus::Optimal);
  EXPECT_EQ(sol.u(0, 0), 0);
  EXPECT_EQ(sol.u(0, 1), 0);
  EXPECT_TRUE(std::isinf(sol.z) && sol.z < 0);
}

TEST(ClassicalMaster, FeasibilityCutForcesBothUnits) {
  std::vector<CommitmentRules> rules{{1, 1, {}}, {1, 1, {}}};
  CutPool pool;
  FeasibilityCut fc;
  fc.iter = 1;
  fc.t = 0;
  fc.c = 5;
  fc.coeffs = {{0, 0, -3}, {1, 0, -4}};
  pool.add(fc);
  OptimalityCut oc;
  oc.iter = 1;
  oc.f = Matrix<double>(2, 1);
  pool.add(oc);
  const auto sol = solve_master_exhaustive(pool, rules, 1);
  ASSERT_EQ(sol.status, MasterStatus::Optimal);
  EXPECT_EQ(sol.u(0, 0), 1);
  EXPECT_EQ(sol.u(1, 0), 1);
  EXPECT_DOUBLE_EQ(sol.z, 0.0);
}

TEST(ClassicalMaster, TiesGoToLexicographicallySmallest) {
  std::vector<CommitmentRules> rules{{1, 1, {}}, {1, 1, {}}};
  CutPool pool;
  OptimalityCut oc;
  oc.iter = 1;
  oc.f = Matrix<double>(2, 1);
  oc.f(0, 0) = -1;
  oc.f(1, 0) = -1;
  pool.add(oc);
  FeasibilityCut fc;  // at most one unit on
  fc.iter = 1;
  fc.t = 0;
  fc.c = -1;
  fc.coeffs = {{0, 0, 1}, {1, 0, 1}};
  pool.add(fc);
  const auto sol = solve_master_exhaustive(pool, rules, 1);
  EXPECT_EQ(sol.u(0, 0), 0);
  EXPECT_EQ(sol.u(1, 0), 1);
  EXPECT_DOUBLE_EQ(sol.z, -1.0);
}

TEST(ClassicalMaster, InfeasiblePool) {
  std::vector<CommitmentRules> rules{{1, 1, {}}};
  CutPool pool;
  FeasibilityCut fc;
  fc.iter = 1;
  fc.c = 1;
  pool.add(fc);
  EXPECT_EQ(solve_master_exhaustive(pool, rules, 3).status, MasterStatus::Infeasible);
  const auto local = solve_master_local(pool, rules, 3);
  EXPECT_EQ(local.status, MasterStatus::Infeasible);
  EXPECT_TRUE(local.stalled);
}

TEST(ClassicalMaster, TooLarge) {
  std::vector<CommitmentRules> rules(5, CommitmentRules{});
  CutPool pool;
  try {
    solve_master_exhaustive(pool, rules, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooLargeForExhaustive);
  }
}

TEST(ClassicalMaster, RandomPoolsMatchEnumerationOracle) {
  std::mt19937_64 rng(17);
  int feasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto rp = random_pool(rng);
    const auto expected = oracle_master(rp);
    const auto sol = solve_master_exhaustive(rp.pool, rp.rules, rp.periods);
    ASSERT_EQ(sol.status == MasterStatus::Optimal, expected.feasible) << "trial " << trial;
    if (!expected.feasible) continue;
    ++feasible;
    if (std::isinf(expected.z)) {
      EXPECT_TRUE(std::isinf(sol.z));
    } else {
      EXPECT_NEAR(sol.z, expected.z, 1e-9) << "trial " << trial;
    }
    EXPECT_TRUE(sol.u == expected.u) << "trial " << trial;
    EXPECT_TRUE(check_min_updown(rp.rules, sol.u).empty());
    EXPECT_TRUE(satisfies_cuts(rp.pool, sol.u));
  }
  EXPECT_GT(feasible, 200);
}

TEST(ClassicalMaster, LocalSearchReturnsAdmissibleSchedules) {
  std::mt19937_64 rng(23);
  int optimal = 0, total = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto rp = random_pool(rng, 8);
    const auto expected = oracle_master(rp);
    const auto sol = solve_master_local(rp.pool, rp.rules, rp.periods, {20, static_cast<std::uint64_t>(trial)});
    if (sol.status != MasterStatus::Optimal) continue;
    ++total;
    EXPECT_TRUE(check_min_updown(rp.rules, sol.u).empty());
    EXPECT_TRUE(satisfies_cuts(rp.pool, sol.u));
    if (expected.feasible && (sol.z <= expected.z + 1e-9)) ++optimal;
  }
  EXPECT_GT(total, 50);
  EXPECT_GE(optimal, total * 8 / 10);
}
