#include <gtest/gtest.h>

#include <random>
#include <set>

#include "hqcgbda/instance_io.hpp"
#include "hqcgbda/uc_model.hpp"
#include "oracles.hpp"

using namespace hqcgbda;

namespace {

Instance one_unit(std::vector<double> demand, UnitParams u = {0, 1, 0, 0, 0, 10, 1, 1}) {
  Instance inst;
  inst.horizon_t = 2;
  inst.microgrids.push_back({0, {u}, std::move(demand)});
  inst.initial_state.push_back({false, 1});
  return inst;
}

Schedule row_schedule(std::vector<std::uint8_t> row) {
  Schedule u(1, row.size());
  for (std::size_t t = 0; t < row.size(); ++t) u(0, t) = row[t];
  return u;
}

}  // namespace

TEST(Validation, AcceptsWellFormedInstance) {
  EXPECT_NO_THROW(validate_instance(one_unit({3, 4})));
}

TEST(Validation, DemandLengthMismatch) {
  try {
    validate_instance(one_unit({3}));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.code(), ErrorCode::DemandLengthMismatch);
  }
}

TEST(Validation, BoundsInverted) {
  auto inst = one_unit({3, 4}, {0, 1, 0, 0, 5, 3, 1, 1});
  try {
    validate_instance(inst);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.code(), ErrorCode::BoundsInverted);
  }
}

TEST(Validation, ReportsEveryIssue) {
  auto inst = one_unit({-1}, {-1, 1, 0, 0, 5, 3, 0, 1});
  const auto issues = find_instance_issues(inst);
  std::set<ErrorCode> codes;
  for (const auto& i : issues) codes.insert(i.code);
  EXPECT_TRUE(codes.count(ErrorCode::DemandLengthMismatch));
  EXPECT_TRUE(codes.count(ErrorCode::BoundsInverted));
  EXPECT_TRUE(codes.count(ErrorCode::NegativeCostCurvature));
  EXPECT_TRUE(codes.count(ErrorCode::InvalidParameter));
}

TEST(Validation, EmptyMicrogridAndInstance) {
  Instance inst;
  inst.horizon_t = 1;
  EXPECT_EQ(find_instance_issues(inst).front().code, ErrorCode::EmptyInstance);
  inst.microgrids.push_back({0, {}, {1.0}});
  EXPECT_EQ(find_instance_issues(inst).front().code, ErrorCode::EmptyMicrogrid);
}

TEST(TotalCost, GatedFuelCost) {
  Instance inst;
  inst.horizon_t = 1;
  inst.microgrids.push_back({0, {{1, 2, 3, 4, 0, 10, 1, 1}}, {5}});
  inst.initial_state.push_back({});
  Dispatch p(1, 1, 5.0);
  EXPECT_DOUBLE_EQ(total_cost(inst, row_schedule({1}), p), 42.0);
  EXPECT_DOUBLE_EQ(total_cost(inst, row_schedule({0}), Dispatch(1, 1, 0.0)), 0.0);
}

TEST(TotalCost, MatchesTermByTermRecomputation) {
  Instance inst;
  inst.horizon_t = 2;
  inst.microgrids.push_back({0, {{0.5, 3, 7, 1, 1, 10, 1, 1}, {0.25, 5, 2, 2, 0, 8, 1, 1}}, {9, 12}});
  inst.initial_state = {{}, {}};
  Schedule u(2, 2);
  for (auto& x : u.flat()) x = 1;
  const auto res = solve_dispatch(inst.microgrids[0], u);
  ASSERT_EQ(res.status, SubproblemStatus::Optimal);
  double expected = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& un = inst.microgrids[0].units[i];
    for (std::size_t t = 0; t < 2; ++t) {
      const double x = res.p(i, t);
      expected += un.a * x * x + un.b * x + un.c + un.d;
    }
  }
  EXPECT_NEAR(total_cost(inst, u, res.p), expected, 1e-12);
  EXPECT_NEAR(res.objective, expected, 1e-9);
}

TEST(MinUpDown, RunsMeetingMinimumsPass) {
  CommitmentRules r{2, 2, {false, 5}};
  std::vector<CommitmentRules> rules{r};
  EXPECT_TRUE(check_min_updown(rules, row_schedule({1, 1, 0, 0})).empty());
}

TEST(MinUpDown, ShortOnRunIsFlaggedAtShutdown) {
  std::vector<CommitmentRules> rules{{3, 1, {false, 5}}};
  const auto v = check_min_updown(rules, row_schedule({1, 1, 0, 0, 0}));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, UpDownKind::MinUp);
  EXPECT_EQ(v[0].time, 2u);
  EXPECT_EQ(v[0].run_length, 2);
  EXPECT_EQ(v[0].required, 3);
}

TEST(MinUpDown, HistoryCountsTowardsRuns) {
  // On for one hour before the horizon with t_on = 3: must stay on two more.
  std::vector<CommitmentRules> rules{{3, 1, {true, 1}}};
  EXPECT_FALSE(check_min_updown(rules, row_schedule({1, 0, 0})).empty());
  EXPECT_TRUE(check_min_updown(rules, row_schedule({1, 1, 0})).empty());
  // Zero duration means settled in the opposite state.
  std::vector<CommitmentRules> settled{{3, 3, {true, 0}}};
  EXPECT_TRUE(check_min_updown(settled, row_schedule({0, 1, 1, 1})).empty());
  EXPECT_TRUE(history_state({true, 0}, -1) == false);
  EXPECT_TRUE(history_state({true, 2}, -2));
  EXPECT_FALSE(history_state({true, 2}, -3));
}

TEST(MinUpDown, AgreesWithRunLengthOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 3000; ++trial) {
    CommitmentRules r;
    r.t_on = 1 + static_cast<int>(rng() % 4);
    r.t_off = 1 + static_cast<int>(rng() % 4);
    r.initial = {static_cast<bool>(rng() % 2), static_cast<int>(rng() % 5)};
    std::vector<std::uint8_t> row(1 + rng() % 8);
    for (auto& x : row) x = rng() % 2;
    EXPECT_EQ(satisfies_min_updown(r, row), oracle::updown_ok(r, row))
        << "t_on=" << r.t_on << " t_off=" << r.t_off << " init=" << r.initial.was_on << "/" << r.initial.duration;
  }
}

TEST(DispatchCheck, BindingButSatisfied) {
  auto inst = one_unit({5, 5});
  Dispatch p(1, 2, 5.0);
  EXPECT_TRUE(check_dispatch_constraints(inst, row_schedule({1, 1}), p).empty());
}

TEST(DispatchCheck, OffUnitBoxAndShortfall) {
  auto inst = one_unit({5, 7});
  Dispatch p(1, 2, 5.0);
  const auto v = check_dispatch_constraints(inst, row_schedule({0, 1}), p);
  bool box = false, shortfall = false;
  for (const auto& x : v) {
    if (x.kind == DispatchViolationKind::AboveMaximum && x.time == 0) {
      box = true;
      EXPECT_DOUBLE_EQ(x.magnitude, 5.0);
    }
    if (x.kind == DispatchViolationKind::DemandShortfall && x.time == 1) {
      shortfall = true;
      EXPECT_DOUBLE_EQ(x.magnitude, 2.0);
    }
  }
  EXPECT_TRUE(box);
  EXPECT_TRUE(shortfall);
}

TEST(InstanceIo, RoundTrip) {
  const auto inst = oracle::small_instance(3);
  const auto text = instance_to_string(inst);
  const auto back = instance_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(instance_to_string(back), text);
  EXPECT_EQ(back.num_units(), inst.num_units());
}

TEST(InstanceIo, DefaultsAndErrors) {
  const auto j = nlohmann::json::parse(R"({"horizon_t":1,"microgrids":[{"id":0,"demand":[1],
      "units":[{"a":0,"b":1,"c":0,"d":0,"p_min":0,"p_max":2,"t_on":1,"t_off":3}]}]})");
  const auto inst = instance_from_json(j);
  EXPECT_FALSE(inst.initial_state[0].was_on);
  EXPECT_EQ(inst.initial_state[0].duration, 3);
  try {
    instance_from_json(nlohmann::json::parse(R"({"horizon_t":1})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}

TEST(InstanceIndexing, OffsetsConcatenateMicrogrids) {
  Instance inst;
  inst.horizon_t = 1;
  inst.microgrids.push_back({0, {{}, {}}, {0}});
  inst.microgrids.push_back({1, {{}, {}, {}}, {0}});
  EXPECT_EQ(inst.num_units(), 5u);
  EXPECT_EQ(inst.unit_offsets(), (std::vector<std::size_t>{0, 2}));
}
