#include <gtest/gtest.h>

#include <set>

#include "hqcgbda/generator.hpp"
#include "hqcgbda/orchestrator.hpp"
#include "oracles.hpp"

using namespace hqcgbda;

namespace {

Instance one_unit_instance() {
  Instance inst;
  inst.horizon_t = 1;
  inst.microgrids.push_back({0, {{0, 1, 0, 0, 0, 10, 1, 1}}, {5}});
  inst.initial_state.push_back({});
  return inst;
}

Instance two_unit_instance() {
  Instance inst;
  inst.horizon_t = 3;
  inst.microgrids.push_back({0, {{0.01, 2, 3, 1, 2, 10, 2, 1}, {0.02, 1, 5, 2, 0, 8, 1, 2}}, {6, 15, 4}});
  inst.initial_state = {{false, 1}, {true, 1}};
  return inst;
}

RunConfig config(Mode mode) {
  RunConfig cfg;
  cfg.mode = mode;
  return cfg;
}

void expect_monotone(const SolveReport& rep) {
  for (std::size_t k = 1; k < rep.trace.size(); ++k) {
    EXPECT_LE(rep.trace[k].ub, rep.trace[k - 1].ub);
    EXPECT_GE(rep.trace[k].lb, rep.trace[k - 1].lb);
  }
}

}  // namespace

TEST(Bounds, UpdateRules) {
  BoundState s;
  s = update_bounds(s, 10.0, std::nullopt, Schedule(1, 1, 1));
  EXPECT_EQ(s.ub, 10.0);
  ASSERT_TRUE(s.incumbent.has_value());
  s = update_bounds(s, 12.0, 3.0, Schedule(1, 1, 0));
  EXPECT_EQ(s.ub, 10.0);
  EXPECT_EQ(s.lb, 3.0);
  EXPECT_EQ((*s.incumbent)(0, 0), 1);
  s = update_bounds(s, std::nullopt, 1.0);
  EXPECT_EQ(s.lb, 3.0);
  EXPECT_EQ(s.gap(), 7.0);
}

TEST(Run, SingleUnitExample) {
  for (Mode mode : {Mode::Gbda, Mode::MultiCut, Mode::Hqc}) {
    const auto rep = run(one_unit_instance(), config(mode));
    ASSERT_EQ(rep.status, RunStatus::Converged) << to_string(mode);
    EXPECT_NEAR(rep.cost, 5.0, 1e-9);
    EXPECT_EQ(rep.u(0, 0), 1);
    EXPECT_NEAR(rep.p(0, 0), 5.0, 1e-9);
    EXPECT_LE(rep.ub - rep.lb, 1e-4);
  }
}

TEST(Run, TwoUnitsMatchBruteForce) {
  const auto inst = two_unit_instance();
  const auto bf = oracle::brute_force(inst);
  ASSERT_TRUE(std::isfinite(bf.cost));
  for (Mode mode : {Mode::Gbda, Mode::MultiCut, Mode::Hqc}) {
    const auto rep = run(inst, config(mode));
    ASSERT_EQ(rep.status, RunStatus::Converged) << to_string(mode);
    EXPECT_NEAR(rep.cost, bf.cost, 1e-6) << to_string(mode);
    EXPECT_TRUE(oracle::updown_ok(inst, rep.u));
    EXPECT_NEAR(oracle::value_function(inst, rep.u), rep.cost, 1e-6);
    expect_monotone(rep);
  }
}

TEST(Run, InfeasibleInstanceStopsAtMaster) {
  GeneratorSpec spec;
  spec.horizon_t = 3;
  spec.infeasible_at = 1;
  const auto inst = gen_instance(spec);
  for (Mode mode : {Mode::Gbda, Mode::MultiCut, Mode::Hqc}) {
    const auto rep = run(inst, config(mode));
    EXPECT_EQ(rep.status, RunStatus::MasterInfeasible) << to_string(mode);
    EXPECT_TRUE(std::isinf(rep.cost));
  }
}

TEST(Run, SmallInstancesAllModes) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const auto inst = oracle::small_instance(seed);
    const auto bf = oracle::brute_force(inst);
    for (Mode mode : {Mode::Gbda, Mode::MultiCut, Mode::Hqc}) {
      const auto rep = run(inst, config(mode));
      ASSERT_EQ(rep.status, RunStatus::Converged) << "seed " << seed << " " << to_string(mode);
      EXPECT_NEAR(rep.cost, bf.cost, 1e-6) << "seed " << seed << " " << to_string(mode);
      EXPECT_LE(rep.lb, bf.cost + 1e-6);
      EXPECT_GE(rep.ub, bf.cost - 1e-6);
      expect_monotone(rep);
    }
  }
}

TEST(Run, AnnealingMasterFindsGoodPlans) {
  // A heuristic master gives no certified lower bound, so an early stop at a
  // suboptimal schedule is possible; the plan must still be admissible.
  int optimal = 0;
  const int total = 20;
  for (std::uint64_t seed = 0; seed < total; ++seed) {
    const auto inst = oracle::small_instance(seed);
    const auto bf = oracle::brute_force(inst);
    auto cfg = config(Mode::Hqc);
    cfg.sampler_kind = SamplerKind::Annealing;
    cfg.sampler.seed = seed;
    const auto rep = run(inst, cfg);
    ASSERT_EQ(rep.status, RunStatus::Converged) << "seed " << seed;
    EXPECT_TRUE(oracle::updown_ok(inst, rep.u));
    EXPECT_GE(rep.cost, bf.cost - 1e-6);
    if (rep.cost <= bf.cost + 1e-6) ++optimal;
  }
  std::printf("annealing master optimal on %d of %d instances\n", optimal, total);
  EXPECT_GE(optimal, total * 3 / 4);
}

TEST(Run, LocalSearchMasterFindsFeasiblePlan) {
  const auto inst = two_unit_instance();
  auto cfg = config(Mode::Gbda);
  cfg.master_strategy = MasterStrategy::LocalSearch;
  const auto rep = run(inst, cfg);
  ASSERT_NE(rep.status, RunStatus::MasterInfeasible);
  EXPECT_TRUE(std::isfinite(rep.cost));
  EXPECT_TRUE(oracle::updown_ok(inst, rep.u));
}

TEST(Run, MaxItersReported) {
  auto cfg = config(Mode::Gbda);
  cfg.max_iters = 1;
  const auto rep = run(two_unit_instance(), cfg);
  EXPECT_EQ(rep.status, RunStatus::MaxIters);
  EXPECT_EQ(rep.iterations(), 1);
}

TEST(Run, InvalidConfig) {
  auto cfg = config(Mode::Gbda);
  cfg.epsilon = 0.0;
  try {
    run(one_unit_instance(), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidParameter);
  }
}

TEST(Run, QuboBitsOnlyInHqcMode) {
  const auto inst = two_unit_instance();
  const auto gb = run(inst, config(Mode::Gbda));
  for (const auto& r : gb.trace) EXPECT_EQ(r.qubo_bits, 0u);
  int snapshots = 0;
  Observer obs;
  obs.on_qubo = [&](int, const QuboProblem& q) {
    ++snapshots;
    EXPECT_GE(q.n, inst.num_units() * inst.horizon());
  };
  run(inst, config(Mode::Hqc), obs);
  EXPECT_GT(snapshots, 0);
}

TEST(Messages, OnlySchedulesAndCutDataCrossTheBoundary) {
  GeneratorSpec spec;
  spec.n_mgs = 2;
  spec.horizon_t = 3;
  spec.seed = 4;
  const auto inst = gen_instance(spec);
  const std::set<std::string> allowed{"kind", "iter", "mg", "u", "status", "objective", "t", "constants", "coeffs"};
  int to_mg = 0, to_op = 0;
  Observer obs;
  obs.on_message = [&](const Message& m) {
    for (const auto& [key, value] : m.payload.items()) EXPECT_TRUE(allowed.count(key)) << key;
    if (m.direction == Direction::ToMicrogrid) {
      ++to_mg;
      EXPECT_EQ(m.payload.at("u").size(), inst.microgrids[static_cast<std::size_t>(m.mg)].units.size());
    } else {
      ++to_op;
    }
    const auto line = to_line(m);
    EXPECT_EQ(line.find("p_max"), std::string::npos);
    EXPECT_EQ(line.find("demand\":["), std::string::npos);
  };
  const auto rep = run(inst, config(Mode::MultiCut), obs);
  EXPECT_EQ(to_mg, rep.iterations() * 2);
  EXPECT_GE(to_op, to_mg);
}

TEST(Names, ModeAndStatusRoundTrip) {
  for (Mode m : {Mode::Gbda, Mode::MultiCut, Mode::Hqc}) EXPECT_EQ(parse_mode(to_string(m)), m);
  for (RunStatus s : {RunStatus::Converged, RunStatus::MaxIters, RunStatus::MasterInfeasible}) {
    EXPECT_EQ(parse_status(to_string(s)), s);
  }
  EXPECT_THROW(parse_mode("bogus"), Error);
}
