#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "hqcgbda/classical_master.hpp"
#include "hqcgbda/cuts.hpp"
#include "hqcgbda/dispatch.hpp"
#include "hqcgbda/error.hpp"
#include "hqcgbda/qubo_engine.hpp"
#include "hqcgbda/qubo_master.hpp"
#include "hqcgbda/uc_model.hpp"

namespace hqcgbda {

enum class Mode { Gbda, MultiCut, Hqc };
enum class RunStatus { Converged, MaxIters, MasterInfeasible };
enum class InitialPolicy { AllOff, AllOn, Random };
enum class SamplerKind { Exhaustive, Annealing };

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::Gbda: return "gbda";
    case Mode::MultiCut: return "mc_gbda";
    case Mode::Hqc: return "hqc_gbda";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "gbda") return Mode::Gbda;
  if (s == "mc_gbda") return Mode::MultiCut;
  if (s == "hqc_gbda") return Mode::Hqc;
  throw Error(ErrorCode::InvalidParameter, "unknown mode " + s);
}

inline std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::MaxIters: return "MaxIters";
    case RunStatus::MasterInfeasible: return "MasterInfeasible";
  }
  return "?";
}

inline RunStatus parse_status(const std::string& s) {
  if (s == "Converged") return RunStatus::Converged;
  if (s == "MaxIters") return RunStatus::MaxIters;
  if (s == "MasterInfeasible") return RunStatus::MasterInfeasible;
  throw Error(ErrorCode::ParseError, "unknown status " + s);
}

inline FeasibilityCutMode cut_mode(Mode m) {
  return m == Mode::Gbda ? FeasibilityCutMode::Single : FeasibilityCutMode::Multi;
}

struct RunConfig {
  Mode mode = Mode::Gbda;
  double epsilon = 1e-4;
  int max_iters = 200;
  InitialPolicy initial = InitialPolicy::AllOff;
  std::uint64_t initial_seed = 0;
  PenaltyConfig penalty;
  SamplerParams sampler;
  SamplerKind sampler_kind = SamplerKind::Exhaustive;
  std::shared_ptr<Sampler> backend;  // overrides sampler_kind when set
  int num_reads = 0;                 // 0: every unit-bit assignment (exhaustive) or one per restart
  MasterStrategy master_strategy = MasterStrategy::Exhaustive;
  LocalSearchParams local;
  double tol = 1e-9;
};

struct IterationRecord {
  int e = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  std::vector<SubproblemStatus> mg_status;
  std::size_t cuts_opt = 0;   // added this iteration
  std::size_t cuts_feas = 0;  // added this iteration
  std::size_t qubo_bits = 0;  // hqc mode only
  double ms_sub = 0.0;
  double ms_master = 0.0;
};

struct SolveReport {
  RunStatus status = RunStatus::MaxIters;
  Mode mode = Mode::Gbda;
  Schedule u;
  Dispatch p;
  double cost = std::numeric_limits<double>::infinity();
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  std::vector<IterationRecord> trace;
  std::vector<Schedule> visited;  // u* of every iteration
  CutPool pool;
  double total_ms = 0.0;

  int iterations() const { return static_cast<int>(trace.size()); }
};

// ---------------------------------------------------------------------------
// Bounds

struct BoundState {
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  std::optional<Schedule> incumbent;

  double gap() const { return ub - lb; }
};

inline BoundState update_bounds(BoundState s, std::optional<double> z_bar, std::optional<double> z_lower,
                                const std::optional<Schedule>& schedule = std::nullopt) {
  if (z_bar && *z_bar < s.ub) {
    s.ub = *z_bar;
    if (schedule) s.incumbent = *schedule;
  }
  if (z_lower && *z_lower > s.lb) s.lb = *z_lower;
  return s;
}

// ---------------------------------------------------------------------------
// Messages between the operator and the microgrid controllers.

enum class Direction { ToMicrogrid, ToOperator };

struct Message {
  Direction direction = Direction::ToMicrogrid;
  int iter = 0;
  int mg = 0;
  nlohmann::json payload;
};

inline std::string to_line(const Message& m) {
  return std::string(m.direction == Direction::ToMicrogrid ? "dso->mgcc" : "mgcc->dso") + "," +
         std::to_string(m.iter) + "," + m.payload.dump();
}

struct Observer {
  std::function<void(const Message&)> on_message;
  std::function<void(int, const QuboProblem&)> on_qubo;
};

struct MicrogridReply {
  int mg = 0;
  SubproblemStatus status = SubproblemStatus::Optimal;
  double objective = std::numeric_limits<double>::infinity();
  std::vector<CutRecord> records;
};

/// Subproblem side. Owns the microgrid data; only replies leave it.
class MicrogridController {
 public:
  MicrogridController(Microgrid mg, int index, std::size_t unit_offset)
      : mg_(std::move(mg)), index_(index), offset_(unit_offset) {}

  MicrogridReply respond(const Schedule& u_mg, int iter, double tol) const {
    MicrogridReply reply;
    reply.mg = index_;
    auto res = solve_dispatch(mg_, u_mg, tol);
    reply.status = res.status;
    if (res.status == SubproblemStatus::Optimal) {
      reply.objective = res.objective;
      reply.records.push_back(optimality_contribution(mg_, index_, offset_, u_mg, res, iter));
    } else {
      reply.records = feasibility_contributions(mg_, index_, offset_, solve_feasibility(mg_, u_mg, tol), iter);
    }
    return reply;
  }

  Dispatch dispatch(const Schedule& u_mg, double tol) const { return solve_dispatch(mg_, u_mg, tol).p; }

  std::size_t units() const { return mg_.units.size(); }
  std::size_t offset() const { return offset_; }

 private:
  Microgrid mg_;
  int index_;
  std::size_t offset_;
};

struct MasterOutcome {
  MasterStatus status = MasterStatus::Infeasible;
  Schedule u;
  double z = -std::numeric_limits<double>::infinity();
  std::size_t bits = 0;
};

/// Master side. Sees commitment rules, schedules and cut records only.
class Operator {
 public:
  Operator(std::vector<CommitmentRules> rules, std::size_t periods, const RunConfig& cfg)
      : rules_(std::move(rules)), periods_(periods), cfg_(cfg) {}

  struct Absorbed {
    std::optional<double> z_bar;
    std::size_t opt = 0;
    std::size_t feas = 0;
  };

  /// Adds the cuts implied by one iteration's replies.
  Absorbed absorb(std::span<const MicrogridReply> replies, int iter) {
    Absorbed out;
    bool all_optimal = true;
    std::vector<CutRecord> records;
    for (const auto& r : replies) {
      if (r.status != SubproblemStatus::Optimal) all_optimal = false;
      records.insert(records.end(), r.records.begin(), r.records.end());
    }
    if (all_optimal) {
      double z = 0.0;
      for (const auto& r : replies) z += r.objective;
      out.z_bar = z;
      last_z_bar_ = z;
      pool_.add(aggregate_optimality(records, rules_.size(), periods_, iter));
      out.opt = 1;
    } else {
      // Optimality records from the feasible microgrids are withheld.
      for (auto& cut : aggregate_feasibility(records, cut_mode(cfg_.mode), iter)) {
        pool_.add(std::move(cut));
        ++out.feas;
      }
    }
    return out;
  }

  bool admissible(const Schedule& u) const { return check_min_updown(rules_, u).empty(); }

  MasterOutcome solve(int iter, const Observer& obs) {
    if (cfg_.mode != Mode::Hqc) {
      auto sol = solve_master(pool_, rules_, periods_, cfg_.master_strategy, cfg_.local);
      return {sol.status, std::move(sol.u), sol.z, 0};
    }
    MasterOutcome out;
    QuboProblem q;
    try {
      q = build_qubo(pool_, rules_, periods_, cfg_.penalty, last_z_bar_.value_or(0.0));
    } catch (const Error& e) {
      // A cut or rule that no schedule can meet leaves the master empty.
      if (e.code() != ErrorCode::UnsatisfiableCut) throw;
      return out;
    }
    if (obs.on_qubo) obs.on_qubo(iter, q);
    out.bits = q.n;
    auto& sampler = backend();
    const std::size_t unit_bits = rules_.size() * periods_;
    SampleRequest req;
    if (cfg_.num_reads > 0) req.num_reads = cfg_.num_reads;
    else if (sampler.name() == "exhaustive") req.num_reads = unit_bits <= 16 ? 1 << unit_bits : 1 << 16;
    else req.num_reads = cfg_.sampler.restarts;
    if (pick(sampler.sample(q, req), q, out)) return out;
    if (sampler.name() != "exhaustive") {
      // A heuristic miss is not proof of infeasibility.
      ExhaustiveSampler exact;
      try {
        if (pick(exact.sample(q, {unit_bits <= 16 ? 1 << unit_bits : 1 << 16, 0}), q, out)) return out;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::TooLarge) throw;
      }
    }
    out.status = MasterStatus::Infeasible;
    return out;
  }

  const CutPool& pool() const { return pool_; }

 private:
  Sampler& backend() {
    if (cfg_.backend) return *cfg_.backend;
    if (!default_backend_) {
      if (cfg_.sampler_kind == SamplerKind::Exhaustive) default_backend_ = std::make_unique<ExhaustiveSampler>();
      else default_backend_ = std::make_unique<AnnealingSampler>(cfg_.sampler);
    }
    return *default_backend_;
  }

  // Among decoded reads that satisfy the up/down rules and every feasibility
  // cut, take the smallest cut bound; ties go to the smallest schedule.
  bool pick(const SampleSet& set, const QuboProblem& q, MasterOutcome& out) const {
    bool found = false;
    for (const auto& s : set.samples) {
      auto u = decode(s.x, q.registry).u;
      if (!admissible(u) || !satisfies_cuts(pool_, u, cfg_.tol)) continue;
      const double z = max_cut_value(pool_, u);
      if (!found || z < out.z || (z == out.z && lex_less(u, out.u))) {
        found = true;
        out.z = z;
        out.u = std::move(u);
      }
    }
    if (found) out.status = MasterStatus::Optimal;
    return found;
  }

  std::vector<CommitmentRules> rules_;
  std::size_t periods_;
  RunConfig cfg_;
  CutPool pool_;
  std::optional<double> last_z_bar_;
  std::unique_ptr<Sampler> default_backend_;
};

// ---------------------------------------------------------------------------

inline void check_config(const RunConfig& cfg) {
  if (!(cfg.epsilon > 0.0)) throw Error(ErrorCode::InvalidParameter, "epsilon must be positive");
  if (cfg.max_iters < 1) throw Error(ErrorCode::InvalidParameter, "max_iters must be at least 1");
  if (cfg.num_reads < 0) throw Error(ErrorCode::InvalidParameter, "num_reads must be non-negative");
}

inline Schedule initial_schedule(const Instance& inst, InitialPolicy policy, std::uint64_t seed) {
  Schedule u(inst.num_units(), inst.horizon());
  if (policy == InitialPolicy::AllOn) {
    for (auto& x : u.flat()) x = 1;
  } else if (policy == InitialPolicy::Random) {
    std::mt19937_64 rng(seed);
    for (auto& x : u.flat()) x = (rng() >> 11) & 1U;
  }
  return u;
}

namespace detail {

inline nlohmann::json schedule_json(const Schedule& u) {
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < u.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t t = 0; t < u.cols(); ++t) row.push_back(static_cast<int>(u(i, t)));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

/// Runs the decomposition loop until the bound gap closes, the iteration
/// budget runs out, or the master has no admissible schedule left.
inline SolveReport run(const Instance& raw, const RunConfig& cfg, const Observer& obs = {}) {
  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };
  check_config(cfg);
  const Instance inst = validate_instance(raw);
  const auto start = clock::now();
  const auto offsets = inst.unit_offsets();

  std::vector<MicrogridController> controllers;
  for (std::size_t k = 0; k < inst.microgrids.size(); ++k) {
    controllers.emplace_back(inst.microgrids[k], static_cast<int>(k), offsets[k]);
  }
  Operator op(commitment_rules(inst), inst.horizon(), cfg);

  SolveReport rep;
  rep.mode = cfg.mode;
  BoundState bounds;
  Schedule u = initial_schedule(inst, cfg.initial, cfg.initial_seed);
  bool done = false;

  for (int e = 1; e <= cfg.max_iters && !done; ++e) {
    IterationRecord rec;
    rec.e = e;
    rep.visited.push_back(u);

    auto t0 = clock::now();
    std::vector<Schedule> slices;
    for (std::size_t k = 0; k < controllers.size(); ++k) {
      slices.push_back(schedule_slice(inst, u, k));
      if (obs.on_message) {
        obs.on_message({Direction::ToMicrogrid, e, static_cast<int>(k),
                        {{"kind", "schedule"}, {"iter", e}, {"mg", k}, {"u", detail::schedule_json(slices.back())}}});
      }
    }
    std::vector<std::future<MicrogridReply>> pending;
    for (std::size_t k = 0; k < controllers.size(); ++k) {
      pending.push_back(std::async(std::launch::async, [&, k] { return controllers[k].respond(slices[k], e, cfg.tol); }));
    }
    std::vector<MicrogridReply> replies;
    for (auto& f : pending) replies.push_back(f.get());
    rec.ms_sub = ms_since(t0);

    for (const auto& r : replies) {
      rec.mg_status.push_back(r.status);
      if (!obs.on_message) continue;
      nlohmann::json status = {{"kind", "status"}, {"iter", e}, {"mg", r.mg}};
      if (r.status == SubproblemStatus::Optimal) {
        status["status"] = "optimal";
        status["objective"] = r.objective;
      } else {
        status["status"] = "infeasible";
      }
      obs.on_message({Direction::ToOperator, e, r.mg, status});
      for (const auto& cr : r.records) obs.on_message({Direction::ToOperator, e, r.mg, to_json(cr)});
    }

    const auto absorbed = op.absorb(replies, e);
    rec.cuts_opt = absorbed.opt;
    rec.cuts_feas = absorbed.feas;
    // A schedule breaking the up/down rules is not a feasible plan.
    if (absorbed.z_bar && op.admissible(u)) bounds = update_bounds(bounds, absorbed.z_bar, std::nullopt, u);

    if (bounds.gap() <= cfg.epsilon) {
      rep.status = RunStatus::Converged;
      done = true;
    } else {
      t0 = clock::now();
      auto master = op.solve(e, obs);
      rec.ms_master = ms_since(t0);
      rec.qubo_bits = master.bits;
      if (master.status == MasterStatus::Infeasible) {
        rep.status = RunStatus::MasterInfeasible;
        done = true;
      } else {
        if (std::isfinite(master.z)) bounds = update_bounds(bounds, std::nullopt, master.z);
        u = std::move(master.u);
        if (bounds.gap() <= cfg.epsilon) {
          rep.status = RunStatus::Converged;
          done = true;
        }
      }
    }
    rec.ub = bounds.ub;
    rec.lb = bounds.lb;
    rec.gap = bounds.gap();
    rep.trace.push_back(std::move(rec));
  }
  if (!done) rep.status = RunStatus::MaxIters;

  rep.ub = bounds.ub;
  rep.lb = bounds.lb;
  if (bounds.incumbent && rep.status != RunStatus::MasterInfeasible) {
    rep.u = *bounds.incumbent;
    rep.p = Dispatch(inst.num_units(), inst.horizon(), 0.0);
    for (std::size_t k = 0; k < controllers.size(); ++k) {
      const auto p = controllers[k].dispatch(schedule_slice(inst, rep.u, k), cfg.tol);
      for (std::size_t i = 0; i < p.rows(); ++i) {
        for (std::size_t t = 0; t < p.cols(); ++t) rep.p(offsets[k] + i, t) = p(i, t);
      }
    }
    rep.cost = total_cost(inst, rep.u, rep.p);
  } else {
    rep.u = u;
    rep.p = Dispatch(inst.num_units(), inst.horizon(), 0.0);
  }
  rep.pool = op.pool();
  rep.total_ms = ms_since(start);
  return rep;
}

}  // namespace hqcgbda
