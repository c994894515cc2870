#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "hqcgbda/error.hpp"
#include "hqcgbda/uc_model.hpp"

namespace hqcgbda {

enum class DemandShape { Flat, Sinusoidal, ScaledWeekly };

/// Flat: `level` every hour. Sinusoidal: base + amplitude * sin over a 24 h
/// cycle. ScaledWeekly: the sinusoidal day with every second day scaled down
/// by decay_pct percent.
struct DemandProfile {
  DemandShape shape = DemandShape::Flat;
  double level = 50.0;
  double base = 50.0;
  double amplitude = 15.0;
  double decay_pct = 10.0;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct GeneratorSpec {
  int n_mgs = 1;
  int units_per_mg = 2;
  int horizon_t = 4;
  DemandProfile demand;
  Range a{0.002, 0.02};
  Range b{10.0, 30.0};
  Range c{5.0, 50.0};
  Range d{0.0, 10.0};
  Range p_max{20.0, 80.0};     // rounded to whole MW
  Range p_min_frac{0.0, 0.2};  // of p_max, rounded down to whole MW
  int t_min = 1;               // t_on and t_off drawn from [t_min, t_max]
  int t_max = 3;
  bool random_history = true;
  std::uint64_t seed = 0;
  std::optional<int> infeasible_at;
};

inline void check_spec(const GeneratorSpec& s) {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::InvalidSpec, msg); };
  if (s.n_mgs < 1 || s.units_per_mg < 1 || s.horizon_t < 1) bad("sizes must be positive");
  for (const Range* r : {&s.a, &s.b, &s.c, &s.d, &s.p_max, &s.p_min_frac}) {
    if (!(r->lo <= r->hi) || r->lo < 0.0) bad("cost and bound ranges need 0 <= lo <= hi");
  }
  if (s.p_max.lo < 1.0) bad("p_max must be at least 1");
  if (s.p_min_frac.hi > 0.5) bad("p_min fraction above 0.5");
  if (s.t_min < 1 || s.t_max < s.t_min) bad("min up/down range invalid");
  if (s.infeasible_at && (*s.infeasible_at < 0 || *s.infeasible_at >= s.horizon_t)) bad("infeasible_at out of range");
  if (s.demand.level < 0.0 || s.demand.base < 0.0 || s.demand.decay_pct < 0.0 || s.demand.decay_pct > 100.0) {
    bad("demand profile parameters out of range");
  }
}

inline std::vector<double> demand_shape(const DemandProfile& p, int horizon) {
  std::vector<double> out(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    const double wave = p.base + p.amplitude * std::sin(2.0 * std::numbers::pi * t / 24.0);
    switch (p.shape) {
      case DemandShape::Flat: out[t] = p.level; break;
      case DemandShape::Sinusoidal: out[t] = wave; break;
      case DemandShape::ScaledWeekly: out[t] = ((t / 24) % 2 == 1) ? wave * (1.0 - p.decay_pct / 100.0) : wave; break;
    }
    out[t] = std::max(out[t], 0.0);
  }
  return out;
}

/// Deterministic random instance. Demand is whole MW and kept inside
/// [sum p_min, sum p_max / 1.2] of the units that can be on at each hour under
/// "switch on as early as allowed", so that schedule is always feasible. With
/// infeasible_at, microgrid 0 asks for one MW more than its total capacity.
inline Instance gen_instance(const GeneratorSpec& spec) {
  check_spec(spec);
  std::mt19937_64 rng(spec.seed);
  auto draw = [&](const Range& r) { return std::uniform_real_distribution<double>(r.lo, r.hi)(rng); };
  auto round_to = [](double v, double unit) { return std::round(v / unit) * unit; };
  auto draw_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  const auto shape = demand_shape(spec.demand, spec.horizon_t);
  Instance inst;
  inst.horizon_t = spec.horizon_t;
  for (int m = 0; m < spec.n_mgs; ++m) {
    Microgrid mg;
    mg.id = m;
    std::vector<InitialState> init;
    for (int k = 0; k < spec.units_per_mg; ++k) {
      UnitParams u;
      u.a = round_to(draw(spec.a), 1e-4);
      u.b = round_to(draw(spec.b), 1e-2);
      u.c = round_to(draw(spec.c), 1e-2);
      u.d = round_to(draw(spec.d), 1e-2);
      u.p_max = std::max(1.0, std::round(draw(spec.p_max)));
      u.p_min = std::floor(draw(spec.p_min_frac) * u.p_max);
      u.t_on = draw_int(spec.t_min, spec.t_max);
      u.t_off = draw_int(spec.t_min, spec.t_max);
      InitialState s;
      s.was_on = spec.random_history ? draw_int(0, 1) == 1 : false;
      s.duration = spec.random_history ? draw_int(1, 3) : u.t_off;
      mg.units.push_back(u);
      init.push_back(s);
    }

    // Earliest-on schedule: every unit on from the first hour its history
    // allows.
    std::vector<double> lo(spec.horizon_t, 0.0), hi(spec.horizon_t, 0.0);
    for (std::size_t k = 0; k < mg.units.size(); ++k) {
      const auto& u = mg.units[k];
      const int first_on = init[k].was_on ? 0 : std::max(0, u.t_off - init[k].duration);
      for (int t = first_on; t < spec.horizon_t; ++t) {
        lo[t] += u.p_min;
        hi[t] += u.p_max;
      }
    }
    double peak_cap = 0.0, peak_raw = 0.0;
    for (int t = 0; t < spec.horizon_t; ++t) {
      hi[t] = std::floor(hi[t] / 1.2);
      peak_cap = std::max(peak_cap, hi[t]);
      peak_raw = std::max(peak_raw, shape[t]);
    }
    const double scale = peak_raw > peak_cap && peak_raw > 0.0 ? peak_cap / peak_raw : 1.0;
    mg.demand.resize(spec.horizon_t);
    for (int t = 0; t < spec.horizon_t; ++t) {
      mg.demand[t] = std::clamp(std::round(shape[t] * scale), std::ceil(lo[t]), std::max(std::ceil(lo[t]), hi[t]));
    }
    if (m == 0 && spec.infeasible_at) {
      double cap = 0.0;
      for (const auto& u : mg.units) cap += u.p_max;
      mg.demand[*spec.infeasible_at] = cap + 1.0;
    }
    inst.microgrids.push_back(std::move(mg));
    inst.initial_state.insert(inst.initial_state.end(), init.begin(), init.end());
  }
  return validate_instance(std::move(inst));
}

// ---------------------------------------------------------------------------
// JSON form of the spec. Every key is optional:
//   {"n_mgs", "units_per_mg", "horizon_t", "seed", "infeasible_at",
//    "demand": {"shape": "flat"|"sinusoidal"|"scaled_weekly", "level", "base",
//               "amplitude", "decay_pct"},
//    "a": [lo, hi], "b", "c", "d", "p_max", "p_min_frac", "t_min", "t_max",
//    "random_history"}

inline GeneratorSpec spec_from_json(const nlohmann::json& j) {
  GeneratorSpec s;
  try {
    s.n_mgs = j.value("n_mgs", s.n_mgs);
    s.units_per_mg = j.value("units_per_mg", s.units_per_mg);
    s.horizon_t = j.value("horizon_t", s.horizon_t);
    s.seed = j.value("seed", s.seed);
    if (j.contains("infeasible_at")) s.infeasible_at = j.at("infeasible_at").get<int>();
    if (j.contains("demand")) {
      const auto& jd = j.at("demand");
      const auto shape = jd.value("shape", std::string("flat"));
      if (shape == "flat") s.demand.shape = DemandShape::Flat;
      else if (shape == "sinusoidal") s.demand.shape = DemandShape::Sinusoidal;
      else if (shape == "scaled_weekly") s.demand.shape = DemandShape::ScaledWeekly;
      else throw Error(ErrorCode::InvalidSpec, "unknown demand shape " + shape);
      s.demand.level = jd.value("level", s.demand.level);
      s.demand.base = jd.value("base", s.demand.base);
      s.demand.amplitude = jd.value("amplitude", s.demand.amplitude);
      s.demand.decay_pct = jd.value("decay_pct", s.demand.decay_pct);
    }
    auto range = [&](const char* key, Range& r) {
      if (!j.contains(key)) return;
      const auto v = j.at(key).get<std::vector<double>>();
      if (v.size() != 2) throw Error(ErrorCode::InvalidSpec, std::string(key) + " needs [lo, hi]");
      r = {v[0], v[1]};
    };
    range("a", s.a);
    range("b", s.b);
    range("c", s.c);
    range("d", s.d);
    range("p_max", s.p_max);
    range("p_min_frac", s.p_min_frac);
    s.t_min = j.value("t_min", s.t_min);
    s.t_max = j.value("t_max", s.t_max);
    s.random_history = j.value("random_history", s.random_history);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, e.what());
  }
  check_spec(s);
  return s;
}

}  // namespace hqcgbda
