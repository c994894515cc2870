#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <tuple>
#include <span>
#include <vector>

#include "hqcgbda/classical_master.hpp"
#include "hqcgbda/cuts.hpp"
#include "hqcgbda/error.hpp"
#include "hqcgbda/qubo.hpp"
#include "hqcgbda/uc_model.hpp"

namespace hqcgbda {

/// Penalty and shaping weights. Unset fields are derived per build.
struct PenaltyConfig {
  std::optional<double> xi_on;
  std::optional<double> xi_off;
  std::optional<double> xi_fea;
  std::optional<double> mu;
  std::optional<double> eta;
};

/// Number of 2^k-weighted slack bits needed to span [0, range].
inline int slack_bits(std::int64_t range) {
  if (range < 0) throw Error(ErrorCode::NegativeRange, "slack range " + std::to_string(range));
  return static_cast<int>(std::bit_width(static_cast<std::uint64_t>(range)));
}

namespace detail {

inline constexpr int kFallbackQuantBits = 8;

// Integer image of a real-valued cut. Decimal data up to 6 places is scaled
// exactly; anything else falls back to 8-bit quantisation of the range.
struct QuantizedCut {
  double scale = 1.0;
  bool exact = true;
  double c = 0.0;
  std::vector<CutCoeff> coeffs;
};

inline QuantizedCut quantize_cut(const FeasibilityCut& cut) {
  auto is_integral = [](double v) { return std::abs(v - std::round(v)) <= 1e-6; };
  QuantizedCut out;
  bool ok = false;
  for (int k = 0; k <= 6 && !ok; ++k) {
    const double s = std::pow(10.0, k);
    ok = is_integral(s * cut.c);
    for (const auto& c : cut.coeffs) ok = ok && is_integral(s * c.f);
    if (ok) out.scale = s;
  }
  if (!ok) {
    double range = -cut.c;
    for (const auto& c : cut.coeffs) range -= std::min(c.f, 0.0);
    out.exact = false;
    out.scale = range > 0.0 ? ((1 << kFallbackQuantBits) - 1) / range : 1.0;
  }
  out.c = std::round(out.scale * cut.c);
  for (const auto& c : cut.coeffs) out.coeffs.push_back({c.unit, c.t, std::round(out.scale * c.f)});
  return out;
}

// One side of a minimum up/down rule at (unit, t), written as E >= 0 with E
// linear in unit bits and the product bit w = u(t-1) u(t).
struct UpDownExpr {
  LinearExpr expr;
  bool uses_product = false;
};

inline UpDownExpr updown_expr(const CommitmentRules& rules, std::size_t unit, std::size_t t, std::size_t periods,
                              bool on_side, std::optional<std::size_t> product_bit) {
  UpDownExpr out;
  auto& e = out.expr;
  const int need = on_side ? rules.t_on : rules.t_off;
  auto bit = [&](long j) { return unit * periods + static_cast<std::size_t>(j); };

  // Window sum over the `need` hours before t of u (on side) or 1 - u.
  for (long j = static_cast<long>(t) - need; j < static_cast<long>(t); ++j) {
    if (j < 0) {
      const bool h = history_state(rules.initial, j);
      e.constant += (on_side ? h : !h) ? 1.0 : 0.0;
    } else if (on_side) {
      e.terms.emplace_back(bit(j), 1.0);
    } else {
      e.constant += 1.0;
      e.terms.emplace_back(bit(j), -1.0);
    }
  }
  // Trigger: shutdown u(t-1)(1 - u(t)) on the on side, startup
  // u(t)(1 - u(t-1)) on the off side.
  const double tn = need;
  if (t == 0) {
    const bool h = history_state(rules.initial, -1);
    if (on_side && h) {
      e.constant -= tn;
      e.terms.emplace_back(bit(0), tn);
    } else if (!on_side && !h) {
      e.terms.emplace_back(bit(0), -tn);
    }
  } else {
    out.uses_product = true;
    const std::size_t w = product_bit.value();
    e.terms.emplace_back(on_side ? bit(static_cast<long>(t) - 1) : bit(static_cast<long>(t)), -tn);
    e.terms.emplace_back(w, tn);
  }
  return out;
}

inline std::pair<double, double> expr_range(const LinearExpr& e) {
  std::map<std::size_t, double> merged;
  for (const auto& [b, c] : e.terms) merged[b] += c;
  double lo = e.constant, hi = e.constant;
  for (const auto& [b, c] : merged) {
    lo += std::min(c, 0.0);
    hi += std::max(c, 0.0);
  }
  return {lo, hi};
}

}  // namespace detail

/// Master problem as a QUBO over unit bits (index unit * T + t), product
/// bits for the quadratised up/down triggers, and slack bits.
///
/// Objective part, per optimality cut e with value z_e(u) = C_e + F_e u:
///   linear     F_e(i,t) * (1 + 2 mu (C_e - ub))
///   quadratic  eta * F_e(i,t) * F_e(i',t')   over ordered pairs
/// Constraint part: squared-equality penalties with binary slack for every
/// up/down rule that can bind and every feasibility cut, plus a product
/// consistency penalty per product bit.
inline QuboProblem build_qubo(const CutPool& pool, std::span<const CommitmentRules> rules, std::size_t periods,
                              const PenaltyConfig& cfg, double ub) {
  const std::size_t units = rules.size();
  if (units == 0 || periods == 0) throw Error(ErrorCode::EmptyInstance, "no unit bits");
  const auto& opt = pool.optimality();
  if (!opt.empty() && !std::isfinite(ub)) throw Error(ErrorCode::InvalidParameter, "ub must be finite");
  const std::size_t nu = units * periods;

  QuboBuilder b;
  for (std::size_t i = 0; i < units; ++i) {
    for (std::size_t t = 0; t < periods; ++t) b.add_bit(BitMeaning::unit(static_cast<int>(i), static_cast<int>(t)));
  }

  // Objective shaping. mu defaults to 1/(|ub|+1), capped so that each cut's
  // term stays increasing in its value over the reachable range.
  QuboProblem::Weights weights;
  weights.ub = opt.empty() ? 0.0 : ub;
  double mu = 0.0;
  if (!opt.empty()) {
    mu = 1.0 / (std::abs(ub) + 1.0);
    for (const auto& cut : opt) {
      double zmin = cut.constant();
      for (double f : cut.f.flat()) zmin += std::min(f, 0.0);
      const double spread = ub - zmin;
      if (spread > 0.0) mu = std::min(mu, 0.25 / spread);
    }
  }
  mu = cfg.mu.value_or(mu);
  const double eta = cfg.eta.value_or(mu);
  weights.mu = mu;
  weights.eta = eta;

  std::vector<double> op_linear(nu, 0.0);
  std::vector<double> op_quad(opt.empty() ? 0 : nu * nu, 0.0);  // upper triangle used
  for (const auto& cut : opt) {
    const auto f = cut.f.flat();
    const double gain = 1.0 + 2.0 * mu * (cut.constant() - ub);
    for (std::size_t a = 0; a < nu; ++a) {
      if (f[a] == 0.0) continue;
      op_linear[a] += f[a] * gain + eta * f[a] * f[a];
      for (std::size_t c = a + 1; c < nu; ++c) op_quad[a * nu + c] += 2.0 * eta * f[a] * f[c];
    }
  }
  double op_bound = 0.0;
  for (std::size_t a = 0; a < nu; ++a) {
    b.add_linear(a, op_linear[a]);
    op_bound += std::abs(op_linear[a]);
    if (op_quad.empty()) continue;
    for (std::size_t c = a + 1; c < nu; ++c) {
      const double v = op_quad[a * nu + c];
      if (v == 0.0) continue;
      b.add_quadratic(a, c, v);
      op_bound += std::abs(v);
    }
  }

  // Any penalty violation costs at least xi, which must exceed the objective
  // part's total swing.
  const double xi_default = 2.0 * op_bound + 1.0;
  weights.xi_on = cfg.xi_on.value_or(xi_default);
  weights.xi_off = cfg.xi_off.value_or(xi_default);
  weights.xi_fea = cfg.xi_fea.value_or(xi_default);

  // Minimum up/down rules.
  for (std::size_t i = 0; i < units; ++i) {
    for (std::size_t t = 0; t < periods; ++t) {
      std::optional<std::size_t> w;
      for (bool on_side : {true, false}) {
        // Probe with a placeholder product index to see whether the rule can
        // bind at all before allocating bits.
        const std::size_t probe_bit = nu * 4 + 7;
        auto probe = detail::updown_expr(rules[i], i, t, periods, on_side, w.value_or(probe_bit));
        auto [lo, hi] = detail::expr_range(probe.expr);
        if (lo >= 0.0) continue;
        if (hi < 0.0) {
          throw Error(ErrorCode::UnsatisfiableCut, "up/down rule of unit " + std::to_string(i) + " cannot hold at t=" +
                                                       std::to_string(t));
        }
        if (probe.uses_product && !w) {
          w = b.add_bit(BitMeaning::product(static_cast<int>(i), static_cast<int>(t)));
          b.add_product(*w, i * periods + t - 1, i * periods + t, weights.xi_on);
        }
        auto side = detail::updown_expr(rules[i], i, t, periods, on_side, w);
        const auto range = static_cast<std::int64_t>(std::llround(hi));
        PenaltyGroup g;
        g.kind = on_side ? PenaltyKind::MinUp : PenaltyKind::MinDown;
        g.unit_or_cut = static_cast<int>(i);
        g.t = static_cast<int>(t);
        g.weight = on_side ? weights.xi_on : weights.xi_off;
        // Penalised residual: slack - E.
        g.expr.constant = -side.expr.constant;
        for (const auto& [bit, c] : side.expr.terms) g.expr.terms.emplace_back(bit, -c);
        const int k_bits = slack_bits(range);
        for (int k = 0; k < k_bits; ++k) {
          const auto meaning = on_side ? BitMeaning::slack_on(static_cast<int>(i), static_cast<int>(t), k)
                                       : BitMeaning::slack_off(static_cast<int>(i), static_cast<int>(t), k);
          const std::size_t sb = b.add_bit(meaning);
          g.slack_bits.push_back(sb);
          g.expr.terms.emplace_back(sb, std::ldexp(1.0, k));
        }
        b.add_penalty(std::move(g));
      }
    }
  }

  // Feasibility cuts: 0 >= c + F u  becomes  (c + F u + slack)^2 == 0 in
  // quantised units.
  const auto& fea = pool.feasibility();
  for (std::size_t e = 0; e < fea.size(); ++e) {
    const auto qc = detail::quantize_cut(fea[e]);
    double hi = -qc.c, lo = -qc.c;  // range of -(c + F u)
    for (const auto& c : qc.coeffs) {
      hi -= std::min(c.f, 0.0);
      lo -= std::max(c.f, 0.0);
    }
    if (hi < 0.0) throw Error(ErrorCode::UnsatisfiableCut, "feasibility cut " + std::to_string(e) + " excludes every schedule");
    if (lo >= 0.0) continue;
    PenaltyGroup g;
    g.kind = PenaltyKind::Feasibility;
    g.unit_or_cut = static_cast<int>(e);
    g.t = fea[e].t.value_or(-1);
    g.weight = weights.xi_fea;
    g.scale = qc.scale;
    g.expr.constant = qc.c;
    for (const auto& c : qc.coeffs) g.expr.terms.emplace_back(c.unit * periods + c.t, c.f);
    const int k_bits = slack_bits(std::llround(hi));
    for (int k = 0; k < k_bits; ++k) {
      const std::size_t sb = b.add_bit(BitMeaning::slack_fea(static_cast<int>(e), g.t, k));
      g.slack_bits.push_back(sb);
      g.expr.terms.emplace_back(sb, std::ldexp(1.0, k));
    }
    b.add_penalty(std::move(g));
  }

  auto q = std::move(b).build();
  q.weights = weights;
  return q;
}

inline QuboProblem build_qubo(const CutPool& pool, const Instance& inst, const PenaltyConfig& cfg, double ub) {
  if (inst.num_units() == 0) throw Error(ErrorCode::EmptyInstance, "instance has no units");
  const auto rules = commitment_rules(inst);
  return build_qubo(pool, std::span<const CommitmentRules>(rules), inst.horizon(), cfg, ub);
}

// ---------------------------------------------------------------------------
// Decoding

struct SlackValue {
  BitMeaning::Kind kind = BitMeaning::Kind::SlackOn;
  int first = 0;
  int second = 0;
  std::int64_t value = 0;  // sum of 2^k b_k, in quantised units

  bool operator==(const SlackValue&) const = default;
};

struct DecodedSample {
  Schedule u;
  std::vector<SlackValue> slacks;
};

inline DecodedSample decode(const BitVector& x, const BitRegistry& reg) {
  if (x.size() != reg.size()) throw Error(ErrorCode::LengthMismatch, "bit vector length != registry size");
  std::size_t units = 0, periods = 0;
  for (const auto& m : reg.entries()) {
    if (m.kind != BitMeaning::Kind::Unit) continue;
    units = std::max(units, static_cast<std::size_t>(m.first) + 1);
    periods = std::max(periods, static_cast<std::size_t>(std::max(m.second, 0)) + 1);
  }
  DecodedSample out;
  out.u = Schedule(units, periods);
  std::map<std::tuple<BitMeaning::Kind, int, int>, std::int64_t> slack;
  for (std::size_t b = 0; b < reg.size(); ++b) {
    const auto& m = reg[b];
    switch (m.kind) {
      case BitMeaning::Kind::Unit:
        out.u(static_cast<std::size_t>(m.first), static_cast<std::size_t>(std::max(m.second, 0))) = x[b];
        break;
      case BitMeaning::Kind::SlackOn:
      case BitMeaning::Kind::SlackOff:
      case BitMeaning::Kind::SlackFea:
        slack[{m.kind, m.first, m.second}] += x[b] ? (std::int64_t{1} << m.k) : 0;
        break;
      case BitMeaning::Kind::Product: break;
    }
  }
  for (const auto& [key, v] : slack) out.slacks.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), v});
  return out;
}

/// Bit vector with the unit bits of u set and every other bit clear.
inline BitVector encode(const Schedule& u, const BitRegistry& reg) {
  BitVector x(reg.size(), 0);
  for (std::size_t b = 0; b < reg.size(); ++b) {
    const auto& m = reg[b];
    if (m.kind == BitMeaning::Kind::Unit) {
      x[b] = u(static_cast<std::size_t>(m.first), static_cast<std::size_t>(std::max(m.second, 0)));
    }
  }
  return x;
}

/// Largest optimality-cut value at u.
inline double lower_bound(const Schedule& u, const CutPool& pool) {
  if (pool.optimality().empty()) throw Error(ErrorCode::EmptyPool, "no optimality cuts");
  return max_cut_value(pool, u);
}

}  // namespace hqcgbda
