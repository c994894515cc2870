#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hqcgbda/error.hpp"

namespace hqcgbda {

using BitVector = std::vector<std::uint8_t>;

/// What a QUBO bit stands for.
struct BitMeaning {
  enum class Kind { Unit, SlackOn, SlackOff, SlackFea, Product };
  Kind kind = Kind::Unit;
  // Unit: (unit, t). SlackOn/SlackOff: (unit, t, k). SlackFea: (cut, t, k)
  // with t = -1 for a horizon-wide cut. Product: (unit, t) standing for
  // u(unit, t-1) * u(unit, t).
  int first = 0;
  int second = 0;
  int k = 0;

  bool operator==(const BitMeaning&) const = default;
  auto operator<=>(const BitMeaning&) const = default;

  static BitMeaning unit(int i, int t) { return {Kind::Unit, i, t, 0}; }
  static BitMeaning slack_on(int i, int t, int k) { return {Kind::SlackOn, i, t, k}; }
  static BitMeaning slack_off(int i, int t, int k) { return {Kind::SlackOff, i, t, k}; }
  static BitMeaning slack_fea(int e, int t, int k) { return {Kind::SlackFea, e, t, k}; }
  static BitMeaning product(int i, int t) { return {Kind::Product, i, t, 0}; }
};

inline std::string to_string(const BitMeaning& m) {
  switch (m.kind) {
    case BitMeaning::Kind::Unit: return "u " + std::to_string(m.first) + " " + std::to_string(m.second);
    case BitMeaning::Kind::SlackOn:
      return "on " + std::to_string(m.first) + " " + std::to_string(m.second) + " " + std::to_string(m.k);
    case BitMeaning::Kind::SlackOff:
      return "off " + std::to_string(m.first) + " " + std::to_string(m.second) + " " + std::to_string(m.k);
    case BitMeaning::Kind::SlackFea:
      return "fea " + std::to_string(m.first) + " " + std::to_string(m.second) + " " + std::to_string(m.k);
    case BitMeaning::Kind::Product: return "and " + std::to_string(m.first) + " " + std::to_string(m.second);
  }
  return "?";
}

/// Dense bit registry: entry b describes bit b.
class BitRegistry {
 public:
  std::size_t add(const BitMeaning& meaning) {
    if (index_.contains(meaning)) throw Error(ErrorCode::InvalidParameter, "duplicate bit meaning " + to_string(meaning));
    index_.emplace(meaning, entries_.size());
    entries_.push_back(meaning);
    return entries_.size() - 1;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  const BitMeaning& operator[](std::size_t bit) const { return entries_.at(bit); }
  const std::vector<BitMeaning>& entries() const noexcept { return entries_; }

  std::optional<std::size_t> find(const BitMeaning& meaning) const {
    auto it = index_.find(meaning);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<BitMeaning> entries_;
  std::map<BitMeaning, std::size_t> index_;
};

/// constant + sum coef * x[bit]; used for squared-equality penalty groups.
struct LinearExpr {
  double constant = 0.0;
  std::vector<std::pair<std::size_t, double>> terms;

  double eval(const BitVector& x) const {
    double v = constant;
    for (const auto& [bit, coef] : terms) {
      if (x[bit]) v += coef;
    }
    return v;
  }
};

enum class PenaltyKind { MinUp, MinDown, Feasibility };

/// weight * expr(x)^2. Slack bits are the trailing 2^k-weighted terms.
struct PenaltyGroup {
  PenaltyKind kind = PenaltyKind::MinUp;
  int unit_or_cut = 0;
  int t = 0;
  double weight = 0.0;
  double scale = 1.0;  // expr is the original constraint times scale
  LinearExpr expr;
  std::vector<std::size_t> slack_bits;  // bit k has weight 2^k
};

/// weight * (x y - 2 x w - 2 y w + 3 w): zero iff w == x y.
struct ProductGroup {
  std::size_t w = 0;
  std::size_t x = 0;
  std::size_t y = 0;
  double weight = 0.0;
};

struct QuadTerm {
  std::size_t i = 0;
  std::size_t j = 0;  // i < j
  double q = 0.0;
};

/// E(x) = sum_i linear[i] x_i + sum_{i<j} q_ij x_i x_j + offset. Immutable
/// once built; penalty bookkeeping is kept alongside for decoding.
struct QuboProblem {
  /// Weights the builder resolved (zero when not applicable).
  struct Weights {
    double mu = 0.0;
    double eta = 0.0;
    double xi_on = 0.0;
    double xi_off = 0.0;
    double xi_fea = 0.0;
    double ub = 0.0;
  };

  std::size_t n = 0;
  std::vector<double> linear;
  std::vector<QuadTerm> quadratic;  // sorted by (i, j)
  double offset = 0.0;
  BitRegistry registry;
  std::vector<PenaltyGroup> penalties;
  std::vector<ProductGroup> products;
  Weights weights;

  double energy(const BitVector& x) const {
    if (x.size() != n) throw Error(ErrorCode::LengthMismatch, "bit vector length != n");
    double e = offset;
    for (std::size_t i = 0; i < n; ++i) {
      if (x[i]) e += linear[i];
    }
    for (const auto& term : quadratic) {
      if (x[term.i] && x[term.j]) e += term.q;
    }
    return e;
  }

  /// Coefficient q_ij for i <= j (diagonal is the linear term).
  double coefficient(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    if (i == j) return linear.at(i);
    auto it = std::lower_bound(quadratic.begin(), quadratic.end(), std::pair{i, j}, [](const QuadTerm& t, const auto& key) {
      return std::pair{t.i, t.j} < key;
    });
    return it != quadratic.end() && it->i == i && it->j == j ? it->q : 0.0;
  }
};

/// Accumulates a QUBO polynomial over registered bits (x^2 = x).
class QuboBuilder {
 public:
  std::size_t add_bit(const BitMeaning& meaning) {
    linear_.push_back(0.0);
    return registry_.add(meaning);
  }

  std::size_t size() const noexcept { return registry_.size(); }
  const BitRegistry& registry() const noexcept { return registry_; }

  void add_constant(double v) { offset_ += v; }

  void add_linear(std::size_t i, double v) { linear_.at(i) += v; }

  void add_quadratic(std::size_t i, std::size_t j, double v) {
    if (i == j) {
      add_linear(i, v);
      return;
    }
    if (i > j) std::swap(i, j);
    quadratic_[{i, j}] += v;
  }

  /// weight * (expr)^2 expanded into the polynomial.
  void add_squared(const LinearExpr& expr, double weight) {
    std::map<std::size_t, double> merged;
    for (const auto& [bit, coef] : expr.terms) merged[bit] += coef;
    const double c = expr.constant;
    add_constant(weight * c * c);
    for (auto it = merged.begin(); it != merged.end(); ++it) {
      const double a = it->second;
      add_linear(it->first, weight * (2.0 * c * a + a * a));
      for (auto jt = std::next(it); jt != merged.end(); ++jt) {
        add_quadratic(it->first, jt->first, weight * 2.0 * a * jt->second);
      }
    }
  }

  void add_penalty(PenaltyGroup group) {
    add_squared(group.expr, group.weight);
    penalties_.push_back(std::move(group));
  }

  void add_product(std::size_t w, std::size_t x, std::size_t y, double weight) {
    add_quadratic(x, y, weight);
    add_quadratic(x, w, -2.0 * weight);
    add_quadratic(y, w, -2.0 * weight);
    add_linear(w, 3.0 * weight);
    products_.push_back({w, x, y, weight});
  }

  QuboProblem build() && {
    QuboProblem q;
    q.n = registry_.size();
    q.linear = std::move(linear_);
    for (const auto& [key, v] : quadratic_) {
      if (v != 0.0) q.quadratic.push_back({key.first, key.second, v});
    }
    q.offset = offset_;
    q.registry = std::move(registry_);
    q.penalties = std::move(penalties_);
    q.products = std::move(products_);
    return q;
  }

 private:
  BitRegistry registry_;
  std::vector<double> linear_;
  std::map<std::pair<std::size_t, std::size_t>, double> quadratic_;
  double offset_ = 0.0;
  std::vector<PenaltyGroup> penalties_;
  std::vector<ProductGroup> products_;
};

/// Sum of all penalty groups at x; zero exactly when every encoded
/// constraint holds with consistent slack and product bits.
inline double penalty_energy(const QuboProblem& q, const BitVector& x) {
  double e = 0.0;
  for (const auto& g : q.penalties) {
    const double r = g.expr.eval(x);
    e += g.weight * r * r;
  }
  for (const auto& p : q.products) {
    const double xy = x[p.x] && x[p.y] ? 1.0 : 0.0;
    const double w = x[p.w];
    e += p.weight * (xy - 2.0 * x[p.x] * w - 2.0 * x[p.y] * w + 3.0 * w);
  }
  return e;
}

// ---------------------------------------------------------------------------
// Text dump:
//   n offset
//   i j q_ij          (one line per nonzero, i <= j)
//   bit meaning       (registry, e.g. "7 on 0 3 1")
// All reals use 17 significant digits.

inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string dump_qubo(const QuboProblem& q) {
  std::ostringstream out;
  out << q.n << ' ' << format_real(q.offset) << '\n';
  std::size_t k = 0;
  for (std::size_t i = 0; i < q.n; ++i) {
    if (q.linear[i] != 0.0) out << i << ' ' << i << ' ' << format_real(q.linear[i]) << '\n';
    for (; k < q.quadratic.size() && q.quadratic[k].i == i; ++k) {
      out << q.quadratic[k].i << ' ' << q.quadratic[k].j << ' ' << format_real(q.quadratic[k].q) << '\n';
    }
  }
  for (std::size_t b = 0; b < q.registry.size(); ++b) out << b << ' ' << to_string(q.registry[b]) << '\n';
  return out.str();
}

/// Parses the coefficient and registry lines of a dump. Penalty bookkeeping
/// is not part of the format and comes back empty.
inline QuboProblem parse_qubo(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  QuboBuilder builder;
  std::size_t n = 0;
  double offset = 0.0;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty QUBO dump");
  {
    std::istringstream head(line);
    if (!(head >> n >> offset)) throw Error(ErrorCode::ParseError, "bad QUBO header");
  }
  std::vector<std::pair<std::size_t, BitMeaning>> meanings;
  std::vector<QuadTerm> terms;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::size_t i = 0;
    std::string second;
    if (!(row >> i >> second)) throw Error(ErrorCode::ParseError, "bad QUBO line: " + line);
    if (std::isdigit(static_cast<unsigned char>(second[0]))) {
      double v = 0.0;
      if (!(row >> v)) throw Error(ErrorCode::ParseError, "bad QUBO term: " + line);
      terms.push_back({i, std::stoul(second), v});
      continue;
    }
    int a = 0, b = 0, k = 0;
    row >> a >> b;
    BitMeaning m;
    if (second == "u") m = BitMeaning::unit(a, b);
    else if (second == "and") m = BitMeaning::product(a, b);
    else if (second == "on" && row >> k) m = BitMeaning::slack_on(a, b, k);
    else if (second == "off" && row >> k) m = BitMeaning::slack_off(a, b, k);
    else if (second == "fea" && row >> k) m = BitMeaning::slack_fea(a, b, k);
    else throw Error(ErrorCode::ParseError, "bad registry line: " + line);
    meanings.emplace_back(i, m);
  }
  std::sort(meanings.begin(), meanings.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (std::size_t b = 0; b < meanings.size(); ++b) {
    if (meanings[b].first != b) throw Error(ErrorCode::ParseError, "registry is not dense");
    builder.add_bit(meanings[b].second);
  }
  // Plain QUBOs may come without a registry; register anonymous unit bits.
  for (std::size_t b = builder.size(); b < n; ++b) builder.add_bit(BitMeaning::unit(static_cast<int>(b), -1));
  if (builder.size() != n) throw Error(ErrorCode::ParseError, "registry size != n");
  builder.add_constant(offset);
  for (const auto& t : terms) {
    if (t.i >= n || t.j >= n) throw Error(ErrorCode::ParseError, "term index out of range");
    builder.add_quadratic(t.i, t.j, t.q);
  }
  return std::move(builder).build();
}

}  // namespace hqcgbda
