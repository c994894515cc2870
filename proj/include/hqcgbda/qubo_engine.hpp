#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "hqcgbda/error.hpp"
#include "hqcgbda/qubo.hpp"

namespace hqcgbda {

// ---------------------------------------------------------------------------
// Ising form. Spins s in {-1, +1} map to bits by x = (1 - s) / 2, so the all
// up state is the all-zero bit vector.

struct IsingProblem {
  std::vector<double> h;
  std::vector<QuadTerm> j;  // i < j
  double offset = 0.0;

  double energy(const std::vector<int>& s) const {
    double e = offset;
    for (std::size_t i = 0; i < h.size(); ++i) e += h[i] * s[i];
    for (const auto& term : j) e += term.q * s[term.i] * s[term.j];
    return e;
  }
};

inline IsingProblem to_ising(const QuboProblem& q) {
  IsingProblem out;
  out.h.assign(q.n, 0.0);
  out.offset = q.offset;
  for (std::size_t i = 0; i < q.n; ++i) {
    out.h[i] -= 0.5 * q.linear[i];
    out.offset += 0.5 * q.linear[i];
  }
  for (const auto& t : q.quadratic) {
    const double quarter = 0.25 * t.q;
    out.j.push_back({t.i, t.j, quarter});
    out.h[t.i] -= quarter;
    out.h[t.j] -= quarter;
    out.offset += quarter;
  }
  return out;
}

inline std::vector<int> bits_to_spins(const BitVector& x) {
  std::vector<int> s(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) s[i] = x[i] ? -1 : 1;
  return s;
}

// ---------------------------------------------------------------------------

struct Sample {
  BitVector x;
  double energy = 0.0;
  int multiplicity = 1;
};

/// Samples ordered by (energy, x); `best` indexes the minimum.
struct SampleSet {
  std::vector<Sample> samples;
  std::size_t best = 0;

  const Sample& best_sample() const { return samples.at(best); }
};

inline bool sample_less(const Sample& a, const Sample& b) {
  if (a.energy != b.energy) return a.energy < b.energy;
  return std::lexicographical_compare(a.x.begin(), a.x.end(), b.x.begin(), b.x.end());
}

/// Merges duplicates, recomputes energies from q, and sorts.
inline SampleSet make_sample_set(const QuboProblem& q, std::vector<Sample> raw) {
  std::map<BitVector, int> counts;
  for (auto& s : raw) counts[s.x] += s.multiplicity;
  SampleSet out;
  for (auto& [x, m] : counts) out.samples.push_back({x, q.energy(x), m});
  std::sort(out.samples.begin(), out.samples.end(), sample_less);
  out.best = 0;
  return out;
}

// ---------------------------------------------------------------------------
// Exact minimisation.
//
// Bits registered as unit bits form the primary set; every other bit is
// grouped into connected components of the coupling graph restricted to
// non-primary bits. For a fixed primary assignment the components are
// independent, and each component's minimum depends only on the primary bits
// it couples to, so it is cached per assignment of those bits. Without a
// registry every bit is primary.

namespace detail {

struct Component {
  std::vector<std::size_t> bits;                 // global indices, ascending
  std::vector<std::size_t> touch;                // coupled primary positions
  std::vector<double> internal;                  // energy per local state
  // coupling[k]: (index into touch, q) for local bit k
  std::vector<std::vector<std::pair<std::size_t, double>>> coupling;
  std::vector<double> memo_energy;
  std::vector<std::uint32_t> memo_state;
  std::vector<std::uint8_t> memo_set;
};

inline std::uint32_t reverse_bits(std::uint32_t s, std::size_t k) {
  std::uint32_t r = 0;
  for (std::size_t b = 0; b < k; ++b) r |= ((s >> b) & 1U) << (k - 1 - b);
  return r;
}

// Minimum over local states for the given key (assignment of `touch`). Ties
// go to the state that is lexicographically smallest in global bit order.
inline std::pair<double, std::uint32_t> component_min(Component& c, std::size_t key) {
  if (!c.memo_set.empty() && c.memo_set[key]) return {c.memo_energy[key], c.memo_state[key]};
  const std::size_t k = c.bits.size();
  std::vector<double> field(k, 0.0);
  for (std::size_t b = 0; b < k; ++b) {
    for (const auto& [j, v] : c.coupling[b]) {
      if ((key >> j) & 1U) field[b] += v;
    }
  }
  double best = std::numeric_limits<double>::infinity();
  std::uint32_t best_s = 0;
  double lin = 0.0;
  std::uint32_t s = 0;
  for (std::uint32_t g = 0; g < c.internal.size(); ++g) {
    if (g > 0) {
      const auto bit = static_cast<std::size_t>(std::countr_zero(g));
      s ^= std::uint32_t{1} << bit;
      lin += ((s >> bit) & 1U) ? field[bit] : -field[bit];
    }
    const double e = c.internal[s] + lin;
    if (e < best || (e == best && reverse_bits(s, k) < reverse_bits(best_s, k))) {
      best = e;
      best_s = s;
    }
  }
  if (!c.memo_set.empty()) {
    c.memo_set[key] = 1;
    c.memo_energy[key] = best;
    c.memo_state[key] = best_s;
  }
  return {best, best_s};
}

struct ExactPlan {
  std::vector<std::size_t> primary;
  std::vector<std::vector<std::size_t>> components;
};

inline ExactPlan plan_exact(const QuboProblem& q) {
  ExactPlan plan;
  std::vector<std::uint8_t> is_primary(q.n, 0);
  const bool has_registry = q.registry.size() == q.n;
  for (std::size_t b = 0; b < q.n; ++b) {
    is_primary[b] = !has_registry || q.registry[b].kind == BitMeaning::Kind::Unit;
  }
  std::vector<std::size_t> parent(q.n);
  for (std::size_t b = 0; b < q.n; ++b) parent[b] = b;
  auto find = [&](std::size_t b) {
    while (parent[b] != b) b = parent[b] = parent[parent[b]];
    return b;
  };
  for (const auto& t : q.quadratic) {
    if (is_primary[t.i] || is_primary[t.j]) continue;
    parent[find(t.i)] = find(t.j);
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t b = 0; b < q.n; ++b) {
    if (is_primary[b]) plan.primary.push_back(b);
    else groups[find(b)].push_back(b);
  }
  for (auto& [root, bits] : groups) plan.components.push_back(std::move(bits));
  std::sort(plan.components.begin(), plan.components.end());
  return plan;
}

}  // namespace detail

inline constexpr std::size_t kMaxExhaustiveQuboBits = 24;
inline constexpr std::size_t kMaxComponentBits = 20;

/// Global minimum (num_reads = 1) or the num_reads lowest-energy samples with
/// at most one sample per primary-bit assignment. Ties go to the
/// lexicographically smallest bit vector.
inline SampleSet solve_exhaustive(const QuboProblem& q, std::size_t num_reads = 1) {
  num_reads = std::max<std::size_t>(num_reads, 1);
  auto plan = detail::plan_exact(q);
  const bool decomposed_ok = plan.primary.size() <= kMaxExhaustiveQuboBits &&
                             std::all_of(plan.components.begin(), plan.components.end(),
                                         [](const auto& c) { return c.size() <= kMaxComponentBits; });
  if (!decomposed_ok) {
    if (q.n > kMaxExhaustiveQuboBits) {
      throw Error(ErrorCode::TooLarge, std::to_string(q.n) + " bits exceed exhaustive limit");
    }
    plan.primary.resize(q.n);
    for (std::size_t b = 0; b < q.n; ++b) plan.primary[b] = b;
    plan.components.clear();
  }

  const std::size_t np = plan.primary.size();
  std::vector<int> comp_of(q.n, -1), pos_in_comp(q.n, -1), primary_pos(q.n, -1);
  for (std::size_t k = 0; k < np; ++k) primary_pos[plan.primary[k]] = static_cast<int>(k);
  std::vector<detail::Component> comps(plan.components.size());
  for (std::size_t c = 0; c < comps.size(); ++c) {
    comps[c].bits = plan.components[c];
    comps[c].coupling.resize(comps[c].bits.size());
    for (std::size_t k = 0; k < comps[c].bits.size(); ++k) {
      comp_of[comps[c].bits[k]] = static_cast<int>(c);
      pos_in_comp[comps[c].bits[k]] = static_cast<int>(k);
    }
  }

  std::vector<std::vector<std::pair<std::size_t, double>>> pp(np);
  std::vector<std::vector<std::vector<std::pair<std::size_t, double>>>> inner(comps.size());
  for (std::size_t c = 0; c < comps.size(); ++c) inner[c].resize(comps[c].bits.size());
  // touch_index[c][primary position] -> slot in comps[c].touch
  std::vector<std::map<std::size_t, std::size_t>> touch_index(comps.size());
  auto touch_slot = [&](std::size_t c, std::size_t p) {
    auto [it, fresh] = touch_index[c].emplace(p, comps[c].touch.size());
    if (fresh) comps[c].touch.push_back(p);
    return it->second;
  };
  for (const auto& t : q.quadratic) {
    const int pi = primary_pos[t.i], pj = primary_pos[t.j];
    if (pi >= 0 && pj >= 0) {
      pp[pi].emplace_back(pj, t.q);
      pp[pj].emplace_back(pi, t.q);
    } else if (pi >= 0 || pj >= 0) {
      const std::size_t p = static_cast<std::size_t>(pi >= 0 ? pi : pj);
      const std::size_t other = pi >= 0 ? t.j : t.i;
      const auto c = static_cast<std::size_t>(comp_of[other]);
      comps[c].coupling[pos_in_comp[other]].emplace_back(touch_slot(c, p), t.q);
    } else {
      const auto c = static_cast<std::size_t>(comp_of[t.i]);
      inner[c][pos_in_comp[t.i]].emplace_back(pos_in_comp[t.j], t.q);
      inner[c][pos_in_comp[t.j]].emplace_back(pos_in_comp[t.i], t.q);
    }
  }
  // primary position -> (component, slot) pairs it feeds
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> feeds(np);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    auto& comp = comps[c];
    for (std::size_t s = 0; s < comp.touch.size(); ++s) feeds[comp.touch[s]].emplace_back(c, s);
    const std::size_t k = comp.bits.size();
    comp.internal.assign(std::size_t{1} << k, 0.0);
    for (std::size_t s = 1; s < comp.internal.size(); ++s) {
      const auto low = static_cast<std::size_t>(std::countr_zero(s));
      const std::size_t prev = s & (s - 1);
      double add = q.linear[comp.bits[low]];
      for (const auto& [other, v] : inner[c][low]) {
        if ((prev >> other) & 1U) add += v;
      }
      comp.internal[s] = comp.internal[prev] + add;
    }
    if (comp.touch.size() <= 20) {
      const std::size_t slots = std::size_t{1} << comp.touch.size();
      comp.memo_set.assign(slots, 0);
      comp.memo_energy.assign(slots, 0.0);
      comp.memo_state.assign(slots, 0);
    }
  }

  BitVector xp(np, 0);
  std::vector<std::size_t> key(comps.size(), 0);
  double primary_energy = 0.0;
  auto resync = [&] {
    primary_energy = 0.0;
    for (std::size_t a = 0; a < np; ++a) {
      if (!xp[a]) continue;
      primary_energy += q.linear[plan.primary[a]];
      for (const auto& [b, v] : pp[a]) {
        if (b > a && xp[b]) primary_energy += v;
      }
    }
  };

  struct Candidate {
    double energy;
    BitVector x;
  };
  auto worse = [](const Candidate& a, const Candidate& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    return std::lexicographical_compare(a.x.begin(), a.x.end(), b.x.begin(), b.x.end());
  };
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(worse)> heap(worse);
  std::vector<std::uint32_t> comp_state(comps.size(), 0);

  const std::uint64_t total = std::uint64_t{1} << np;
  for (std::uint64_t step = 0; step < total; ++step) {
    if (step > 0) {
      const auto a = static_cast<std::size_t>(std::countr_zero(step));
      xp[a] ^= 1U;
      for (const auto& [c, s] : feeds[a]) key[c] ^= std::size_t{1} << s;
      if ((step & 0xFFF) == 0) {
        resync();
      } else {
        double delta = q.linear[plan.primary[a]];
        for (const auto& [b, v] : pp[a]) {
          if (xp[b]) delta += v;
        }
        primary_energy += xp[a] ? delta : -delta;
      }
    }
    double energy = q.offset + primary_energy;
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const auto [e, s] = detail::component_min(comps[c], key[c]);
      energy += e;
      comp_state[c] = s;
    }
    if (heap.size() >= num_reads && energy > heap.top().energy) continue;
    Candidate cand{energy, BitVector(q.n, 0)};
    for (std::size_t a = 0; a < np; ++a) cand.x[plan.primary[a]] = xp[a];
    for (std::size_t c = 0; c < comps.size(); ++c) {
      for (std::size_t k = 0; k < comps[c].bits.size(); ++k) cand.x[comps[c].bits[k]] = (comp_state[c] >> k) & 1U;
    }
    if (heap.size() < num_reads) {
      heap.push(std::move(cand));
    } else if (worse(cand, heap.top())) {
      heap.pop();
      heap.push(std::move(cand));
    }
  }

  std::vector<Sample> raw;
  while (!heap.empty()) {
    raw.push_back({heap.top().x, 0.0, 1});
    heap.pop();
  }
  return make_sample_set(q, std::move(raw));
}

// ---------------------------------------------------------------------------
// Simulated annealing

struct SamplerParams {
  int sweeps = 0;  // 0 selects 100 * n
  int restarts = 10;
  double beta_start = 0.1;
  double beta_end = 10.0;
  std::uint64_t seed = 0;
};

struct AnnealDiagnostics {
  double max_energy_drift = 0.0;  // |tracked - recomputed| at restart ends
};

inline void check_params(const SamplerParams& p) {
  if (p.sweeps < 0 || p.restarts < 1 || !(p.beta_start > 0.0) || !(p.beta_start < p.beta_end)) {
    throw Error(ErrorCode::InvalidParameter, "sampler parameters out of range");
  }
}

/// Metropolis single-flip annealing over a geometric inverse-temperature
/// schedule. Restart r draws from its own stream seeded with seed ^ r and
/// contributes its best state; the result does not depend on run order.
inline SampleSet solve_sa(const QuboProblem& q, const SamplerParams& params, AnnealDiagnostics* diag = nullptr) {
  check_params(params);
  const std::size_t n = q.n;
  if (n == 0) return make_sample_set(q, {{BitVector{}, 0.0, params.restarts}});
  const int sweeps = params.sweeps > 0 ? params.sweeps : static_cast<int>(100 * n);

  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const auto& t : q.quadratic) {
    adj[t.i].emplace_back(t.j, t.q);
    adj[t.j].emplace_back(t.i, t.q);
  }
  const double ratio = sweeps > 1 ? std::pow(params.beta_end / params.beta_start, 1.0 / (sweeps - 1)) : 1.0;

  std::vector<Sample> raw;
  for (int r = 0; r < params.restarts; ++r) {
    std::mt19937_64 rng(params.seed ^ static_cast<std::uint64_t>(r));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    BitVector x(n);
    for (auto& b : x) b = (rng() >> 11) & 1U;
    // field[i]: energy change from switching bit i on, given the others.
    std::vector<double> field(q.linear.begin(), q.linear.end());
    for (const auto& t : q.quadratic) {
      if (x[t.j]) field[t.i] += t.q;
      if (x[t.i]) field[t.j] += t.q;
    }
    double energy = q.energy(x);
    double best_energy = energy;
    BitVector best = x;
    double beta = params.beta_start;
    for (int sweep = 0; sweep < sweeps; ++sweep, beta *= ratio) {
      for (std::size_t i = 0; i < n; ++i) {
        const double delta = x[i] ? -field[i] : field[i];
        if (delta > 0.0 && unit(rng) >= std::exp(-beta * delta)) continue;
        x[i] ^= 1U;
        energy += delta;
        const double sign = x[i] ? 1.0 : -1.0;
        for (const auto& [j, v] : adj[i]) field[j] += sign * v;
        if (energy < best_energy) {
          best_energy = energy;
          best = x;
        }
      }
    }
    if (diag) {
      diag->max_energy_drift = std::max(diag->max_energy_drift, std::abs(energy - q.energy(x)));
    }
    raw.push_back({std::move(best), best_energy, 1});
  }
  return make_sample_set(q, std::move(raw));
}

// ---------------------------------------------------------------------------
// Sampler backends.
//
// Remote adapters speak plain text. Request: "num_reads R", "time_budget_ms
// B", then the QUBO dump. Response: one line per sample,
// "energy multiplicity bitstring" with bit 0 first.

struct SampleRequest {
  int num_reads = 1;
  int time_budget_ms = 0;
};

class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual SampleSet sample(const QuboProblem& q, const SampleRequest& req) = 0;
  virtual std::string name() const = 0;
};

class ExhaustiveSampler final : public Sampler {
 public:
  SampleSet sample(const QuboProblem& q, const SampleRequest& req) override {
    return solve_exhaustive(q, static_cast<std::size_t>(std::max(1, req.num_reads)));
  }
  std::string name() const override { return "exhaustive"; }
};

class AnnealingSampler final : public Sampler {
 public:
  explicit AnnealingSampler(SamplerParams params) : params_(params) {}

  SampleSet sample(const QuboProblem& q, const SampleRequest& req) override {
    auto p = params_;
    p.restarts = std::max(p.restarts, req.num_reads);
    return solve_sa(q, p);
  }
  std::string name() const override { return "sa"; }

 private:
  SamplerParams params_;
};

inline std::string format_request(const QuboProblem& q, const SampleRequest& req) {
  return "num_reads " + std::to_string(req.num_reads) + "\ntime_budget_ms " + std::to_string(req.time_budget_ms) +
         "\n" + dump_qubo(q);
}

inline std::pair<QuboProblem, SampleRequest> parse_request(const std::string& text) {
  std::istringstream in(text);
  SampleRequest req;
  std::string key;
  std::string line;
  for (int k = 0; k < 2; ++k) {
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "truncated sampler request");
    std::istringstream row(line);
    int v = 0;
    if (!(row >> key >> v)) throw Error(ErrorCode::ParseError, "bad request header: " + line);
    if (key == "num_reads") req.num_reads = v;
    else if (key == "time_budget_ms") req.time_budget_ms = v;
    else throw Error(ErrorCode::ParseError, "unknown request key " + key);
  }
  std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return {parse_qubo(rest), req};
}

inline std::string format_response(const SampleSet& set) {
  std::string out;
  for (const auto& s : set.samples) {
    out += format_real(s.energy) + " " + std::to_string(s.multiplicity) + " ";
    for (auto b : s.x) out += b ? '1' : '0';
    out += '\n';
  }
  return out;
}

/// Parses a response; energies are recomputed from q.
inline SampleSet parse_response(const std::string& text, const QuboProblem& q) {
  std::istringstream in(text);
  std::string line;
  std::vector<Sample> raw;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Sample s;
    std::string bits;
    if (!(row >> s.energy >> s.multiplicity >> bits)) throw Error(ErrorCode::ParseError, "bad response line: " + line);
    if (bits.size() != q.n) throw Error(ErrorCode::LengthMismatch, "response bitstring length != n");
    s.x.resize(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) s.x[i] = bits[i] == '1';
    raw.push_back(std::move(s));
  }
  if (raw.empty()) throw Error(ErrorCode::ParseError, "empty sampler response");
  return make_sample_set(q, std::move(raw));
}

/// Runs an external command as the backend: the request is written to a
/// temporary file whose path is appended to the command line, and the
/// response is read from the command's stdout.
class ProcessSampler final : public Sampler {
 public:
  explicit ProcessSampler(std::string command) : command_(std::move(command)) {}

  SampleSet sample(const QuboProblem& q, const SampleRequest& req) override {
    namespace fs = std::filesystem;
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    const std::string file =
        "hqcgbda_request_" + std::to_string(::getpid()) + "_" + std::to_string(stamp) + ".txt";
    const fs::path path = fs::temp_directory_path() / file;
    {
      std::ofstream out(path, std::ios::binary);
      if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
      out << format_request(q, req);
    }
    const std::string cmd = command_ + " '" + path.string() + "'";
    std::string response;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
      fs::remove(path);
      throw Error(ErrorCode::IoError, "cannot start sampler: " + command_);
    }
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) response.append(buf, got);
    const int status = pclose(pipe);
    std::error_code ec;
    fs::remove(path, ec);
    if (status != 0) throw Error(ErrorCode::IoError, "sampler command failed: " + command_);
    return parse_response(response, q);
  }

  std::string name() const override { return "process"; }

 private:
  std::string command_;
};

}  // namespace hqcgbda
