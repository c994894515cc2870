#pragma once

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hqcgbda/error.hpp"
#include "hqcgbda/orchestrator.hpp"
#include "hqcgbda/qubo.hpp"

namespace hqcgbda {

// Trace CSV:
//   e,ub,lb,gap,cuts_opt,cuts_feas,qubo_bits,ms_sub,ms_master
//   one row per iteration
//   # status=..., # cost=..., # iterations=..., # total_ms=...
// Reals use %.17g; unbounded values print as inf / -inf. Timing columns are
// zero unless wall_clock is set, so repeated runs export identical files.

inline constexpr const char* kTraceHeader = "e,ub,lb,gap,cuts_opt,cuts_feas,qubo_bits,ms_sub,ms_master";

inline std::string trace_csv(const SolveReport& rep, bool wall_clock = false) {
  std::ostringstream out;
  out << kTraceHeader << '\n';
  for (const auto& r : rep.trace) {
    out << r.e << ',' << format_real(r.ub) << ',' << format_real(r.lb) << ',' << format_real(r.gap) << ','
        << r.cuts_opt << ',' << r.cuts_feas << ',' << r.qubo_bits << ','
        << format_real(wall_clock ? r.ms_sub : 0.0) << ',' << format_real(wall_clock ? r.ms_master : 0.0) << '\n';
  }
  out << "# status=" << to_string(rep.status) << '\n';
  out << "# cost=" << format_real(rep.cost) << '\n';
  out << "# iterations=" << rep.iterations() << '\n';
  out << "# total_ms=" << format_real(wall_clock ? rep.total_ms : 0.0) << '\n';
  return out.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void export_trace(const SolveReport& rep, const std::string& path, bool wall_clock = false) {
  write_text(path, trace_csv(rep, wall_clock));
}

struct ParsedTrace {
  std::vector<IterationRecord> rows;
  std::map<std::string, std::string> summary;
};

inline ParsedTrace parse_trace(const std::string& text) {
  ParsedTrace out;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw Error(ErrorCode::ParseError, "missing trace header");
  auto real = [](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw Error(ErrorCode::ParseError, "bad number '" + s + "'");
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::ParseError, "bad summary line: " + line);
      out.summary[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9) throw Error(ErrorCode::ParseError, "trace row needs 9 fields: " + line);
    IterationRecord r;
    r.e = static_cast<int>(real(cells[0]));
    r.ub = real(cells[1]);
    r.lb = real(cells[2]);
    r.gap = real(cells[3]);
    r.cuts_opt = static_cast<std::size_t>(real(cells[4]));
    r.cuts_feas = static_cast<std::size_t>(real(cells[5]));
    r.qubo_bits = static_cast<std::size_t>(real(cells[6]));
    r.ms_sub = real(cells[7]);
    r.ms_master = real(cells[8]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report JSON, the input of the `trace` subcommand. Non-finite reals are
// stored as the strings "inf" and "-inf".

namespace detail {

inline nlohmann::json real_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double real_from_json(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw Error(ErrorCode::ParseError, "bad real " + s);
}

template <class T>
nlohmann::json matrix_json(const Matrix<T>& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t t = 0; t < m.cols(); ++t) row.push_back(m(i, t));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class T>
Matrix<T> matrix_from_json(const nlohmann::json& j) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j.at(0).size() : 0;
  Matrix<T> m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j.at(i).size() != cols) throw Error(ErrorCode::ParseError, "ragged matrix");
    for (std::size_t t = 0; t < cols; ++t) m(i, t) = j.at(i).at(t).get<T>();
  }
  return m;
}

}  // namespace detail

inline nlohmann::json report_to_json(const SolveReport& rep) {
  nlohmann::json j;
  j["status"] = to_string(rep.status);
  j["mode"] = to_string(rep.mode);
  j["cost"] = detail::real_json(rep.cost);
  j["ub"] = detail::real_json(rep.ub);
  j["lb"] = detail::real_json(rep.lb);
  j["total_ms"] = rep.total_ms;
  j["u"] = detail::matrix_json(rep.u);
  j["p"] = detail::matrix_json(rep.p);
  j["trace"] = nlohmann::json::array();
  for (const auto& r : rep.trace) {
    auto status = nlohmann::json::array();
    for (auto s : r.mg_status) status.push_back(s == SubproblemStatus::Optimal ? "optimal" : "infeasible");
    j["trace"].push_back({{"e", r.e},
                          {"ub", detail::real_json(r.ub)},
                          {"lb", detail::real_json(r.lb)},
                          {"gap", detail::real_json(r.gap)},
                          {"mg_status", status},
                          {"cuts_opt", r.cuts_opt},
                          {"cuts_feas", r.cuts_feas},
                          {"qubo_bits", r.qubo_bits},
                          {"ms_sub", r.ms_sub},
                          {"ms_master", r.ms_master}});
  }
  return j;
}

/// Restores everything but the cut pool and the visited schedules.
inline SolveReport report_from_json(const nlohmann::json& j) {
  try {
    SolveReport rep;
    rep.status = parse_status(j.at("status").get<std::string>());
    rep.mode = parse_mode(j.at("mode").get<std::string>());
    rep.cost = detail::real_from_json(j.at("cost"));
    rep.ub = detail::real_from_json(j.at("ub"));
    rep.lb = detail::real_from_json(j.at("lb"));
    rep.total_ms = j.value("total_ms", 0.0);
    rep.u = detail::matrix_from_json<std::uint8_t>(j.at("u"));
    rep.p = detail::matrix_from_json<double>(j.at("p"));
    for (const auto& jr : j.at("trace")) {
      IterationRecord r;
      r.e = jr.at("e").get<int>();
      r.ub = detail::real_from_json(jr.at("ub"));
      r.lb = detail::real_from_json(jr.at("lb"));
      r.gap = detail::real_from_json(jr.at("gap"));
      for (const auto& s : jr.at("mg_status")) {
        r.mg_status.push_back(s.get<std::string>() == "optimal" ? SubproblemStatus::Optimal
                                                                : SubproblemStatus::Infeasible);
      }
      r.cuts_opt = jr.at("cuts_opt").get<std::size_t>();
      r.cuts_feas = jr.at("cuts_feas").get<std::size_t>();
      r.qubo_bits = jr.at("qubo_bits").get<std::size_t>();
      r.ms_sub = jr.at("ms_sub").get<double>();
      r.ms_master = jr.at("ms_master").get<double>();
      rep.trace.push_back(std::move(r));
    }
    return rep;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("report: ") + e.what());
  }
}

}  // namespace hqcgbda
