#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "hqcgbda/error.hpp"
#include "hqcgbda/uc_model.hpp"

namespace hqcgbda {

// Instance files are JSON:
//   {"horizon_t": T,
//    "microgrids": [{"id": k, "demand": [...],
//                    "units": [{"a","b","c","d","p_min","p_max","t_on","t_off",
//                               "init_on", "init_duration"}]}]}
// init_on defaults to false and init_duration to t_off. Everything else is
// required.

inline Instance instance_from_json(const nlohmann::json& j) {
  try {
    Instance inst;
    inst.horizon_t = j.at("horizon_t").get<int>();
    for (const auto& jm : j.at("microgrids")) {
      Microgrid mg;
      mg.id = jm.at("id").get<int>();
      mg.demand = jm.at("demand").get<std::vector<double>>();
      for (const auto& ju : jm.at("units")) {
        UnitParams u;
        u.a = ju.at("a").get<double>();
        u.b = ju.at("b").get<double>();
        u.c = ju.at("c").get<double>();
        u.d = ju.at("d").get<double>();
        u.p_min = ju.at("p_min").get<double>();
        u.p_max = ju.at("p_max").get<double>();
        u.t_on = ju.at("t_on").get<int>();
        u.t_off = ju.at("t_off").get<int>();
        InitialState init;
        init.was_on = ju.value("init_on", false);
        init.duration = ju.value("init_duration", u.t_off);
        mg.units.push_back(u);
        inst.initial_state.push_back(init);
      }
      inst.microgrids.push_back(std::move(mg));
    }
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("instance: ") + e.what());
  }
}

inline nlohmann::json instance_to_json(const Instance& inst) {
  nlohmann::json j;
  j["horizon_t"] = inst.horizon_t;
  j["microgrids"] = nlohmann::json::array();
  std::size_t g = 0;
  for (const auto& mg : inst.microgrids) {
    nlohmann::json jm;
    jm["id"] = mg.id;
    jm["demand"] = mg.demand;
    jm["units"] = nlohmann::json::array();
    for (const auto& u : mg.units) {
      const auto& init = inst.initial_state.at(g++);
      jm["units"].push_back({{"a", u.a},
                             {"b", u.b},
                             {"c", u.c},
                             {"d", u.d},
                             {"p_min", u.p_min},
                             {"p_max", u.p_max},
                             {"t_on", u.t_on},
                             {"t_off", u.t_off},
                             {"init_on", init.was_on},
                             {"init_duration", init.duration}});
    }
    j["microgrids"].push_back(std::move(jm));
  }
  return j;
}

inline Instance read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return instance_from_json(j);
}

inline std::string instance_to_string(const Instance& inst) { return instance_to_json(inst).dump(2) + "\n"; }

inline void write_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << instance_to_string(inst);
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

}  // namespace hqcgbda
