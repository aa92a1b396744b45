#include "perfweld/machine.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace perfweld {

void MachineSpec::validate() const {
  if (levels.empty()) throw std::invalid_argument("cache_levels must be non-empty");
  if (line_elements < 1) throw std::invalid_argument("W must be a positive integer");
  if (!(t_c > 0.0)) throw std::invalid_argument("t_c must be positive");
  if (!(beta_mem > 0.0)) throw std::invalid_argument("beta_mem must be positive");
  std::int64_t prev = 0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& lv = levels[i];
    if (lv.size_elements < line_elements)
      throw std::invalid_argument("cache level " + std::to_string(i + 1) +
                                  " size must be at least one cacheline (W elements)");
    if (lv.size_elements <= prev)
      throw std::invalid_argument("cache sizes must increase from L1 outward");
    if (!(lv.beta > 0.0))
      throw std::invalid_argument("cache level " + std::to_string(i + 1) +
                                  " beta must be positive");
    prev = lv.size_elements;
  }
}

json MachineSpec::to_json() const {
  json levels_j = json::array();
  for (const auto& lv : levels)
    levels_j.push_back({{"size_bytes", lv.size_elements * element_bytes}, {"beta", lv.beta}});
  return json{{"element_bytes", element_bytes},
              {"W", line_elements},
              {"t_c", t_c},
              {"beta_mem", beta_mem},
              {"cache_levels", levels_j}};
}

namespace {

const json& require_field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end())
    throw std::invalid_argument(std::string("machine spec: missing field \"") + name + "\"");
  return *it;
}

}  // namespace

MachineSpec MachineSpec::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("machine spec must be a JSON object");
  MachineSpec spec;
  spec.element_bytes = require_field(j, "element_bytes").get<int>();
  if (spec.element_bytes <= 0) throw std::invalid_argument("element_bytes must be positive");
  spec.line_elements = require_field(j, "W").get<int>();
  spec.t_c = require_field(j, "t_c").get<double>();
  spec.beta_mem = require_field(j, "beta_mem").get<double>();
  const json& levels_j = require_field(j, "cache_levels");
  if (!levels_j.is_array())
    throw std::invalid_argument("cache_levels must be an array ordered L1 outward");
  for (const auto& lv : levels_j) {
    CacheLevel level;
    level.size_elements = require_field(lv, "size_bytes").get<std::int64_t>() / spec.element_bytes;
    level.beta = require_field(lv, "beta").get<double>();
    spec.levels.push_back(level);
  }
  spec.validate();
  return spec;
}

MachineSpec load_machine_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open machine spec file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("machine spec " + path + ": " + e.what());
  }
  return MachineSpec::from_json(j);
}

}  // namespace perfweld
