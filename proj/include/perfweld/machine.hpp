#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace perfweld {

// One level of the cache hierarchy. Sizes are kept in grid elements, not
// bytes; the loader converts using the spec file's element_bytes.
struct CacheLevel {
  std::int64_t size_elements = 0;  // capacity, elements
  double beta = 0.0;               // seconds per element transferred from the next level
};

// Machine description parameterizing every analytical model.
struct MachineSpec {
  std::vector<CacheLevel> levels;  // ordered L1 outward, sizes strictly increasing
  double beta_mem = 0.0;           // seconds per element, main memory
  double t_c = 0.0;                // seconds per floating-point operation
  int line_elements = 1;           // W, elements per cacheline
  int element_bytes = 8;           // used only for byte<->element conversion on load/save

  const CacheLevel& last_level() const { return levels.back(); }

  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  nlohmann::json to_json() const;
  static MachineSpec from_json(const nlohmann::json& j);
};

MachineSpec load_machine_spec(const std::string& path);

}  // namespace perfweld
