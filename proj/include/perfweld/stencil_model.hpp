#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "perfweld/dataset.hpp"
#include "perfweld/machine.hpp"

namespace perfweld {

enum class CachePolicy { write_allocate, no_write_allocate };

std::string to_string(CachePolicy p);
CachePolicy cache_policy_from_string(const std::string& s);

struct Blocking {
  std::int64_t ti = 0, tj = 0, tk = 0;
};

// One 3-D stencil run: interior grid I x J x K, cross stencil of order l
// (l = 1 is the 7-point stencil), optional spatial blocking. `threads` is
// carried for schema compatibility only; the model is serial.
struct StencilConfig {
  std::int64_t i = 0, j = 0, k = 0;
  int order = 1;  // l
  std::optional<Blocking> blocking;
  int threads = 1;
  CachePolicy policy = CachePolicy::write_allocate;

  void validate() const;  // positivity, block sizes divide dimensions
};

struct StencilLevelCost {
  double misses = 0;   // lines fetched from the next level, one timestep
  double hits = 0;     // transfers served by this level
  double nplanes = 0;  // planes refetched per k iteration
  double seconds = 0;  // time attributed to this level, one timestep
};

struct StencilCostBreakdown {
  std::vector<StencilLevelCost> levels;  // L1 outward
  double mem_seconds = 0;                // main-memory term, one timestep
  double s_total = 0;                    // plane working set, elements
  double seconds_per_timestep = 0;
  double total_seconds = 0;
};

// Effective model dimensions after the blocking reassignment. For blocked
// configs the padded tile dimensions replace the grid and the result is
// scaled by the tile count nb.
struct StencilModelDims {
  std::int64_t eff_i, eff_j, eff_k;  // written plane extents
  std::int64_t ii, jj, kk;           // extents including ghost points
  std::int64_t nb;                   // number of tiles (1 when unblocked)
  std::int64_t p_read, p_write;
  double s_read, s_write, s_total;
};

StencilModelDims stencil_model_dims(const StencilConfig& cfg, const MachineSpec& spec);

// Working set in elements to compute one Y-X plane (one k iteration).
double plane_traffic(const StencilConfig& cfg, const MachineSpec& spec);

// Planes refetched from the next level per k iteration at cache level
// `level_index`. Piecewise-linear in the cache size: pinned to
// 2*P_read-1, P_read, P_read-1, 1 at the four predicate boundaries and
// interpolated between them, so the value is continuous and monotone
// non-increasing in the cache size, always within [1, 2*P_read-1].
double nplanes(std::size_t level_index, const StencilConfig& cfg, const MachineSpec& spec);

// nplanes as a function of an arbitrary cache size (elements); used by the
// level overload and by sweep-based tests.
double nplanes_for_size(double size_elements, const StencilConfig& cfg, const MachineSpec& spec);

// Cacheline-granularity boundary sizes (elements) where the nplanes cases
// flip, ascending. Exposed for continuity checks.
std::vector<double> nplanes_boundaries(const StencilConfig& cfg, const MachineSpec& spec);

// Lines fetched from beyond level `level_index` during one timestep.
double stencil_misses(std::size_t level_index, const StencilConfig& cfg, const MachineSpec& spec);

// Level-0 reference for the first Hits term: all accesses at line
// granularity, (P_read + P_write) planes per k iteration.
double stencil_misses_l0(const StencilConfig& cfg, const MachineSpec& spec);

// Execution-time estimate over `timesteps` sweeps, with the per-level cost
// breakdown. Flop cost is omitted: the stencil is treated as memory bound.
std::pair<double, StencilCostBreakdown> stencil_time(const StencilConfig& cfg,
                                                     const MachineSpec& spec,
                                                     std::int64_t timesteps);

// Builds a StencilConfig from a dataset row. Requires features I, J, K;
// uses b_i, b_j, b_k as block sizes when all three are in the schema;
// reads t into threads when present; ignores u.
StencilConfig stencil_config_from_row(const DatasetSchema& schema, std::span<const double> x,
                                      int order, CachePolicy policy);

}  // namespace perfweld
