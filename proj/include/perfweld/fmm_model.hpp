#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "perfweld/dataset.hpp"
#include "perfweld/machine.hpp"

namespace perfweld {

// One FMM run under a uniform particle distribution (full oct-tree):
// N particles, q particles per leaf cell, expansion order k. `threads` is
// a feature passthrough; the model is serial.
struct FmmConfig {
  std::int64_t n_particles = 0;  // N
  std::int64_t leaf_q = 0;       // q
  int order_k = 2;               // k
  int threads = 1;

  void validate() const;
};

struct FmmCostBreakdown {
  double t_flop_p2p = 0, t_mem_p2p = 0;
  double t_flop_m2l = 0, t_mem_m2l = 0;
  double t_p2p = 0, t_m2l = 0;  // per-phase max(flop, mem)
  double t_total = 0;           // t_p2p + t_m2l
};

// Near-field direct interactions: 27 q^2 per leaf cell, N/q cells.
double p2p_flop_time(const FmmConfig& cfg, const MachineSpec& spec);

// Far-field translations, Cartesian expansion: 189 k^6 per cell pair.
double m2l_flop_time(const FmmConfig& cfg, const MachineSpec& spec);

// Dominant P2P access cost; Z is the last cache level (elements), L = W.
double p2p_mem_time(const FmmConfig& cfg, const MachineSpec& spec);

// Dominant M2L access cost.
double m2l_mem_time(const FmmConfig& cfg, const MachineSpec& spec);

// Total: per-phase max of flop and memory cost, summed over P2P and M2L.
// Only those two phases are modeled; the others contribute zero.
std::pair<double, FmmCostBreakdown> fmm_time(const FmmConfig& cfg, const MachineSpec& spec);

// Builds an FmmConfig from a dataset row. Requires features N, q, k; reads
// t into threads when present.
FmmConfig fmm_config_from_row(const DatasetSchema& schema, std::span<const double> x);

}  // namespace perfweld
