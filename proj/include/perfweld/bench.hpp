#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "perfweld/dataset.hpp"
#include "perfweld/model.hpp"
#include "perfweld/stencil_model.hpp"

namespace perfweld {

// Sweep description for the ground-truth stencil runner.
struct BenchPlan {
  struct Range {
    std::int64_t min = 0, max = 0, stride = 1;
    std::vector<std::int64_t> values() const;
  };

  Range grid_i, grid_j, grid_k;
  std::vector<std::array<std::int64_t, 3>> blocks;  // empty: unblocked
  std::vector<int> threads;                         // empty: serial, no t column
  std::int64_t timesteps = 1;
  int repetitions = 5;
  int warmup = 1;
  int order = 1;
  CachePolicy policy = CachePolicy::write_allocate;
  double c0 = 0.4, c1 = 0.1;

  void validate() const;
  DatasetSchema schema() const;
  // Cross product of the sweep; block triples that do not divide a grid
  // are dropped.
  std::vector<StencilConfig> points() const;

  nlohmann::json to_json() const;
  static BenchPlan from_json(const nlohmann::json& j);
};

BenchPlan load_bench_plan(const std::string& path);

// One Jacobi timestep of the order-l cross stencil: out = c0*in +
// c1 * (sum of the 6l axis neighbors), interior points only. Arrays are
// ii*jj*kk with a ghost layer of width l; i is the fastest dimension.
void stencil_step(const std::vector<double>& in, std::vector<double>& out, std::int64_t ii,
                  std::int64_t jj, std::int64_t kk, int order, double c0, double c1,
                  const std::optional<Blocking>& blocking, int threads);

// Median wall-clock seconds over `repetitions` runs of `timesteps` sweeps,
// after `warmup` unmeasured runs.
double time_stencil_point(const StencilConfig& cfg, std::int64_t timesteps, int repetitions,
                          int warmup, double c0, double c1);

// Executes the plan and emits a dataset in the plan's schema. Points whose
// measured time is not above the timer resolution are skipped with a note
// on `log` (when given).
Dataset run_stencil_bench(const BenchPlan& plan, std::ostream* log = nullptr);

// Multiplicative low-order polynomial in the standardized features,
// floored away from zero. Coefficients are keyed by feature name.
struct PerturbationSpec {
  double intercept = 1.0;
  std::vector<std::pair<std::string, double>> linear;
  std::vector<std::pair<std::string, double>> quadratic;
  double floor = 0.05;

  nlohmann::json to_json() const;
  static PerturbationSpec from_json(const nlohmann::json& j);
};

// Synthetic ground-truth oracle: analytical model times a smooth
// perturbation times seeded relative Gaussian noise.
struct SyntheticOracleSpec {
  AnalyticalConfig base;
  PerturbationSpec perturbation;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;

  nlohmann::json to_json() const;
  static SyntheticOracleSpec from_json(const nlohmann::json& j);
};

// response = analytical(x) * perturbation(x) * (1 + eps) with
// eps ~ N(0, sigma^2) drawn from the oracle seed, clamped positive.
// Deterministic per seed.
Dataset gen_synthetic(const DatasetSchema& schema,
                      const std::vector<std::vector<double>>& points,
                      const SyntheticOracleSpec& oracle);

// Grid specification for cmd_synth / recipes: per-feature value lists.
std::vector<std::vector<double>> cross_product(const std::vector<std::vector<double>>& axes);

// Parses {"<feature>": [v, ...] | {"min", "max", "stride"}, ...} into
// per-feature axes ordered as in the schema; every feature must be given.
std::vector<std::vector<double>> grid_axes_from_json(const nlohmann::json& grid,
                                                     const DatasetSchema& schema);

// Complete synthetic source: {"schema": {"features", "response"},
// "grid": ..., "analytical": ..., "perturbation": ..., "sigma", "seed"}.
Dataset gen_synthetic_from_json(const nlohmann::json& j);

// Exact element-access trace of one timestep of the naive kernel (2l+1
// planes read, one written per k iteration) mapped to cachelines of W
// elements and replayed through a fully associative LRU cache of
// `level.size_elements`. Array rows are padded to line multiples so each
// row starts on a line boundary. Write handling follows cfg.policy:
// write-allocate counts and allocates write misses; no-write-allocate
// writes bypass the cache (hits only refresh recency).
std::int64_t simulate_misses(const StencilConfig& cfg, const CacheLevel& level,
                             const MachineSpec& spec);

}  // namespace perfweld
