#include "perfweld/stencil_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace perfweld {

std::string to_string(CachePolicy p) {
  return p == CachePolicy::write_allocate ? "write-allocate" : "no-write-allocate";
}

CachePolicy cache_policy_from_string(const std::string& s) {
  if (s == "write-allocate" || s == "wa") return CachePolicy::write_allocate;
  if (s == "no-write-allocate" || s == "nwa") return CachePolicy::no_write_allocate;
  throw std::invalid_argument("unknown cache policy: " + s);
}

void StencilConfig::validate() const {
  if (i <= 0 || j <= 0 || k <= 0)
    throw std::invalid_argument("stencil grid dimensions must be positive");
  if (order < 1) throw std::invalid_argument("stencil order must be >= 1");
  if (threads < 1) throw std::invalid_argument("thread count must be >= 1");
  if (blocking) {
    const auto& b = *blocking;
    if (b.ti <= 0 || b.tj <= 0 || b.tk <= 0)
      throw std::invalid_argument("block sizes must be positive");
    if (b.ti > i || b.tj > j || b.tk > k)
      throw std::invalid_argument("block sizes must not exceed the grid dimensions");
    if (i % b.ti || j % b.tj || k % b.tk)
      throw std::invalid_argument("block sizes must divide the grid dimensions exactly");
  }
}

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace

StencilModelDims stencil_model_dims(const StencilConfig& cfg, const MachineSpec& spec) {
  cfg.validate();
  const std::int64_t l = cfg.order;
  const std::int64_t w = spec.line_elements;
  StencilModelDims d{};
  d.p_read = 2 * l + 1;
  d.p_write = 1;
  if (cfg.blocking) {
    const auto& b = *cfg.blocking;
    d.nb = (cfg.i / b.ti) * (cfg.j / b.tj) * (cfg.k / b.tk);
    d.eff_i = ceil_div(b.ti, w) * w;
    d.ii = ceil_div(b.ti + 2 * l, w) * w;
    d.eff_j = b.tj;
    d.jj = b.tj + 2 * l;
    d.eff_k = b.tk;
    d.kk = b.tk + 2 * l;
  } else {
    d.nb = 1;
    d.eff_i = cfg.i;
    d.eff_j = cfg.j;
    d.eff_k = cfg.k;
    d.ii = cfg.i + 2 * l;
    d.jj = cfg.j + 2 * l;
    d.kk = cfg.k + 2 * l;
  }
  d.s_read = static_cast<double>(d.ii) * static_cast<double>(d.jj);
  d.s_write = static_cast<double>(d.eff_i) * static_cast<double>(d.eff_j);
  d.s_total = cfg.policy == CachePolicy::write_allocate
                  ? static_cast<double>(d.p_read) * d.s_read + static_cast<double>(d.p_write) * d.s_write
                  : static_cast<double>(d.p_read) * d.s_read;
  return d;
}

double plane_traffic(const StencilConfig& cfg, const MachineSpec& spec) {
  return stencil_model_dims(cfg, spec).s_total;
}

namespace {

// Interpolation nodes (cache size in elements -> nplanes), ascending in
// size. The four sizes are where the case predicates R4, R3, R2, R1 flip;
// the pinned values are the printed interval endpoints. Coincident
// boundaries (possible when a plane degenerates, e.g. J = 1) collapse to
// the larger value so the function stays continuous and monotone.
struct NplanesNodes {
  std::vector<double> size;
  std::vector<double> value;
};

NplanesNodes nplanes_nodes(const StencilModelDims& d, const MachineSpec& spec) {
  const double w = static_cast<double>(spec.line_elements);
  const double p = static_cast<double>(d.p_read);
  const double r_col = p / (2.0 * p - 1.0);
  const double s_r4 = p * static_cast<double>(d.ii) * w / r_col;  // R4: size/W * R_col < P*II
  const double s_r3 = d.s_read * w / r_col;                       // R3: size/W * R_col > S_read
  const double s_r2 = d.s_total * w;                              // R2: size/W > S_total
  const double s_r1 = d.s_total * w / r_col;                      // R1: size/W * R_col >= S_total

  NplanesNodes nodes;
  const double raw_size[4] = {s_r4, s_r3, s_r2, s_r1};
  const double raw_value[4] = {2.0 * p - 1.0, p, p - 1.0, 1.0};
  for (int n = 0; n < 4; ++n) {
    if (!nodes.size.empty() && raw_size[n] <= nodes.size.back()) continue;
    nodes.size.push_back(raw_size[n]);
    nodes.value.push_back(raw_value[n]);
  }
  return nodes;
}

double nplanes_from_nodes(const NplanesNodes& nodes, double size_elements) {
  if (size_elements <= nodes.size.front()) return nodes.value.front();
  if (size_elements >= nodes.size.back()) return nodes.value.back();
  for (std::size_t n = 1; n < nodes.size.size(); ++n) {
    if (size_elements <= nodes.size[n]) {
      const double t = (size_elements - nodes.size[n - 1]) / (nodes.size[n] - nodes.size[n - 1]);
      return nodes.value[n - 1] + t * (nodes.value[n] - nodes.value[n - 1]);
    }
  }
  return nodes.value.back();
}

}  // namespace

double nplanes_for_size(double size_elements, const StencilConfig& cfg,
                        const MachineSpec& spec) {
  const StencilModelDims d = stencil_model_dims(cfg, spec);
  return nplanes_from_nodes(nplanes_nodes(d, spec), size_elements);
}

std::vector<double> nplanes_boundaries(const StencilConfig& cfg, const MachineSpec& spec) {
  const StencilModelDims d = stencil_model_dims(cfg, spec);
  return nplanes_nodes(d, spec).size;
}

double nplanes(std::size_t level_index, const StencilConfig& cfg, const MachineSpec& spec) {
  if (level_index >= spec.levels.size())
    throw std::invalid_argument("cache level index out of range");
  return nplanes_for_size(static_cast<double>(spec.levels[level_index].size_elements), cfg,
                          spec);
}

double stencil_misses(std::size_t level_index, const StencilConfig& cfg,
                      const MachineSpec& spec) {
  const StencilModelDims d = stencil_model_dims(cfg, spec);
  const double lines = static_cast<double>(ceil_div(d.ii, spec.line_elements));
  return lines * static_cast<double>(d.jj) * static_cast<double>(d.kk) *
         nplanes(level_index, cfg, spec) * static_cast<double>(d.nb);
}

double stencil_misses_l0(const StencilConfig& cfg, const MachineSpec& spec) {
  const StencilModelDims d = stencil_model_dims(cfg, spec);
  const double lines = static_cast<double>(ceil_div(d.ii, spec.line_elements));
  return lines * static_cast<double>(d.jj) * static_cast<double>(d.kk) *
         static_cast<double>(d.p_read + d.p_write) * static_cast<double>(d.nb);
}

std::pair<double, StencilCostBreakdown> stencil_time(const StencilConfig& cfg,
                                                     const MachineSpec& spec,
                                                     std::int64_t timesteps) {
  if (timesteps < 1) throw std::invalid_argument("timesteps must be >= 1");
  spec.validate();
  const StencilModelDims d = stencil_model_dims(cfg, spec);
  const double w = static_cast<double>(spec.line_elements);

  StencilCostBreakdown bd;
  bd.s_total = d.s_total;
  bd.levels.resize(spec.levels.size());

  double misses_prev = stencil_misses_l0(cfg, spec);
  double per_step = 0.0;
  for (std::size_t lv = 0; lv < spec.levels.size(); ++lv) {
    auto& out = bd.levels[lv];
    out.nplanes = nplanes(lv, cfg, spec);
    out.misses = stencil_misses(lv, cfg, spec);
    out.hits = std::max(0.0, misses_prev - out.misses);
    out.seconds = w * spec.levels[lv].beta * out.hits;
    per_step += out.seconds;
    misses_prev = out.misses;
  }
  bd.mem_seconds = w * spec.beta_mem * misses_prev;
  per_step += bd.mem_seconds;
  bd.seconds_per_timestep = per_step;
  bd.total_seconds = static_cast<double>(timesteps) * per_step;
  return {bd.total_seconds, bd};
}

namespace {

std::int64_t integral_feature(const DatasetSchema& schema, std::span<const double> x,
                              const std::string& name) {
  auto idx = schema.feature_index(name);
  if (!idx) throw std::invalid_argument("schema lacks required feature \"" + name + "\"");
  const double v = x[*idx];
  const double r = std::round(v);
  if (!(std::abs(v - r) < 1e-9) || r < 1.0)
    throw std::invalid_argument("feature " + name + " must be a positive integer, got " +
                                std::to_string(v));
  return static_cast<std::int64_t>(r);
}

}  // namespace

StencilConfig stencil_config_from_row(const DatasetSchema& schema, std::span<const double> x,
                                      int order, CachePolicy policy) {
  StencilConfig cfg;
  cfg.order = order;
  cfg.policy = policy;
  cfg.i = integral_feature(schema, x, "I");
  cfg.j = integral_feature(schema, x, "J");
  cfg.k = integral_feature(schema, x, "K");
  const bool bi = schema.has_feature("b_i");
  const bool bj = schema.has_feature("b_j");
  const bool bk = schema.has_feature("b_k");
  if (bi != bj || bj != bk)
    throw std::invalid_argument("blocking features b_i, b_j, b_k must appear together");
  if (bi) {
    Blocking b;
    b.ti = integral_feature(schema, x, "b_i");
    b.tj = integral_feature(schema, x, "b_j");
    b.tk = integral_feature(schema, x, "b_k");
    cfg.blocking = b;
  }
  if (schema.has_feature("t"))
    cfg.threads = static_cast<int>(integral_feature(schema, x, "t"));
  cfg.validate();
  return cfg;
}

}  // namespace perfweld
