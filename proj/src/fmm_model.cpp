#include "perfweld/fmm_model.hpp"

#include <cmath>
#include <stdexcept>

namespace perfweld {

void FmmConfig::validate() const {
  if (n_particles < 1) throw std::invalid_argument("N must be a positive integer");
  if (leaf_q < 1) throw std::invalid_argument("q must be a positive integer");
  if (leaf_q > n_particles) throw std::invalid_argument("q must not exceed N");
  if (order_k < 2) throw std::invalid_argument("k must be >= 2");
  if (threads < 1) throw std::invalid_argument("thread count must be >= 1");
}

namespace {

double pow6(double k) {
  const double k2 = k * k;
  return k2 * k2 * k2;
}

}  // namespace

double p2p_flop_time(const FmmConfig& cfg, const MachineSpec& spec) {
  cfg.validate();
  const double q = static_cast<double>(cfg.leaf_q);
  const double n = static_cast<double>(cfg.n_particles);
  return 27.0 * q * n * spec.t_c;
}

double m2l_flop_time(const FmmConfig& cfg, const MachineSpec& spec) {
  cfg.validate();
  const double n = static_cast<double>(cfg.n_particles);
  const double q = static_cast<double>(cfg.leaf_q);
  return 189.0 * (n * pow6(static_cast<double>(cfg.order_k)) / q) * spec.t_c;
}

double p2p_mem_time(const FmmConfig& cfg, const MachineSpec& spec) {
  cfg.validate();
  const double n = static_cast<double>(cfg.n_particles);
  const double q = static_cast<double>(cfg.leaf_q);
  const double line = static_cast<double>(spec.line_elements);
  const double z = static_cast<double>(spec.last_level().size_elements);
  const double z3 = std::cbrt(z);
  const double q23 = std::cbrt(q * q);
  return n * spec.beta_mem + (n * line / (z3 * q23)) * spec.beta_mem;
}

double m2l_mem_time(const FmmConfig& cfg, const MachineSpec& spec) {
  cfg.validate();
  const double n = static_cast<double>(cfg.n_particles);
  const double q = static_cast<double>(cfg.leaf_q);
  const double k = static_cast<double>(cfg.order_k);
  const double line = static_cast<double>(spec.line_elements);
  const double z3 = std::cbrt(static_cast<double>(spec.last_level().size_elements));
  return (n * pow6(k) / q) * spec.beta_mem + (n * k * k * line / (q * z3)) * spec.beta_mem;
}

std::pair<double, FmmCostBreakdown> fmm_time(const FmmConfig& cfg, const MachineSpec& spec) {
  spec.validate();
  FmmCostBreakdown bd;
  bd.t_flop_p2p = p2p_flop_time(cfg, spec);
  bd.t_mem_p2p = p2p_mem_time(cfg, spec);
  bd.t_flop_m2l = m2l_flop_time(cfg, spec);
  bd.t_mem_m2l = m2l_mem_time(cfg, spec);
  bd.t_p2p = std::max(bd.t_flop_p2p, bd.t_mem_p2p);
  bd.t_m2l = std::max(bd.t_flop_m2l, bd.t_mem_m2l);
  bd.t_total = bd.t_p2p + bd.t_m2l;
  return {bd.t_total, bd};
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

FmmConfig fmm_config_from_row(const DatasetSchema& schema, std::span<const double> x) {
  FmmConfig cfg;
  cfg.n_particles = integral_feature(schema, x, "N");
  cfg.leaf_q = integral_feature(schema, x, "q");
  cfg.order_k = static_cast<int>(integral_feature(schema, x, "k"));
  if (schema.has_feature("t"))
    cfg.threads = static_cast<int>(integral_feature(schema, x, "t"));
  cfg.validate();
  return cfg;
}

}  // namespace perfweld
