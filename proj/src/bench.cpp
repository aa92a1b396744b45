#include "perfweld/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <list>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "perfweld/rng.hpp"

using nlohmann::json;

namespace perfweld {

// ---------------------------------------------------------------------------
// BenchPlan

std::vector<std::int64_t> BenchPlan::Range::values() const {
  std::vector<std::int64_t> out;
  for (std::int64_t v = min; v <= max; v += stride) out.push_back(v);
  return out;
}

void BenchPlan::validate() const {
  auto check_range = [](const Range& r, const char* name) {
    if (r.min < 1 || r.max < r.min || r.stride < 1)
      throw std::invalid_argument(std::string("bench plan: bad range for ") + name);
  };
  check_range(grid_i, "I");
  check_range(grid_j, "J");
  check_range(grid_k, "K");
  if (repetitions < 1) throw std::invalid_argument("bench plan: repetitions must be >= 1");
  if (warmup < 0) throw std::invalid_argument("bench plan: warmup must be >= 0");
  if (timesteps < 1) throw std::invalid_argument("bench plan: timesteps must be >= 1");
  if (order < 1) throw std::invalid_argument("bench plan: order must be >= 1");
  for (const auto& b : blocks)
    if (b[0] < 1 || b[1] < 1 || b[2] < 1)
      throw std::invalid_argument("bench plan: block sizes must be positive");
  for (int t : threads)
    if (t < 1) throw std::invalid_argument("bench plan: thread counts must be >= 1");
  if (points().empty())
    throw std::invalid_argument("bench plan: sweep contains no valid points");
}

DatasetSchema BenchPlan::schema() const {
  return stencil_schema(!blocks.empty(), /*unroll=*/false, !threads.empty());
}

std::vector<StencilConfig> BenchPlan::points() const {
  std::vector<StencilConfig> out;
  const std::vector<int> thread_list = threads.empty() ? std::vector<int>{1} : threads;
  for (std::int64_t i : grid_i.values())
    for (std::int64_t j : grid_j.values())
      for (std::int64_t k : grid_k.values()) {
        auto emit = [&](const std::optional<Blocking>& blocking) {
          for (int t : thread_list) {
            StencilConfig cfg;
            cfg.i = i;
            cfg.j = j;
            cfg.k = k;
            cfg.order = order;
            cfg.blocking = blocking;
            cfg.threads = t;
            cfg.policy = policy;
            out.push_back(cfg);
          }
        };
        if (blocks.empty()) {
          emit(std::nullopt);
        } else {
          for (const auto& b : blocks) {
            if (b[0] > i || b[1] > j || b[2] > k) continue;
            if (i % b[0] || j % b[1] || k % b[2]) continue;  // must divide exactly
            emit(Blocking{b[0], b[1], b[2]});
          }
        }
      }
  return out;
}

namespace {

BenchPlan::Range range_from_json(const json& j, const char* name) {
  if (!j.contains(name))
    throw std::invalid_argument(std::string("bench plan: missing grid range ") + name);
  const json& r = j.at(name);
  BenchPlan::Range out;
  if (!r.is_object())
    throw std::invalid_argument(std::string("bench plan: grid ") + name +
                                " must be {min,max,stride}");
  out.min = r.at("min").get<std::int64_t>();
  out.max = r.at("max").get<std::int64_t>();
  out.stride = r.value("stride", std::int64_t{1});
  return out;
}

}  // namespace

json BenchPlan::to_json() const {
  json j;
  j["grid"] = {{"I", {{"min", grid_i.min}, {"max", grid_i.max}, {"stride", grid_i.stride}}},
               {"J", {{"min", grid_j.min}, {"max", grid_j.max}, {"stride", grid_j.stride}}},
               {"K", {{"min", grid_k.min}, {"max", grid_k.max}, {"stride", grid_k.stride}}}};
  if (!blocks.empty()) {
    json b = json::array();
    for (const auto& blk : blocks) b.push_back({blk[0], blk[1], blk[2]});
    j["blocks"] = std::move(b);
  }
  if (!threads.empty()) j["threads"] = threads;
  j["timesteps"] = timesteps;
  j["repetitions"] = repetitions;
  j["warmup"] = warmup;
  j["order"] = order;
  j["cache_policy"] = to_string(policy);
  j["c0"] = c0;
  j["c1"] = c1;
  return j;
}

BenchPlan BenchPlan::from_json(const json& j) {
  BenchPlan plan;
  const json& grid = j.at("grid");
  plan.grid_i = range_from_json(grid, "I");
  plan.grid_j = range_from_json(grid, "J");
  plan.grid_k = range_from_json(grid, "K");
  if (j.contains("blocks")) {
    for (const auto& b : j.at("blocks")) {
      if (!b.is_array() || b.size() != 3)
        throw std::invalid_argument("bench plan: each block must be [ti, tj, tk]");
      plan.blocks.push_back({b.at(0).get<std::int64_t>(), b.at(1).get<std::int64_t>(),
                             b.at(2).get<std::int64_t>()});
    }
  }
  if (j.contains("threads")) plan.threads = j.at("threads").get<std::vector<int>>();
  plan.timesteps = j.value("timesteps", std::int64_t{1});
  plan.repetitions = j.value("repetitions", 5);
  plan.warmup = j.value("warmup", 1);
  plan.order = j.value("order", 1);
  if (j.contains("cache_policy"))
    plan.policy = cache_policy_from_string(j.at("cache_policy").get<std::string>());
  plan.c0 = j.value("c0", 0.4);
  plan.c1 = j.value("c1", 0.1);
  plan.validate();
  return plan;
}

BenchPlan load_bench_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bench plan: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("bench plan " + path + ": " + e.what());
  }
  return BenchPlan::from_json(j);
}

// ---------------------------------------------------------------------------
// Kernel

namespace {

// Update of one k-slab [k_begin, k_end) of interior points.
void step_slab(const double* in, double* out, std::int64_t ii, std::int64_t jj, int order,
               double c0, double c1, std::int64_t k_begin, std::int64_t k_end,
               std::int64_t j_begin, std::int64_t j_end, std::int64_t i_begin,
               std::int64_t i_end) {
  const std::int64_t plane = ii * jj;
  for (std::int64_t k = k_begin; k < k_end; ++k)
    for (std::int64_t j = j_begin; j < j_end; ++j) {
      const std::int64_t base = k * plane + j * ii;
      for (std::int64_t i = i_begin; i < i_end; ++i) {
        const std::int64_t c = base + i;
        double acc = 0.0;
        for (int d = 1; d <= order; ++d)
          acc += in[c - d] + in[c + d] + in[c - d * ii] + in[c + d * ii] +
                 in[c - d * plane] + in[c + d * plane];
        out[c] = c0 * in[c] + c1 * acc;
      }
    }
}

struct KRange {
  std::int64_t begin, end;
};

std::vector<KRange> partition_k(std::int64_t k_begin, std::int64_t k_end, int threads) {
  const std::int64_t n = k_end - k_begin;
  const int workers = static_cast<int>(std::min<std::int64_t>(threads, std::max<std::int64_t>(1, n)));
  std::vector<KRange> ranges;
  std::int64_t start = k_begin;
  for (int t = 0; t < workers; ++t) {
    const std::int64_t count = n / workers + (t < n % workers ? 1 : 0);
    ranges.push_back({start, start + count});
    start += count;
  }
  return ranges;
}

}  // namespace

void stencil_step(const std::vector<double>& in, std::vector<double>& out, std::int64_t ii,
                  std::int64_t jj, std::int64_t kk, int order, double c0, double c1,
                  const std::optional<Blocking>& blocking, int threads) {
  const std::int64_t l = order;
  if (static_cast<std::int64_t>(in.size()) != ii * jj * kk || in.size() != out.size())
    throw std::invalid_argument("stencil_step: array sizes do not match the dimensions");

  auto run_range = [&](std::int64_t kb, std::int64_t ke) {
    if (!blocking) {
      step_slab(in.data(), out.data(), ii, jj, order, c0, c1, kb, ke, l, jj - l, l, ii - l);
      return;
    }
    // tiled traversal; k tiles are restricted to this worker's slab
    const auto& b = *blocking;
    for (std::int64_t k0 = kb; k0 < ke; k0 += b.tk)
      for (std::int64_t j0 = l; j0 < jj - l; j0 += b.tj)
        for (std::int64_t i0 = l; i0 < ii - l; i0 += b.ti)
          step_slab(in.data(), out.data(), ii, jj, order, c0, c1, k0,
                    std::min(k0 + b.tk, ke), j0, std::min(j0 + b.tj, jj - l), i0,
                    std::min(i0 + b.ti, ii - l));
  };

  const auto ranges = partition_k(l, kk - l, threads);
  if (ranges.size() == 1) {
    run_range(ranges[0].begin, ranges[0].end);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(ranges.size());
  for (const auto& r : ranges) workers.emplace_back([&, r] { run_range(r.begin, r.end); });
  for (auto& w : workers) w.join();
}

double time_stencil_point(const StencilConfig& cfg, std::int64_t timesteps, int repetitions,
                          int warmup, double c0, double c1) {
  cfg.validate();
  const std::int64_t l = cfg.order;
  const std::int64_t ii = cfg.i + 2 * l;
  const std::int64_t jj = cfg.j + 2 * l;
  const std::int64_t kk = cfg.k + 2 * l;
  std::vector<double> a(static_cast<std::size_t>(ii * jj * kk));
  std::vector<double> b(a.size());
  for (std::size_t n = 0; n < a.size(); ++n)
    a[n] = 1.0 + 1e-3 * static_cast<double>(n % 17);
  std::fill(b.begin(), b.end(), 1.0);

  using clock = std::chrono::steady_clock;
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(repetitions));
  for (int rep = -warmup; rep < repetitions; ++rep) {
    const auto start = clock::now();
    for (std::int64_t t = 0; t < timesteps; ++t) {
      const auto& in = (t % 2 == 0) ? a : b;
      auto& out = (t % 2 == 0) ? b : a;
      stencil_step(in, out, ii, jj, kk, cfg.order, c0, c1, cfg.blocking, cfg.threads);
    }
    const auto stop = clock::now();
    if (rep >= 0)
      times.push_back(std::chrono::duration<double>(stop - start).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  return n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

Dataset run_stencil_bench(const BenchPlan& plan, std::ostream* log) {
  plan.validate();
  const DatasetSchema schema = plan.schema();
  Dataset ds(schema);
  std::vector<double> row(schema.n_features());
  for (const StencilConfig& cfg : plan.points()) {
    const double seconds =
        time_stencil_point(cfg, plan.timesteps, plan.repetitions, plan.warmup, plan.c0, plan.c1);
    if (!(seconds > 0.0)) {
      if (log)
        *log << "note: skipping point I=" << cfg.i << " J=" << cfg.j << " K=" << cfg.k
             << ": measured time below timer resolution\n";
      continue;
    }
    row[0] = static_cast<double>(cfg.i);
    row[1] = static_cast<double>(cfg.j);
    row[2] = static_cast<double>(cfg.k);
    std::size_t c = 3;
    if (cfg.blocking) {
      row[c++] = static_cast<double>(cfg.blocking->ti);
      row[c++] = static_cast<double>(cfg.blocking->tj);
      row[c++] = static_cast<double>(cfg.blocking->tk);
    }
    if (!plan.threads.empty()) row[c++] = static_cast<double>(cfg.threads);
    ds.add_row(row, seconds);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Synthetic oracle

json PerturbationSpec::to_json() const {
  json lin = json::object();
  for (const auto& [name, c] : linear) lin[name] = c;
  json quad = json::object();
  for (const auto& [name, c] : quadratic) quad[name] = c;
  return json{{"intercept", intercept}, {"linear", std::move(lin)},
              {"quadratic", std::move(quad)}, {"floor", floor}};
}

PerturbationSpec PerturbationSpec::from_json(const json& j) {
  PerturbationSpec p;
  p.intercept = j.value("intercept", 1.0);
  if (j.contains("linear"))
    for (const auto& [name, c] : j.at("linear").items())
      p.linear.emplace_back(name, c.get<double>());
  if (j.contains("quadratic"))
    for (const auto& [name, c] : j.at("quadratic").items())
      p.quadratic.emplace_back(name, c.get<double>());
  p.floor = j.value("floor", 0.05);
  return p;
}

void SyntheticOracleSpec::validate() const {
  if (sigma < 0.0) throw std::invalid_argument("oracle: sigma must be >= 0");
  if (!(perturbation.floor > 0.0))
    throw std::invalid_argument("oracle: perturbation floor must be positive");
}

json SyntheticOracleSpec::to_json() const {
  return json{{"analytical", base.to_json()},
              {"perturbation", perturbation.to_json()},
              {"sigma", sigma},
              {"seed", seed}};
}

SyntheticOracleSpec SyntheticOracleSpec::from_json(const json& j) {
  SyntheticOracleSpec spec;
  spec.base = AnalyticalConfig::from_json(j.at("analytical"));
  if (j.contains("perturbation"))
    spec.perturbation = PerturbationSpec::from_json(j.at("perturbation"));
  spec.sigma = j.value("sigma", 0.0);
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.validate();
  return spec;
}

std::vector<std::vector<double>> cross_product(const std::vector<std::vector<double>>& axes) {
  std::vector<std::vector<double>> points{{}};
  for (const auto& axis : axes) {
    if (axis.empty()) throw std::invalid_argument("cross_product: empty axis");
    std::vector<std::vector<double>> next;
    next.reserve(points.size() * axis.size());
    for (const auto& p : points)
      for (double v : axis) {
        auto q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  return points;
}

Dataset gen_synthetic(const DatasetSchema& schema,
                      const std::vector<std::vector<double>>& points,
                      const SyntheticOracleSpec& oracle) {
  oracle.validate();
  schema.validate();
  oracle.base.check_schema(schema);
  if (points.empty()) throw std::invalid_argument("gen_synthetic: no points");

  std::vector<double> flat;
  flat.reserve(points.size() * schema.n_features());
  for (const auto& p : points) {
    if (p.size() != schema.n_features())
      throw std::invalid_argument("gen_synthetic: point width does not match the schema");
    flat.insert(flat.end(), p.begin(), p.end());
  }
  const Standardizer st = Standardizer::fit(flat, points.size(), schema.n_features());

  // resolve coefficient names once
  std::vector<std::pair<std::size_t, double>> linear, quadratic;
  for (const auto& [name, c] : oracle.perturbation.linear) {
    auto idx = schema.feature_index(name);
    if (!idx) throw std::invalid_argument("perturbation names unknown feature \"" + name + "\"");
    linear.emplace_back(*idx, c);
  }
  for (const auto& [name, c] : oracle.perturbation.quadratic) {
    auto idx = schema.feature_index(name);
    if (!idx) throw std::invalid_argument("perturbation names unknown feature \"" + name + "\"");
    quadratic.emplace_back(*idx, c);
  }

  Rng rng(oracle.seed);
  Dataset ds(schema);
  for (const auto& p : points) {
    const double analytical = oracle.base.predict_row(schema, p);
    const std::vector<double> z = st.transform(p);
    double perturb = oracle.perturbation.intercept;
    for (const auto& [idx, c] : linear) perturb += c * z[idx];
    for (const auto& [idx, c] : quadratic) perturb += c * z[idx] * z[idx];
    perturb = std::max(perturb, oracle.perturbation.floor);
    double noise = 1.0 + oracle.sigma * rng.next_normal();
    noise = std::max(noise, 1e-6);
    ds.add_row(p, analytical * perturb * noise);
  }
  return ds;
}

std::vector<std::vector<double>> grid_axes_from_json(const json& grid,
                                                     const DatasetSchema& schema) {
  std::vector<std::vector<double>> axes;
  for (const auto& name : schema.feature_names) {
    if (!grid.contains(name))
      throw std::invalid_argument("grid: missing axis for feature \"" + name + "\"");
    const json& axis = grid.at(name);
    std::vector<double> values;
    if (axis.is_array()) {
      values = axis.get<std::vector<double>>();
    } else if (axis.is_object()) {
      const double min = axis.at("min").get<double>();
      const double max = axis.at("max").get<double>();
      const double stride = axis.value("stride", 1.0);
      if (!(stride > 0.0) || max < min)
        throw std::invalid_argument("grid: bad range for feature \"" + name + "\"");
      for (double v = min; v <= max + 1e-9; v += stride) values.push_back(v);
    } else {
      throw std::invalid_argument("grid: axis for \"" + name +
                                  "\" must be a list or {min,max,stride}");
    }
    if (values.empty())
      throw std::invalid_argument("grid: empty axis for feature \"" + name + "\"");
    axes.push_back(std::move(values));
  }
  return axes;
}

Dataset gen_synthetic_from_json(const json& j) {
  DatasetSchema schema;
  schema.feature_names = j.at("schema").at("features").get<std::vector<std::string>>();
  schema.response_name = j.at("schema").value("response", std::string("time_seconds"));
  schema.validate();
  SyntheticOracleSpec oracle = SyntheticOracleSpec::from_json(j);
  const auto axes = grid_axes_from_json(j.at("grid"), schema);
  return gen_synthetic(schema, cross_product(axes), oracle);
}

// ---------------------------------------------------------------------------
// Trace-driven LRU cache simulator

namespace {

class LruCache {
 public:
  explicit LruCache(std::size_t capacity_lines) : capacity_(capacity_lines) {}

  // returns true on miss (line not resident); allocates the line
  bool touch_allocate(std::int64_t line) {
    auto it = index_.find(line);
    if (it != index_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      return false;
    }
    order_.push_front(line);
    index_[line] = order_.begin();
    if (index_.size() > capacity_) {
      index_.erase(order_.back());
      order_.pop_back();
    }
    return true;
  }

  // recency refresh only; no allocation on miss
  void touch_no_allocate(std::int64_t line) {
    auto it = index_.find(line);
    if (it != index_.end()) order_.splice(order_.begin(), order_, it->second);
  }

 private:
  std::size_t capacity_;
  std::list<std::int64_t> order_;
  std::unordered_map<std::int64_t, std::list<std::int64_t>::iterator> index_;
};

}  // namespace

std::int64_t simulate_misses(const StencilConfig& cfg, const CacheLevel& level,
                             const MachineSpec& spec) {
  cfg.validate();
  const std::int64_t l = cfg.order;
  const std::int64_t w = spec.line_elements;
  const std::int64_t ii = cfg.i + 2 * l;
  const std::int64_t jj = cfg.j + 2 * l;
  const std::int64_t kk = cfg.k + 2 * l;
  if (cfg.i > 64 || cfg.j > 64 || cfg.k > 64)
    throw std::invalid_argument("simulate_misses: grids above 64^3 exceed the trace limit");
  if (level.size_elements < w)
    throw std::invalid_argument("simulate_misses: cache smaller than one line");

  // rows padded to line multiples so each row starts on a line boundary
  const std::int64_t row_stride = (ii + w - 1) / w * w;
  const std::int64_t plane_stride = row_stride * jj;
  const std::int64_t array_stride = plane_stride * kk;  // read array at 0, write array above

  LruCache cache(static_cast<std::size_t>(level.size_elements / w));
  const bool write_allocate = cfg.policy == CachePolicy::write_allocate;
  std::int64_t misses = 0;

  auto read_element = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
    const std::int64_t addr = k * plane_stride + j * row_stride + i;
    if (cache.touch_allocate(addr / w)) ++misses;
  };
  auto write_element = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
    const std::int64_t addr = array_stride + k * plane_stride + j * row_stride + i;
    if (write_allocate) {
      if (cache.touch_allocate(addr / w)) ++misses;
    } else {
      cache.touch_no_allocate(addr / w);
    }
  };
  auto visit_point = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
    read_element(i, j, k);
    for (std::int64_t d = 1; d <= l; ++d) {
      read_element(i - d, j, k);
      read_element(i + d, j, k);
      read_element(i, j - d, k);
      read_element(i, j + d, k);
      read_element(i, j, k - d);
      read_element(i, j, k + d);
    }
    write_element(i, j, k);
  };

  if (!cfg.blocking) {
    for (std::int64_t k = l; k < kk - l; ++k)
      for (std::int64_t j = l; j < jj - l; ++j)
        for (std::int64_t i = l; i < ii - l; ++i) visit_point(i, j, k);
  } else {
    const auto& b = *cfg.blocking;
    for (std::int64_t k0 = l; k0 < kk - l; k0 += b.tk)
      for (std::int64_t j0 = l; j0 < jj - l; j0 += b.tj)
        for (std::int64_t i0 = l; i0 < ii - l; i0 += b.ti)
          for (std::int64_t k = k0; k < std::min(k0 + b.tk, kk - l); ++k)
            for (std::int64_t j = j0; j < std::min(j0 + b.tj, jj - l); ++j)
              for (std::int64_t i = i0; i < std::min(i0 + b.ti, ii - l); ++i)
                visit_point(i, j, k);
  }
  return misses;
}

}  // namespace perfweld
