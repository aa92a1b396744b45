#include "perfweld/recipe.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "perfweld/factory.hpp"

using nlohmann::json;

namespace perfweld {

bool is_known_criterion(const std::string& id) {
  return id == "advisory" || id == "hybrid-ratio" || id == "hybrid-le-ml" ||
         id == "small-window";
}

void ExperimentRecipe::validate() const {
  if (name.empty()) throw std::invalid_argument("recipe: name is empty");
  if (!bench_plan && !oracle)
    throw std::invalid_argument("recipe \"" + name + "\": needs a bench plan or an oracle");
  if (bench_plan && oracle)
    throw std::invalid_argument("recipe \"" + name + "\": give one source, not both");
  if (models.empty()) throw std::invalid_argument("recipe \"" + name + "\": no models");
  if (fractions.empty()) throw std::invalid_argument("recipe \"" + name + "\": no fractions");
  if (n_seeds < 1) throw std::invalid_argument("recipe \"" + name + "\": seeds must be >= 1");
  const std::string id = criterion.value("id", std::string());
  if (!is_known_criterion(id))
    throw std::invalid_argument("recipe \"" + name + "\": unknown criterion id \"" + id + "\"");
  for (const auto& m : models) canonical_model_name(m);
}

ExperimentRecipe ExperimentRecipe::from_json(const json& j) {
  ExperimentRecipe r;
  r.name = j.at("name").get<std::string>();
  const json& source = j.at("source");
  const std::string type = source.at("type").get<std::string>();
  if (type == "bench") {
    r.bench_plan = BenchPlan::from_json(source.at("plan"));
  } else if (type == "synthetic") {
    r.oracle = source;
  } else {
    throw std::invalid_argument("recipe source type must be \"bench\" or \"synthetic\"");
  }
  if (j.contains("analytical")) r.analytical = j.at("analytical");
  r.models = j.at("models").get<std::vector<std::string>>();
  r.fractions = j.at("fractions").get<std::vector<double>>();
  r.n_seeds = j.value("seeds", 5);
  r.seed_base = j.value("seed_base", std::uint64_t{0});
  r.model_params = j.value("params", json::object());
  r.criterion = j.at("criterion");
  r.validate();
  return r;
}

ExperimentRecipe load_recipe(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open recipe: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("recipe " + path + ": " + e.what());
  }
  return ExperimentRecipe::from_json(j);
}

namespace {

double median_for(const std::vector<SummaryRow>& summary, const std::string& model,
                  double fraction) {
  for (const auto& row : summary)
    if (row.model == model && std::abs(row.fraction - fraction) < 1e-12) return row.median;
  throw std::invalid_argument("criterion references missing cell (" + model + ", " +
                              std::to_string(fraction) + ")");
}

std::pair<bool, std::string> check_criterion(const json& criterion,
                                             const std::vector<double>& fractions,
                                             const std::vector<SummaryRow>& summary) {
  const std::string id = criterion.at("id").get<std::string>();
  std::ostringstream detail;
  if (id == "advisory") {
    return {true, "advisory run; no gated property"};
  }
  if (id == "hybrid-ratio") {
    const std::string hybrid = criterion.at("hybrid").get<std::string>();
    const std::string ml = criterion.at("ml").get<std::string>();
    const double fraction = criterion.at("fraction").get<double>();
    const double max_ratio = criterion.at("max_ratio").get<double>();
    const double h = median_for(summary, hybrid, fraction);
    const double m = median_for(summary, ml, fraction);
    const double ratio = h / m;
    detail << hybrid << " median " << h << " vs " << ml << " median " << m << " at fraction "
           << fraction << ": ratio " << ratio << " (required <= " << max_ratio << ")";
    return {ratio <= max_ratio, detail.str()};
  }
  if (id == "hybrid-le-ml") {
    const std::string hybrid = criterion.at("hybrid").get<std::string>();
    const std::string ml = criterion.at("ml").get<std::string>();
    bool ok = true;
    for (double f : fractions) {
      const double h = median_for(summary, hybrid, f);
      const double m = median_for(summary, ml, f);
      if (h > m) ok = false;
      detail << "f=" << f << ": " << h << (h <= m ? " <= " : " > ") << m << "; ";
    }
    return {ok, detail.str()};
  }
  if (id == "small-window") {
    const std::string hybrid = criterion.at("hybrid").get<std::string>();
    const std::string ml = criterion.at("ml").get<std::string>();
    const double threshold = criterion.at("threshold").get<double>();
    const double hybrid_fraction_max = criterion.at("hybrid_fraction_max").get<double>();
    const double ml_fraction_below = criterion.at("ml_fraction_below").get<double>();
    bool hybrid_ok = false;
    bool ml_ok = true;
    for (double f : fractions) {
      if (f <= hybrid_fraction_max + 1e-12 &&
          median_for(summary, hybrid, f) <= threshold)
        hybrid_ok = true;
      if (f < ml_fraction_below - 1e-12 && median_for(summary, ml, f) <= threshold)
        ml_ok = false;
    }
    detail << hybrid << (hybrid_ok ? " reaches " : " misses ") << threshold
           << " within fraction " << hybrid_fraction_max << "; " << ml
           << (ml_ok ? " stays above it" : " also reaches it") << " below fraction "
           << ml_fraction_below;
    return {hybrid_ok && ml_ok, detail.str()};
  }
  throw std::invalid_argument("unknown criterion id \"" + id + "\"");
}

}  // namespace

RecipeResult run_recipe(const ExperimentRecipe& recipe, const std::string& out_dir,
                        std::ostream& log, int jobs) {
  recipe.validate();
  std::filesystem::create_directories(out_dir);

  log << "recipe " << recipe.name << ": generating dataset...\n";
  Dataset ds;
  std::optional<AnalyticalConfig> analytical;
  if (recipe.bench_plan) {
    ds = run_stencil_bench(*recipe.bench_plan, &log);
  } else {
    ds = gen_synthetic_from_json(*recipe.oracle);
  }
  if (recipe.analytical) {
    analytical = AnalyticalConfig::from_json(*recipe.analytical);
  } else if (recipe.oracle && recipe.oracle->contains("analytical")) {
    analytical = AnalyticalConfig::from_json(recipe.oracle->at("analytical"));
  }
  save_dataset(ds, out_dir + "/data.csv");
  log << "recipe " << recipe.name << ": " << ds.size() << " rows\n";

  ModelFactoryOptions opts;
  opts.params = TreeParams::from_json(recipe.model_params);
  opts.analytical = analytical;
  opts.jobs = 1;

  std::vector<ModelSpec> specs;
  for (const auto& name : recipe.models) specs.push_back(make_model_spec(name, opts));

  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < recipe.n_seeds; ++s) seeds.push_back(recipe.seed_base + s);

  EvalReport report = learning_curve(ds, recipe.fractions, seeds, specs, jobs);
  {
    std::ofstream out(out_dir + "/report.csv");
    report.write_csv(out);
  }
  const auto summary = summarize(report);
  {
    std::ofstream out(out_dir + "/summary.txt");
    write_summary_table(summary, out);
  }
  write_summary_table(summary, log);

  RecipeResult result;
  result.name = recipe.name;
  result.report = std::move(report);
  result.advisory = recipe.criterion.at("id").get<std::string>() == "advisory";
  auto [passed, detail] = check_criterion(recipe.criterion, recipe.fractions, summary);
  result.passed = passed;
  result.detail = detail;
  log << "recipe " << recipe.name << ": " << (passed ? "PASS" : "FAIL")
      << (result.advisory ? " (advisory)" : "") << " - " << detail << "\n";
  return result;
}

}  // namespace perfweld
