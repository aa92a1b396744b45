#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "perfweld/bench.hpp"
#include "perfweld/eval.hpp"

namespace perfweld {

// An end-to-end experiment: dataset source (bench plan or synthetic
// oracle), model list, training fractions, seeds, and the property the
// resulting report is checked against.
struct ExperimentRecipe {
  std::string name;
  std::optional<BenchPlan> bench_plan;
  std::optional<nlohmann::json> oracle;      // synthetic source, with its grid
  std::optional<nlohmann::json> analytical;  // for hybrid models over bench data
  std::vector<std::string> models;
  std::vector<double> fractions;
  int n_seeds = 5;
  std::uint64_t seed_base = 0;
  nlohmann::json model_params;  // TreeParams overrides shared by all models
  nlohmann::json criterion;     // {"id": ..., parameters}

  void validate() const;
  static ExperimentRecipe from_json(const nlohmann::json& j);
};

ExperimentRecipe load_recipe(const std::string& path);

struct RecipeResult {
  std::string name;
  bool passed = false;
  bool advisory = false;
  std::string detail;
  EvalReport report;
};

// Runs the pipeline (source -> dataset -> learning curve -> criterion) and
// writes report.csv, summary.txt, and data.csv under out_dir. Progress and
// the pass/fail line go to `log`.
RecipeResult run_recipe(const ExperimentRecipe& recipe, const std::string& out_dir,
                        std::ostream& log, int jobs = 1);

// Criterion ids understood by run_recipe.
bool is_known_criterion(const std::string& id);

}  // namespace perfweld
