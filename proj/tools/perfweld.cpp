// perfweld - performance-model training and evaluation workflows.
//
// Exit codes: 0 success, 1 user/input error, 2 internal error. Every error
// is reported on stderr as a single line starting with "error:".

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "perfweld/bench.hpp"
#include "perfweld/eval.hpp"
#include "perfweld/factory.hpp"
#include "perfweld/hybrid.hpp"
#include "perfweld/model.hpp"
#include "perfweld/recipe.hpp"

using nlohmann::json;
using namespace perfweld;

namespace {

// Writes `text` to path atomically (temp file in the same directory, then
// rename).
void write_file_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

json load_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(std::string("cannot open ") + what + ": " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string(what) + " " + path + ": " + e.what());
  }
  return j;
}

// Model-parameter flags shared by train and curve.
struct TreeFlags {
  int n_trees = 100;
  int max_depth = -1;
  int min_leaf = 1;
  std::string max_features = "third";  // "all", "third", or a count
  bool no_bootstrap = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--trees", n_trees, "ensemble size")->check(CLI::PositiveNumber);
    cmd->add_option("--max-depth", max_depth, "tree depth limit (-1: unlimited)");
    cmd->add_option("--min-leaf", min_leaf, "minimum samples per leaf")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-features", max_features,
                    "split candidates per node: all, third, or a count");
    cmd->add_flag("--no-bootstrap", no_bootstrap, "disable bootstrap resampling");
  }

  TreeParams to_params() const {
    TreeParams p;
    p.n_trees = n_trees;
    p.max_depth = max_depth;
    p.min_samples_leaf = min_leaf;
    if (max_features == "all") {
      p.max_features = -1;
    } else if (max_features == "third") {
      p.max_features = 0;
    } else {
      p.max_features = std::stoi(max_features);
    }
    p.bootstrap = !no_bootstrap;
    return p;
  }
};

// Analytical-model flags shared by train and curve.
struct AnalyticalFlags {
  std::string spec_path;
  int order = 1;
  std::int64_t timesteps = 1;
  std::string policy = "write-allocate";

  void attach(CLI::App* cmd) {
    cmd->add_option("--spec", spec_path, "machine spec JSON (hybrid/analytical models)");
    cmd->add_option("--order", order, "stencil order l")->check(CLI::PositiveNumber);
    cmd->add_option("--timesteps", timesteps, "timesteps the responses cover")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--policy", policy, "write-allocate | no-write-allocate");
  }

  std::optional<AnalyticalConfig> to_config() const {
    if (spec_path.empty()) return std::nullopt;
    AnalyticalConfig cfg;
    cfg.machine = load_machine_spec(spec_path);
    cfg.stencil_order = order;
    cfg.timesteps = timesteps;
    cfg.policy = cache_policy_from_string(policy);
    return cfg;
  }
};

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_fractions(const std::string& csv) {
  std::vector<double> out;
  for (const auto& item : split_list(csv)) out.push_back(std::stod(item));
  return out;
}

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return buf;
}

// --config support: a JSON object of {"flag-name": value} merged in front
// of the command line, so explicit flags override the file.
void apply_config_defaults(CLI::App* cmd, const std::string& config_path) {
  if (config_path.empty()) return;
  const json j = load_json_file(config_path, "config");
  if (!j.is_object()) throw std::runtime_error("config must be a JSON object of flag values");
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    const std::string flag = "--" + key;
    if (cmd->get_option_no_throw(flag) == nullptr)
      throw std::runtime_error("config names unknown flag \"" + flag + "\"");
    args.push_back(flag);
    if (value.is_string()) {
      args.push_back(value.get<std::string>());
    } else if (!value.is_boolean()) {
      args.push_back(value.dump());
    } else if (!value.get<bool>()) {
      args.pop_back();  // false flag: drop
    }
  }
  // CLI11 parses in reverse order
  std::reverse(args.begin(), args.end());
  cmd->parse(args, false);
}

int cmd_bench_stencil(const std::string& plan_path, const std::string& out_path) {
  const BenchPlan plan = load_bench_plan(plan_path);
  const Dataset ds = run_stencil_bench(plan, &std::cerr);
  std::ostringstream csv;
  {
    std::ofstream probe;  // save_dataset writes directly; reuse it via temp path
  }
  save_dataset(ds, out_path);
  std::cout << "wrote " << ds.size() << " rows to " << out_path << "\n";
  return 0;
}

int cmd_synth(const std::string& oracle_path, const std::string& out_path) {
  const json j = load_json_file(oracle_path, "oracle spec");
  const Dataset ds = gen_synthetic_from_json(j);
  save_dataset(ds, out_path);
  std::cout << "wrote " << ds.size() << " rows to " << out_path << "\n";
  return 0;
}

int cmd_train(const std::string& model_name, const std::string& data_path,
              const AnalyticalFlags& aflags, const TreeFlags& tflags, double fraction,
              std::uint64_t seed, const std::string& response, const std::string& agg,
              const std::string& bag_weights, int jobs, const std::string& out_path) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("--fraction must be in (0, 1)");
  const Dataset ds = load_dataset(data_path, response);

  ModelFactoryOptions opts;
  opts.params = tflags.to_params();
  opts.analytical = aflags.to_config();
  opts.aggregate = aggregate_from_string(agg);
  opts.weight_policy = bag_weights_from_string(bag_weights);
  opts.jobs = jobs;

  auto [train, test] = split_uniform(ds, fraction, seed);
  PredictorPtr model = train_named_model(model_name, train, seed, opts);
  save_model(*model, out_path);

  std::cout << "model: " << model->kind() << "\n";
  std::cout << "train rows: " << train.size() << ", test rows: " << test.size() << "\n";
  std::cout << "train MAPE: " << mape(*model, train) << "\n";
  std::cout << "test MAPE: " << mape(*model, test) << "\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
  PredictorPtr model = load_model(model_path);
  const DatasetSchema& schema = model->schema();

  std::ifstream in(data_path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + data_path);
  std::string header;
  if (!std::getline(in, header)) throw std::invalid_argument(data_path + ": empty file");
  if (!header.empty() && header.back() == '\r') header.pop_back();

  // input columns must start with the model's features; a response column
  // and any extras are carried through untouched
  std::vector<std::string> cols = split_list(header);
  if (cols.size() < schema.n_features())
    throw std::invalid_argument(data_path + ": fewer columns than model features");
  for (std::size_t c = 0; c < schema.n_features(); ++c)
    if (cols[c] != schema.feature_names[c])
      throw std::invalid_argument(data_path + ": column " + std::to_string(c + 1) + " is \"" +
                                  cols[c] + "\", model expects \"" + schema.feature_names[c] +
                                  "\"");

  std::ostringstream out;
  out.precision(17);
  out << header << ",predicted_seconds\n";
  std::string line;
  std::size_t n = 0, data_row = 0;
  std::vector<double> x(schema.n_features());
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++data_row;
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t c = 0; c < schema.n_features(); ++c) {
      if (!std::getline(ss, cell, ','))
        throw std::invalid_argument("row " + std::to_string(data_row) + ": too few cells");
      try {
        x[c] = std::stod(cell);
      } catch (const std::exception&) {
        throw std::invalid_argument("row " + std::to_string(data_row) + ", column " +
                                    schema.feature_names[c] + ": non-numeric value \"" + cell +
                                    "\"");
      }
    }
    out << line << "," << model->predict(x) << "\n";
    ++n;
  }
  write_file_atomic(out_path, out.str());
  std::cout << "wrote " << n << " predictions to " << out_path << "\n";
  return 0;
}

int cmd_curve(const std::string& data_path, const AnalyticalFlags& aflags,
              const TreeFlags& tflags, const std::string& models_csv,
              const std::string& fractions_csv, int n_seeds, std::uint64_t seed_base,
              const std::string& response, const std::string& agg,
              const std::string& bag_weights, int jobs, const std::string& out_path,
              const std::string& plot_path) {
  const Dataset ds = load_dataset(data_path, response);

  ModelFactoryOptions opts;
  opts.params = tflags.to_params();
  opts.analytical = aflags.to_config();
  opts.aggregate = aggregate_from_string(agg);
  opts.weight_policy = bag_weights_from_string(bag_weights);

  std::vector<ModelSpec> specs;
  for (const auto& name : split_list(models_csv)) specs.push_back(make_model_spec(name, opts));
  if (specs.empty()) throw std::invalid_argument("--models is empty");

  const std::vector<double> fractions = parse_fractions(fractions_csv);
  if (fractions.empty()) throw std::invalid_argument("--fractions is empty");
  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < n_seeds; ++s) seeds.push_back(seed_base + s);

  const EvalReport report = learning_curve(ds, fractions, seeds, specs, jobs);
  {
    std::ostringstream csv;
    report.write_csv(csv);
    write_file_atomic(out_path, csv.str());
  }
  const auto summary = summarize(report);
  write_summary_table(summary, std::cout);
  if (!plot_path.empty()) {
    std::ostringstream plot;
    write_plot_data(summary, plot);
    write_file_atomic(plot_path, plot.str());
  }
  std::cout << "wrote " << report.rows.size() << " rows to " << out_path << "\n";
  return 0;
}

int cmd_recipe(const std::string& name, const std::string& recipes_dir,
               const std::string& out_root, int jobs) {
  const std::string path = recipes_dir + "/" + name + ".json";
  if (!std::filesystem::exists(path))
    throw std::runtime_error("unknown recipe \"" + name + "\" (no " + path + ")");
  const ExperimentRecipe recipe = load_recipe(path);
  const std::string out_dir = out_root + "/" + name + "-" + timestamp_now();
  const RecipeResult result = run_recipe(recipe, out_dir, std::cout, jobs);
  std::cout << "results in " << out_dir << "\n";
  return result.passed || result.advisory ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perfweld: analytical + machine-learning performance models"};
  app.require_subcommand(1);

  // bench
  auto* bench = app.add_subcommand("bench", "run a timed benchmark sweep");
  bench->require_subcommand(1);
  auto* bench_stencil = bench->add_subcommand("stencil", "time the 7-point stencil kernel");
  std::string bench_plan_path, bench_out, bench_config;
  bench_stencil->add_option("--plan", bench_plan_path, "bench plan JSON")->required();
  bench_stencil->add_option("--out", bench_out, "output dataset CSV")->required();
  bench_stencil->add_option("--config", bench_config, "JSON file of flag defaults");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset from an oracle");
  std::string synth_oracle, synth_out, synth_config;
  synth->add_option("--oracle", synth_oracle, "oracle spec JSON")->required();
  synth->add_option("--out", synth_out, "output dataset CSV")->required();
  synth->add_option("--config", synth_config, "JSON file of flag defaults");

  // train
  auto* train = app.add_subcommand("train", "fit a model on a uniform sample");
  std::string train_model, train_data, train_out, train_response = "time_seconds";
  std::string train_agg = "stacked-only", train_weights = "uniform", train_config;
  double train_fraction = 0.1;
  std::uint64_t train_seed = 0;
  int train_jobs = 1;
  TreeFlags train_tree;
  AnalyticalFlags train_analytical;
  train->add_option("--model", train_model,
                    "cart | rf | extra | hybrid-stencil | hybrid-fmm | "
                    "analytical-stencil | analytical-fmm")
      ->required();
  train->add_option("--data", train_data, "dataset CSV")->required();
  train->add_option("--fraction", train_fraction, "training fraction in (0,1)")->required();
  train->add_option("--seed", train_seed, "split/fit seed");
  train->add_option("--out", train_out, "output model bundle JSON")->required();
  train->add_option("--response", train_response, "response column name");
  train->add_option("--aggregate", train_agg, "hybrid: stacked-only | bagged");
  train->add_option("--bag-weights", train_weights, "hybrid: uniform | validation-mape");
  train->add_option("--jobs", train_jobs, "fit worker threads")->check(CLI::PositiveNumber);
  train->add_option("--config", train_config, "JSON file of flag defaults");
  train_tree.attach(train);
  train_analytical.attach(train);

  // predict
  auto* predict = app.add_subcommand("predict", "append predictions to a dataset");
  std::string pred_model, pred_data, pred_out, pred_config;
  predict->add_option("--model", pred_model, "model bundle JSON")->required();
  predict->add_option("--data", pred_data, "input CSV (feature columns first)")->required();
  predict->add_option("--out", pred_out, "output CSV")->required();
  predict->add_option("--config", pred_config, "JSON file of flag defaults");

  // curve
  auto* curve = app.add_subcommand("curve", "learning curves over training fractions");
  std::string curve_data, curve_models, curve_fractions, curve_out, curve_plot;
  std::string curve_response = "time_seconds", curve_agg = "stacked-only";
  std::string curve_weights = "uniform", curve_config;
  int curve_seeds = 5, curve_jobs = 1;
  std::uint64_t curve_seed_base = 0;
  TreeFlags curve_tree;
  AnalyticalFlags curve_analytical;
  curve->add_option("--data", curve_data, "dataset CSV")->required();
  curve->add_option("--models", curve_models, "comma-separated model names")->required();
  curve->add_option("--fractions", curve_fractions, "comma-separated fractions")->required();
  curve->add_option("--seeds", curve_seeds, "seeds per cell")->check(CLI::PositiveNumber);
  curve->add_option("--seed-base", curve_seed_base, "first seed value");
  curve->add_option("--out", curve_out, "report CSV")->required();
  curve->add_option("--plot-data", curve_plot, "gnuplot-style summary file");
  curve->add_option("--response", curve_response, "response column name");
  curve->add_option("--aggregate", curve_agg, "hybrid: stacked-only | bagged");
  curve->add_option("--bag-weights", curve_weights, "hybrid: uniform | validation-mape");
  curve->add_option("--jobs", curve_jobs, "concurrent curve cells")->check(CLI::PositiveNumber);
  curve->add_option("--config", curve_config, "JSON file of flag defaults");
  curve_tree.attach(curve);
  curve_analytical.attach(curve);

  // recipe
  auto* recipe = app.add_subcommand("recipe", "run a packaged experiment recipe");
  std::string recipe_name, recipe_dir = "recipes", recipe_out = "out";
  int recipe_jobs = 1;
  recipe->add_option("--name", recipe_name, "recipe name (recipes/<name>.json)")->required();
  recipe->add_option("--dir", recipe_dir, "recipes directory");
  recipe->add_option("--out", recipe_out, "output root directory");
  recipe->add_option("--jobs", recipe_jobs, "concurrent curve cells")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (bench_stencil->parsed()) {
      apply_config_defaults(bench_stencil, bench_config);
      return cmd_bench_stencil(bench_plan_path, bench_out);
    }
    if (synth->parsed()) {
      apply_config_defaults(synth, synth_config);
      return cmd_synth(synth_oracle, synth_out);
    }
    if (train->parsed()) {
      apply_config_defaults(train, train_config);
      return cmd_train(train_model, train_data, train_analytical, train_tree, train_fraction,
                       train_seed, train_response, train_agg, train_weights, train_jobs,
                       train_out);
    }
    if (predict->parsed()) {
      apply_config_defaults(predict, pred_config);
      return cmd_predict(pred_model, pred_data, pred_out);
    }
    if (curve->parsed()) {
      apply_config_defaults(curve, curve_config);
      return cmd_curve(curve_data, curve_analytical, curve_tree, curve_models, curve_fractions,
                       curve_seeds, curve_seed_base, curve_response, curve_agg, curve_weights,
                       curve_jobs, curve_out, curve_plot);
    }
    if (recipe->parsed()) {
      return cmd_recipe(recipe_name, recipe_dir, recipe_out, recipe_jobs);
    }
    std::cerr << "error: no subcommand given\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 2;
  }
}
