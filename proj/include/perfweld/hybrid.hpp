#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>

#include <json.hpp>

#include "perfweld/ml.hpp"
#include "perfweld/model.hpp"

namespace perfweld {

enum class Aggregate { stacked_only, bagged };
enum class BagWeights { uniform, validation_mape };

std::string to_string(Aggregate a);
Aggregate aggregate_from_string(const std::string& s);
std::string to_string(BagWeights w);
BagWeights bag_weights_from_string(const std::string& s);

struct HybridConfig {
  AnalyticalConfig analytical;
  LearnerKind learner = LearnerKind::extra_trees;
  TreeParams params;
  Aggregate aggregate = Aggregate::stacked_only;
  BagWeights weight_policy = BagWeights::uniform;

  // Test hooks. passthrough_stub replaces the ML learner with one that
  // returns the analytical feature; fixed_bag_weights overrides the
  // weight policy with explicit (analytical, stacked) weights.
  bool passthrough_stub = false;
  std::optional<std::pair<double, double>> fixed_bag_weights;
};

// Weighted mean of the analytical and stacked predictions.
double aggregate_prediction(double analytical, double stacked, double w_analytical,
                            double w_stacked);

// Weights proportional to inverse validation MAPE, normalized. A
// (near-)zero MAPE takes all the weight; two zeros fall back to uniform.
std::pair<double, double> weights_from_mape(double mape_analytical, double mape_stacked);

// The hybrid model: analytical prediction appended as one extra feature
// column ("analytical_prediction"), augmented features standardized, ML
// learner fit on top. In bagged mode the final prediction is a weighted
// mean of the analytical and stacked outputs.
class HybridPredictor final : public Predictor {
 public:
  std::string kind() const override;
  const DatasetSchema& schema() const override { return schema_; }
  double predict(std::span<const double> x) const override;
  nlohmann::json to_json() const override;

  // stacked prediction only, ignoring the aggregate mode
  double predict_stacked(std::span<const double> x) const;
  double predict_analytical(std::span<const double> x) const;

  const DatasetSchema& augmented_schema() const { return augmented_schema_; }
  std::pair<double, double> bag_weights() const { return {w_analytical_, w_stacked_}; }

  static std::shared_ptr<HybridPredictor> from_json(const nlohmann::json& j);

 private:
  friend PredictorPtr fit_hybrid(const Dataset&, const HybridConfig&, int);

  AnalyticalConfig analytical_;
  DatasetSchema schema_;
  DatasetSchema augmented_schema_;
  Standardizer st_;          // fit on augmented features
  bool passthrough_ = false;
  Ensemble ensemble_;        // unused when passthrough_
  Aggregate aggregate_ = Aggregate::stacked_only;
  BagWeights weight_policy_ = BagWeights::uniform;
  double w_analytical_ = 0.5, w_stacked_ = 0.5;
};

// Errors from the analytical model on a training row are rethrown with the
// 1-based row index.
PredictorPtr fit_hybrid(const Dataset& train, const HybridConfig& cfg, int jobs = 1);

void save_hybrid(const Predictor& model, const std::string& path);

// load_model + a kind check: rejects bundles that are not hybrid models.
PredictorPtr load_hybrid(const std::string& path);

}  // namespace perfweld
