#include "perfweld/hybrid.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "perfweld/eval.hpp"
#include "perfweld/rng.hpp"

using nlohmann::json;

namespace perfweld {

std::string to_string(Aggregate a) {
  return a == Aggregate::stacked_only ? "stacked-only" : "bagged";
}

Aggregate aggregate_from_string(const std::string& s) {
  if (s == "stacked-only" || s == "stacked") return Aggregate::stacked_only;
  if (s == "bagged") return Aggregate::bagged;
  throw std::invalid_argument("unknown aggregate mode: " + s);
}

std::string to_string(BagWeights w) {
  return w == BagWeights::uniform ? "uniform" : "validation-mape";
}

BagWeights bag_weights_from_string(const std::string& s) {
  if (s == "uniform") return BagWeights::uniform;
  if (s == "validation-mape" || s == "validation") return BagWeights::validation_mape;
  throw std::invalid_argument("unknown bag weight policy: " + s);
}

double aggregate_prediction(double analytical, double stacked, double w_analytical,
                            double w_stacked) {
  return w_analytical * analytical + w_stacked * stacked;
}

std::pair<double, double> weights_from_mape(double mape_analytical, double mape_stacked) {
  constexpr double kTiny = 1e-12;
  const bool a_zero = mape_analytical < kTiny;
  const bool s_zero = mape_stacked < kTiny;
  if (a_zero && s_zero) return {0.5, 0.5};
  if (a_zero) return {1.0, 0.0};
  if (s_zero) return {0.0, 1.0};
  const double inv_a = 1.0 / mape_analytical;
  const double inv_s = 1.0 / mape_stacked;
  return {inv_a / (inv_a + inv_s), inv_s / (inv_a + inv_s)};
}

namespace {

constexpr const char* kAnalyticalFeature = "analytical_prediction";

DatasetSchema augment_schema(const DatasetSchema& schema) {
  DatasetSchema aug = schema;
  aug.feature_names.push_back(kAnalyticalFeature);
  aug.validate();
  return aug;
}

// Training rows with the analytical prediction appended as the last
// feature column. Analytical failures carry the 1-based row index.
Dataset augment_dataset(const Dataset& ds, const AnalyticalConfig& analytical,
                        const DatasetSchema& aug_schema) {
  Dataset out(aug_schema);
  std::vector<double> x;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    double a;
    try {
      a = analytical.predict_row(ds.schema(), ds.row(r));
    } catch (const std::exception& e) {
      throw std::invalid_argument("row " + std::to_string(r + 1) +
                                  ": analytical model rejected the features: " + e.what());
    }
    x.assign(ds.row(r).begin(), ds.row(r).end());
    x.push_back(a);
    out.add_row(x, ds.response(r));
  }
  return out;
}

struct StackedParts {
  Standardizer st;
  bool passthrough = false;
  Ensemble ensemble;
};

StackedParts fit_stacked(const Dataset& train, const HybridConfig& cfg,
                         const DatasetSchema& aug_schema, int jobs) {
  Dataset augmented = augment_dataset(train, cfg.analytical, aug_schema);
  StackedParts parts;
  parts.st = Standardizer::fit(augmented);
  if (cfg.passthrough_stub) {
    parts.passthrough = true;
    return parts;
  }
  Dataset augmented_std = standardize_features(augmented, parts.st);
  parts.ensemble = fit_ensemble(cfg.learner, augmented_std, cfg.params, jobs);
  return parts;
}

double predict_stacked_value(const Standardizer& st, bool passthrough,
                             const Ensemble& ensemble, std::span<const double> x,
                             double analytical_value) {
  std::vector<double> aug(x.begin(), x.end());
  aug.push_back(analytical_value);
  st.transform_inplace(aug);
  if (passthrough) {
    // invert the standardization of the analytical column
    const std::size_t c = aug.size() - 1;
    return aug[c] * st.stdev[c] + st.mean[c];
  }
  return ensemble.predict(aug);
}

}  // namespace

std::string HybridPredictor::kind() const {
  return aggregate_ == Aggregate::stacked_only ? "stacked" : "bagged-hybrid";
}

double HybridPredictor::predict_analytical(std::span<const double> x) const {
  return analytical_.predict_row(schema_, x);
}

double HybridPredictor::predict_stacked(std::span<const double> x) const {
  const double a = predict_analytical(x);
  return predict_stacked_value(st_, passthrough_, ensemble_, x, a);
}

double HybridPredictor::predict(std::span<const double> x) const {
  if (x.size() != schema_.n_features())
    throw std::invalid_argument("feature vector length does not match the schema");
  const double a = predict_analytical(x);
  const double s = predict_stacked_value(st_, passthrough_, ensemble_, x, a);
  if (aggregate_ == Aggregate::stacked_only) return s;
  return aggregate_prediction(a, s, w_analytical_, w_stacked_);
}

json HybridPredictor::to_json() const {
  json ml;
  if (passthrough_) {
    ml = json{{"learner", "passthrough"}};
  } else {
    ml = ensemble_.to_json();
  }
  return json{{"format", kModelFormatTag},
              {"kind", kind()},
              {"schema", {{"features", schema_.feature_names},
                          {"response", schema_.response_name}}},
              {"analytical", analytical_.to_json()},
              {"standardizer", st_.to_json()},
              {"ml", std::move(ml)},
              {"bag", {{"policy", to_string(weight_policy_)},
                       {"weights", {w_analytical_, w_stacked_}}}}};
}

std::shared_ptr<HybridPredictor> HybridPredictor::from_json(const json& j) {
  auto model = std::make_shared<HybridPredictor>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "stacked") {
    model->aggregate_ = Aggregate::stacked_only;
  } else if (kind == "bagged-hybrid") {
    model->aggregate_ = Aggregate::bagged;
  } else {
    throw std::invalid_argument("model bundle kind \"" + kind + "\" is not a hybrid model");
  }
  model->schema_.feature_names =
      j.at("schema").at("features").get<std::vector<std::string>>();
  model->schema_.response_name = j.at("schema").at("response").get<std::string>();
  model->schema_.validate();
  model->augmented_schema_ = augment_schema(model->schema_);
  model->analytical_ = AnalyticalConfig::from_json(j.at("analytical"));
  model->analytical_.check_schema(model->schema_);
  model->st_ = Standardizer::from_json(j.at("standardizer"));
  if (model->st_.mean.size() != model->augmented_schema_.n_features())
    throw std::invalid_argument("hybrid bundle: standardizer width mismatch");
  const json& ml = j.at("ml");
  if (ml.at("learner").get<std::string>() == "passthrough") {
    model->passthrough_ = true;
  } else {
    model->ensemble_ = Ensemble::from_json(ml);
  }
  const json& bag = j.at("bag");
  model->weight_policy_ = bag_weights_from_string(bag.at("policy").get<std::string>());
  const auto weights = bag.at("weights").get<std::vector<double>>();
  if (weights.size() != 2) throw std::invalid_argument("hybrid bundle: need two bag weights");
  model->w_analytical_ = weights[0];
  model->w_stacked_ = weights[1];
  return model;
}

PredictorPtr fit_hybrid(const Dataset& train, const HybridConfig& cfg, int jobs) {
  if (train.empty()) throw std::invalid_argument("cannot fit on an empty dataset");
  cfg.analytical.check_schema(train.schema());

  auto model = std::make_shared<HybridPredictor>();
  model->analytical_ = cfg.analytical;
  model->schema_ = train.schema();
  model->augmented_schema_ = augment_schema(train.schema());
  model->aggregate_ = cfg.aggregate;
  model->weight_policy_ = cfg.weight_policy;

  if (cfg.aggregate == Aggregate::bagged) {
    if (cfg.fixed_bag_weights) {
      model->w_analytical_ = cfg.fixed_bag_weights->first;
      model->w_stacked_ = cfg.fixed_bag_weights->second;
    } else if (cfg.weight_policy == BagWeights::uniform) {
      model->w_analytical_ = 0.5;
      model->w_stacked_ = 0.5;
    } else {
      // estimate weights on a held-out quarter, then refit on everything
      if (train.size() < 4)
        throw std::invalid_argument("validation-mape weighting needs at least 4 training rows");
      auto [fit_part, fold] = split_uniform(train, 0.75, mix_seed(cfg.params.seed, 0xf01d));
      StackedParts fold_parts = fit_stacked(fit_part, cfg, model->augmented_schema_, jobs);
      std::vector<double> y_true, y_analytical, y_stacked;
      for (std::size_t r = 0; r < fold.size(); ++r) {
        const double a = cfg.analytical.predict_row(fold.schema(), fold.row(r));
        y_true.push_back(fold.response(r));
        y_analytical.push_back(a);
        y_stacked.push_back(predict_stacked_value(fold_parts.st, fold_parts.passthrough,
                                                  fold_parts.ensemble, fold.row(r), a));
      }
      auto [wa, ws] = weights_from_mape(mape(y_true, y_analytical), mape(y_true, y_stacked));
      model->w_analytical_ = wa;
      model->w_stacked_ = ws;
    }
  }

  StackedParts parts = fit_stacked(train, cfg, model->augmented_schema_, jobs);
  model->st_ = std::move(parts.st);
  model->passthrough_ = parts.passthrough;
  model->ensemble_ = std::move(parts.ensemble);
  return model;
}

void save_hybrid(const Predictor& model, const std::string& path) {
  if (model.kind() != "stacked" && model.kind() != "bagged-hybrid")
    throw std::invalid_argument("model of kind \"" + model.kind() + "\" is not a hybrid model");
  save_model(model, path);
}

PredictorPtr load_hybrid(const std::string& path) {
  PredictorPtr model = load_model(path);
  if (model->kind() != "stacked" && model->kind() != "bagged-hybrid")
    throw std::invalid_argument("model file " + path + " holds kind \"" + model->kind() +
                                "\", not a hybrid model");
  return model;
}

}  // namespace perfweld
