#pragma once

#include <memory>
#include <span>
#include <string>

#include <json.hpp>

#include "perfweld/dataset.hpp"
#include "perfweld/fmm_model.hpp"
#include "perfweld/machine.hpp"
#include "perfweld/ml.hpp"
#include "perfweld/stencil_model.hpp"

namespace perfweld {

inline constexpr const char* kModelFormatTag = "perfweld-model/1";

// Uniform prediction interface for every fitted model. Implementations are
// immutable; predict is a pure function of (state, features).
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string kind() const = 0;
  virtual const DatasetSchema& schema() const = 0;
  virtual double predict(std::span<const double> x) const = 0;
  virtual nlohmann::json to_json() const = 0;
};

using PredictorPtr = std::shared_ptr<const Predictor>;

// Analytical model configuration shared by the hybrid model and the
// synthetic-data oracle.
struct AnalyticalConfig {
  enum class Kind { stencil, fmm };
  Kind kind = Kind::stencil;
  MachineSpec machine;
  int stencil_order = 1;
  std::int64_t timesteps = 1;
  CachePolicy policy = CachePolicy::write_allocate;

  // Throws std::invalid_argument when the schema lacks required features.
  void check_schema(const DatasetSchema& schema) const;
  double predict_row(const DatasetSchema& schema, std::span<const double> x) const;

  nlohmann::json to_json() const;
  static AnalyticalConfig from_json(const nlohmann::json& j);
};

class AnalyticalPredictor final : public Predictor {
 public:
  AnalyticalPredictor(AnalyticalConfig cfg, DatasetSchema schema);

  std::string kind() const override;
  const DatasetSchema& schema() const override { return schema_; }
  double predict(std::span<const double> x) const override;
  nlohmann::json to_json() const override;

  const AnalyticalConfig& config() const { return cfg_; }

 private:
  AnalyticalConfig cfg_;
  DatasetSchema schema_;
};

// Tree ensemble behind the uniform interface; features are standardized
// before routing.
class EnsemblePredictor final : public Predictor {
 public:
  EnsemblePredictor(Ensemble ensemble, Standardizer st, DatasetSchema schema);

  std::string kind() const override;
  const DatasetSchema& schema() const override { return schema_; }
  double predict(std::span<const double> x) const override;
  nlohmann::json to_json() const override;

  const Ensemble& ensemble() const { return ensemble_; }

 private:
  Ensemble ensemble_;
  Standardizer st_;
  DatasetSchema schema_;
};

PredictorPtr fit_ensemble_model(LearnerKind kind, const Dataset& train, const TreeParams& p,
                                int jobs = 1);

// Model bundle I/O: self-describing JSON with a format tag. Loading
// dispatches on "kind". Writes are atomic (temp file + rename).
void save_model(const Predictor& model, const std::string& path);
PredictorPtr load_model(const std::string& path);
PredictorPtr model_from_json(const nlohmann::json& j);

}  // namespace perfweld
