#include "perfweld/model.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "perfweld/hybrid.hpp"

using nlohmann::json;

namespace perfweld {

// ---------------------------------------------------------------------------
// AnalyticalConfig

void AnalyticalConfig::check_schema(const DatasetSchema& schema) const {
  const char* const* required;
  std::size_t n_required;
  static const char* stencil_req[] = {"I", "J", "K"};
  static const char* fmm_req[] = {"N", "q", "k"};
  if (kind == Kind::stencil) {
    required = stencil_req;
    n_required = 3;
  } else {
    required = fmm_req;
    n_required = 3;
  }
  for (std::size_t i = 0; i < n_required; ++i)
    if (!schema.has_feature(required[i]))
      throw std::invalid_argument(std::string("schema lacks feature \"") + required[i] +
                                  "\" required by the " +
                                  (kind == Kind::stencil ? "stencil" : "fmm") +
                                  " analytical model");
  if (kind == Kind::stencil) {
    const bool bi = schema.has_feature("b_i");
    const bool bj = schema.has_feature("b_j");
    const bool bk = schema.has_feature("b_k");
    if (bi != bj || bj != bk)
      throw std::invalid_argument("blocking features b_i, b_j, b_k must appear together");
  }
}

double AnalyticalConfig::predict_row(const DatasetSchema& schema,
                                     std::span<const double> x) const {
  if (kind == Kind::stencil) {
    StencilConfig cfg = stencil_config_from_row(schema, x, stencil_order, policy);
    return stencil_time(cfg, machine, timesteps).first;
  }
  FmmConfig cfg = fmm_config_from_row(schema, x);
  return fmm_time(cfg, machine).first;
}

json AnalyticalConfig::to_json() const {
  json j{{"kind", kind == Kind::stencil ? "stencil" : "fmm"}, {"machine", machine.to_json()}};
  if (kind == Kind::stencil) {
    j["order"] = stencil_order;
    j["timesteps"] = timesteps;
    j["cache_policy"] = to_string(policy);
  }
  return j;
}

AnalyticalConfig AnalyticalConfig::from_json(const json& j) {
  AnalyticalConfig cfg;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "stencil") {
    cfg.kind = Kind::stencil;
  } else if (kind == "fmm") {
    cfg.kind = Kind::fmm;
  } else {
    throw std::invalid_argument("unknown analytical model kind: " + kind);
  }
  cfg.machine = MachineSpec::from_json(j.at("machine"));
  cfg.stencil_order = j.value("order", 1);
  cfg.timesteps = j.value("timesteps", std::int64_t{1});
  if (j.contains("cache_policy"))
    cfg.policy = cache_policy_from_string(j.at("cache_policy").get<std::string>());
  if (cfg.stencil_order < 1) throw std::invalid_argument("order must be >= 1");
  if (cfg.timesteps < 1) throw std::invalid_argument("timesteps must be >= 1");
  return cfg;
}

// ---------------------------------------------------------------------------
// AnalyticalPredictor

AnalyticalPredictor::AnalyticalPredictor(AnalyticalConfig cfg, DatasetSchema schema)
    : cfg_(std::move(cfg)), schema_(std::move(schema)) {
  schema_.validate();
  cfg_.machine.validate();
  cfg_.check_schema(schema_);
}

std::string AnalyticalPredictor::kind() const {
  return cfg_.kind == AnalyticalConfig::Kind::stencil ? "analytical-stencil"
                                                      : "analytical-fmm";
}

double AnalyticalPredictor::predict(std::span<const double> x) const {
  return cfg_.predict_row(schema_, x);
}

json AnalyticalPredictor::to_json() const {
  return json{{"format", kModelFormatTag},
              {"kind", kind()},
              {"schema", {{"features", schema_.feature_names},
                          {"response", schema_.response_name}}},
              {"analytical", cfg_.to_json()}};
}

// ---------------------------------------------------------------------------
// EnsemblePredictor

EnsemblePredictor::EnsemblePredictor(Ensemble ensemble, Standardizer st, DatasetSchema schema)
    : ensemble_(std::move(ensemble)), st_(std::move(st)), schema_(std::move(schema)) {
  schema_.validate();
  if (st_.mean.size() != schema_.n_features())
    throw std::invalid_argument("standardizer width does not match the schema");
}

std::string EnsemblePredictor::kind() const { return to_string(ensemble_.kind); }

double EnsemblePredictor::predict(std::span<const double> x) const {
  if (x.size() != schema_.n_features())
    throw std::invalid_argument("feature vector length does not match the schema");
  return ensemble_.predict(st_.transform(x));
}

json EnsemblePredictor::to_json() const {
  return json{{"format", kModelFormatTag},
              {"kind", kind()},
              {"schema", {{"features", schema_.feature_names},
                          {"response", schema_.response_name}}},
              {"standardizer", st_.to_json()},
              {"ml", ensemble_.to_json()}};
}

PredictorPtr fit_ensemble_model(LearnerKind kind, const Dataset& train, const TreeParams& p,
                                int jobs) {
  Standardizer st = Standardizer::fit(train);
  Dataset train_std = standardize_features(train, st);
  Ensemble ens = fit_ensemble(kind, train_std, p, jobs);
  return std::make_shared<EnsemblePredictor>(std::move(ens), std::move(st), train.schema());
}

// ---------------------------------------------------------------------------
// Bundle I/O

namespace {

DatasetSchema schema_from_json(const json& j) {
  DatasetSchema s;
  s.feature_names = j.at("features").get<std::vector<std::string>>();
  s.response_name = j.at("response").get<std::string>();
  s.validate();
  return s;
}

}  // namespace

PredictorPtr model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("format"))
    throw std::invalid_argument("not a model bundle: missing format tag");
  const std::string format = j.at("format").get<std::string>();
  if (format != kModelFormatTag)
    throw std::invalid_argument("unknown model format tag \"" + format + "\" (expected \"" +
                                kModelFormatTag + "\")");
  const std::string kind = j.at("kind").get<std::string>();
  DatasetSchema schema = schema_from_json(j.at("schema"));
  if (kind == "analytical-stencil" || kind == "analytical-fmm") {
    return std::make_shared<AnalyticalPredictor>(AnalyticalConfig::from_json(j.at("analytical")),
                                                 std::move(schema));
  }
  if (kind == "cart" || kind == "random-forest" || kind == "extra-trees") {
    Ensemble ens = Ensemble::from_json(j.at("ml"));
    if (to_string(ens.kind) != kind)
      throw std::invalid_argument("model bundle kind \"" + kind +
                                  "\" does not match its learner \"" + to_string(ens.kind) + "\"");
    return std::make_shared<EnsemblePredictor>(std::move(ens),
                                               Standardizer::from_json(j.at("standardizer")),
                                               std::move(schema));
  }
  if (kind == "stacked" || kind == "bagged-hybrid") return HybridPredictor::from_json(j);
  throw std::invalid_argument("unknown model kind: " + kind);
}

void save_model(const Predictor& model, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << model.to_json().dump(1, '\t') << "\n";
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

PredictorPtr load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("model file " + path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace perfweld
