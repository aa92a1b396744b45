#include "perfweld/factory.hpp"

#include <stdexcept>

namespace perfweld {

std::vector<std::string> known_model_names() {
  return {"cart",         "random-forest",      "extra-trees",    "hybrid-stencil",
          "hybrid-fmm",   "analytical-stencil", "analytical-fmm"};
}

std::string canonical_model_name(const std::string& name) {
  if (name == "rf") return "random-forest";
  if (name == "extra") return "extra-trees";
  for (const auto& known : known_model_names())
    if (name == known) return known;
  throw std::invalid_argument("unknown model \"" + name + "\"");
}

namespace {

AnalyticalConfig analytical_for(const std::string& name, const ModelFactoryOptions& opts) {
  if (!opts.analytical)
    throw std::invalid_argument("model \"" + name + "\" needs a machine spec (--spec)");
  AnalyticalConfig cfg = *opts.analytical;
  const bool wants_stencil = name.find("stencil") != std::string::npos;
  cfg.kind = wants_stencil ? AnalyticalConfig::Kind::stencil : AnalyticalConfig::Kind::fmm;
  return cfg;
}

}  // namespace

PredictorPtr train_named_model(const std::string& name, const Dataset& train,
                               std::uint64_t seed, const ModelFactoryOptions& opts) {
  const std::string canonical = canonical_model_name(name);
  TreeParams params = opts.params;
  params.seed = seed;

  if (canonical == "cart" || canonical == "random-forest" || canonical == "extra-trees")
    return fit_ensemble_model(learner_kind_from_string(canonical), train, params, opts.jobs);

  if (canonical == "hybrid-stencil" || canonical == "hybrid-fmm") {
    HybridConfig cfg;
    cfg.analytical = analytical_for(canonical, opts);
    cfg.learner = LearnerKind::extra_trees;
    cfg.params = params;
    cfg.aggregate = opts.aggregate;
    cfg.weight_policy = opts.weight_policy;
    return fit_hybrid(train, cfg, opts.jobs);
  }

  // analytical-stencil / analytical-fmm: nothing to fit, but the schema is
  // taken from the training data
  return std::make_shared<AnalyticalPredictor>(analytical_for(canonical, opts),
                                               train.schema());
}

ModelSpec make_model_spec(const std::string& name, const ModelFactoryOptions& opts) {
  const std::string canonical = canonical_model_name(name);
  ModelSpec spec;
  spec.name = canonical;
  spec.fit = [canonical, opts](const Dataset& train, std::uint64_t seed) {
    return train_named_model(canonical, train, seed, opts);
  };
  return spec;
}

}  // namespace perfweld
