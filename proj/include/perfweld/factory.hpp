#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perfweld/eval.hpp"
#include "perfweld/hybrid.hpp"
#include "perfweld/model.hpp"

namespace perfweld {

// Options shared by every model built from a name. The analytical config
// is required for hybrid-* and analytical-* names.
struct ModelFactoryOptions {
  TreeParams params;
  std::optional<AnalyticalConfig> analytical;
  Aggregate aggregate = Aggregate::stacked_only;
  BagWeights weight_policy = BagWeights::uniform;
  int jobs = 1;
};

// Names: cart, random-forest (rf), extra-trees (extra), hybrid-stencil,
// hybrid-fmm, analytical-stencil, analytical-fmm.
std::vector<std::string> known_model_names();
std::string canonical_model_name(const std::string& name);

PredictorPtr train_named_model(const std::string& name, const Dataset& train,
                               std::uint64_t seed, const ModelFactoryOptions& opts);

// ModelSpec whose fit callback trains `name` with the cell seed.
ModelSpec make_model_spec(const std::string& name, const ModelFactoryOptions& opts);

}  // namespace perfweld
