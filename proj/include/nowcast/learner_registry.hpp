#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nowcast/learner.hpp"
#include "nowcast/tpe.hpp"

namespace nowcast {

// Roster entry: default hyperparameter search space plus a builder turning a
// parameter assignment into a fresh learner.
struct ModelSpec {
  std::string name;
  bool tuned = true;       // benchmarks skip the TPE stage
  bool benchmark = false;  // used as a denominator in ratio/GW reports
  SearchSpace space;
  std::function<std::unique_ptr<Learner>(const ParamMap&, const FeatureInfo&, std::uint64_t seed)>
      build;
};

// Known model names: rw, ar3, dfm, ridge, lasso, enet, pcr, plsr, rf, xgb,
// mlp, gru.
std::vector<std::string> known_models();

// Spec for one model; search-space bounds that depend on the feature count
// (component counts) are clamped to n_features.
ModelSpec model_spec(const std::string& name, int n_features);

}  // namespace nowcast
