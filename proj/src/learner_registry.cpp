#include "nowcast/learner_registry.hpp"

#include <algorithm>

#include "nowcast/ensemble.hpp"
#include "nowcast/errors.hpp"
#include "nowcast/factor.hpp"
#include "nowcast/linear.hpp"
#include "nowcast/neural.hpp"

namespace nowcast {

std::vector<std::string> known_models() {
  return {"rw",  "ar3", "dfm", "ridge", "lasso", "enet",
          "pcr", "plsr", "rf",  "xgb",  "mlp",   "gru"};
}

namespace {

TrainSchedule schedule_from(const ParamMap& params, std::uint64_t seed) {
  TrainSchedule s;
  s.max_epochs = 200;
  s.early_stop_patience = 30;
  s.lr = param_real(params, "lr");
  s.batch_size = static_cast<int>(param_int(params, "batch_size"));
  s.seed = seed;
  return s;
}

}  // namespace

ModelSpec model_spec(const std::string& name, int n_features) {
  ModelSpec spec;
  spec.name = name;

  if (name == "rw") {
    spec.tuned = false;
    spec.benchmark = true;
    spec.build = [](const ParamMap&, const FeatureInfo&, std::uint64_t) {
      return std::make_unique<RwLearner>();
    };
    return spec;
  }
  if (name == "ar3") {
    spec.tuned = false;
    spec.benchmark = true;
    spec.build = [](const ParamMap&, const FeatureInfo&, std::uint64_t) {
      return std::make_unique<ArLearner>(3);
    };
    return spec;
  }
  if (name == "dfm") {
    spec.benchmark = true;
    spec.space.parameters["r"] = ParamDomain::integer(1, std::max(1, std::min(10, n_features)));
    spec.space.parameters["p_ar"] = ParamDomain::integer(0, 4);
    spec.build = [](const ParamMap& p, const FeatureInfo& info, std::uint64_t) {
      return std::make_unique<DfmLearner>(info, static_cast<int>(param_int(p, "r")),
                                          static_cast<int>(param_int(p, "p_ar")));
    };
    return spec;
  }
  if (name == "ridge") {
    spec.space.parameters["alpha"] = ParamDomain::real(1e-4, 1e3, true);
    spec.build = [](const ParamMap& p, const FeatureInfo& info, std::uint64_t) {
      return std::make_unique<PenalizedLearner>(PenaltyKind::kRidge, info,
                                                param_real(p, "alpha"));
    };
    return spec;
  }
  if (name == "lasso") {
    spec.space.parameters["lambda"] = ParamDomain::real(1e-4, 1e2, true);
    spec.build = [](const ParamMap& p, const FeatureInfo& info, std::uint64_t) {
      return std::make_unique<PenalizedLearner>(PenaltyKind::kLasso, info,
                                                param_real(p, "lambda"));
    };
    return spec;
  }
  if (name == "enet") {
    spec.space.parameters["alpha"] = ParamDomain::real(1e-4, 1e2, true);
    spec.space.parameters["gamma_mix"] = ParamDomain::real(0.0, 1.0);
    spec.build = [](const ParamMap& p, const FeatureInfo& info, std::uint64_t) {
      return std::make_unique<PenalizedLearner>(PenaltyKind::kElasticNet, info,
                                                param_real(p, "alpha"),
                                                param_real(p, "gamma_mix"));
    };
    return spec;
  }
  if (name == "pcr") {
    spec.space.parameters["k"] = ParamDomain::integer(1, std::max(1, std::min(20, n_features)));
    spec.space.parameters["lambda"] = ParamDomain::real(1e-4, 1e3, true);
    spec.build = [](const ParamMap& p, const FeatureInfo& info, std::uint64_t) {
      return std::make_unique<PcrLearner>(info, static_cast<int>(param_int(p, "k")),
                                          param_real(p, "lambda"));
    };
    return spec;
  }
  if (name == "plsr") {
    spec.space.parameters["components"] =
        ParamDomain::integer(1, std::max(1, std::min(10, n_features)));
    spec.build = [](const ParamMap& p, const FeatureInfo& info, std::uint64_t) {
      return std::make_unique<PlsLearner>(info, static_cast<int>(param_int(p, "components")));
    };
    return spec;
  }
  if (name == "rf") {
    spec.space.parameters["n_estimators"] = ParamDomain::integer(50, 300);
    spec.space.parameters["max_depth"] = ParamDomain::integer(2, 12);
    spec.space.parameters["min_samples_split"] = ParamDomain::integer(2, 10);
    spec.space.parameters["min_samples_leaf"] = ParamDomain::integer(1, 8);
    spec.space.parameters["m_try_fraction"] = ParamDomain::real(0.2, 1.0);
    spec.space.parameters["criterion"] =
        ParamDomain::categorical({"squared_error", "absolute_error"});
    spec.build = [n_features](const ParamMap& p, const FeatureInfo& info, std::uint64_t seed) {
      ForestConfig config;
      config.n_estimators = static_cast<int>(param_int(p, "n_estimators"));
      config.tree.max_depth = static_cast<int>(param_int(p, "max_depth"));
      config.tree.min_samples_split = static_cast<int>(param_int(p, "min_samples_split"));
      config.tree.min_samples_leaf = static_cast<int>(param_int(p, "min_samples_leaf"));
      config.tree.m_try = std::max(
          1, static_cast<int>(param_real(p, "m_try_fraction") * n_features));
      config.tree.criterion = param_cat(p, "criterion") == "absolute_error"
                                  ? SplitCriterion::kAbsoluteError
                                  : SplitCriterion::kSquaredError;
      config.seed = seed;
      return std::make_unique<RfLearner>(info, config);
    };
    return spec;
  }
  if (name == "xgb") {
    spec.space.parameters["n_rounds"] = ParamDomain::integer(50, 300);
    spec.space.parameters["max_depth"] = ParamDomain::integer(2, 8);
    spec.space.parameters["learning_rate"] = ParamDomain::real(0.01, 0.5, true);
    spec.space.parameters["gamma_split"] = ParamDomain::real(1e-8, 1.0, true);
    spec.space.parameters["min_child_weight"] = ParamDomain::real(1.0, 10.0);
    spec.space.parameters["subsample"] = ParamDomain::real(0.5, 1.0);
    spec.space.parameters["colsample"] = ParamDomain::real(0.5, 1.0);
    spec.space.parameters["reg_lambda"] = ParamDomain::real(1e-3, 10.0, true);
    spec.build = [](const ParamMap& p, const FeatureInfo& info, std::uint64_t seed) {
      BoostConfig config;
      config.n_rounds = static_cast<int>(param_int(p, "n_rounds"));
      config.max_depth = static_cast<int>(param_int(p, "max_depth"));
      config.learning_rate = param_real(p, "learning_rate");
      config.gamma_split = param_real(p, "gamma_split");
      config.min_child_weight = param_real(p, "min_child_weight");
      config.subsample = param_real(p, "subsample");
      config.colsample = param_real(p, "colsample");
      config.lambda_l2 = param_real(p, "reg_lambda");
      config.seed = seed;
      return std::make_unique<XgbLearner>(info, config);
    };
    return spec;
  }
  if (name == "mlp") {
    spec.space.parameters["hidden_dim"] = ParamDomain::integer(4, 64);
    spec.space.parameters["num_hidden_layers"] = ParamDomain::integer(1, 2);
    spec.space.parameters["dropout_rate"] = ParamDomain::real(0.0, 0.5);
    spec.space.parameters["lr"] = ParamDomain::real(1e-4, 1e-2, true);
    spec.space.parameters["batch_size"] = ParamDomain::integer(8, 32);
    spec.build = [](const ParamMap& p, const FeatureInfo& info, std::uint64_t seed) {
      MlpConfig config;
      config.hidden_dim = static_cast<int>(param_int(p, "hidden_dim"));
      config.num_hidden_layers = static_cast<int>(param_int(p, "num_hidden_layers"));
      config.dropout_rate = param_real(p, "dropout_rate");
      return std::make_unique<MlpLearner>(info, config, schedule_from(p, seed));
    };
    return spec;
  }
  if (name == "gru") {
    spec.space.parameters["hidden_dim"] = ParamDomain::integer(4, 32);
    spec.space.parameters["num_layers"] = ParamDomain::integer(1, 2);
    spec.space.parameters["dropout_rate"] = ParamDomain::real(0.0, 0.5);
    spec.space.parameters["l2_reg"] = ParamDomain::real(1e-6, 1e-2, true);
    spec.space.parameters["lr"] = ParamDomain::real(1e-4, 1e-2, true);
    spec.space.parameters["batch_size"] = ParamDomain::integer(8, 32);
    spec.build = [](const ParamMap& p, const FeatureInfo& info, std::uint64_t seed) {
      GruConfig config;
      config.hidden_dim = static_cast<int>(param_int(p, "hidden_dim"));
      config.num_layers = static_cast<int>(param_int(p, "num_layers"));
      config.dropout_rate = param_real(p, "dropout_rate");
      config.l2_reg = param_real(p, "l2_reg");
      config.seq_len = 4;
      return std::make_unique<GruLearner>(info, config, schedule_from(p, seed));
    };
    return spec;
  }
  throw ConfigError("unknown model '" + name + "'");
}

}  // namespace nowcast
