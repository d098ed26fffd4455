#include "nowcast/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nowcast/diagnostics.hpp"
#include "nowcast/errors.hpp"
#include "nowcast/learner_registry.hpp"
#include "nowcast/rng.hpp"
#include "nowcast/standardize.hpp"

namespace nowcast {

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

QuarterRange range_from_json(const nlohmann::json& j) {
  return {QuarterIndex::parse(j.at(0).get<std::string>()),
          QuarterIndex::parse(j.at(1).get<std::string>())};
}

ParamDomain domain_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type");
  if (type == "real")
    return ParamDomain::real(j.at("lo").get<double>(), j.at("hi").get<double>(),
                             j.value("log", false));
  if (type == "int")
    return ParamDomain::integer(j.at("lo").get<std::int64_t>(), j.at("hi").get<std::int64_t>());
  if (type == "categorical")
    return ParamDomain::categorical(j.at("options").get<std::vector<std::string>>());
  throw ConfigError("search-space parameter type must be real, int or categorical");
}

nlohmann::json domain_to_json(const ParamDomain& d) {
  nlohmann::json j;
  switch (d.kind) {
    case ParamDomain::Kind::kReal:
      j["type"] = "real";
      j["lo"] = d.lo;
      j["hi"] = d.hi;
      j["log"] = d.log_scale;
      break;
    case ParamDomain::Kind::kInt:
      j["type"] = "int";
      j["lo"] = static_cast<std::int64_t>(d.lo);
      j["hi"] = static_cast<std::int64_t>(d.hi);
      break;
    case ParamDomain::Kind::kCategorical:
      j["type"] = "categorical";
      j["options"] = d.options;
      break;
  }
  return j;
}

}  // namespace

void RunConfig::validate() const {
  transform.validate();
  horizon.validate();
  breaks.validate();
  bootstrap.config.validate();
  if (models.empty()) throw ConfigError("model roster is empty");
  const auto known = known_models();
  for (const auto& m : models)
    if (std::find(known.begin(), known.end(), m) == known.end())
      throw ConfigError("unknown model '" + m + "' in roster");
  for (const auto& b : benchmarks)
    if (std::find(models.begin(), models.end(), b) == models.end())
      throw ConfigError("benchmark '" + b + "' is not in the roster");
  if (target.empty() && (nominal.empty() || deflator.empty()))
    throw ConfigError("config needs either a target column or nominal+deflator columns");
  if (hpo.n_trials < 1) throw ConfigError("hpo.n_trials must be >= 1");
  if (!(hpo.gamma_fraction > 0.0 && hpo.gamma_fraction < 1.0))
    throw ConfigError("hpo.gamma_fraction must be in (0,1)");
  if (!(mcs.alpha > 0.0 && mcs.alpha < 1.0)) throw ConfigError("mcs.alpha must be in (0,1)");
  if (combination.eta_grid.empty()) throw ConfigError("combination.eta_grid is empty");
}

std::string RunConfig::canonical_json() const {
  nlohmann::json j;
  j["data"] = {{"path", data_path},
               {"target", target},
               {"nominal", nominal},
               {"deflator", deflator}};
  j["transform"] = {{"forward_fill_limit", transform.forward_fill_limit},
                    {"adf_alpha", transform.adf_alpha},
                    {"adf_lags", transform.adf_lags},
                    {"neg_shock_threshold", transform.neg_shock_threshold},
                    {"pos_shock_threshold", transform.pos_shock_threshold}};
  j["horizon"] = {{"first_test", horizon.first_test.str()},
                  {"last_test", horizon.last_test.str()}};
  for (const auto& [name, range] : horizon.subperiods)
    j["horizon"]["subperiods"][name] = {range.first.str(), range.last.str()};
  j["models"] = models;
  j["benchmarks"] = benchmarks;
  for (const auto& [model, params] : search_spaces)
    for (const auto& [param, domain] : params)
      j["search_spaces"][model][param] = domain_to_json(domain);
  j["hpo"] = {{"n_trials", hpo.n_trials},
              {"n_startup", hpo.n_startup},
              {"gamma_fraction", hpo.gamma_fraction},
              {"n_candidates", hpo.n_candidates}};
  j["bootstrap"] = {{"intervals", bootstrap.intervals},
                    {"importance", bootstrap.importance},
                    {"block_len", bootstrap.config.block_len},
                    {"replicates", bootstrap.config.replicates},
                    {"alpha", bootstrap.config.alpha}};
  nlohmann::json jb = nlohmann::json::array();
  for (const auto& b : breaks.breaks) jb.push_back(b.str());
  j["breaks"] = jb;
  j["mcs"] = {{"alpha", mcs.alpha},
              {"replicates", mcs.replicates},
              {"block_len", mcs.block_len},
              {"statistic", mcs.statistic == McsStatistic::kTmax ? "Tmax" : "TR"}};
  j["combination"] = {{"eta_grid", combination.eta_grid}, {"lambda", combination.lambda}};
  j["seed"] = seed;
  j["gw_max_lag"] = gw_max_lag;
  return j.dump();
}

std::uint64_t RunConfig::hash() const { return fnv1a(canonical_json()); }

std::uint64_t RunConfig::tuning_hash() const {
  const auto all = nlohmann::json::parse(canonical_json());
  nlohmann::json j;
  for (const char* key : {"data", "transform", "horizon", "models", "search_spaces", "hpo",
                          "seed"})
    if (all.contains(key)) j[key] = all.at(key);
  return fnv1a(j.dump());
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig config;
  try {
    if (j.contains("data")) {
      const auto& d = j.at("data");
      config.data_path = d.value("path", "");
      config.target = d.value("target", "");
      config.nominal = d.value("nominal", "");
      config.deflator = d.value("deflator", "");
      if (d.contains("column_kinds"))
        for (const auto& [name, kind] : d.at("column_kinds").items())
          config.column_kinds[name] = column_kind_from_string(kind.get<std::string>());
    }
    if (j.contains("transform")) {
      const auto& t = j.at("transform");
      config.transform.forward_fill_limit =
          t.value("forward_fill_limit", config.transform.forward_fill_limit);
      config.transform.adf_alpha = t.value("adf_alpha", config.transform.adf_alpha);
      config.transform.adf_lags = t.value("adf_lags", config.transform.adf_lags);
      config.transform.neg_shock_threshold =
          t.value("neg_shock_threshold", config.transform.neg_shock_threshold);
      config.transform.pos_shock_threshold =
          t.value("pos_shock_threshold", config.transform.pos_shock_threshold);
    }
    if (j.contains("horizon")) {
      const auto& h = j.at("horizon");
      if (h.contains("first_test"))
        config.horizon.first_test = QuarterIndex::parse(h.at("first_test"));
      if (h.contains("last_test"))
        config.horizon.last_test = QuarterIndex::parse(h.at("last_test"));
      if (h.contains("subperiods")) {
        config.horizon.subperiods.clear();
        for (const auto& [name, range] : h.at("subperiods").items())
          config.horizon.subperiods[name] = range_from_json(range);
      } else {
        // keep defaults but re-anchor Overall to the configured horizon
        config.horizon.subperiods["Overall"] = {config.horizon.first_test,
                                                config.horizon.last_test};
      }
    }
    if (j.contains("models")) config.models = j.at("models").get<std::vector<std::string>>();
    if (j.contains("benchmarks"))
      config.benchmarks = j.at("benchmarks").get<std::vector<std::string>>();
    if (j.contains("search_spaces"))
      for (const auto& [model, params] : j.at("search_spaces").items())
        for (const auto& [param, domain] : params.items())
          config.search_spaces[model][param] = domain_from_json(domain);
    if (j.contains("hpo")) {
      const auto& h = j.at("hpo");
      config.hpo.n_trials = h.value("n_trials", config.hpo.n_trials);
      config.hpo.n_startup = h.value("n_startup", config.hpo.n_startup);
      config.hpo.gamma_fraction = h.value("gamma_fraction", config.hpo.gamma_fraction);
      config.hpo.n_candidates = h.value("n_candidates", config.hpo.n_candidates);
    }
    if (j.contains("bootstrap")) {
      const auto& b = j.at("bootstrap");
      config.bootstrap.intervals = b.value("intervals", config.bootstrap.intervals);
      config.bootstrap.importance = b.value("importance", config.bootstrap.importance);
      config.bootstrap.config.block_len = b.value("block_len", config.bootstrap.config.block_len);
      config.bootstrap.config.replicates =
          b.value("replicates", config.bootstrap.config.replicates);
      config.bootstrap.config.alpha = b.value("alpha", config.bootstrap.config.alpha);
    }
    if (j.contains("breaks")) {
      config.breaks.breaks.clear();
      for (const auto& b : j.at("breaks"))
        config.breaks.breaks.push_back(QuarterIndex::parse(b.get<std::string>()));
    }
    if (j.contains("mcs")) {
      const auto& m = j.at("mcs");
      config.mcs.alpha = m.value("alpha", config.mcs.alpha);
      config.mcs.replicates = m.value("replicates", config.mcs.replicates);
      config.mcs.block_len = m.value("block_len", config.mcs.block_len);
      const std::string stat = m.value("statistic", "Tmax");
      if (stat == "Tmax")
        config.mcs.statistic = McsStatistic::kTmax;
      else if (stat == "TR")
        config.mcs.statistic = McsStatistic::kTR;
      else
        throw ConfigError("mcs.statistic must be Tmax or TR");
    }
    if (j.contains("combination")) {
      const auto& c = j.at("combination");
      if (c.contains("eta_grid"))
        config.combination.eta_grid = c.at("eta_grid").get<std::vector<double>>();
      config.combination.lambda = c.value("lambda", config.combination.lambda);
    }
    config.seed = j.value("seed", config.seed);
    config.output_dir = j.value("output_dir", config.output_dir);
    config.gw_max_lag = j.value("gw_max_lag", config.gw_max_lag);
    config.cache_enabled = j.value("cache", config.cache_enabled);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config field: ") + e.what());
  }
  config.validate();
  return config;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

// ---------------------------------------------------------------------------
// Ingestion

std::string IngestLedger::json() const {
  nlohmann::json j;
  j["dropped_forward_fill"] = dropped_forward_fill;
  j["adf"] = nlohmann::json::array();
  for (const auto& d : adf_decisions) {
    nlohmann::json jd;
    jd["column"] = d.column;
    jd["dropped"] = d.dropped;
    jd["reason"] = d.reason == DropReason::kZeroVariance ? "zero variance" : "unit root";
    if (d.reason == DropReason::kUnitRoot) {
      jd["stat"] = d.result.stat;
      jd["critical_value"] = d.result.critical_value;
      jd["lags"] = d.result.lags;
    }
    j["adf"].push_back(std::move(jd));
  }
  return j.dump(2);
}

IngestResult ingest(const RunConfig& config) {
  config.validate();
  const RawTable raw = read_raw_csv(config.data_path);

  // target: named column or deflated growth built from nominal + deflator
  std::string target_name = config.target.empty() ? "target_growth" : config.target;
  std::vector<double> target;
  std::vector<QuarterIndex> quarters = raw.quarters;
  std::size_t drop_leading = 0;

  const auto raw_col = [&raw](const std::string& name) -> const std::vector<std::optional<double>>& {
    const auto it = std::find(raw.names.begin(), raw.names.end(), name);
    if (it == raw.names.end()) throw DataError("input has no column '" + name + "'");
    return raw.cells[static_cast<std::size_t>(it - raw.names.begin())];
  };

  if (!config.nominal.empty() && !config.deflator.empty()) {
    std::vector<double> nominal, deflator;
    for (const auto& cell : raw_col(config.nominal)) {
      if (!cell) throw DataError("nominal column has missing cells");
      nominal.push_back(*cell);
    }
    for (const auto& cell : raw_col(config.deflator)) {
      if (!cell) throw DataError("deflator column has missing cells");
      deflator.push_back(*cell);
    }
    target = deflate_and_growth(nominal, deflator);
    drop_leading = 1;  // growth starts one quarter later
    quarters.erase(quarters.begin());
  } else {
    for (const auto& cell : raw_col(target_name)) {
      if (!cell) throw DataError("target column '" + target_name + "' has missing cells");
      target.push_back(*cell);
    }
  }

  IngestResult result;
  result.frame = SeriesFrame(quarters);
  IngestLedger& ledger = result.ledger;

  for (std::size_t c = 0; c < raw.names.size(); ++c) {
    const std::string& name = raw.names[c];
    if (name == target_name || name == config.nominal || name == config.deflator) continue;
    auto cells = raw.cells[c];
    cells.erase(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(drop_leading));
    const auto filled = forward_fill(cells, config.transform.forward_fill_limit);
    if (filled.flagged_removed) {
      ledger.dropped_forward_fill.push_back(name);
      continue;
    }
    const auto kind_it = config.column_kinds.find(name);
    result.frame.add_column(name, filled.values,
                            kind_it == config.column_kinds.end() ? ColumnKind::kContinuous
                                                                 : kind_it->second);
  }

  auto filtered = adf_filter(result.frame, config.transform);
  ledger.adf_decisions = std::move(filtered.decisions);
  result.frame = std::move(filtered.frame);

  const auto dummies = build_dummies(target, result.frame.index(), config.transform);
  result.frame.add_column("seasonal_q1", dummies.q1, ColumnKind::kSeasonalDummy);
  result.frame.add_column("seasonal_q2", dummies.q2, ColumnKind::kSeasonalDummy);
  result.frame.add_column("seasonal_q3", dummies.q3, ColumnKind::kSeasonalDummy);
  result.frame.add_column("neg_shock", dummies.neg_shock, ColumnKind::kShockDummy);
  result.frame.add_column("pos_shock", dummies.pos_shock, ColumnKind::kShockDummy);
  result.frame.add_column(target_name, target, ColumnKind::kTarget);
  result.frame.validate();
  return result;
}

// ---------------------------------------------------------------------------
// Per-split evaluation engine

namespace {

struct SplitRows {
  std::size_t train_first, train_last, val_first, val_last, test_row;
};

class SplitEngine {
 public:
  SplitEngine(const SeriesFrame& frame, const SplitPlan& plan, const RunConfig& config)
      : config_(config), plan_(plan) {
    const auto test_row = frame.row_of(plan.test);
    if (!test_row) throw DataError("test quarter " + plan.test.str() + " not in the data");
    // structural no-look-ahead: everything after the test row is cut away
    view_ = neutralize_shock_dummies(frame.slice_rows(0, *test_row), plan);
    rows_.test_row = *test_row;
    rows_.train_first = *view_.row_of(plan.train.first);
    rows_.train_last = *view_.row_of(plan.train.last);
    rows_.val_first = *view_.row_of(plan.validation.first);
    rows_.val_last = *view_.row_of(plan.validation.last);

    target_ = view_.target_name();
    info_.names = view_.feature_names();
    for (const auto& name : info_.names) {
      const auto kind = view_.kind(name);
      info_.is_dummy.push_back(kind == ColumnKind::kSeasonalDummy ||
                               kind == ColumnKind::kShockDummy);
    }
  }

  const FeatureInfo& feature_info() const { return info_; }
  const SplitRows& rows() const { return rows_; }
  double actual() const { return view_.column(target_)[rows_.test_row]; }

  // validation MSE of a candidate configuration, trained on the train block
  double evaluate(const ModelSpec& spec, const ParamMap& params, std::uint64_t seed,
                  TrialContext* trial) const {
    const auto stats = standardize_fit(view_, rows_.train_first, rows_.train_last);
    const SeriesFrame std_frame = standardize_apply(view_, stats);
    const Eigen::MatrixXd x_train =
        std_frame.matrix(info_.names, rows_.train_first, rows_.train_last);
    const Eigen::VectorXd y_train =
        std_frame.vector(target_, rows_.train_first, rows_.train_last);
    const Eigen::MatrixXd x_val = std_frame.matrix(info_.names, rows_.val_first, rows_.val_last);
    const Eigen::VectorXd y_val = std_frame.vector(target_, rows_.val_first, rows_.val_last);

    auto learner = spec.build(params, info_, seed);
    learner->set_validation(x_val, y_val);
    if (trial)
      learner->set_progress_callback(
          [trial](int epoch, double loss) { return trial->report(epoch, loss); });
    learner->fit(x_train, y_train);

    double mse = 0.0;
    for (std::size_t r = rows_.val_first; r <= rows_.val_last; ++r) {
      const double pred = forecast_row(*learner, std_frame, r);
      const double err = pred - std_frame.column(target_)[r];
      mse += err * err;
    }
    return mse / static_cast<double>(rows_.val_last - rows_.val_first + 1);
  }

  struct FinalFit {
    double forecast = 0.0;
    std::map<std::string, double> importance;
    int epochs_used = 0;
  };

  // refit on train+validation with the chosen configuration, forecast the
  // test quarter
  FinalFit final_fit(const ModelSpec& spec, const ParamMap& params, std::uint64_t seed) const {
    const auto stats = standardize_fit(view_, rows_.train_first, rows_.val_last);
    const SeriesFrame std_frame = standardize_apply(view_, stats);
    const Eigen::MatrixXd x_fit = std_frame.matrix(info_.names, rows_.train_first, rows_.val_last);
    const Eigen::VectorXd y_fit = std_frame.vector(target_, rows_.train_first, rows_.val_last);

    auto learner = spec.build(params, info_, seed);
    learner->set_validation(std_frame.matrix(info_.names, rows_.val_first, rows_.val_last),
                            std_frame.vector(target_, rows_.val_first, rows_.val_last));
    learner->fit(x_fit, y_fit);

    FinalFit out;
    out.forecast = forecast_row(*learner, std_frame, rows_.test_row);
    out.importance = learner->importance();
    out.epochs_used = learner->epochs_used();
    return out;
  }

  struct BootstrapInputs {
    Eigen::MatrixXd x_fit;
    Eigen::VectorXd y_fit;
    std::vector<QuarterIndex> quarters;
    Eigen::VectorXd x_test;
    Eigen::MatrixXd test_window;
  };

  BootstrapInputs bootstrap_inputs() const {
    const auto stats = standardize_fit(view_, rows_.train_first, rows_.val_last);
    const SeriesFrame std_frame = standardize_apply(view_, stats);
    BootstrapInputs out;
    out.x_fit = std_frame.matrix(info_.names, rows_.train_first, rows_.val_last);
    out.y_fit = std_frame.vector(target_, rows_.train_first, rows_.val_last);
    out.quarters.assign(std_frame.index().begin() + static_cast<std::ptrdiff_t>(rows_.train_first),
                        std_frame.index().begin() + static_cast<std::ptrdiff_t>(rows_.val_last) + 1);
    out.x_test = std_frame.matrix(info_.names, rows_.test_row, rows_.test_row).row(0);
    const std::size_t w0 = rows_.test_row >= 3 ? rows_.test_row - 3 : 0;
    out.test_window = std_frame.matrix(info_.names, w0, rows_.test_row);
    return out;
  }

 private:
  double forecast_row(const Learner& learner, const SeriesFrame& std_frame,
                      std::size_t row) const {
    if (learner.wants_history()) {
      const std::size_t w0 = row >= 3 ? row - 3 : 0;
      return learner.predict_with_history(std_frame.matrix(info_.names, w0, row));
    }
    return learner.predict(std_frame.matrix(info_.names, row, row).row(0));
  }

  const RunConfig& config_;
  SplitPlan plan_;
  SeriesFrame view_;
  SplitRows rows_;
  std::string target_;
  FeatureInfo info_;
};

std::uint64_t model_stream(std::uint64_t master, std::uint64_t stage, std::size_t split,
                           const std::string& model) {
  return Rng::stream(master, {stage, static_cast<std::uint64_t>(split), fnv1a(model)}).next_u64();
}

nlohmann::json params_to_json(const ParamMap& params) {
  nlohmann::json j;
  for (const auto& [name, value] : params) {
    if (const auto* d = std::get_if<double>(&value))
      j[name] = *d;
    else if (const auto* i = std::get_if<std::int64_t>(&value))
      j[name] = *i;
    else
      j[name] = std::get<std::string>(value);
  }
  return j;
}

ParamMap params_from_json(const nlohmann::json& j) {
  ParamMap params;
  for (const auto& [name, value] : j.items()) {
    if (value.is_string())
      params[name] = value.get<std::string>();
    else if (value.is_number_integer())
      params[name] = value.get<std::int64_t>();
    else
      params[name] = value.get<double>();
  }
  return params;
}

struct SplitCache {
  bool hit = false;
  ParamMap params;
  double val_mse = 0.0;
};

SplitCache cache_lookup(const RunConfig& config, std::size_t split, const std::string& model) {
  SplitCache out;
  if (!config.cache_enabled) return out;
  const auto path = std::filesystem::path(config.output_dir) / "cache" /
                    ("split" + std::to_string(split) + "_" + model + ".json");
  std::ifstream in(path);
  if (!in) return out;
  try {
    nlohmann::json j;
    in >> j;
    if (j.at("config_hash").get<std::uint64_t>() != config.tuning_hash()) return out;
    out.params = params_from_json(j.at("params"));
    out.val_mse = j.value("val_mse", 0.0);
    out.hit = true;
  } catch (const std::exception&) {
    out.hit = false;
  }
  return out;
}

void cache_store(const RunConfig& config, std::size_t split, const std::string& model,
                 const ParamMap& params, double val_mse, const StudyState& study) {
  if (!config.cache_enabled) return;
  const auto dir = std::filesystem::path(config.output_dir) / "cache";
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return;  // caching is best-effort
  nlohmann::json j;
  j["config_hash"] = config.tuning_hash();
  j["params"] = params_to_json(params);
  j["val_mse"] = val_mse;
  j["study"] = nlohmann::json::parse(study_to_json(study));  // full trial log for audit/resume
  std::ofstream out(dir / ("split" + std::to_string(split) + "_" + model + ".json"));
  out << j.dump(2);
}

}  // namespace

// ---------------------------------------------------------------------------
// Pipeline

namespace {

// stage-tagged rethrow; the partial ledger is flushed for debugging first
[[noreturn]] void abort_stage(const RunLedger& ledger, const std::string& stage,
                              const std::exception& cause) {
  std::error_code ec;
  std::filesystem::create_directories(ledger.config.output_dir, ec);
  if (!ec) {
    std::ofstream out(std::filesystem::path(ledger.config.output_dir) / "partial_ledger.json");
    out << ledger.json();
  }
  const std::string what = "[stage: " + stage + "] " + cause.what();
  if (dynamic_cast<const ConfigError*>(&cause)) throw ConfigError(what);
  if (dynamic_cast<const DataError*>(&cause)) throw DataError(what);
  throw NumericError(what);
}

}  // namespace

RunLedger run_on_frame(const RunConfig& config, const SeriesFrame& frame) {
  config.validate();
  frame.validate();

  RunLedger ledger;
  ledger.config = config;
  ledger.feature_names = frame.feature_names();

  const QuarterRange data_range{frame.index().front(), frame.index().back()};
  std::vector<SplitPlan> plans;
  try {
    plans = plan_walk_forward(data_range, config.horizon);
  } catch (const std::exception& e) {
    abort_stage(ledger, "plan", e);
  }

  const auto n_features = static_cast<int>(ledger.feature_names.size());
  std::map<std::string, ModelSpec> specs;
  for (const auto& name : config.models) {
    auto spec = model_spec(name, n_features);
    const auto overrides = config.search_spaces.find(name);
    if (overrides != config.search_spaces.end()) {
      for (const auto& [param, domain] : overrides->second) {
        if (!spec.space.parameters.count(param))
          throw ConfigError("model '" + name + "' has no parameter '" + param + "'");
        spec.space.parameters[param] = domain;
      }
    }
    specs.emplace(name, std::move(spec));
  }

  // stage 1-3: per-split tuning, refit, forecast, uncertainty, importance
  for (std::size_t s = 0; s < plans.size(); ++s) {
    try {
    const SplitEngine engine(frame, plans[s], config);
    SplitOutcome outcome;
    outcome.plan = plans[s];
    outcome.actual = engine.actual();

    for (const auto& name : config.models) {
      const auto& spec = specs.at(name);
      ParamMap best;
      if (spec.tuned) {
        const auto cached = cache_lookup(config, s, name);
        if (cached.hit) {
          best = cached.params;
          outcome.validation_mse[name] = cached.val_mse;
        } else {
          StudyState study;
          study.n_trials = config.hpo.n_trials;
          study.n_startup = config.hpo.n_startup;
          study.gamma_fraction = config.hpo.gamma_fraction;
          study.n_candidates = config.hpo.n_candidates;
          study.seed = model_stream(config.seed, 0x100, s, name);
          const std::uint64_t fit_seed = model_stream(config.seed, 0x200, s, name);
          const auto objective = [&](const ParamMap& params, TrialContext& ctx) {
            return engine.evaluate(spec, params, fit_seed, &ctx);
          };
          const auto result = optimize(objective, spec.space, study);
          best = result.best_params;
          outcome.validation_mse[name] = result.best_loss;
          cache_store(config, s, name, best, result.best_loss, result.study);
        }
      }
      const auto fit =
          engine.final_fit(spec, best, model_stream(config.seed, 0x200, s, name));
      outcome.forecasts[name] = fit.forecast;
      outcome.importances[name] = fit.importance;
      if (spec.tuned) outcome.chosen_params[name] = best;

      if (config.bootstrap.intervals || config.bootstrap.importance) {
        const auto inputs = engine.bootstrap_inputs();
        const int epoch_cap = fit.epochs_used;
        const auto factory = [&spec, &engine, best, epoch_cap](std::uint64_t seed)
            -> std::unique_ptr<Learner> {
          auto learner = spec.build(best, engine.feature_info(), seed);
          if (epoch_cap > 0) learner->set_epoch_budget(epoch_cap);
          return learner;
        };
        BootstrapConfig bcfg = config.bootstrap.config;
        bcfg.seed = model_stream(config.seed, 0x300, s, name);
        if (config.bootstrap.intervals) {
          const auto interval =
              prediction_interval(factory, inputs.x_fit, inputs.y_fit, inputs.quarters,
                                  inputs.x_test, &inputs.test_window, config.breaks, bcfg);
          outcome.intervals[name] = {interval.lower, interval.upper};
        }
        if (config.bootstrap.importance && !fit.importance.empty()) {
          const auto ci = importance_ci(factory, inputs.x_fit, inputs.y_fit, inputs.quarters,
                                        config.breaks, bcfg);
          outcome.importance_cis[name] = ci.bounds;
        }
      }
    }
    ledger.splits.push_back(std::move(outcome));
    } catch (const std::exception& e) {
      abort_stage(ledger, "split " + std::to_string(s) + " (" + plans[s].test.str() + ")", e);
    }
  }

  // stage 4: loss matrix
  ledger.losses.models = config.models;
  for (const auto& outcome : ledger.splits) ledger.losses.quarters.push_back(outcome.plan.test);
  ledger.losses.losses.resize(static_cast<Eigen::Index>(ledger.splits.size()),
                              static_cast<Eigen::Index>(config.models.size()));
  for (std::size_t s = 0; s < ledger.splits.size(); ++s)
    for (std::size_t m = 0; m < config.models.size(); ++m) {
      const double err = ledger.splits[s].forecasts.at(config.models[m]) -
                         ledger.splits[s].actual;
      ledger.losses.losses(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(m)) =
          err * err;
    }

  // stage 5: MCS over the non-benchmark candidates
  std::vector<std::string> candidates;
  for (const auto& name : config.models)
    if (!specs.at(name).benchmark) candidates.push_back(name);
  if (candidates.empty()) candidates = config.models;

  LossMatrix candidate_losses;
  candidate_losses.quarters = ledger.losses.quarters;
  candidate_losses.models = candidates;
  candidate_losses.losses.resize(ledger.losses.losses.rows(),
                                 static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t m = 0; m < candidates.size(); ++m)
    candidate_losses.losses.col(static_cast<Eigen::Index>(m)) =
        ledger.losses.losses.col(static_cast<Eigen::Index>(ledger.losses.model_pos(candidates[m])));
  try {
    ledger.mcs_result = mcs(candidate_losses, config.mcs.alpha, config.mcs.replicates,
                            config.mcs.block_len, config.mcs.statistic,
                            Rng::stream(config.seed, {0x400}).next_u64());
  } catch (const std::exception& e) {
    abort_stage(ledger, "mcs", e);
  }

  // stage 6: combinations over the survivors
  ForecastPanel panel;
  panel.quarters = ledger.losses.quarters;
  panel.models = ledger.mcs_result.survivors;
  panel.forecasts.resize(static_cast<Eigen::Index>(panel.quarters.size()),
                         static_cast<Eigen::Index>(panel.models.size()));
  panel.actuals.resize(static_cast<Eigen::Index>(panel.quarters.size()));
  for (std::size_t s = 0; s < ledger.splits.size(); ++s) {
    panel.actuals(static_cast<Eigen::Index>(s)) = ledger.splits[s].actual;
    for (std::size_t m = 0; m < panel.models.size(); ++m)
      panel.forecasts(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(m)) =
          ledger.splits[s].forecasts.at(panel.models[m]);
  }
  try {
    ledger.combinations.emplace("SA", combine_sa(panel));
    ledger.combinations.emplace("WA", combine_wa(panel));
    ledger.combinations.emplace(
        "EWA", combine_meta_ewa(panel, config.combination.eta_grid, config.combination.lambda)
                   .combined);
  } catch (const std::exception& e) {
    abort_stage(ledger, "combine", e);
  }

  // stage 7: diagnostics and predictive-ability tests
  try {
  std::vector<double> actuals(panel.actuals.data(), panel.actuals.data() + panel.actuals.size());
  const int lb_lags = 4;
  for (const auto& [name, combo] : ledger.combinations) {
    std::vector<double> resid(actuals.size());
    for (std::size_t t = 0; t < actuals.size(); ++t) resid[t] = actuals[t] - combo.values[t];
    if (resid.size() >= 3) {
      const auto sw = shapiro_wilk(resid);
      ledger.diagnostics_sw[name] = {sw.w, sw.p_value};
    }
    if (static_cast<int>(resid.size()) > lb_lags) {
      const auto lb = ljung_box(resid, lb_lags);
      ledger.diagnostics_lb[name] = {lb.q, lb.p_value};
    }
    ledger.combo_metrics_overall[name] = metrics(combo.values, actuals);
  }

  std::vector<std::string> benchmarks = config.benchmarks;
  if (benchmarks.empty())
    for (const auto& name : config.models)
      if (specs.at(name).benchmark) benchmarks.push_back(name);

  const auto loss_column = [&](const std::string& model) {
    std::vector<double> out(ledger.splits.size());
    const auto pos = ledger.losses.model_pos(model);
    for (std::size_t s = 0; s < out.size(); ++s)
      out[s] = ledger.losses.losses(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(pos));
    return out;
  };
  const auto combo_losses = [&](const CombinedForecast& combo) {
    std::vector<double> out(actuals.size());
    for (std::size_t t = 0; t < actuals.size(); ++t) {
      const double e = combo.values[t] - actuals[t];
      out[t] = e * e;
    }
    return out;
  };

  if (ledger.splits.size() >= 8) {
    for (const auto& bench : benchmarks) {
      const auto bench_losses = loss_column(bench);
      for (const auto& model : ledger.mcs_result.survivors) {
        if (model == bench) continue;
        ledger.gw_reports[model + "|" + bench] =
            giacomini_white(loss_column(model), bench_losses, config.gw_max_lag);
      }
      for (const auto& [name, combo] : ledger.combinations)
        ledger.gw_reports[name + "|" + bench] =
            giacomini_white(combo_losses(combo), bench_losses, config.gw_max_lag);
    }
  }

  } catch (const std::exception& e) {
    abort_stage(ledger, "evaluate", e);
  }

  return ledger;
}

RunLedger run(const RunConfig& config) {
  const auto ingested = ingest(config);
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (!ec) {
    write_frame_csv(ingested.frame,
                    (std::filesystem::path(config.output_dir) / "clean.csv").string());
    std::ofstream out(std::filesystem::path(config.output_dir) / "ingest_ledger.json");
    out << ingested.ledger.json();
  }
  return run_on_frame(config, ingested.frame);
}

// ---------------------------------------------------------------------------
// Ledger serialization

std::string RunLedger::json() const {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(config.canonical_json());
  j["features"] = feature_names;

  j["splits"] = nlohmann::json::array();
  for (const auto& s : splits) {
    nlohmann::json js;
    js["test"] = s.plan.test.str();
    js["train"] = {s.plan.train.first.str(), s.plan.train.last.str()};
    js["validation"] = {s.plan.validation.first.str(), s.plan.validation.last.str()};
    js["actual"] = s.actual;
    for (const auto& [model, f] : s.forecasts) js["forecasts"][model] = f;
    for (const auto& [model, p] : s.chosen_params) js["params"][model] = params_to_json(p);
    for (const auto& [model, v] : s.validation_mse) js["validation_mse"][model] = v;
    for (const auto& [model, iv] : s.intervals)
      js["intervals"][model] = {iv.first, iv.second};
    for (const auto& [model, imp] : s.importances) {
      nlohmann::json ji;
      for (const auto& [feat, v] : imp) ji[feat] = v;
      js["importance"][model] = std::move(ji);
    }
    for (const auto& [model, cis] : s.importance_cis) {
      nlohmann::json jc;
      for (const auto& [feat, b] : cis) jc[feat] = {b.first, b.second};
      js["importance_ci"][model] = std::move(jc);
    }
    j["splits"].push_back(std::move(js));
  }

  j["mcs"]["survivors"] = mcs_result.survivors;
  for (const auto& [model, p] : mcs_result.p_values) j["mcs"]["p_values"][model] = p;
  j["mcs"]["ranking"] = mcs_result.ranking;

  for (const auto& [name, combo] : combinations) {
    nlohmann::json jc;
    jc["values"] = combo.values;
    jc["models"] = combo.weights.models;
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index t = 0; t < combo.weights.weights.rows(); ++t) {
      std::vector<double> row(static_cast<std::size_t>(combo.weights.weights.cols()));
      for (Eigen::Index m = 0; m < combo.weights.weights.cols(); ++m)
        row[static_cast<std::size_t>(m)] = combo.weights.weights(t, m);
      rows.push_back(row);
    }
    jc["weights"] = std::move(rows);
    j["combinations"][name] = std::move(jc);
  }

  for (const auto& [key, report] : gw_reports) {
    nlohmann::json jg;
    jg["intercept"] = report.intercept;
    jg["intercept_p"] = report.intercept_p;
    jg["wald"] = report.wald;
    jg["wald_p"] = report.wald_p;
    jg["degenerate"] = report.degenerate;
    j["gw"][key] = std::move(jg);
  }
  for (const auto& [name, sw] : diagnostics_sw)
    j["diagnostics"][name]["shapiro_wilk"] = {sw.first, sw.second};
  for (const auto& [name, lb] : diagnostics_lb)
    j["diagnostics"][name]["ljung_box"] = {lb.first, lb.second};
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Synthetic data

SeriesFrame synthetic_frame(int quarters, int features, std::uint64_t seed) {
  if (quarters < 30 || features < 3) throw ConfigError("synthetic frame too small");
  Rng rng(seed);
  std::vector<QuarterIndex> index;
  for (int i = 0; i < quarters; ++i) index.push_back(QuarterIndex{1990, 1}.plus(i));

  SeriesFrame frame(index);
  std::vector<std::vector<double>> x(static_cast<std::size_t>(features),
                                     std::vector<double>(static_cast<std::size_t>(quarters)));
  for (int f = 0; f < features; ++f) {
    double prev = 0.0;
    const double phi = 0.3 + 0.04 * (f % 10);
    for (int t = 0; t < quarters; ++t) {
      prev = phi * prev + rng.normal();
      x[static_cast<std::size_t>(f)][static_cast<std::size_t>(t)] = prev;
    }
  }

  // target mixes the first three regressors contemporaneously plus seasonal
  // structure; regressors at t are released before the target (nowcasting)
  std::vector<double> target(static_cast<std::size_t>(quarters));
  for (int t = 0; t < quarters; ++t) {
    const double seasonal = index[static_cast<std::size_t>(t)].quarter == 1 ? 0.8 : 0.0;
    target[static_cast<std::size_t>(t)] = 1.2 * x[0][static_cast<std::size_t>(t)] -
                                          0.9 * x[1][static_cast<std::size_t>(t)] +
                                          0.6 * x[2][static_cast<std::size_t>(t)] + seasonal +
                                          0.4 * rng.normal();
  }

  for (int f = 0; f < features; ++f)
    frame.add_column("x" + std::to_string(f), x[static_cast<std::size_t>(f)],
                     ColumnKind::kContinuous);
  const TransformSpec spec;
  const auto dummies = build_dummies(target, index, spec);
  frame.add_column("seasonal_q1", dummies.q1, ColumnKind::kSeasonalDummy);
  frame.add_column("seasonal_q2", dummies.q2, ColumnKind::kSeasonalDummy);
  frame.add_column("seasonal_q3", dummies.q3, ColumnKind::kSeasonalDummy);
  frame.add_column("neg_shock", dummies.neg_shock, ColumnKind::kShockDummy);
  frame.add_column("pos_shock", dummies.pos_shock, ColumnKind::kShockDummy);
  frame.add_column("gdp_growth", target, ColumnKind::kTarget);
  return frame;
}

}  // namespace nowcast
