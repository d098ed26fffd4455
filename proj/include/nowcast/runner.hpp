#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nowcast/adf.hpp"
#include "nowcast/bootstrap.hpp"
#include "nowcast/combine.hpp"
#include "nowcast/csv.hpp"
#include "nowcast/gw.hpp"
#include "nowcast/mcs.hpp"
#include "nowcast/metrics.hpp"
#include "nowcast/series_frame.hpp"
#include "nowcast/tpe.hpp"
#include "nowcast/transform.hpp"
#include "nowcast/windows.hpp"

namespace nowcast {

struct HpoConfig {
  int n_trials = 60;
  int n_startup = 10;
  double gamma_fraction = 0.10;
  int n_candidates = 24;
};

struct BootstrapStageConfig {
  bool intervals = true;
  bool importance = true;
  BootstrapConfig config;  // block 4, B=1000, 2.5% tails
};

struct McsConfig {
  double alpha = 0.10;
  int replicates = 10000;
  int block_len = 4;
  McsStatistic statistic = McsStatistic::kTmax;
};

struct CombinationConfig {
  std::vector<double> eta_grid{0.01, 0.05, 0.1, 0.5, 1.0, 2.0};
  double lambda = 1.0;
};

struct RunConfig {
  std::string data_path;
  std::string target;                       // target column name
  std::string nominal, deflator;            // optional: derive target from these
  std::map<std::string, ColumnKind> column_kinds;
  TransformSpec transform;
  Horizon horizon = Horizon::with_defaults();
  std::vector<std::string> models{"rw", "ar3", "ridge", "enet", "pcr", "plsr"};
  std::vector<std::string> benchmarks;      // defaults to benchmark-flagged roster models
  // per-model, per-parameter overrides of the built-in search spaces
  std::map<std::string, std::map<std::string, ParamDomain>> search_spaces;
  HpoConfig hpo;
  BootstrapStageConfig bootstrap;
  BreakSchedule breaks = BreakSchedule::with_defaults();
  McsConfig mcs;
  CombinationConfig combination;
  std::uint64_t seed = 42;
  std::string output_dir = "out";
  int gw_max_lag = 4;
  bool cache_enabled = true;

  void validate() const;
  std::string canonical_json() const;
  std::uint64_t hash() const;
  // hash over the fields that determine tuned hyperparameters (data,
  // transform, horizon, roster, search spaces, hpo, seed); the split cache
  // keys on this so downstream-stage settings can change without retuning
  std::uint64_t tuning_hash() const;

  static RunConfig from_json_file(const std::string& path);
  static RunConfig from_json_text(const std::string& text);
};

struct IngestLedger {
  std::vector<std::string> dropped_forward_fill;   // too many leading gaps
  std::vector<AdfDecision> adf_decisions;
  std::string json() const;
};

struct IngestResult {
  SeriesFrame frame;
  IngestLedger ledger;
};

// Raw CSV -> stationary, dummy-augmented design frame plus the audit ledger.
IngestResult ingest(const RunConfig& config);

struct SplitOutcome {
  SplitPlan plan;
  double actual = 0.0;
  std::map<std::string, double> forecasts;                       // per model
  std::map<std::string, ParamMap> chosen_params;                 // tuned models
  std::map<std::string, double> validation_mse;                  // tuned models
  std::map<std::string, std::pair<double, double>> intervals;    // per model
  std::map<std::string, std::map<std::string, double>> importances;
  std::map<std::string, std::map<std::string, std::pair<double, double>>> importance_cis;
};

struct RunLedger {
  RunConfig config;
  std::vector<std::string> feature_names;
  std::vector<SplitOutcome> splits;
  LossMatrix losses;
  McsResult mcs_result;
  std::map<std::string, CombinedForecast> combinations;  // SA / WA / EWA
  std::map<std::string, MetricBundle> combo_metrics_overall;
  std::map<std::string, GwReport> gw_reports;            // "model|benchmark" keyed
  std::map<std::string, std::pair<double, double>> diagnostics_sw;    // per combo: (W, p)
  std::map<std::string, std::pair<double, double>> diagnostics_lb;    // per combo: (Q, p)

  std::string json() const;
};

// Executes the full pipeline: ingest, plan, per-split HPO/fit/forecast,
// bootstrap, explain, MCS, combinations, tests. Deterministic given the seed.
RunLedger run(const RunConfig& config);

// Same pipeline on an already ingested frame (the data path is ignored).
RunLedger run_on_frame(const RunConfig& config, const SeriesFrame& frame);

enum class ReportKind {
  kMetrics,
  kRatios,
  kIntervals,
  kImportance,
  kWeights,
  kTests,
  kDiagnostics,
};

ReportKind report_kind_from_string(const std::string& name);

// Emits the CSV/JSON files for one report kind into config.output_dir;
// returns the file paths written.
std::vector<std::string> report(const RunLedger& ledger, ReportKind kind);

// Every report plus the ledger, forecasts, losses, splits and MCS files.
std::vector<std::string> write_all_outputs(const RunLedger& ledger);

// Synthetic quarterly dataset with planted linear signal, for tests and the
// selftest verb: `features` AR(1) regressors, a target mixing three of them
// with seasonal structure and noise.
SeriesFrame synthetic_frame(int quarters, int features, std::uint64_t seed);

}  // namespace nowcast
