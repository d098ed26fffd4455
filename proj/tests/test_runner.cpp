#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "nowcast/errors.hpp"
#include "nowcast/metrics.hpp"
#include "nowcast/runner.hpp"

using namespace nowcast;
namespace fs = std::filesystem;

namespace {

RunConfig quick_config(const std::string& out_tag) {
  RunConfig config;
  config.target = "gdp_growth";
  config.models = {"rw", "ar3", "ridge", "enet"};
  config.hpo.n_trials = 8;
  config.hpo.n_startup = 4;
  config.bootstrap.intervals = false;
  config.bootstrap.importance = false;
  config.mcs.replicates = 300;
  config.cache_enabled = false;
  config.output_dir = (fs::temp_directory_path() / out_tag).string();
  return config;
}

void shrink_horizon(RunConfig& config, QuarterIndex first, QuarterIndex last) {
  config.horizon.first_test = first;
  config.horizon.last_test = last;
  config.horizon.subperiods = {{"Overall", {first, last}}};
}

}  // namespace

TEST_CASE("run_on_frame completes the synthetic pipeline") {
  const auto frame = synthetic_frame(134, 10, 42);
  auto config = quick_config("nowcast_test_run");
  const auto ledger = run_on_frame(config, frame);

  REQUIRE(ledger.splits.size() == 26);
  for (const auto& s : ledger.splits) {
    CHECK(s.forecasts.size() == 4);
    for (const auto& [model, f] : s.forecasts) CHECK(std::isfinite(f));
    CHECK(s.chosen_params.count("ridge") == 1);
    CHECK(s.chosen_params.count("rw") == 0);  // benchmarks skip tuning
  }

  // planted signal: penalized models beat the naive benchmark
  std::vector<double> ridge_f, rw_f, actual;
  for (const auto& s : ledger.splits) {
    ridge_f.push_back(s.forecasts.at("ridge"));
    rw_f.push_back(s.forecasts.at("rw"));
    actual.push_back(s.actual);
  }
  CHECK(rmsfe_ratio(metrics(ridge_f, actual), metrics(rw_f, actual)) < 1.0);

  // loss matrix aligns with forecasts
  CHECK(ledger.losses.quarters.size() == 26);
  const auto pos = ledger.losses.model_pos("ridge");
  const double recomputed =
      (ledger.splits[0].forecasts.at("ridge") - ledger.splits[0].actual) *
      (ledger.splits[0].forecasts.at("ridge") - ledger.splits[0].actual);
  CHECK(ledger.losses.losses(0, static_cast<Eigen::Index>(pos)) == doctest::Approx(recomputed));

  // combinations exist over the MCS survivors and weight rows are simplex
  REQUIRE(ledger.combinations.count("SA") == 1);
  REQUIRE(ledger.combinations.count("WA") == 1);
  REQUIRE(ledger.combinations.count("EWA") == 1);
  for (const auto& [name, combo] : ledger.combinations) {
    CHECK(combo.values.size() == 26);
    for (Eigen::Index t = 0; t < combo.weights.weights.rows(); ++t)
      CHECK(combo.weights.weights.row(t).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }

  // GW reports exist for survivors and combos against each benchmark
  for (const auto& bench : {"rw", "ar3"})
    for (const auto& [name, combo] : ledger.combinations)
      CHECK(ledger.gw_reports.count(std::string(name) + "|" + bench) == 1);
  CHECK(ledger.diagnostics_sw.size() == 3);
  CHECK(ledger.diagnostics_lb.size() == 3);
}

TEST_CASE("end-to-end determinism: identical runs give identical ledgers") {
  const auto frame = synthetic_frame(120, 6, 7);
  auto config = quick_config("nowcast_test_det");
  shrink_horizon(config, {2016, 1}, {2018, 4});
  config.models = {"rw", "ridge"};
  const auto a = run_on_frame(config, frame);
  const auto b = run_on_frame(config, frame);
  CHECK(a.json() == b.json());
}

TEST_CASE("no-look-ahead: poisoning rows after a split's test quarter changes nothing") {
  const auto frame = synthetic_frame(120, 6, 11);
  auto config = quick_config("nowcast_test_leak");
  shrink_horizon(config, {2016, 1}, {2018, 4});
  config.models = {"rw", "ridge", "enet"};

  const auto base = run_on_frame(config, frame);

  // poison everything strictly after the test quarter of split k
  const std::size_t k = 5;
  const auto poison_from = *frame.row_of(base.splits[k].plan.test) + 1;
  SeriesFrame poisoned = frame;
  for (const auto& name : poisoned.names())
    for (std::size_t r = poison_from; r < poisoned.rows(); ++r)
      poisoned.set(r, name, poisoned.kind(name) == ColumnKind::kContinuous ? 9e9 : 0.0);

  const auto after = run_on_frame(config, poisoned);
  for (std::size_t s = 0; s <= k; ++s) {
    CHECK(after.splits[s].forecasts == base.splits[s].forecasts);
    CHECK(after.splits[s].importances == base.splits[s].importances);
    CHECK(after.splits[s].actual == base.splits[s].actual);
  }
}

TEST_CASE("single-model roster: MCS returns it and all combinations equal it") {
  const auto frame = synthetic_frame(120, 6, 13);
  auto config = quick_config("nowcast_test_single");
  shrink_horizon(config, {2016, 1}, {2017, 4});
  config.models = {"ridge"};
  const auto ledger = run_on_frame(config, frame);

  CHECK(ledger.mcs_result.survivors == std::vector<std::string>{"ridge"});
  for (const auto& [name, combo] : ledger.combinations)
    for (std::size_t t = 0; t < combo.values.size(); ++t)
      CHECK(combo.values[t] == doctest::Approx(ledger.splits[t].forecasts.at("ridge")));
}

TEST_CASE("ingest on a raw csv") {
  const auto dir = fs::temp_directory_path() / "nowcast_test_ingest";
  fs::create_directories(dir);
  const auto csv = dir / "raw.csv";
  {
    std::ofstream out(csv);
    out << "quarter,gdp_growth,good,gappy,walk,sparse\n";
    Rng rng(3);
    double walk = 0.0;
    QuarterIndex q{1990, 1};
    for (int t = 0; t < 160; ++t) {
      walk += rng.normal();
      out << q.str() << "," << rng.normal() * 2.0 << "," << rng.normal() << ",";
      if (t >= 3 && t % 7 == 0)
        out << "";  // interior gap, forward-fillable
      else
        out << rng.normal();
      out << "," << walk << ",";
      if (t < 15)
        out << "";  // too many leading gaps: flagged for removal
      else
        out << rng.normal();
      out << "\n";
      q = q.next();
    }
  }
  RunConfig config;
  config.data_path = csv.string();
  config.target = "gdp_growth";
  config.output_dir = (dir / "out").string();

  const auto result = ingest(config);
  CHECK(result.frame.has_column("good"));
  CHECK(result.frame.has_column("gappy"));
  CHECK_FALSE(result.frame.has_column("walk"));    // unit root
  CHECK_FALSE(result.frame.has_column("sparse"));  // leading gaps
  CHECK(result.frame.has_column("seasonal_q1"));
  CHECK(result.frame.has_column("neg_shock"));
  CHECK(result.frame.kind("gdp_growth") == ColumnKind::kTarget);
  CHECK(result.ledger.dropped_forward_fill == std::vector<std::string>{"sparse"});
  bool walk_dropped = false;
  for (const auto& d : result.ledger.adf_decisions)
    if (d.column == "walk") walk_dropped = d.dropped;
  CHECK(walk_dropped);

  // ledger json mentions both reason codes
  const auto text = result.ledger.json();
  CHECK(text.find("unit root") != std::string::npos);
  CHECK(text.find("sparse") != std::string::npos);
}

TEST_CASE("report emission produces the documented schemas") {
  const auto frame = synthetic_frame(120, 6, 17);
  auto config = quick_config("nowcast_test_report");
  config.horizon.first_test = {2016, 1};
  config.horizon.last_test = {2017, 4};
  config.horizon.subperiods = {{"Overall", {{2016, 1}, {2017, 4}}},
                               {"Pre-COVID", {{2016, 1}, {2016, 4}}},
                               {"COVID", {{2017, 1}, {2017, 2}}},
                               {"Post-COVID", {{2017, 3}, {2017, 4}}}};
  config.models = {"rw", "ridge"};
  config.bootstrap.intervals = true;
  config.bootstrap.config.replicates = 40;

  const auto ledger = run_on_frame(config, frame);
  const auto files = write_all_outputs(ledger);
  CHECK(files.size() >= 9);

  const auto read_first_line = [](const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
  };
  for (const auto& f : files) {
    CAPTURE(f);
    CHECK(fs::exists(f));
  }
  CHECK(read_first_line((fs::path(config.output_dir) / "metrics.csv").string()) ==
        "model,subperiod,msfe,rmsfe,mafe");
  CHECK(read_first_line((fs::path(config.output_dir) / "tests.csv").string()) ==
        "model,benchmark,intercept,intercept_p,wald,wald_p,degenerate");
  CHECK(read_first_line((fs::path(config.output_dir) / "weights.csv").string()) ==
        "method,quarter,model,weight,dominant");
  CHECK(read_first_line((fs::path(config.output_dir) / "intervals.csv").string()) ==
        "quarter,model,point,lower,upper");

  // metrics rows: (2 models + 3 combos) x 5 periods + header
  std::ifstream metrics_file(fs::path(config.output_dir) / "metrics.csv");
  int lines = 0;
  std::string line;
  while (std::getline(metrics_file, line)) ++lines;
  CHECK(lines == 1 + 5 * 5);

  // intervals carry ordered bounds around the point
  for (const auto& s : ledger.splits)
    for (const auto& [model, iv] : s.intervals) CHECK(iv.first <= iv.second);
}

TEST_CASE("config parsing") {
  SUBCASE("full round trip") {
    const std::string text = R"({
      "data": {"path": "d.csv", "target": "g"},
      "models": ["rw", "ridge"],
      "hpo": {"n_trials": 5},
      "seed": 7,
      "mcs": {"statistic": "TR"},
      "breaks": ["1997 Q3", "2008 Q3"]
    })";
    const auto config = RunConfig::from_json_text(text);
    CHECK(config.data_path == "d.csv");
    CHECK(config.models.size() == 2);
    CHECK(config.hpo.n_trials == 5);
    CHECK(config.seed == 7);
    CHECK(config.mcs.statistic == McsStatistic::kTR);
    CHECK(config.breaks.breaks.size() == 2);
    CHECK(config.hash() == RunConfig::from_json_text(text).hash());
  }

  SUBCASE("bad input is a config error") {
    CHECK_THROWS_AS(RunConfig::from_json_text("not json"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"models": ["nope"], "data": {"target": "g"}})"),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"models": []})"), ConfigError);
  }
}

TEST_CASE("config search-space overrides narrow the tuning domain") {
  const auto frame = synthetic_frame(120, 6, 23);
  auto config = quick_config("nowcast_test_space");
  shrink_horizon(config, {2016, 1}, {2016, 4});
  config.models = {"ridge"};
  // pin ridge alpha to a single point; every trial must land there
  config.search_spaces["ridge"]["alpha"] = ParamDomain::real(0.5, 0.5000001, false);
  const auto ledger = run_on_frame(config, frame);
  for (const auto& s : ledger.splits) {
    const double alpha = param_real(s.chosen_params.at("ridge"), "alpha");
    CHECK(alpha >= 0.5);
    CHECK(alpha <= 0.5000001);
  }

  // json round-trip carries the override
  const std::string text = R"({
    "data": {"target": "g"},
    "models": ["ridge"],
    "search_spaces": {"ridge": {"alpha": {"type": "real", "lo": 0.1, "hi": 0.2, "log": false}}}
  })";
  const auto parsed = RunConfig::from_json_text(text);
  CHECK(parsed.search_spaces.at("ridge").at("alpha").lo == 0.1);

  // an unknown parameter is rejected at run time
  auto bad = config;
  bad.search_spaces["ridge"]["nope"] = ParamDomain::real(0.0, 1.0);
  CHECK_THROWS_AS(run_on_frame(bad, frame), ConfigError);
}

TEST_CASE("caching reuses tuned hyperparameters") {
  const auto frame = synthetic_frame(120, 6, 19);
  auto config = quick_config("nowcast_test_cache");
  shrink_horizon(config, {2016, 1}, {2016, 4});
  config.models = {"ridge"};
  config.cache_enabled = true;
  fs::remove_all(config.output_dir);

  const auto first = run_on_frame(config, frame);
  const auto cache_file = fs::path(config.output_dir) / "cache" / "split0_ridge.json";
  REQUIRE(fs::exists(cache_file));
  const auto second = run_on_frame(config, frame);
  CHECK(first.json() == second.json());

  // the cached entry carries the full study for audit/resume
  std::ifstream in(cache_file);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("\"study\"") != std::string::npos);
  CHECK(text.find("\"trials\"") != std::string::npos);

  // a different config hash invalidates the cache
  auto changed = config;
  changed.hpo.n_trials = config.hpo.n_trials + 1;
  const auto third = run_on_frame(changed, frame);
  CHECK(third.splits.size() == first.splits.size());
}

TEST_CASE("stage failures are tagged and persist a partial ledger") {
  const auto frame = synthetic_frame(120, 6, 29);
  auto config = quick_config("nowcast_test_stagefail");
  shrink_horizon(config, {2016, 1}, {2016, 4});
  config.models = {"ridge"};
  // sabotage the combination stage with an empty eta grid... validate() blocks
  // that, so instead poison a continuous column inside the first test quarter
  // to NaN via an impossible search space: use an unknown-parameter override,
  // which aborts in the setup stage with a plain ConfigError instead.
  config.search_spaces["ridge"]["nope"] = ParamDomain::real(0.0, 1.0);
  CHECK_THROWS_AS(run_on_frame(config, frame), ConfigError);

  // a per-split numeric failure carries the split tag and flushes the ledger
  auto bad = quick_config("nowcast_test_stagefail2");
  shrink_horizon(bad, {2016, 1}, {2016, 4});
  bad.models = {"ridge"};
  SeriesFrame broken = frame;
  // constant continuous column breaks train standardization inside split 0
  for (std::size_t r = 0; r < broken.rows(); ++r) broken.set(r, "x0", 1.0);
  fs::remove_all(bad.output_dir);
  try {
    run_on_frame(bad, broken);
    FAIL("expected a stage-tagged failure");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("[stage: split 0") != std::string::npos);
  }
  CHECK(fs::exists(fs::path(bad.output_dir) / "partial_ledger.json"));
}
