#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nowcast/errors.hpp"
#include "nowcast/metrics.hpp"
#include "nowcast/runner.hpp"

namespace {

using namespace nowcast;

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonArgs {
  std::string config_path;
  std::string output_dir;
  std::string data_path;
  std::string models;  // comma separated roster filter
  std::uint64_t seed = 0;
  bool seed_set = false;
};

RunConfig load_config(const CommonArgs& args) {
  RunConfig config = args.config_path.empty() ? RunConfig{}
                                              : RunConfig::from_json_file(args.config_path);
  if (!args.output_dir.empty()) config.output_dir = args.output_dir;
  if (!args.data_path.empty()) config.data_path = args.data_path;
  if (args.seed_set) config.seed = args.seed;
  if (!args.models.empty()) {
    config.models.clear();
    std::string token;
    for (char c : args.models + ",") {
      if (c == ',') {
        if (!token.empty()) config.models.push_back(token);
        token.clear();
      } else {
        token += c;
      }
    }
  }
  config.validate();
  return config;
}

int cmd_ingest(const CommonArgs& args) {
  const auto config = load_config(args);
  const auto result = ingest(config);
  std::filesystem::create_directories(config.output_dir);
  const auto clean = std::filesystem::path(config.output_dir) / "clean.csv";
  write_frame_csv(result.frame, clean.string());
  std::ofstream ledger(std::filesystem::path(config.output_dir) / "ingest_ledger.json");
  ledger << result.ledger.json();
  std::printf("ingested %zu quarters x %zu columns -> %s\n", result.frame.rows(),
              result.frame.cols(), clean.string().c_str());
  int dropped = static_cast<int>(result.ledger.dropped_forward_fill.size());
  for (const auto& d : result.ledger.adf_decisions) dropped += d.dropped ? 1 : 0;
  std::printf("dropped %d columns (see ingest_ledger.json)\n", dropped);
  return kExitOk;
}

int cmd_run(const CommonArgs& args) {
  const auto config = load_config(args);
  const auto ledger = run(config);
  const auto files = write_all_outputs(ledger);
  std::printf("run complete: %zu splits, %zu models\n", ledger.splits.size(),
              config.models.size());
  std::printf("MCS survivors:");
  for (const auto& name : ledger.mcs_result.survivors) std::printf(" %s", name.c_str());
  std::printf("\nwrote %zu files under %s\n", files.size(), config.output_dir.c_str());
  return kExitOk;
}

int cmd_combine(const CommonArgs& args) {
  // rerun of the selection + combination + test stages; tuned hyperparameters
  // come from the split cache and the bootstrap stage is skipped
  auto config = load_config(args);
  config.bootstrap.intervals = false;
  config.bootstrap.importance = false;
  const auto ledger = run(config);
  for (auto kind : {ReportKind::kWeights, ReportKind::kTests, ReportKind::kDiagnostics})
    report(ledger, kind);
  std::printf("combinations rebuilt for %zu survivors\n",
              ledger.mcs_result.survivors.size());
  return kExitOk;
}

int cmd_report(const CommonArgs& args, const std::string& kind) {
  const auto config = load_config(args);
  const auto ledger = run(config);  // cache makes a repeat run cheap
  std::vector<std::string> files;
  if (kind == "all") {
    files = write_all_outputs(ledger);
  } else {
    files = report(ledger, report_kind_from_string(kind));
  }
  for (const auto& f : files) std::printf("%s\n", f.c_str());
  return kExitOk;
}

int cmd_selftest() {
  std::printf("selftest: synthetic 134-quarter run, roster {rw, ar3, ridge}\n");
  RunConfig config;
  config.models = {"rw", "ar3", "ridge"};
  config.hpo.n_trials = 12;
  config.bootstrap.intervals = false;
  config.bootstrap.importance = false;
  config.mcs.replicates = 500;
  config.output_dir = std::filesystem::temp_directory_path() / "nowcast_selftest";
  config.cache_enabled = false;
  config.target = "gdp_growth";

  const auto frame = synthetic_frame(134, 10, 42);
  const auto ledger = run_on_frame(config, frame);

  std::vector<double> ridge_f, rw_f, actual;
  for (const auto& s : ledger.splits) {
    ridge_f.push_back(s.forecasts.at("ridge"));
    rw_f.push_back(s.forecasts.at("rw"));
    actual.push_back(s.actual);
  }
  const double ratio =
      rmsfe_ratio(metrics(ridge_f, actual), metrics(rw_f, actual));
  std::printf("splits: %zu, ridge/rw RMSFE ratio: %.3f\n", ledger.splits.size(), ratio);
  const bool ok = ledger.splits.size() == 26 && ratio < 1.0;
  std::printf("%s\n", ok ? "selftest PASS" : "selftest FAIL");
  return ok ? kExitOk : kExitOther;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"config-driven walk-forward GDP nowcasting engine"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string report_kind = "all";

  const auto add_common = [&args](CLI::App* cmd) {
    cmd->add_option("-c,--config", args.config_path, "JSON run configuration");
    cmd->add_option("-o,--out", args.output_dir, "output directory override");
    cmd->add_option("-d,--data", args.data_path, "input CSV override");
    cmd->add_option("-m,--models", args.models, "comma-separated roster filter");
    cmd->add_option_function<std::uint64_t>(
        "-s,--seed",
        [&args](const std::uint64_t& v) {
          args.seed = v;
          args.seed_set = true;
        },
        "seed override");
  };

  auto* ingest_cmd = app.add_subcommand("ingest", "clean a raw CSV into the design matrix");
  add_common(ingest_cmd);
  auto* run_cmd = app.add_subcommand("run", "execute the full nowcasting pipeline");
  add_common(run_cmd);
  auto* combine_cmd = app.add_subcommand("combine", "rebuild MCS selection and combinations");
  add_common(combine_cmd);
  auto* report_cmd = app.add_subcommand("report", "emit report files from a (cached) run");
  add_common(report_cmd);
  report_cmd->add_option("-k,--kind", report_kind,
                         "metrics|ratios|intervals|importance|weights|tests|diagnostics|all");
  app.add_subcommand("selftest", "quick synthetic end-to-end check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest_cmd->parsed()) return cmd_ingest(args);
    if (run_cmd->parsed()) return cmd_run(args);
    if (combine_cmd->parsed()) return cmd_combine(args);
    if (report_cmd->parsed()) return cmd_report(args, report_kind);
    return cmd_selftest();
  } catch (const nowcast::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const nowcast::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const nowcast::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitOther;
  }
}
