#include <filesystem>
#include <fstream>

#include "nowcast/errors.hpp"
#include "nowcast/explain.hpp"
#include "nowcast/runner.hpp"

namespace nowcast {

namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const RunLedger& ledger, const std::string& name,
                       std::vector<std::string>& written) {
  std::error_code ec;
  fs::create_directories(ledger.config.output_dir, ec);
  const auto path = fs::path(ledger.config.output_dir) / name;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.precision(12);
  written.push_back(path.string());
  return out;
}

// sub-period names in report order
std::vector<std::string> report_periods(const Horizon& horizon) {
  std::vector<std::string> out{"Overall"};
  for (const char* name : {"Pre-COVID", "COVID", "Post-COVID"})
    if (horizon.subperiods.count(name)) out.push_back(name);
  if (horizon.subperiods.count("Overall") && horizon.subperiods.count("COVID"))
    out.push_back("Excluding-COVID");
  return out;
}

struct SeriesView {
  std::vector<double> forecasts;
  std::vector<double> actuals;
};

SeriesView model_series(const RunLedger& ledger, const std::string& model) {
  SeriesView v;
  for (const auto& s : ledger.splits) {
    v.forecasts.push_back(s.forecasts.at(model));
    v.actuals.push_back(s.actual);
  }
  return v;
}

SeriesView combo_series(const RunLedger& ledger, const std::string& name) {
  SeriesView v;
  const auto& combo = ledger.combinations.at(name);
  for (std::size_t t = 0; t < ledger.splits.size(); ++t) {
    v.forecasts.push_back(combo.values[t]);
    v.actuals.push_back(ledger.splits[t].actual);
  }
  return v;
}

SeriesView slice(const SeriesView& v, const std::vector<std::size_t>& keep) {
  SeriesView out;
  for (std::size_t i : keep) {
    out.forecasts.push_back(v.forecasts[i]);
    out.actuals.push_back(v.actuals[i]);
  }
  return out;
}

std::vector<QuarterIndex> test_quarters(const RunLedger& ledger) {
  std::vector<QuarterIndex> out;
  for (const auto& s : ledger.splits) out.push_back(s.plan.test);
  return out;
}

void write_metrics(const RunLedger& ledger, std::vector<std::string>& written) {
  auto out = open_out(ledger, "metrics.csv", written);
  out << "model,subperiod,msfe,rmsfe,mafe\n";
  const auto quarters = test_quarters(ledger);
  const auto periods = report_periods(ledger.config.horizon);

  std::vector<std::pair<std::string, SeriesView>> rows;
  for (const auto& model : ledger.config.models)
    rows.emplace_back(model, model_series(ledger, model));
  for (const auto& [name, combo] : ledger.combinations)
    rows.emplace_back(name, combo_series(ledger, name));

  for (const auto& [name, series] : rows) {
    for (const auto& period : periods) {
      const auto keep = slice_subperiod(quarters, ledger.config.horizon, period);
      if (keep.empty()) continue;
      const auto view = slice(series, keep);
      const auto m = metrics(view.forecasts, view.actuals);
      out << name << "," << period << "," << m.msfe << "," << m.rmsfe << "," << m.mafe << "\n";
    }
  }
}

void write_ratios(const RunLedger& ledger, std::vector<std::string>& written) {
  auto out = open_out(ledger, "ratios.csv", written);
  out << "model,benchmark,subperiod,rmsfe_ratio\n";
  const auto quarters = test_quarters(ledger);
  const auto periods = report_periods(ledger.config.horizon);

  std::vector<std::string> benchmarks = ledger.config.benchmarks;
  if (benchmarks.empty())
    for (const auto& name : ledger.config.models)
      if (name == "rw" || name == "ar3" || name == "dfm") benchmarks.push_back(name);

  std::vector<std::pair<std::string, SeriesView>> rows;
  for (const auto& model : ledger.mcs_result.survivors)
    rows.emplace_back(model, model_series(ledger, model));
  for (const auto& [name, combo] : ledger.combinations)
    rows.emplace_back(name, combo_series(ledger, name));

  for (const auto& bench : benchmarks) {
    const auto bench_series = model_series(ledger, bench);
    for (const auto& [name, series] : rows) {
      if (name == bench) continue;
      for (const auto& period : periods) {
        const auto keep = slice_subperiod(quarters, ledger.config.horizon, period);
        if (keep.empty()) continue;
        const auto mv = slice(series, keep);
        const auto bv = slice(bench_series, keep);
        out << name << "," << bench << "," << period << ","
            << rmsfe_ratio(metrics(mv.forecasts, mv.actuals), metrics(bv.forecasts, bv.actuals))
            << "\n";
      }
    }
  }
}

void write_intervals(const RunLedger& ledger, std::vector<std::string>& written) {
  auto out = open_out(ledger, "intervals.csv", written);
  out << "quarter,model,point,lower,upper\n";
  for (const auto& s : ledger.splits)
    for (const auto& [model, interval] : s.intervals)
      out << s.plan.test.str() << "," << model << "," << s.forecasts.at(model) << ","
          << interval.first << "," << interval.second << "\n";
}

void write_importance(const RunLedger& ledger, std::vector<std::string>& written) {
  {
    auto out = open_out(ledger, "importance.csv", written);
    out << "model,period,feature,mean_importance,ci_lower,ci_upper,ci_range\n";
    const auto quarters = test_quarters(ledger);
    const auto periods = report_periods(ledger.config.horizon);
    for (const auto& model : ledger.config.models) {
      ImportanceTrajectory trajectory;
      trajectory.test_quarters = quarters;
      bool any = false;
      for (const auto& s : ledger.splits) {
        trajectory.values.push_back(s.importances.at(model));
        any = any || !s.importances.at(model).empty();
      }
      if (!any) continue;
      for (const auto& period : periods) {
        const auto means = aggregate(trajectory, ledger.config.horizon, period);
        // mean CI bounds over the same splits, when computed
        std::map<std::string, std::pair<double, double>> ci_sum;
        std::map<std::string, int> ci_n;
        const auto keep = slice_subperiod(quarters, ledger.config.horizon, period);
        for (std::size_t i : keep) {
          const auto it = ledger.splits[i].importance_cis.find(model);
          if (it == ledger.splits[i].importance_cis.end()) continue;
          for (const auto& [feat, bounds] : it->second) {
            ci_sum[feat].first += bounds.first;
            ci_sum[feat].second += bounds.second;
            ci_n[feat] += 1;
          }
        }
        for (const auto& [feat, mean] : means) {
          out << model << "," << period << "," << feat << "," << mean;
          if (ci_n.count(feat)) {
            const double lo = ci_sum[feat].first / ci_n[feat];
            const double hi = ci_sum[feat].second / ci_n[feat];
            out << "," << lo << "," << hi << "," << (hi - lo) << "\n";
          } else {
            out << ",,,\n";
          }
        }
      }
    }
  }
  {
    auto out = open_out(ledger, "importance_quarterly.csv", written);
    out << "model,quarter,feature,value\n";
    for (const auto& s : ledger.splits)
      for (const auto& [model, imp] : s.importances)
        for (const auto& [feat, value] : imp)
          out << model << "," << s.plan.test.str() << "," << feat << "," << value << "\n";
  }
}

void write_weights(const RunLedger& ledger, std::vector<std::string>& written) {
  auto out = open_out(ledger, "weights.csv", written);
  out << "method,quarter,model,weight,dominant\n";
  for (const auto& [method, combo] : ledger.combinations) {
    const auto& w = combo.weights;
    for (std::size_t t = 0; t < w.quarters.size(); ++t) {
      const auto dom = dominant_model(w, t);
      for (std::size_t m = 0; m < w.models.size(); ++m)
        out << method << "," << w.quarters[t].str() << "," << w.models[m] << ","
            << w.weights(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(m)) << ","
            << (w.models[m] == dom ? 1 : 0) << "\n";
    }
  }
}

void write_tests(const RunLedger& ledger, std::vector<std::string>& written) {
  auto out = open_out(ledger, "tests.csv", written);
  out << "model,benchmark,intercept,intercept_p,wald,wald_p,degenerate\n";
  for (const auto& [key, report] : ledger.gw_reports) {
    const auto bar = key.find('|');
    out << key.substr(0, bar) << "," << key.substr(bar + 1) << "," << report.intercept << ","
        << report.intercept_p << "," << report.wald << "," << report.wald_p << ","
        << (report.degenerate ? 1 : 0) << "\n";
  }
}

void write_diagnostics(const RunLedger& ledger, std::vector<std::string>& written) {
  auto out = open_out(ledger, "diagnostics.csv", written);
  out << "method,shapiro_w,shapiro_p,ljungbox_q,ljungbox_p\n";
  for (const auto& [name, sw] : ledger.diagnostics_sw) {
    out << name << "," << sw.first << "," << sw.second << ",";
    const auto lb = ledger.diagnostics_lb.find(name);
    if (lb != ledger.diagnostics_lb.end())
      out << lb->second.first << "," << lb->second.second << "\n";
    else
      out << ",\n";
  }
}

}  // namespace

ReportKind report_kind_from_string(const std::string& name) {
  if (name == "metrics") return ReportKind::kMetrics;
  if (name == "ratios") return ReportKind::kRatios;
  if (name == "intervals") return ReportKind::kIntervals;
  if (name == "importance") return ReportKind::kImportance;
  if (name == "weights") return ReportKind::kWeights;
  if (name == "tests") return ReportKind::kTests;
  if (name == "diagnostics") return ReportKind::kDiagnostics;
  throw ConfigError("unknown report kind '" + name + "'");
}

std::vector<std::string> report(const RunLedger& ledger, ReportKind kind) {
  if (ledger.splits.empty()) throw DataError("ledger holds no splits; run the pipeline first");
  std::vector<std::string> written;
  switch (kind) {
    case ReportKind::kMetrics: write_metrics(ledger, written); break;
    case ReportKind::kRatios: write_ratios(ledger, written); break;
    case ReportKind::kIntervals: write_intervals(ledger, written); break;
    case ReportKind::kImportance: write_importance(ledger, written); break;
    case ReportKind::kWeights: write_weights(ledger, written); break;
    case ReportKind::kTests: write_tests(ledger, written); break;
    case ReportKind::kDiagnostics: write_diagnostics(ledger, written); break;
  }
  return written;
}

std::vector<std::string> write_all_outputs(const RunLedger& ledger) {
  std::vector<std::string> written;
  for (auto kind : {ReportKind::kMetrics, ReportKind::kRatios, ReportKind::kIntervals,
                    ReportKind::kImportance, ReportKind::kWeights, ReportKind::kTests,
                    ReportKind::kDiagnostics}) {
    const auto files = report(ledger, kind);
    written.insert(written.end(), files.begin(), files.end());
  }

  {
    auto out = open_out(ledger, "forecasts.csv", written);
    out << "quarter,model,forecast,actual\n";
    for (const auto& s : ledger.splits)
      for (const auto& [model, f] : s.forecasts)
        out << s.plan.test.str() << "," << model << "," << f << "," << s.actual << "\n";
  }
  {
    auto out = open_out(ledger, "losses.csv", written);
    out << "quarter,model,squared_error\n";
    for (std::size_t s = 0; s < ledger.splits.size(); ++s)
      for (std::size_t m = 0; m < ledger.losses.models.size(); ++m)
        out << ledger.losses.quarters[s].str() << "," << ledger.losses.models[m] << ","
            << ledger.losses.losses(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(m))
            << "\n";
  }
  {
    auto out = open_out(ledger, "splits.csv", written);
    out << "split,train_first,train_last,val_first,val_last,test\n";
    for (std::size_t s = 0; s < ledger.splits.size(); ++s) {
      const auto& p = ledger.splits[s].plan;
      out << s << "," << p.train.first.str() << "," << p.train.last.str() << ","
          << p.validation.first.str() << "," << p.validation.last.str() << "," << p.test.str()
          << "\n";
    }
  }
  {
    auto out = open_out(ledger, "mcs.csv", written);
    out << "model,p_value,survivor\n";
    for (const auto& [model, p] : ledger.mcs_result.p_values) {
      const bool survived =
          std::find(ledger.mcs_result.survivors.begin(), ledger.mcs_result.survivors.end(),
                    model) != ledger.mcs_result.survivors.end();
      out << model << "," << p << "," << (survived ? 1 : 0) << "\n";
    }
  }
  {
    auto out = open_out(ledger, "ledger.json", written);
    out << ledger.json();
  }
  return written;
}

}  // namespace nowcast
