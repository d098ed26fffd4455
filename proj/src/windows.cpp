#include "nowcast/windows.hpp"

#include "nowcast/errors.hpp"

namespace nowcast {

Horizon Horizon::with_defaults() {
  Horizon h;
  h.first_test = {2017, 1};
  h.last_test = {2023, 2};
  h.subperiods = {
      {"Overall", {{2017, 1}, {2023, 2}}},
      {"Pre-COVID", {{2017, 1}, {2019, 4}}},
      {"COVID", {{2020, 1}, {2020, 4}}},
      {"Post-COVID", {{2021, 1}, {2023, 2}}},
  };
  return h;
}

void Horizon::validate() const {
  if (last_test < first_test) throw ConfigError("horizon last_test precedes first_test");
  const auto overall = subperiods.find("Overall");
  const auto covid = subperiods.find("COVID");
  if (overall == subperiods.end()) throw ConfigError("horizon must define the Overall sub-period");
  if (covid != subperiods.end()) {
    if (!(overall->second.contains(covid->second.first) &&
          overall->second.contains(covid->second.last)))
      throw ConfigError("COVID sub-period must lie inside Overall");
  }
}

std::vector<SplitPlan> plan_walk_forward(const QuarterRange& data_range, const Horizon& horizon) {
  horizon.validate();
  if (!data_range.contains(horizon.first_test) || !data_range.contains(horizon.last_test))
    throw ConfigError("test horizon not covered by the data range");
  // Need 12 validation quarters plus at least one train quarter before the
  // first test quarter.
  const int history = horizon.first_test.serial() - data_range.first.serial();
  if (history < kValidationQuarters + 1)
    throw ConfigError("insufficient history: " + std::to_string(history) +
                      " quarters before first test, need at least " +
                      std::to_string(kValidationQuarters + 1));

  std::vector<SplitPlan> plans;
  for (QuarterIndex test = horizon.first_test; test <= horizon.last_test; test = test.next()) {
    SplitPlan plan;
    plan.test = test;
    plan.validation = {test.plus(-kValidationQuarters), test.prev()};
    plan.train = {data_range.first, plan.validation.first.prev()};
    plans.push_back(plan);
  }
  return plans;
}

SeriesFrame neutralize_shock_dummies(const SeriesFrame& frame, const SplitPlan& split) {
  SeriesFrame out = frame;
  const auto shock_cols = frame.names_of(ColumnKind::kShockDummy);
  for (QuarterIndex q : {split.validation.last, split.test}) {
    const auto row = out.row_of(q);
    if (!row) continue;  // test row may not exist yet in live use
    for (const auto& name : shock_cols) out.set(*row, name, 0.0);
  }
  return out;
}

std::vector<std::size_t> slice_subperiod(const std::vector<QuarterIndex>& test_quarters,
                                         const Horizon& horizon, const std::string& name) {
  std::vector<std::size_t> keep;
  if (name == "Excluding-COVID") {
    const auto overall = horizon.subperiods.find("Overall");
    const auto covid = horizon.subperiods.find("COVID");
    if (overall == horizon.subperiods.end() || covid == horizon.subperiods.end())
      throw ConfigError("Excluding-COVID needs both Overall and COVID sub-periods");
    for (std::size_t i = 0; i < test_quarters.size(); ++i)
      if (overall->second.contains(test_quarters[i]) && !covid->second.contains(test_quarters[i]))
        keep.push_back(i);
    return keep;
  }
  const auto it = horizon.subperiods.find(name);
  if (it == horizon.subperiods.end()) throw ConfigError("unknown sub-period '" + name + "'");
  for (std::size_t i = 0; i < test_quarters.size(); ++i)
    if (it->second.contains(test_quarters[i])) keep.push_back(i);
  return keep;
}

}  // namespace nowcast
