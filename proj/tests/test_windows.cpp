#include <vector>

#include "doctest.h"
#include "nowcast/errors.hpp"
#include "nowcast/windows.hpp"

using namespace nowcast;

namespace {

SeriesFrame frame_over(QuarterIndex first, int n) {
  std::vector<QuarterIndex> idx;
  for (int i = 0; i < n; ++i) idx.push_back(first.plus(i));
  SeriesFrame f(idx);
  std::vector<double> x(static_cast<std::size_t>(n)), shock(static_cast<std::size_t>(n), 1.0),
      seasonal(static_cast<std::size_t>(n), 1.0), y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    x[static_cast<std::size_t>(i)] = i;
    y[static_cast<std::size_t>(i)] = 2 * i;
  }
  f.add_column("x", x, ColumnKind::kContinuous);
  f.add_column("neg_shock", shock, ColumnKind::kShockDummy);
  f.add_column("q1", seasonal, ColumnKind::kSeasonalDummy);
  f.add_column("gdp", y, ColumnKind::kTarget);
  return f;
}

}  // namespace

TEST_CASE("plan_walk_forward defaults give 26 splits") {
  const QuarterRange data{{1990, 1}, {2023, 2}};
  const auto plans = plan_walk_forward(data, Horizon::with_defaults());
  REQUIRE(plans.size() == 26);

  // first split: validation 2014 Q1 - 2016 Q4, test 2017 Q1
  CHECK(plans[0].validation.first == QuarterIndex{2014, 1});
  CHECK(plans[0].validation.last == QuarterIndex{2016, 4});
  CHECK(plans[0].test == QuarterIndex{2017, 1});
  CHECK(plans[0].train.first == QuarterIndex{1990, 1});
  CHECK(plans[0].train.last == QuarterIndex{2013, 4});
  CHECK(plans.back().test == QuarterIndex{2023, 2});

  for (const auto& p : plans) {
    CHECK(p.validation.length() == 12);
    CHECK(p.train.last.next() == p.validation.first);
    CHECK(p.validation.last.next() == p.test);
  }
  // consecutive splits advance the train end by one quarter and overlap the
  // validation window in exactly 11 quarters
  for (std::size_t i = 1; i < plans.size(); ++i) {
    CHECK(plans[i].train.last.serial() == plans[i - 1].train.last.serial() + 1);
    const int overlap = plans[i - 1].validation.last.serial() -
                        plans[i].validation.first.serial() + 1;
    CHECK(overlap == 11);
  }
}

TEST_CASE("plan_walk_forward single test quarter and insufficient history") {
  Horizon h = Horizon::with_defaults();
  h.first_test = h.last_test = {2017, 1};
  CHECK(plan_walk_forward({{1990, 1}, {2017, 1}}, h).size() == 1);

  Horizon tight = h;
  CHECK_THROWS_AS(plan_walk_forward({{2014, 1}, {2017, 1}}, tight), ConfigError);
}

TEST_CASE("neutralize_shock_dummies zeroes only the last validation and test rows") {
  auto frame = frame_over({2010, 1}, 40);
  SplitPlan split;
  split.test = {2017, 1};
  split.validation = {{2014, 1}, {2016, 4}};
  split.train = {{2010, 1}, {2013, 4}};

  const auto out = neutralize_shock_dummies(frame, split);
  const auto last_val = *out.row_of({2016, 4});
  const auto test_row = *out.row_of({2017, 1});
  CHECK(out.column("neg_shock")[last_val] == 0.0);
  CHECK(out.column("neg_shock")[test_row] == 0.0);

  // eleventh validation quarter keeps its observed value
  CHECK(out.column("neg_shock")[*out.row_of({2016, 3})] == 1.0);
  // train rows and the seasonal dummy are untouched everywhere
  for (std::size_t r = 0; r < out.rows(); ++r) {
    CHECK(out.column("q1")[r] == 1.0);
    if (out.index()[r] < split.validation.last) CHECK(out.column("neg_shock")[r] == 1.0);
  }

  // idempotent
  const auto twice = neutralize_shock_dummies(out, split);
  CHECK(twice.column("neg_shock") == out.column("neg_shock"));
}

TEST_CASE("slice_subperiod") {
  const auto horizon = Horizon::with_defaults();
  std::vector<QuarterIndex> tests;
  for (QuarterIndex q = horizon.first_test; q <= horizon.last_test; q = q.next())
    tests.push_back(q);

  CHECK(slice_subperiod(tests, horizon, "Overall").size() == 26);
  CHECK(slice_subperiod(tests, horizon, "COVID").size() == 4);
  CHECK(slice_subperiod(tests, horizon, "Excluding-COVID").size() == 22);
  CHECK(slice_subperiod(tests, horizon, "Pre-COVID").size() == 12);
  CHECK(slice_subperiod(tests, horizon, "Post-COVID").size() == 10);
  CHECK_THROWS_AS(slice_subperiod(tests, horizon, "nope"), ConfigError);

  // Pre + COVID + Post partition Overall
  std::vector<bool> seen(tests.size(), false);
  for (const char* name : {"Pre-COVID", "COVID", "Post-COVID"}) {
    for (auto i : slice_subperiod(tests, horizon, name)) {
      CHECK_FALSE(seen[i]);
      seen[i] = true;
    }
  }
  for (bool b : seen) CHECK(b);
}
