#include <cmath>

#include "doctest.h"
#include "nowcast/errors.hpp"
#include "nowcast/explain.hpp"
#include "nowcast/rng.hpp"

using namespace nowcast;

namespace {

ImportanceTrajectory default_trajectory() {
  const Horizon horizon = Horizon::with_defaults();
  ImportanceTrajectory t;
  for (QuarterIndex q = horizon.first_test; q <= horizon.last_test; q = q.next()) {
    t.test_quarters.push_back(q);
    // feature "a" counts splits, feature "b" flips sign
    const auto i = static_cast<double>(t.values.size());
    t.values.push_back({{"a", i}, {"b", (t.values.size() % 2 == 0) ? 1.0 : -1.0}});
  }
  return t;
}

}  // namespace

TEST_CASE("aggregate") {
  const Horizon horizon = Horizon::with_defaults();
  const auto trajectory = default_trajectory();

  SUBCASE("single split mean is that value") {
    ImportanceTrajectory one;
    one.test_quarters = {{2019, 2}};
    one.values = {{{"a", 3.25}}};
    CHECK(aggregate(one, horizon, "Overall").at("a") == 3.25);
  }

  SUBCASE("values 1 and -1 average to zero") {
    ImportanceTrajectory two;
    two.test_quarters = {{2017, 1}, {2017, 2}};
    two.values = {{{"a", 1.0}}, {{"a", -1.0}}};
    CHECK(aggregate(two, horizon, "Overall").at("a") == 0.0);
  }

  SUBCASE("Excluding-COVID uses 22 of the 26 default splits") {
    // "a" holds the split index 0..25; COVID drops indices 12..15
    const double mean = aggregate(trajectory, horizon, "Excluding-COVID").at("a");
    double expect = 0.0;
    for (int i = 0; i < 26; ++i)
      if (i < 12 || i > 15) expect += i;
    expect /= 22.0;
    CHECK(mean == doctest::Approx(expect));
  }

  SUBCASE("Overall equals the count-weighted blend of Pre, COVID and Post") {
    const double overall = aggregate(trajectory, horizon, "Overall").at("a");
    const double pre = aggregate(trajectory, horizon, "Pre-COVID").at("a");
    const double covid = aggregate(trajectory, horizon, "COVID").at("a");
    const double post = aggregate(trajectory, horizon, "Post-COVID").at("a");
    CHECK(overall == doctest::Approx((12 * pre + 4 * covid + 10 * post) / 26.0).epsilon(1e-12));
  }

  SUBCASE("empty slice raises") {
    ImportanceTrajectory pre_only;
    pre_only.test_quarters = {{2017, 1}};
    pre_only.values = {{{"a", 1.0}}};
    CHECK_THROWS_AS(aggregate(pre_only, horizon, "COVID"), DataError);
  }
}

TEST_CASE("top_k") {
  const std::map<std::string, double> means{{"a", 2.0}, {"b", -3.0}, {"c", 0.1}};

  SUBCASE("signed ranking by magnitude") {
    const auto ranked = top_k(means, 2);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].name == "b");
    CHECK(ranked[0].value == -3.0);  // signed value reported
    CHECK(ranked[1].name == "a");
  }

  SUBCASE("k beyond the feature count returns everything") {
    CHECK(top_k(means, 10).size() == 3);
  }

  SUBCASE("nonnegative measures rank by value") {
    const std::map<std::string, double> vip{{"x", 0.5}, {"y", 1.5}, {"z", 1.0}};
    const auto ranked = top_k(vip, 3, false);
    CHECK(ranked[0].name == "y");
    CHECK(ranked[1].name == "z");
    CHECK(ranked[2].name == "x");
  }

  SUBCASE("ties break on the feature name") {
    const std::map<std::string, double> tied{{"zeta", 1.0}, {"alpha", -1.0}, {"mid", 1.0}};
    const auto ranked = top_k(tied, 3);
    CHECK(ranked[0].name == "alpha");
    CHECK(ranked[1].name == "mid");
    CHECK(ranked[2].name == "zeta");
  }
}

TEST_CASE("spearman") {
  SUBCASE("monotone transforms give exactly one") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const std::vector<double> cube{1, 8, 27, 64, 125};
    CHECK(spearman(x, cube) == doctest::Approx(1.0));
    std::vector<double> reversed(cube.rbegin(), cube.rend());
    CHECK(spearman(x, reversed) == doctest::Approx(-1.0));
  }

  SUBCASE("hand-computed rank formula") {
    // d = (0, 1, -1, 0), sum d^2 = 2: rho = 1 - 6*2/(4*15) = 0.8
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> y{1, 3, 2, 4};
    CHECK(spearman(x, y) == doctest::Approx(0.8));
  }

  SUBCASE("invariant under strictly increasing transforms") {
    Rng rng(3);
    std::vector<double> x(30), y(30);
    for (std::size_t i = 0; i < 30; ++i) {
      x[i] = rng.normal();
      y[i] = 0.5 * x[i] + rng.normal();
    }
    const double base = spearman(x, y);
    std::vector<double> ex(30), ey(30);
    for (std::size_t i = 0; i < 30; ++i) {
      ex[i] = std::exp(x[i]);
      ey[i] = std::atan(y[i]);
    }
    CHECK(spearman(ex, ey) == doctest::Approx(base).epsilon(1e-12));
  }

  SUBCASE("ties get averaged ranks") {
    const std::vector<double> x{1, 1, 2, 3};
    const std::vector<double> y{2, 2, 3, 4};
    CHECK(spearman(x, y) == doctest::Approx(1.0));
  }

  SUBCASE("degenerate inputs raise") {
    const std::vector<double> flat{1, 1, 1, 1};
    const std::vector<double> x{1, 2, 3, 4};
    CHECK_THROWS_AS(spearman(flat, x), NumericError);
    CHECK_THROWS_AS(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ShapeError);
  }
}
