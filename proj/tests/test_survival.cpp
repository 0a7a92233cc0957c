#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "isohaz/survival.hpp"

using namespace isohaz;
using testing::rec;

TEST_CASE("csv single row") {
  std::istringstream in("time,event,z1\n1.0,1,0.5");
  auto s = load_sample(in);
  REQUIRE(s.size() == 1);
  CHECK(s.dimension() == 1);
  CHECK(s[0].time == 1.0);
  CHECK(s[0].event);
  CHECK(s[0].covariates == std::vector<double>{0.5});
}

TEST_CASE("csv without covariates keeps file order") {
  std::istringstream in("time,event\n2.0,0\n1.0,1\n");
  auto s = load_sample(in);
  REQUIRE(s.size() == 2);
  CHECK(s.dimension() == 0);
  CHECK(s[0].time == 2.0);
  CHECK_FALSE(s[0].event);
  CHECK(s[1].time == 1.0);
}

TEST_CASE("csv errors") {
  auto message = [](const std::string& text) {
    std::istringstream in(text);
    try {
      load_sample(in);
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const auto neg = message("time,event,z1\n-1,1,0");
  CHECK(neg.find("negative time") != std::string::npos);
  CHECK(neg.find("row 1") != std::string::npos);
  CHECK(message("").find("empty") != std::string::npos);
  CHECK(message("time,event,z1\n1,1,0\n2,0").find("row 2") != std::string::npos);
  CHECK(message("time,event\n1,2").find("row 1") != std::string::npos);
  CHECK(message("time,event\nabc,1").find("row 1") != std::string::npos);
  CHECK(message("time,event\ninf,1").find("row 1") != std::string::npos);
  CHECK(message("time,event\n").find("empty") != std::string::npos);
  CHECK_FALSE(message("foo,bar\n1,1").empty());
  CHECK_THROWS_AS(load_sample_file("/nonexistent/file.csv"), DataError);
}

TEST_CASE("sample validation") {
  CHECK_THROWS_AS(SurvivalSample(std::vector<Record>{}), DataError);
  CHECK_THROWS_AS(SurvivalSample({rec(1, true, {1}), rec(2, true, {})}), DataError);
  CHECK_THROWS_AS(SurvivalSample({rec(-0.5, true)}), DataError);
  CHECK_THROWS_AS(SurvivalSample({rec(std::nan(""), true)}), DataError);
}

TEST_CASE("sort order and tie policy") {
  auto a = testing::sorted({rec(3, true), rec(1, true), rec(2, true)});
  CHECK(a.order() == std::vector<std::size_t>{1, 2, 0});

  auto b = testing::sorted({rec(1, false), rec(1, true)});
  CHECK(b.order() == std::vector<std::size_t>{1, 0});
  CHECK(b.event(0));

  auto c = testing::sorted({rec(1, true), rec(1, true)});
  CHECK(c.order() == std::vector<std::size_t>{0, 1});
}

TEST_CASE("sorting is idempotent and nondecreasing") {
  std::mt19937_64 g(5);
  for (int rep = 0; rep < 50; ++rep) {
    auto s = testing::random_sample(g, 40, 1, true);
    auto t = s.times();
    CHECK(std::is_sorted(t.begin(), t.end()));
    for (std::size_t k = 1; k < s.size(); ++k)
      if (s.time(k) == s.time(k - 1)) {
        CHECK((s.event(k - 1) || !s.event(k)));
        if (s.event(k) == s.event(k - 1)) CHECK(s.order()[k - 1] < s.order()[k]);
      }
    std::vector<Record> again;
    for (std::size_t k = 0; k < s.size(); ++k) again.push_back(s.base()[s.order()[k]]);
    SortedSample twice{SurvivalSample(again)};
    for (std::size_t k = 0; k < s.size(); ++k) {
      CHECK(twice.order()[k] == k);
      CHECK(twice.time(k) == s.time(k));
    }
  }
}

TEST_CASE("step function evaluation") {
  StepFunction f({1.0, 2.0}, {3.0, 5.0}, -1.0);
  CHECK(f(0.5) == -1.0);
  CHECK(f(1.0) == 3.0);
  CHECK(f(1.5) == 3.0);
  CHECK(f(2.0) == 5.0);
  CHECK(f(10.0) == 5.0);
  CHECK(f.left_limit(1.0) == -1.0);
  CHECK(f.left_limit(2.0) == 3.0);
  CHECK_THROWS(StepFunction({1.0, 1.0}, {1.0, 2.0}));
  CHECK_THROWS(StepFunction({1.0}, {1.0, 2.0}));
}

TEST_CASE("step integral") {
  StepFunction two({0.0}, {2.0});
  CHECK(step_integral(two, 1.0, 3.0) == doctest::Approx(4.0));
  StepFunction unit({1.0}, {1.0});
  CHECK(step_integral(unit, 0.0, 2.0) == doctest::Approx(1.0));
  CHECK(step_integral(unit, 0.7, 0.7) == 0.0);
  CHECK_THROWS(step_integral(unit, 2.0, 1.0));

  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> k, v;
    double x = 0.0;
    for (int i = 0; i < 10; ++i) {
      x += u(g);
      k.push_back(x);
      v.push_back(u(g) * 4 - 2);
    }
    StepFunction f(k, v, u(g));
    double a = u(g) * 6 - 1, b = a + u(g) * 3, c = b + u(g) * 3;
    const double whole = step_integral(f, a, c);
    CHECK(step_integral(f, a, b) + step_integral(f, b, c) == doctest::Approx(whole).epsilon(1e-12));
  }
}

TEST_CASE("step function json round trip") {
  StepFunction f({0.5, 1.5}, {1.0, 2.0}, 0.25);
  nlohmann::json j = f;
  CHECK(j.at("before") == 0.25);
  CHECK(j.at("knots").size() == 2);
  auto g = j.get<StepFunction>();
  CHECK(g.knots() == f.knots());
  CHECK(g.values() == f.values());
  CHECK(g.before() == f.before());
}

TEST_CASE("kaplan meier of the censoring times") {
  auto s = testing::sorted({rec(1, true), rec(2, false), rec(3, true)});
  auto km = kaplan_meier_censoring(s);
  CHECK(km.curve(0.0) == 1.0);
  CHECK(km.curve(1.9) == 1.0);
  CHECK(km.curve(2.0) == doctest::Approx(0.5));
  CHECK(km.curve(5.0) == doctest::Approx(0.5));
  REQUIRE(km.atoms.size() == 2);
  CHECK(km.atoms[0].time == 2.0);
  CHECK(km.atoms[0].mass == doctest::Approx(0.5));
  CHECK(km.atoms[1].time == 3.0);
  CHECK(km.atoms[1].mass == doctest::Approx(0.5));

  auto all_events = kaplan_meier_censoring(testing::sorted({rec(1, true), rec(2, true), rec(4, true)}));
  CHECK(all_events.curve(3.9) == 1.0);
  REQUIRE(all_events.atoms.size() == 1);
  CHECK(all_events.atoms[0].time == 4.0);
  CHECK(all_events.atoms[0].mass == 1.0);

  auto none = kaplan_meier_censoring(
      testing::sorted({rec(0.5, false), rec(1.5, false), rec(2.5, false), rec(3.5, false)}));
  CHECK(none.curve(1.0) == doctest::Approx(0.75));
  CHECK(none.curve(2.0) == doctest::Approx(0.5));
  CHECK(none.curve(3.0) == doctest::Approx(0.25));
  CHECK(none.curve(3.5) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("kaplan meier equals direct product and sampling atoms are proper") {
  std::mt19937_64 g(3);
  for (int rep = 0; rep < 60; ++rep) {
    auto s = testing::random_sample(g, 1 + rep % 50, 0, rep % 2 == 0);
    auto km = kaplan_meier_censoring(s);
    const std::size_t n = s.size();
    std::vector<double> grid(s.times().begin(), s.times().end());
    grid.push_back(0.0);
    grid.push_back(s.max_time() + 1);
    for (double t : grid) {
      double direct = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double si = s.time(i);
        if (si > t || s.event(i)) continue;
        bool first = true;
        for (std::size_t j = 0; j < i; ++j)
          if (s.time(j) == si && !s.event(j)) first = false;
        if (!first) continue;
        double d = 0, r = 0;
        for (std::size_t j = 0; j < n; ++j) {
          if (s.time(j) >= si) ++r;
          if (s.time(j) == si && !s.event(j)) ++d;
        }
        direct *= 1.0 - d / r;
      }
      CHECK(km.curve(t) == doctest::Approx(direct).epsilon(1e-12));
    }
    double mass = 0.0;
    for (const auto& a : km.atoms) {
      CHECK(a.mass >= 0.0);
      mass += a.mass;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    double last = 1.0;
    for (double v : km.curve.values()) {
      CHECK(v <= last + 1e-15);
      CHECK(v >= -1e-15);
      last = v;
    }
    CHECK(km.quantile(0.0) == km.atoms.front().time);
    CHECK(km.quantile(0.999999999) <= s.max_time());
  }
}
