#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>

#include "didint/dataset.hpp"
#include "didint/dataset_io.hpp"
#include "helpers.hpp"

using namespace didint;
using testing::make;
using testing::row;

namespace {

std::string temp_file(const std::string& name, const std::string& contents) {
  const auto path = std::filesystem::temp_directory_path() / ("didint_unit_" + name);
  std::ofstream(path) << contents;
  return path.string();
}

}  // namespace

TEST_CASE("minimal 2x2 csv loads with four populated cells") {
  const auto path = temp_file("min.csv",
                              "group,time,outcome,x,treat\n"
                              "A,1,1.0,0.5,2\nA,1,2.0,0.1,2\nA,2,3.0,0.2,2\nA,2,4.0,0.3,2\n"
                              "B,1,0.0,1.5,never\nB,1,1.0,1.1,never\nB,2,1.0,1.2,never\nB,2,2.0,1.3,never\n");
  CsvSchema schema;
  schema.covariates = {"x"};
  schema.treatment = "treat";
  const auto data = load_csv(path, schema);
  CHECK(data.size() == 8);
  CHECK(data.populated_cells().size() == 4);
  CHECK(data.schedule().first_treated("A") == 2);
  CHECK_FALSE(data.schedule().first_treated("B").has_value());
  CHECK(cell_mean(data, {"A", 2}) == doctest::Approx(3.5));
}

TEST_CASE("treatment in first period has no pre-period") {
  CHECK_THROWS_WITH_AS(make({row("A", 1, 1.0), row("A", 2, 2.0), row("B", 1, 0.0), row("B", 2, 1.0)},
                            {{"A", 1}, {"B", std::nullopt}}),
                       "no pre-period for group A", ValidationError);
}

TEST_CASE("csv errors name the problem") {
  CsvSchema schema;
  schema.treatment = "treat";
  CHECK_THROWS_AS(load_csv(temp_file("empty.csv", ""), schema), ValidationError);
  CHECK_THROWS_WITH(load_csv(temp_file("nocol.csv", "group,time,treat\nA,1,2\n"), schema),
                    doctest::Contains("missing column 'outcome'"));
  CHECK_THROWS_WITH(load_csv(temp_file("nonnum.csv", "group,time,outcome,treat\nA,1,abc,2\n"), schema),
                    doctest::Contains("non-numeric"));
  CHECK_THROWS_WITH(load_csv(temp_file("frac.csv", "group,time,outcome,treat\nA,1.5,1,2\n"), schema),
                    doctest::Contains("non-integer time"));
  CHECK_THROWS_WITH(load_csv(temp_file("varying.csv", "group,time,outcome,treat\nA,1,1,2\nA,2,1,3\n"), schema),
                    doctest::Contains("not constant"));
}

TEST_CASE("sidecar schedule and column must agree") {
  const auto data_path = temp_file("side.csv", "group,time,outcome,treat\nA,1,1,2\nA,2,2,2\nB,1,0,never\nB,2,1,never\n");
  const auto good = temp_file("good_sched.csv", "group,first_treated\nA,2\nB,never\n");
  const auto bad = temp_file("bad_sched.csv", "group,first_treated\nA,2\nB,2\n");
  CsvSchema schema;
  schema.treatment = "treat";
  schema.schedule_file = good;
  CHECK_NOTHROW(load_csv(data_path, schema));
  schema.schedule_file = bad;
  CHECK_THROWS_WITH_AS(load_csv(data_path, schema), doctest::Contains("disagree"), ValidationError);
}

TEST_CASE("staggered schedule has one never-treated group") {
  std::vector<Observation> rows;
  for (const std::string g : {"RI", "PA", "NJ", "VA", "NY"}) {
    for (int t = 2000; t <= 2014; ++t) rows.push_back(row(g, t, 1.0));
  }
  const auto data = make(rows, {{"RI", 2004}, {"PA", 2004}, {"NJ", 2009}, {"VA", 2009}, {"NY", std::nullopt}});
  std::vector<std::string> never;
  for (std::size_t g = 0; g < data.num_groups(); ++g) {
    if (!data.first_treated(g)) never.push_back(data.groups()[g]);
  }
  CHECK(never == std::vector<std::string>{"NY"});
}

TEST_CASE("cell_mean") {
  const auto data = make({row("A", 1, 1.0), row("A", 1, 3.0), row("A", 2, 7.0), row("B", 1, 0.0), row("B", 2, 0.0)},
                         {{"A", 2}, {"B", std::nullopt}});
  CHECK(cell_mean(data, {"A", 1}) == 2.0);
  CHECK(cell_mean(data, {"A", 2}) == 7.0);
  CHECK_THROWS_AS(cell_mean(data, {"A", 3}), EstimationError);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(3.0, 2.0);
  std::vector<Observation> rows;
  double oracle = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double y = z(rng);
    oracle += y;
    rows.push_back(row("C", 1, y));
  }
  rows.push_back(row("C", 2, 0.0));
  const auto big = make(rows, {{"C", std::nullopt}});
  CHECK(std::abs(cell_mean(big, {"C", 1}) - oracle / 200.0) < 1e-12);
}

TEST_CASE("eligible controls exclude already-treated groups") {
  const auto data = testing::elu(0.0, 1.0, 1, 2);
  CHECK(eligible_controls(data, {"e", 2}) == std::set<std::string>{"l", "u"});
  CHECK(eligible_controls(data, {"l", 3}) == std::set<std::string>{"u"});

  const auto both = make({row("A", 1, 0), row("A", 2, 1), row("B", 1, 0), row("B", 2, 1)}, {{"A", 2}, {"B", 2}});
  CHECK_THROWS_WITH_AS(eligible_controls(both, {"A", 2}), doctest::Contains("no valid control"), EstimationError);
}

TEST_CASE("property: eligible controls never include a group treated by the cell's period") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> first(2, 8);
  for (int draw = 0; draw < 30; ++draw) {
    testing::Schedule s;
    std::vector<Observation> rows;
    for (int g = 0; g < 6; ++g) {
      const std::string name = "g" + std::to_string(g);
      s[name] = g == 5 ? std::nullopt : std::optional<int>(first(rng));
      for (int t = 1; t <= 8; ++t) rows.push_back(row(name, t, 0.0));
    }
    const auto data = make(rows, s);
    for (const auto& [g, f] : s) {
      if (!f) continue;
      for (int t = *f; t <= 8; ++t) {
        for (const auto& h : eligible_controls(data, {g, t})) {
          const auto fh = data.schedule().first_treated(h);
          CHECK((!fh || *fh > t));
        }
      }
    }
  }
}

TEST_CASE("treatment dummy is group treated and time at or after first period") {
  const auto data = testing::elu(0.0, 1.0, 2, 3);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& o = data.observations()[i];
    const auto f = data.schedule().first_treated(o.group);
    CHECK(data.treatment(i) == (f && o.time >= *f));
  }
}

TEST_CASE("csv round trip preserves observations") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 1e3);
  std::vector<Observation> rows;
  for (const std::string g : {"a", "b, quoted", "c"}) {
    for (int t = 1; t <= 3; ++t) rows.push_back(row(g, t, z(rng), {z(rng), z(rng) * 1e-9}));
  }
  const auto data = make(rows, {{"a", 2}, {"b, quoted", std::nullopt}, {"c", 3}}, {"x1", "x2"});
  const auto path = (std::filesystem::temp_directory_path() / "didint_unit_roundtrip.csv").string();
  write_csv(data, path);
  CsvSchema schema;
  schema.covariates = {"x1", "x2"};
  schema.treatment = "first_treated";
  const auto back = load_csv(path, schema);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back.observations()[i].group == data.observations()[i].group);
    CHECK(back.observations()[i].time == data.observations()[i].time);
    CHECK(back.observations()[i].outcome == data.observations()[i].outcome);
    CHECK(back.observations()[i].covariates == data.observations()[i].covariates);
  }
  CHECK(back.schedule() == data.schedule());
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("validation rejects malformed observations") {
  CHECK_THROWS_WITH_AS(make({}, {}), "empty dataset", ValidationError);
  CHECK_THROWS_AS(make({row("A", 1, 1.0, {1.0})}, {{"A", std::nullopt}}), ValidationError);
  CHECK_THROWS_AS(make({row("A", 1, std::nan(""))}, {{"A", std::nullopt}}), ValidationError);
  CHECK_THROWS_AS(make({row("A", 1, 1.0, {1.0, 2.0})}, {{"A", std::nullopt}}, {"x", "x"}), ValidationError);
}

TEST_CASE("restricted and without_group keep schedule entries of remaining groups") {
  const auto data = testing::elu(1.0, 0.0, 4, 2);
  const auto sub = data.without_group("l");
  CHECK(sub.groups() == std::vector<std::string>{"e", "u"});
  const auto r = data.restricted({"e", "u"}, {1, 2});
  CHECK(r.periods() == std::vector<int>{1, 2});
  CHECK(r.size() == 8);
}
