#include <doctest.h>

#include "didint/dgp_config.hpp"
#include "didint/estimators.hpp"
#include "didint/report_io.hpp"
#include "didint/svg.hpp"
#include "helpers.hpp"

using namespace didint;

namespace {

const char* kMinimal = R"([design]
groups = a, b, c
periods = 1..4
covariates = x
cell_n = 5

[schedule]
a = 3
b = never
c = 4

[baseline]
a = 1, 0.5
b = 2, 0.5
c = 3, 0.5

[covariate:x]
law = uniform
a = 0
b = 1
shift = a:0.5

[gamma:x]
pattern = homogeneous
value = 2
)";

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("minimal config parses with defaults") {
  const auto spec = parse_dgp_config(kMinimal);
  CHECK(spec.periods == std::vector<int>{1, 2, 3, 4});
  CHECK(spec.cell_n == 5);
  CHECK(spec.noise_sd == 1.0);
  CHECK(spec.laws[0].kind == LawKind::Uniform);
  CHECK(spec.laws[0].group_shift.at("a") == 0.5);
  CHECK(spec.gamma[0].values[2][3] == 2.0);
  CHECK_FALSE(spec.schedule.first_treated("b").has_value());
}

TEST_CASE("config round trips exactly") {
  for (const auto& spec : {staggered_design(), pseudo_survey_design(), parse_dgp_config(kMinimal)}) {
    const auto text = format_dgp_config(spec);
    const auto back = parse_dgp_config(text);
    CHECK(format_dgp_config(back) == text);
    CHECK(back.gamma[0].values == spec.gamma[0].values);
    CHECK(back.baseline.size() == spec.baseline.size());
    const auto a = generate(spec, 3);
    const auto b = generate(back, 3);
    CHECK(a.observations().back().outcome == b.observations().back().outcome);
  }
}

TEST_CASE("config errors name the problem") {
  std::string text = kMinimal;
  CHECK_THROWS_WITH_AS(parse_dgp_config(text + "\n[extra]\nk = 1\n"), doctest::Contains("extra"), ValidationError);
  CHECK_THROWS_AS(parse_dgp_config(std::string(kMinimal).replace(text.find("law = uniform"), 13, "law = cauchy")),
                  ValidationError);
  CHECK_THROWS_WITH_AS(parse_dgp_config(std::string(kMinimal).replace(text.find("shift = a:0.5"), 13, "shift = z:0.5")),
                       doctest::Contains("z"), ValidationError);
  CHECK_THROWS_AS(parse_dgp_config(std::string(kMinimal).replace(text.find("cell_n = 5"), 10, "cell_n = five")),
                  ValidationError);
  CHECK_THROWS_AS(load_dgp_config("/nonexistent/spec.cfg"), ValidationError);
}

TEST_CASE("report json and cells csv") {
  const auto report = didint::didint(testing::elu(1.0, 0.0, 1, 3), CovariateForm::None);
  const auto j = to_json(report);
  CHECK(j["estimator"] == "didint-none");
  CHECK(j["cells"].size() == report.cells.size());
  CHECK(j["overall_att"].get<double>() == doctest::Approx(1.0));
  const auto csv = cells_csv(report);
  CHECK(csv.rfind("group,time,theta,weight,n_treated,diff_treated,controls\n", 0) == 0);
  CHECK(count(csv, "\n") == report.cells.size() + 1);
  CHECK(dump(j).back() == '\n');
}

TEST_CASE("non-finite numbers serialize as null") {
  EstimateReport r;
  r.estimator_name = "x";
  r.overall_att = std::nan("");
  CHECK(to_json(r)["overall_att"].is_null());
}

TEST_CASE("monte carlo outputs") {
  McSummary mc;
  mc.reps = 3;
  EstimatorSummary e;
  e.name = "twfe";
  e.kde_x = {0.0, 1.0};
  e.kde_density = {0.5, 0.25};
  mc.estimators = {e, e};
  mc.estimators[1].name = "flex";
  CHECK(kde_csv(e) == "x,density\n0,0.5\n1,0.25\n");
  const auto svg = density_svg(mc);
  CHECK(count(svg, "<polyline") == 2);
  CHECK(count(svg, "class=\"rule\"") == 1);
  CHECK(to_json(mc)["estimators"].size() == 2);

  BiasRow row;
  row.gap = 10.0;
  row.estimators = {"twfe"};
  row.abs_bias = {1.5};
  row.mc_se = {0.25};
  CHECK(bias_table_csv({row}) == "degree,gap,twfe,twfe_mc_se\nvery-low,10,1.5,0.25\n");
}
