#include <doctest.h>

#include <random>

#include "didint/design.hpp"
#include "didint/estimators.hpp"
#include "helpers.hpp"

using namespace didint;
using testing::make;
using testing::row;

namespace {

PanelDataset two_by_two(bool with_x) {
  std::vector<Observation> rows;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z(0.0, 1.0);
  for (const std::string g : {"A", "B"}) {
    for (int t = 1; t <= 2; ++t) {
      for (int i = 0; i < 3; ++i) {
        rows.push_back(row(g, t, z(rng), with_x ? std::vector<double>{z(rng)} : std::vector<double>{}));
      }
    }
  }
  return make(rows, {{"A", 2}, {"B", std::nullopt}}, with_x ? std::vector<std::string>{"x"} : std::vector<std::string>{});
}

}  // namespace

TEST_CASE("didint design column counts") {
  const auto plain = build_didint_design(two_by_two(false), CovariateForm::None);
  CHECK(plain.cols() == 4);
  for (Eigen::Index i = 0; i < plain.rows(); ++i) CHECK(plain.values.row(i).sum() == 1.0);
  CHECK(build_didint_design(two_by_two(true), CovariateForm::Homogeneous).cols() == 5);
  CHECK(build_didint_design(two_by_two(true), CovariateForm::StateVarying).cols() == 6);
  CHECK(build_didint_design(two_by_two(true), CovariateForm::TimeVarying).cols() == 6);
  CHECK(build_didint_design(two_by_two(true), CovariateForm::TwoOneWay).cols() == 8);

  const auto data = two_by_two(true);
  const auto tw = build_didint_design(data, CovariateForm::TwoWay);
  std::size_t triples = 0;
  for (std::size_t k = 0; k < data.num_covariates(); ++k) {
    for (std::size_t g = 0; g < data.num_groups(); ++g) {
      for (std::size_t t = 0; t < data.num_periods(); ++t) triples += data.populated(g, t) ? 1 : 0;
    }
  }
  CHECK(tw.cols() == static_cast<Eigen::Index>(4 + triples));
  CHECK(tw.cols() == 8);
}

TEST_CASE("expansion plan matches the form") {
  const auto data = two_by_two(true);
  const auto plan = didint_plan(data, CovariateForm::TwoOneWay);
  CHECK(plan.intersection_dummies.size() == 4);
  CHECK(plan.covariate_terms.size() == 4);
  CHECK(plan.covariate_terms[0] == CovariateTerm{0, std::string("A"), std::nullopt});
  CHECK(plan.covariate_terms[3] == CovariateTerm{0, std::nullopt, 2});
}

TEST_CASE("twfe design column counts") {
  CHECK(build_twfe_design(two_by_two(false), false, CovariateForm::None).cols() == 4);
  CHECK(build_twfe_design(two_by_two(true), false, CovariateForm::Homogeneous).cols() == 5);
  CHECK(build_twfe_design(two_by_two(true), true, CovariateForm::TwoWay).cols() == 8);
}

TEST_CASE("flex design effect cells") {
  std::vector<Observation> rows;
  for (const std::string g : {"T", "C"}) {
    for (int t = 1; t <= 3; ++t) rows.push_back(row(g, t, 0.0, {static_cast<double>(t)}));
  }
  std::vector<Observation> plain;
  for (const auto& r : rows) plain.push_back(row(r.group, r.time, r.outcome));
  const auto d0 = make(plain, {{"T", 2}, {"C", std::nullopt}});
  const auto post = build_flex_design(d0, false);
  CHECK(post.effect_cells == std::vector<CellIndex>{{"T", 2}, {"T", 3}});
  const auto leads = build_flex_design(d0, true);
  CHECK(leads.effect_cells.size() == 3);

  const auto d1 = make(rows, {{"T", 2}, {"C", std::nullopt}}, {"x"});
  const auto with_x = build_flex_design(d1, false);
  int two_way = 0;
  for (const auto& label : with_x.matrix.column_labels) two_way += label.rfind("x:I(", 0) == 0 ? 1 : 0;
  CHECK(two_way == 2);
}

TEST_CASE("two-way expansion spans every other form") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Observation> rows;
  for (const std::string g : {"a", "b", "c"}) {
    for (int t = 1; t <= 4; ++t) {
      for (int i = 0; i < 6; ++i) rows.push_back(row(g, t, z(rng), {z(rng), z(rng)}));
    }
  }
  const auto data = make(rows, {{"a", 3}, {"b", std::nullopt}, {"c", 4}}, {"x1", "x2"});
  const auto tw = build_didint_design(data, CovariateForm::TwoWay).values;
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(tw);
  for (auto form : {CovariateForm::None, CovariateForm::Homogeneous, CovariateForm::StateVarying,
                    CovariateForm::TimeVarying, CovariateForm::TwoOneWay}) {
    const auto m = build_didint_design(data, form).values;
    const Eigen::MatrixXd proj = tw * qr.solve(m);
    CHECK((proj - m).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("two-way terms flag within-cell constant covariates as aliasable") {
  std::vector<Observation> rows;
  for (const std::string g : {"A", "B"}) {
    for (int t = 1; t <= 2; ++t) {
      for (int i = 0; i < 3; ++i) rows.push_back(row(g, t, i, {g == "A" ? 1.0 : static_cast<double>(i)}));
    }
  }
  const auto data = make(rows, {{"A", 2}, {"B", std::nullopt}}, {"x"});
  const auto x = build_didint_design(data, CovariateForm::TwoWay);
  int flagged = 0;
  for (bool a : x.aliasable) flagged += a ? 1 : 0;
  CHECK(flagged == 2);
  const auto fit = ols(x, outcome_vector(data), false);
  CHECK(fit.dropped.size() == 2);
}

TEST_CASE("residualize") {
  std::vector<Observation> rows;
  for (const std::string g : {"A", "B"}) {
    for (int t = 1; t <= 3; ++t) {
      for (int i = 0; i < 4; ++i) rows.push_back(row(g, t, 10.0 * t + i, {0.0}));
    }
  }
  const auto zero_x = make(rows, {{"A", 2}, {"B", std::nullopt}}, {"x"});
  const auto r0 = residualize(zero_x, CovariateForm::Homogeneous);
  double mean = 0.0;
  for (const auto& o : zero_x.observations()) mean += o.outcome;
  mean /= static_cast<double>(zero_x.size());
  for (std::size_t i = 0; i < zero_x.size(); ++i) CHECK(r0[i] == doctest::Approx(zero_x.observations()[i].outcome - mean));

  std::mt19937_64 rng(13);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Observation> lin;
  for (const std::string g : {"A", "B"}) {
    for (int t = 1; t <= 3; ++t) {
      for (int i = 0; i < 5; ++i) {
        const double x = z(rng);
        lin.push_back(row(g, t, 4.0 * x, {x}));
      }
    }
  }
  const auto linear = make(lin, {{"A", 2}, {"B", std::nullopt}}, {"x"});
  for (double r : residualize(linear, CovariateForm::Homogeneous)) CHECK(std::abs(r) < 1e-10);
  CHECK_THROWS_AS(residualize(linear, CovariateForm::None), std::invalid_argument);
}

TEST_CASE("didint(None) on residualized outcome equals didint(Homogeneous)") {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Observation> rows;
  const std::map<std::string, std::optional<int>> sched{{"a", 3}, {"b", 4}, {"c", std::nullopt}, {"d", std::nullopt}};
  for (const auto& [g, f] : sched) {
    for (int t = 1; t <= 5; ++t) {
      for (int i = 0; i < 8; ++i) {
        const double x = z(rng) + 0.2 * t + (g == "a" ? 1.0 : 0.0);
        rows.push_back(row(g, t, 3.0 * x + t + (f && t >= *f ? 2.0 : 0.0), {x}));
      }
    }
  }
  const auto data = make(rows, sched, {"x"});
  const auto resid = data.with_outcomes(residualize(data, CovariateForm::Homogeneous));
  CHECK(std::abs(didint::didint(resid, CovariateForm::None).overall_att -
                 didint::didint(data, CovariateForm::Homogeneous).overall_att) < 1e-6);
}

TEST_CASE("form names round trip") {
  for (auto f : {CovariateForm::None, CovariateForm::Homogeneous, CovariateForm::StateVarying, CovariateForm::TimeVarying,
                 CovariateForm::TwoWay, CovariateForm::TwoOneWay}) {
    CHECK(parse_form(to_string(f)) == f);
  }
  CHECK(parse_form("twoway") == CovariateForm::TwoWay);
  CHECK_THROWS_AS(parse_form("quadratic"), ValidationError);
}
