#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "didint/inference.hpp"
#include "didint/simulation.hpp"
#include "helpers.hpp"

using namespace didint;
using testing::make;
using testing::row;

namespace {

PanelDataset three_groups(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Observation> rows;
  for (const std::string g : {"a", "b", "c"}) {
    for (int t = 1; t <= 2; ++t) {
      for (int i = 0; i < 10; ++i) rows.push_back(row(g, t, t + z(rng)));
    }
  }
  return make(rows, {{"a", 2}, {"b", std::nullopt}, {"c", std::nullopt}});
}

}  // namespace

TEST_CASE("jackknife of a noiseless design has zero spread") {
  const auto data = testing::elu(3.0, 0.0, 1, 5);
  const auto r = cluster_jackknife(data, EstimatorSpec::parse("didint"));
  CHECK(r.estimate == doctest::Approx(3.0));
  CHECK(*r.se_jackknife < 1e-10);
  CHECK(r.replicates.size() == 3);
}

TEST_CASE("jackknife matches a direct leave-one-group-out computation") {
  const auto data = generate(staggered_design(), 21);
  const auto spec = EstimatorSpec::parse("didint-homogeneous");
  const auto r = cluster_jackknife(data, spec);
  EstimatorSpec lenient = spec;
  lenient.skip_cells_without_controls = true;
  std::vector<double> reps;
  for (const auto& g : data.groups()) {
    try {
      reps.push_back(lenient.run(data.without_group(g)).overall_att);
    } catch (const std::runtime_error&) {
    }
  }
  REQUIRE(reps.size() == r.replicates.size());
  const double g = static_cast<double>(reps.size());
  double mean = 0.0;
  for (double v : reps) mean += v / g;
  double ss = 0.0;
  for (double v : reps) ss += (v - mean) * (v - mean);
  const double se = std::sqrt((g - 1.0) / g * ss);
  CHECK(*r.se_jackknife == doctest::Approx(se).epsilon(1e-10));
  const double q = boost::math::quantile(boost::math::students_t(g - 1.0), 0.975);
  CHECK(*r.ci_high - *r.ci_low == doctest::Approx(2.0 * q * se).epsilon(1e-10));
}

TEST_CASE("jackknife needs three groups") {
  const auto data = make({row("A", 1, 0), row("A", 2, 1), row("B", 1, 0), row("B", 2, 3)}, {{"A", 2}, {"B", std::nullopt}});
  CHECK_THROWS_WITH_AS(cluster_jackknife(data, EstimatorSpec::parse("didint")), doctest::Contains("too few clusters"),
                       EstimationError);
}

TEST_CASE("exhaustive randomization over three assignments") {
  const auto data = three_groups(2);
  CHECK(assignment_count(data) == 3.0);
  const auto r = randomization_inference(data, EstimatorSpec::parse("didint"), 999, 1);
  CHECK(r.exhaustive);
  CHECK(r.n_permutations == 3);
  const double p = *r.p_randomization;
  const bool allowed = std::abs(p - 1.0 / 3.0) < 1e-12 || std::abs(p - 2.0 / 3.0) < 1e-12 || std::abs(p - 1.0) < 1e-12;
  CHECK(allowed);
}

TEST_CASE("randomization p-value bounds and determinism") {
  const auto data = generate(staggered_design(), 22);
  const auto spec = EstimatorSpec::parse("didint");
  CHECK(assignment_count(data) == 30.0);
  const auto a = randomization_inference(data, spec, 999, 7);
  CHECK(a.exhaustive);
  const auto b = randomization_inference(data, spec, 999, 7);
  CHECK(*a.p_randomization == *b.p_randomization);
  CHECK(*a.p_randomization >= 1.0 / 30.0);
  CHECK(*a.p_randomization <= 1.0);

  std::vector<Observation> rows;
  std::mt19937_64 rng(24);
  std::normal_distribution<double> z(0.0, 1.0);
  testing::Schedule sched;
  for (int g = 0; g < 10; ++g) {
    const std::string name = "g" + std::to_string(g);
    sched[name] = g < 3 ? std::optional<int>(3) : (g < 6 ? std::optional<int>(4) : std::nullopt);
    for (int t = 1; t <= 4; ++t) {
      for (int i = 0; i < 5; ++i) rows.push_back(row(name, t, z(rng)));
    }
  }
  const auto many = make(rows, sched);
  CHECK(assignment_count(many) == 4200.0);
  const auto s1 = randomization_inference(many, spec, 199, 9);
  const auto s2 = randomization_inference(many, spec, 199, 9);
  CHECK_FALSE(s1.exhaustive);
  CHECK(*s1.p_randomization == *s2.p_randomization);
  CHECK(*s1.p_randomization >= 1.0 / 200.0);
  CHECK(*s1.p_randomization <= 1.0);
  CHECK_THROWS_AS(randomization_inference(many, spec, 10, 1), std::invalid_argument);
}

TEST_CASE("compensated sum") {
  CHECK(compensated_sum({1e16, 1.0, -1e16}) == 1.0);
  CHECK(compensated_sum({}) == 0.0);
  std::vector<double> tenths(10, 0.1);
  CHECK(compensated_sum(tenths) == 1.0);
}
