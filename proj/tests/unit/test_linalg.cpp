#include <doctest.h>

#include <cmath>
#include <random>

#include "didint/linalg.hpp"

using namespace didint;

namespace {

DesignMatrix matrix(const Eigen::MatrixXd& v) {
  DesignMatrix x;
  x.values = v;
  for (Eigen::Index j = 0; j < v.cols(); ++j) x.column_labels.push_back("c" + std::to_string(j));
  x.aliasable.assign(static_cast<std::size_t>(v.cols()), false);
  return x;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int n, int p) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd m(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) m(i, j) = z(rng);
  }
  return m;
}

}  // namespace

TEST_CASE("ols of a constant is the mean") {
  Eigen::VectorXd y(2);
  y << 2.0, 4.0;
  const auto fit = ols(matrix(Eigen::MatrixXd::Ones(2, 1)), y, false);
  CHECK(*fit.estimates[0] == doctest::Approx(3.0));
  const auto with_intercept = ols(DesignMatrix{Eigen::MatrixXd(2, 0), {}, {}, {}}, y, true);
  CHECK(*with_intercept.coefficient("(Intercept)") == doctest::Approx(3.0));
}

TEST_CASE("duplicated column: later one dropped, fit unchanged") {
  std::mt19937_64 rng(1);
  Eigen::MatrixXd base = random_matrix(rng, 40, 3);
  Eigen::MatrixXd dup(40, 4);
  dup << base, base.col(1);
  const Eigen::VectorXd y = random_matrix(rng, 40, 1).col(0);
  const auto a = ols(matrix(base), y, false);
  const auto b = ols(matrix(dup), y, false);
  CHECK(b.rank == 3);
  CHECK(b.dropped == std::vector<std::string>{"c3"});
  CHECK_FALSE(b.estimates[3].has_value());
  for (int j = 0; j < 3; ++j) CHECK(std::abs(*a.estimates[j] - *b.estimates[j]) < 1e-12);
}

TEST_CASE("ols matches normal equations on random systems") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = random_matrix(rng, 50, 4);
    const Eigen::VectorXd y = random_matrix(rng, 50, 1).col(0);
    const auto fit = ols(matrix(x), y, false);
    const Eigen::VectorXd oracle = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    for (int j = 0; j < 4; ++j) CHECK(std::abs(*fit.estimates[j] - oracle(j)) < 1e-8);
  }
}

TEST_CASE("residuals are orthogonal to retained columns and refits vanish") {
  std::mt19937_64 rng(3);
  const auto x = random_matrix(rng, 80, 5);
  const Eigen::VectorXd y = random_matrix(rng, 80, 1).col(0) * 10.0;
  const auto fit = ols(matrix(x), y, false);
  CHECK((x.transpose() * fit.residuals).cwiseAbs().maxCoeff() < 1e-8 * y.norm());
  const auto again = ols(matrix(x), fit.residuals, false);
  for (const auto& e : again.estimates) CHECK(std::abs(*e) < 1e-8);
}

TEST_CASE("ols is bit-reproducible") {
  std::mt19937_64 rng(4);
  const auto x = random_matrix(rng, 60, 6);
  const Eigen::VectorXd y = random_matrix(rng, 60, 1).col(0);
  const auto a = ols(matrix(x), y, false);
  const auto b = ols(matrix(x), y, false);
  for (std::size_t j = 0; j < a.estimates.size(); ++j) CHECK(*a.estimates[j] == *b.estimates[j]);
}

TEST_CASE("row blocks do not change the fit") {
  std::mt19937_64 rng(5);
  Eigen::MatrixXd x = random_matrix(rng, 60, 3);
  Eigen::MatrixXd dummies = Eigen::MatrixXd::Zero(60, 3);
  std::vector<std::size_t> blocks(60);
  for (int i = 0; i < 60; ++i) {
    blocks[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i % 3);
    dummies(i, i % 3) = 1.0;
  }
  Eigen::MatrixXd full(60, 6);
  full << dummies, x;
  const Eigen::VectorXd y = random_matrix(rng, 60, 1).col(0);
  auto plain = matrix(full);
  auto blocked = plain;
  blocked.row_blocks = blocks;
  const auto a = ols(plain, y, false);
  const auto b = ols(blocked, y, false);
  for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(*a.estimates[j] - *b.estimates[j]) < 1e-10);
  CHECK((a.residuals - b.residuals).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("empty and fully aliased regressions fail") {
  CHECK_THROWS_WITH_AS(ols(matrix(Eigen::MatrixXd(0, 1)), Eigen::VectorXd(0), false),
                       "empty regression: no observations", EstimationError);
  CHECK_THROWS_AS(ols(matrix(Eigen::MatrixXd::Zero(5, 2)), Eigen::VectorXd::Ones(5), false), EstimationError);
}

TEST_CASE("hc1 covariance matches sandwich oracle") {
  std::mt19937_64 rng(6);
  const auto x = random_matrix(rng, 70, 3);
  Eigen::VectorXd y = random_matrix(rng, 70, 1).col(0);
  for (int i = 0; i < 70; ++i) y(i) *= 1.0 + std::abs(x(i, 0));
  const auto dm = matrix(x);
  const auto fit = ols(dm, y, false);
  const Eigen::MatrixXd bread = (x.transpose() * x).inverse();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(3, 3);
  for (int i = 0; i < 70; ++i) meat += fit.residuals(i) * fit.residuals(i) * x.row(i).transpose() * x.row(i);
  const Eigen::MatrixXd oracle = bread * meat * bread * (70.0 / 67.0);
  CHECK((hc1_covariance(dm, fit) - oracle).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("logit intercept-only MLE is the log odds") {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(100);
  d.head(25).setOnes();
  const auto fit = logit(matrix(Eigen::MatrixXd::Ones(100, 1)), d);
  CHECK(*fit.estimates[0] == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-10));
}

TEST_CASE("logit slopes vanish when d is independent of x") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z(0.0, 1.0);
  std::bernoulli_distribution coin(0.4);
  const int draws = 1000;
  std::vector<double> slopes;
  for (int r = 0; r < draws; ++r) {
    Eigen::MatrixXd x(60, 2);
    Eigen::VectorXd d(60);
    for (int i = 0; i < 60; ++i) {
      x(i, 0) = 1.0;
      x(i, 1) = z(rng);
      d(i) = coin(rng) ? 1.0 : 0.0;
    }
    try {
      slopes.push_back(*logit(matrix(x), d).estimates[1]);
    } catch (const EstimationError&) {
    }
  }
  double mean = 0.0;
  for (double s : slopes) mean += s;
  mean /= static_cast<double>(slopes.size());
  double var = 0.0;
  for (double s : slopes) var += (s - mean) * (s - mean);
  const double mc_se = std::sqrt(var / (slopes.size() - 1.0) / slopes.size());
  CHECK(slopes.size() > 990);
  CHECK(std::abs(mean) < 3.0 * mc_se);
}

TEST_CASE("logit errors") {
  Eigen::MatrixXd x(6, 2);
  x << 1, -3, 1, -2, 1, -1, 1, 1, 1, 2, 1, 3;
  Eigen::VectorXd d(6);
  d << 0, 0, 0, 1, 1, 1;
  CHECK_THROWS_WITH_AS(logit(matrix(x), d), "logit: separation", EstimationError);
  CHECK_THROWS_WITH_AS(logit(matrix(x), Eigen::VectorXd::Ones(6)), "logit: single-class outcome", EstimationError);
}

TEST_CASE("kde of a standard normal sample") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> s(10000);
  for (auto& v : s) v = z(rng);
  std::vector<double> grid;
  for (int i = 0; i <= 400; ++i) grid.push_back(-4.0 + 0.02 * i);
  const auto dens = kde(s, grid);
  CHECK(std::abs(dens[200] - 0.3989) < 0.02);
  const auto g2 = kde_grid(s, 512);
  const double area = trapezoid(g2, kde(s, g2));
  CHECK(area > 0.99);
  CHECK(area < 1.01);
  CHECK(silverman_bandwidth(s) == doctest::Approx(1.06 * std::pow(10000.0, -0.2)).epsilon(0.05));
}

TEST_CASE("kde integrates to one for arbitrary samples") {
  std::mt19937_64 rng(9);
  std::exponential_distribution<double> e(0.3);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> s(5 + rep * 20);
    for (auto& v : s) v = e(rng);
    const auto g = kde_grid(s, 512);
    const double area = trapezoid(g, kde(s, g));
    CHECK(area > 0.99);
    CHECK(area < 1.01);
  }
}

TEST_CASE("kde rejects degenerate samples") {
  CHECK_THROWS_WITH_AS(kde({0.0, 0.0}, {0.0}), doctest::Contains("degenerate"), EstimationError);
  CHECK_THROWS_AS(kde({1.0}, {0.0}), EstimationError);
}

TEST_CASE("symmetric pseudo-inverse") {
  Eigen::MatrixXd a(3, 3);
  a << 2, 1, 3, 1, 2, 3, 3, 3, 6;  // rank 2
  const auto [pinv, rank] = symmetric_pinv(a);
  CHECK(rank == 2);
  CHECK((a * pinv * a - a).cwiseAbs().maxCoeff() < 1e-10);
}
