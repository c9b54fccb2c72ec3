#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "didint/errors.hpp"

namespace didint {

// Dense regressor matrix with one label per column. When row_blocks is
// non-empty it assigns every row to a block (typically its cell); rows are
// compressed block by block before the global decomposition, which keeps
// dummy-heavy designs cheap without changing the fit.
struct DesignMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> column_labels;
  // Columns expected to collide with others by construction.
  std::vector<bool> aliasable;
  std::vector<std::size_t> row_blocks;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

struct OlsOptions {
  // A column is dropped when the part of it not explained by earlier retained
  // columns has norm <= tolerance * its own norm.
  double tolerance = 1e-10;
};

struct FitResult {
  std::vector<std::string> labels;
  // Estimate per column; empty for dropped columns.
  std::vector<std::optional<double>> estimates;
  Eigen::VectorXd residuals;
  // X b for least squares, fitted probabilities for logit.
  Eigen::VectorXd fitted;
  Eigen::Index rank = 0;
  std::vector<std::string> dropped;
  std::vector<Eigen::Index> retained;
  // Upper-triangular factor of the retained columns: X_r' X_r = R' R.
  Eigen::MatrixXd r;
  int iterations = 0;

  std::optional<double> coefficient(const std::string& label) const;
  std::map<std::string, double> coefficients() const;
  double rss() const { return residuals.squaredNorm(); }
  // (X_r' X_r)^{-1} over retained columns, in retained order.
  Eigen::MatrixXd xtx_inverse() const;
};

FitResult ols(const DesignMatrix& x, const Eigen::VectorXd& y, bool intercept,
              const OlsOptions& options = {});

// Heteroskedasticity-robust (HC1) covariance of the retained coefficients.
Eigen::MatrixXd hc1_covariance(const DesignMatrix& x, const FitResult& fit);
// Homoskedastic covariance s^2 (X'X)^{-1} of the retained coefficients.
Eigen::MatrixXd classical_covariance(const FitResult& fit);

struct LogitOptions {
  double tolerance = 1e-8;
  int max_iterations = 100;
};

// Maximum-likelihood logistic regression by Newton-Raphson. Aliased columns
// are dropped first with the same rule as ols.
FitResult logit(const DesignMatrix& x, const Eigen::VectorXd& d, const LogitOptions& options = {});

double silverman_bandwidth(const std::vector<double>& samples);
std::vector<double> kde(const std::vector<double>& samples, const std::vector<double>& grid);
// Evenly spaced grid extending four bandwidths beyond the sample range.
std::vector<double> kde_grid(const std::vector<double>& samples, std::size_t points = 512);
double trapezoid(const std::vector<double>& x, const std::vector<double>& y);

// Moore-Penrose pseudo-inverse of a symmetric matrix and its numerical rank.
std::pair<Eigen::MatrixXd, Eigen::Index> symmetric_pinv(const Eigen::MatrixXd& a, double rel_tol = 1e-10);

}  // namespace didint
