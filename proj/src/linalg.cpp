#include "didint/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/Householder>

namespace didint {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Replaces (x, y) by (Z, z) with Z'Z = X'X, Z'z = X'y and z'z = y'y, using
// one Householder QR per block restricted to the block's nonzero columns.
void compress_blocks(const DesignMatrix& x, const VectorXd& y, MatrixXd& z_mat, VectorXd& z_vec) {
  const Index p = x.cols();
  std::vector<std::size_t> order(static_cast<std::size_t>(x.rows()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x.row_blocks[a] < x.row_blocks[b]; });

  struct Block {
    std::vector<Index> rows;
    std::vector<Index> cols;
  };
  std::vector<Block> blocks;
  for (std::size_t k = 0; k < order.size();) {
    std::size_t end = k;
    Block block;
    while (end < order.size() && x.row_blocks[order[end]] == x.row_blocks[order[k]]) {
      block.rows.push_back(static_cast<Index>(order[end]));
      ++end;
    }
    for (Index j = 0; j < p; ++j) {
      for (Index i : block.rows) {
        if (x.values(i, j) != 0.0) {
          block.cols.push_back(j);
          break;
        }
      }
    }
    blocks.push_back(std::move(block));
    k = end;
  }

  Index total = 0;
  for (const auto& b : blocks) {
    total += std::min<Index>(static_cast<Index>(b.rows.size()), static_cast<Index>(b.cols.size()) + 1);
  }
  z_mat = MatrixXd::Zero(total, p);
  z_vec = VectorXd::Zero(total);

  Index offset = 0;
  for (const auto& b : blocks) {
    const Index m = static_cast<Index>(b.rows.size());
    const Index c = static_cast<Index>(b.cols.size());
    MatrixXd aug(m, c + 1);
    for (Index r = 0; r < m; ++r) {
      for (Index j = 0; j < c; ++j) aug(r, j) = x.values(b.rows[r], b.cols[j]);
      aug(r, c) = y(b.rows[r]);
    }
    const Index keep = std::min(m, c + 1);
    if (m > c + 1) {
      Eigen::HouseholderQR<Eigen::Ref<MatrixXd>> qr(aug);
      aug.topRows(keep).triangularView<Eigen::StrictlyLower>().setZero();
    }
    for (Index r = 0; r < keep; ++r) {
      for (Index j = 0; j < c; ++j) z_mat(offset + r, b.cols[j]) = aug(r, j);
      z_vec(offset + r) = aug(r, c);
    }
    offset += keep;
  }
}

}  // namespace

std::optional<double> FitResult::coefficient(const std::string& label) const {
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] == label) return estimates[j];
  }
  return std::nullopt;
}

std::map<std::string, double> FitResult::coefficients() const {
  std::map<std::string, double> out;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (estimates[j]) out.emplace(labels[j], *estimates[j]);
  }
  return out;
}

MatrixXd FitResult::xtx_inverse() const {
  const Index k = r.rows();
  MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(k, k));
  return rinv * rinv.transpose();
}

FitResult ols(const DesignMatrix& x_in, const VectorXd& y, bool intercept, const OlsOptions& options) {
  if (x_in.rows() == 0) throw EstimationError("empty regression: no observations");
  if (y.size() != x_in.rows()) throw std::invalid_argument("ols: outcome length does not match design rows");
  if (x_in.column_labels.size() != static_cast<std::size_t>(x_in.cols())) {
    throw std::invalid_argument("ols: one label per column required");
  }

  DesignMatrix with_const;
  const DesignMatrix* xp = &x_in;
  if (intercept) {
    with_const.values.resize(x_in.rows(), x_in.cols() + 1);
    with_const.values.col(0).setOnes();
    with_const.values.rightCols(x_in.cols()) = x_in.values;
    with_const.column_labels.reserve(x_in.column_labels.size() + 1);
    with_const.column_labels.push_back("(Intercept)");
    with_const.column_labels.insert(with_const.column_labels.end(), x_in.column_labels.begin(),
                                    x_in.column_labels.end());
    with_const.row_blocks = x_in.row_blocks;
    xp = &with_const;
  }
  const DesignMatrix& x = *xp;
  const Index n = x.rows();
  const Index p = x.cols();

  MatrixXd a;
  VectorXd b;
  if (!x.row_blocks.empty()) {
    if (x.row_blocks.size() != static_cast<std::size_t>(n)) {
      throw std::invalid_argument("ols: row_blocks length does not match design rows");
    }
    compress_blocks(x, y, a, b);
  } else {
    a = x.values;
    b = y;
  }
  const Index m = a.rows();

  FitResult fit;
  fit.labels = x.column_labels;
  fit.estimates.assign(static_cast<std::size_t>(p), std::nullopt);

  VectorXd workspace(std::max<Index>(p, 1));
  Index k = 0;
  for (Index j = 0; j < p; ++j) {
    const double original = x.values.col(j).norm();
    const double remaining = k < m ? a.col(j).tail(m - k).norm() : 0.0;
    if (original == 0.0 || remaining <= options.tolerance * original) {
      fit.dropped.push_back(x.column_labels[static_cast<std::size_t>(j)]);
      continue;
    }
    double tau = 0.0;
    double beta = 0.0;
    auto col = a.col(j).tail(m - k);
    col.makeHouseholderInPlace(tau, beta);
    const VectorXd essential = col.tail(m - k - 1);
    col(0) = beta;
    col.tail(m - k - 1).setZero();
    if (j + 1 < p) {
      a.block(k, j + 1, m - k, p - j - 1).applyHouseholderOnTheLeft(essential, tau, workspace.data());
    }
    b.tail(m - k).applyHouseholderOnTheLeft(essential, tau, workspace.data());
    fit.retained.push_back(j);
    ++k;
  }
  if (k == 0) throw EstimationError("all regressors dropped as aliased");

  fit.rank = k;
  fit.r = MatrixXd::Zero(k, k);
  for (Index c = 0; c < k; ++c) fit.r.col(c).head(c + 1) = a.col(fit.retained[c]).head(c + 1);
  const VectorXd coef = fit.r.triangularView<Eigen::Upper>().solve(b.head(k));

  fit.fitted = VectorXd::Zero(n);
  for (Index c = 0; c < k; ++c) {
    fit.estimates[static_cast<std::size_t>(fit.retained[c])] = coef(c);
    fit.fitted.noalias() += coef(c) * x.values.col(fit.retained[c]);
  }
  fit.residuals = y - fit.fitted;
  return fit;
}

MatrixXd hc1_covariance(const DesignMatrix& x, const FitResult& fit) {
  const Index n = x.rows();
  const Index k = fit.rank;
  if (n <= k) throw EstimationError("no residual degrees of freedom for covariance");
  const bool shifted = static_cast<Index>(fit.labels.size()) == x.cols() + 1;
  MatrixXd meat = MatrixXd::Zero(k, k);
  std::vector<std::pair<Index, double>> nz;
  for (Index i = 0; i < n; ++i) {
    nz.clear();
    for (Index c = 0; c < k; ++c) {
      const Index j = fit.retained[c];
      const double v = shifted ? (j == 0 ? 1.0 : x.values(i, j - 1)) : x.values(i, j);
      if (v != 0.0) nz.emplace_back(c, v);
    }
    const double e2 = fit.residuals(i) * fit.residuals(i);
    for (const auto& [c1, v1] : nz) {
      for (const auto& [c2, v2] : nz) meat(c1, c2) += e2 * v1 * v2;
    }
  }
  const MatrixXd bread = fit.xtx_inverse();
  const double scale = static_cast<double>(n) / static_cast<double>(n - k);
  return scale * bread * meat * bread;
}

MatrixXd classical_covariance(const FitResult& fit) {
  const Index n = fit.residuals.size();
  if (n <= fit.rank) throw EstimationError("no residual degrees of freedom for covariance");
  const double s2 = fit.rss() / static_cast<double>(n - fit.rank);
  return s2 * fit.xtx_inverse();
}

namespace {

double log1pexp(double eta) { return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta))); }

double logistic(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double loglik(const MatrixXd& x, const VectorXd& d, const VectorXd& beta) {
  const VectorXd eta = x * beta;
  double ll = 0.0;
  for (Index i = 0; i < eta.size(); ++i) ll += d(i) * eta(i) - log1pexp(eta(i));
  return ll;
}

}  // namespace

FitResult logit(const DesignMatrix& x, const VectorXd& d, const LogitOptions& options) {
  const Index n = x.rows();
  if (n == 0) throw EstimationError("empty regression: no observations");
  if (d.size() != n) throw std::invalid_argument("logit: outcome length does not match design rows");
  Index ones = 0;
  for (Index i = 0; i < n; ++i) {
    if (d(i) != 0.0 && d(i) != 1.0) throw std::invalid_argument("logit: outcome must be 0/1");
    if (d(i) == 1.0) ++ones;
  }
  if (ones == 0 || ones == n) throw EstimationError("logit: single-class outcome");

  FitResult fit = ols(x, d, false);
  const Index k = fit.rank;
  MatrixXd xr(n, k);
  for (Index c = 0; c < k; ++c) xr.col(c) = x.values.col(fit.retained[c]);

  constexpr double separation_eta = 30.0;
  VectorXd beta = VectorXd::Zero(k);
  double ll = loglik(xr, d, beta);
  bool converged = false;
  int iter = 0;
  const double gtol = options.tolerance * std::max<double>(1.0, static_cast<double>(n));
  for (; iter < options.max_iterations; ++iter) {
    const VectorXd eta = xr * beta;
    VectorXd prob(n);
    VectorXd w(n);
    for (Index i = 0; i < n; ++i) {
      prob(i) = logistic(eta(i));
      w(i) = prob(i) * (1.0 - prob(i));
    }
    const VectorXd grad = xr.transpose() * (d - prob);
    if (grad.norm() <= gtol) {
      converged = true;
      break;
    }
    if (eta.cwiseAbs().maxCoeff() > separation_eta) break;
    const MatrixXd hess = xr.transpose() * w.asDiagonal() * xr;
    const VectorXd step = hess.ldlt().solve(grad);
    if (!step.allFinite()) break;
    double t = 1.0;
    VectorXd next = beta + step;
    double ll_next = loglik(xr, d, next);
    while (!(ll_next >= ll - 1e-12 * std::abs(ll)) && t > 1e-10) {
      t *= 0.5;
      next = beta + t * step;
      ll_next = loglik(xr, d, next);
    }
    beta = next;
    ll = ll_next;
  }

  const VectorXd eta = xr * beta;
  const double max_eta = eta.cwiseAbs().maxCoeff();
  if (max_eta > 23.0 || (!converged && ll > -1e-6)) throw EstimationError("logit: separation");
  if (!converged) throw EstimationError("logit: non-convergence after " + std::to_string(iter) + " iterations");

  fit.iterations = iter;
  fit.fitted.resize(n);
  for (Index i = 0; i < n; ++i) fit.fitted(i) = logistic(eta(i));
  fit.residuals = d - fit.fitted;
  std::fill(fit.estimates.begin(), fit.estimates.end(), std::nullopt);
  for (Index c = 0; c < k; ++c) fit.estimates[static_cast<std::size_t>(fit.retained[c])] = beta(c);
  const VectorXd w = fit.fitted.cwiseProduct((VectorXd::Ones(n) - fit.fitted));
  const MatrixXd info = xr.transpose() * w.asDiagonal() * xr;
  Eigen::LLT<MatrixXd> llt(info);
  if (llt.info() == Eigen::Success) fit.r = llt.matrixU();
  return fit;
}

double silverman_bandwidth(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw EstimationError("kde: degenerate samples (fewer than two values)");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0) || !std::isfinite(sd)) throw EstimationError("kde: degenerate samples (zero variance)");
  return 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
}

std::vector<double> kde(const std::vector<double>& samples, const std::vector<double>& grid) {
  const double h = silverman_bandwidth(samples);
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0;
    for (double v : samples) {
      const double u = (grid[g] - v) / h;
      s += std::exp(-0.5 * u * u);
    }
    out[g] = s * norm;
  }
  return out;
}

std::vector<double> kde_grid(const std::vector<double>& samples, std::size_t points) {
  if (points < 2) throw std::invalid_argument("kde_grid: need at least two points");
  const double h = silverman_bandwidth(samples);
  auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  const double a = *lo - 4.0 * h;
  const double b = *hi + 4.0 * h;
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("trapezoid: length mismatch");
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

std::pair<MatrixXd, Index> symmetric_pinv(const MatrixXd& a, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a);
  const VectorXd& ev = eig.eigenvalues();
  const double top = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
  VectorXd inv = VectorXd::Zero(ev.size());
  Index rank = 0;
  for (Index i = 0; i < ev.size(); ++i) {
    if (top > 0.0 && ev(i) > rel_tol * top) {
      inv(i) = 1.0 / ev(i);
      ++rank;
    }
  }
  const MatrixXd& v = eig.eigenvectors();
  return {v * inv.asDiagonal() * v.transpose(), rank};
}

}  // namespace didint
