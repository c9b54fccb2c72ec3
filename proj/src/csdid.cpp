#include <algorithm>
#include <cmath>

#include "didint/estimators.hpp"

namespace didint {
namespace {

using Rows = std::vector<std::size_t>;

double mean_outcome(const PanelDataset& data, const Rows& rows) {
  double s = 0.0;
  for (auto i : rows) s += data.observations()[i].outcome;
  return s / static_cast<double>(rows.size());
}

DesignMatrix covariate_design(const PanelDataset& data, const Rows& rows) {
  const auto k = static_cast<Eigen::Index>(data.num_covariates());
  DesignMatrix x;
  x.values.resize(static_cast<Eigen::Index>(rows.size()), k + 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& obs = data.observations()[rows[r]];
    x.values(static_cast<Eigen::Index>(r), 0) = 1.0;
    for (Eigen::Index c = 0; c < k; ++c) {
      x.values(static_cast<Eigen::Index>(r), c + 1) = obs.covariates[static_cast<std::size_t>(c)];
    }
  }
  x.column_labels.push_back("(Intercept)");
  for (const auto& name : data.covariate_names()) x.column_labels.push_back(name);
  x.aliasable.assign(static_cast<std::size_t>(k + 1), false);
  return x;
}

Eigen::VectorXd outcomes(const PanelDataset& data, const Rows& rows) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) y(static_cast<Eigen::Index>(r)) = data.observations()[rows[r]].outcome;
  return y;
}

// Linear predictor of a fit (dropped columns contribute nothing) at one row.
double predict(const FitResult& fit, const PanelDataset& data, std::size_t row) {
  const auto& obs = data.observations()[row];
  double v = 0.0;
  for (std::size_t j = 0; j < fit.estimates.size(); ++j) {
    if (!fit.estimates[j]) continue;
    v += *fit.estimates[j] * (j == 0 ? 1.0 : obs.covariates[j - 1]);
  }
  return v;
}

struct Propensity {
  std::vector<double> weights;
  std::size_t trimmed = 0;
};

// Normalized odds weights p/(1-p) for control rows, with p clamped to [lo, hi].
Propensity odds_weights(const FitResult& model, const PanelDataset& data, const Rows& rows, double lo, double hi) {
  Propensity out;
  out.weights.reserve(rows.size());
  double total = 0.0;
  for (auto i : rows) {
    const double eta = predict(model, data, i);
    double p = 1.0 / (1.0 + std::exp(-eta));
    if (p < lo || p > hi) {
      ++out.trimmed;
      p = std::clamp(p, lo, hi);
    }
    const double w = p / (1.0 - p);
    out.weights.push_back(w);
    total += w;
  }
  for (auto& w : out.weights) w /= total;
  return out;
}

}  // namespace

EstimateReport csdid(const PanelDataset& data, Adjustment adjustment) {
  CsdidOptions options;
  options.adjustment = adjustment;
  return csdid(data, options);
}

EstimateReport csdid(const PanelDataset& data, const CsdidOptions& options) {
  EstimateReport report;
  report.estimator_name = options.adjustment == Adjustment::None ? "csdid" : "csdid-" + to_string(options.adjustment);
  report.settings["adjustment"] = to_string(options.adjustment);
  report.settings["controls"] = "not-yet-treated";
  if (options.adjustment == Adjustment::Ipw || options.adjustment == Adjustment::DoublyRobust) {
    report.settings["propensity_trim"] = "[" + std::to_string(options.trim_low) + ", " + std::to_string(options.trim_high) + "]";
  }

  std::map<int, std::vector<std::size_t>> cohorts;
  for (std::size_t g = 0; g < data.num_groups(); ++g) {
    if (auto first = data.first_treated(g)) cohorts[*first].push_back(g);
  }
  if (cohorts.empty()) throw EstimationError("no treated group in schedule");

  const std::size_t nt = data.num_periods();
  auto gather = [&](const std::vector<std::size_t>& groups, std::size_t t) {
    Rows rows;
    for (auto g : groups) {
      const auto& r = data.cell_rows(g, t);
      rows.insert(rows.end(), r.begin(), r.end());
    }
    return rows;
  };

  std::size_t trimmed_total = 0;
  for (const auto& [first, members] : cohorts) {
    std::string label;
    for (auto g : members) label += (label.empty() ? "" : "+") + data.groups()[g];
    const auto anchor = data.period_position(first - 1);
    if (!anchor) throw EstimationError("unpopulated anchor period " + std::to_string(first - 1) + " for cohort " + label);
    const Rows treated_a = gather(members, *anchor);
    if (treated_a.empty()) throw EstimationError("unpopulated anchor period " + std::to_string(first - 1) + " for cohort " + label);

    for (std::size_t t = 0; t < nt; ++t) {
      const int time = data.periods()[t];
      if (time < first) continue;
      const Rows treated_t = gather(members, t);
      if (treated_t.empty()) continue;

      AttCell cell;
      cell.cell = {label, time};
      cell.n_treated = treated_t.size();
      std::vector<std::size_t> controls;
      for (std::size_t h = 0; h < data.num_groups(); ++h) {
        const auto other = data.first_treated(h);
        if (other && *other <= time) continue;
        if (!data.populated(h, t) || !data.populated(h, *anchor)) continue;
        controls.push_back(h);
        cell.control_groups.insert(data.groups()[h]);
        cell.diff_controls.emplace(data.groups()[h],
                                   mean_outcome(data, data.cell_rows(h, t)) - mean_outcome(data, data.cell_rows(h, *anchor)));
      }
      if (controls.empty()) {
        throw EstimationError("no valid control for (" + label + ", " + std::to_string(time) + ")");
      }
      const Rows control_t = gather(controls, t);
      const Rows control_a = gather(controls, *anchor);

      cell.diff_treated = mean_outcome(data, treated_t) - mean_outcome(data, treated_a);
      const double raw_control = mean_outcome(data, control_t) - mean_outcome(data, control_a);

      if (options.adjustment == Adjustment::None) {
        cell.theta = cell.diff_treated - raw_control;
        report.cells.push_back(std::move(cell));
        continue;
      }

      std::optional<FitResult> m_t;
      std::optional<FitResult> m_a;
      double or_change = 0.0;
      if (options.adjustment != Adjustment::Ipw) {
        m_t = ols(covariate_design(data, control_t), outcomes(data, control_t), false);
        m_a = ols(covariate_design(data, control_a), outcomes(data, control_a), false);
        for (auto i : treated_t) or_change += predict(*m_t, data, i) - predict(*m_a, data, i);
        or_change /= static_cast<double>(treated_t.size());
      }
      if (options.adjustment == Adjustment::OutcomeRegression) {
        cell.theta = cell.diff_treated - or_change;
        report.cells.push_back(std::move(cell));
        continue;
      }

      Rows pooled = treated_t;
      pooled.insert(pooled.end(), control_t.begin(), control_t.end());
      Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pooled.size()));
      d.head(static_cast<Eigen::Index>(treated_t.size())).setOnes();
      const auto model = logit(covariate_design(data, pooled), d);
      const auto w_t = odds_weights(model, data, control_t, options.trim_low, options.trim_high);
      const auto w_a = odds_weights(model, data, control_a, options.trim_low, options.trim_high);
      trimmed_total += w_t.trimmed + w_a.trimmed;

      double control_t_term = 0.0;
      double control_a_term = 0.0;
      for (std::size_t r = 0; r < control_t.size(); ++r) {
        const auto i = control_t[r];
        const double base = m_t ? predict(*m_t, data, i) : 0.0;
        control_t_term += w_t.weights[r] * (data.observations()[i].outcome - base);
      }
      for (std::size_t r = 0; r < control_a.size(); ++r) {
        const auto i = control_a[r];
        const double base = m_a ? predict(*m_a, data, i) : 0.0;
        control_a_term += w_a.weights[r] * (data.observations()[i].outcome - base);
      }
      cell.theta = cell.diff_treated - or_change - (control_t_term - control_a_term);
      report.cells.push_back(std::move(cell));
    }
  }
  if (trimmed_total > 0) {
    report.diagnostics.push_back(std::to_string(trimmed_total) + " propensity score(s) trimmed to [" +
                                 std::to_string(options.trim_low) + ", " + std::to_string(options.trim_high) + "]");
  }
  aggregate(report, Weighting::CellSize);
  return report;
}

}  // namespace didint
