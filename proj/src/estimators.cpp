#include "didint/estimators.hpp"

#include <algorithm>
#include <cmath>

namespace didint {
namespace {

std::string cell_name(const std::string& group, int time) {
  return "(" + group + ", " + std::to_string(time) + ")";
}

void note_dropped(EstimateReport& report, const FitResult& fit) {
  if (fit.dropped.empty()) return;
  std::string msg = "dropped " + std::to_string(fit.dropped.size()) + " aliased column(s): ";
  const std::size_t shown = std::min<std::size_t>(fit.dropped.size(), 8);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) msg += ", ";
    msg += fit.dropped[i];
  }
  if (shown < fit.dropped.size()) msg += ", ...";
  report.diagnostics.push_back(std::move(msg));
}

DesignMatrix select_rows(const DesignMatrix& x, const std::vector<std::size_t>& rows) {
  DesignMatrix out;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.values.row(static_cast<Eigen::Index>(r)) = x.values.row(static_cast<Eigen::Index>(rows[r]));
  }
  out.column_labels = x.column_labels;
  out.aliasable = x.aliasable;
  if (!x.row_blocks.empty()) {
    out.row_blocks.reserve(rows.size());
    for (auto r : rows) out.row_blocks.push_back(x.row_blocks[r]);
  }
  return out;
}

Eigen::VectorXd select(const Eigen::VectorXd& y, const std::vector<std::size_t>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Eigen::Index>(r)) = y(static_cast<Eigen::Index>(rows[r]));
  return out;
}

double treatment_coefficient(const DesignMatrix& x, const FitResult& fit) {
  const auto it = std::find(x.column_labels.begin(), x.column_labels.end(), "D");
  const auto j = static_cast<std::size_t>(it - x.column_labels.begin());
  if (it == x.column_labels.end() || !fit.estimates[j]) {
    throw EstimationError("treatment dummy D is aliased with the fixed effects or covariates");
  }
  return *fit.estimates[j];
}

}  // namespace

std::string to_string(Weighting w) { return w == Weighting::CellSize ? "cell-size" : "equal"; }

std::string to_string(ControlCombination c) {
  return c == ControlCombination::Mean ? "mean" : "cell-size-weighted";
}

std::string to_string(Adjustment a) {
  switch (a) {
    case Adjustment::None: return "none";
    case Adjustment::OutcomeRegression: return "outcome-regression";
    case Adjustment::Ipw: return "ipw";
    case Adjustment::DoublyRobust: return "doubly-robust";
  }
  return "unknown";
}

Weighting parse_weighting(const std::string& text) {
  if (text == "cell-size" || text == "cellsize" || text == "size") return Weighting::CellSize;
  if (text == "equal") return Weighting::Equal;
  throw ValidationError("unknown weighting '" + text + "'");
}

Adjustment parse_adjustment(const std::string& text) {
  if (text == "none") return Adjustment::None;
  if (text == "outcome-regression" || text == "or") return Adjustment::OutcomeRegression;
  if (text == "ipw") return Adjustment::Ipw;
  if (text == "doubly-robust" || text == "dr") return Adjustment::DoublyRobust;
  throw ValidationError("unknown adjustment '" + text + "'");
}

void aggregate(EstimateReport& report, Weighting weighting) {
  if (report.cells.empty()) throw EstimationError("no estimable treated cells");
  double total = 0.0;
  for (auto& c : report.cells) {
    c.weight = weighting == Weighting::CellSize ? static_cast<double>(c.n_treated) : 1.0;
    total += c.weight;
  }
  double att = 0.0;
  for (auto& c : report.cells) {
    c.weight /= total;
    att += c.weight * c.theta;
  }
  report.overall_att = att;
  report.settings["weighting"] = to_string(weighting);
}

EstimateReport didint(const PanelDataset& data, CovariateForm form, Weighting weighting) {
  DidintOptions options;
  options.form = form;
  options.weighting = weighting;
  return didint(data, options);
}

EstimateReport didint(const PanelDataset& data, const DidintOptions& options) {
  EstimateReport report;
  report.estimator_name = "didint-" + to_string(options.form);
  report.settings["form"] = to_string(options.form);
  report.settings["control_combination"] = to_string(options.combination);

  bool any_treated = false;
  for (std::size_t g = 0; g < data.num_groups(); ++g) any_treated = any_treated || data.first_treated(g).has_value();
  if (!any_treated) throw EstimationError("no treated group in schedule");

  const auto x = build_didint_design(data, options.form);
  const auto fit = ols(x, outcome_vector(data), false);
  note_dropped(report, fit);

  const std::size_t nt = data.num_periods();
  std::vector<double> lambda(data.num_groups() * nt, std::numeric_limits<double>::quiet_NaN());
  {
    std::size_t c = 0;
    for (std::size_t g = 0; g < data.num_groups(); ++g) {
      for (std::size_t t = 0; t < nt; ++t) {
        if (!data.populated(g, t)) continue;
        const auto& est = fit.estimates[c++];
        if (!est) throw EstimationError("cell dummy I" + cell_name(data.groups()[g], data.periods()[t]) + " aliased");
        lambda[g * nt + t] = *est;
      }
    }
  }

  for (std::size_t g = 0; g < data.num_groups(); ++g) {
    const auto first = data.first_treated(g);
    if (!first) continue;
    const std::string& group = data.groups()[g];
    const auto anchor = data.period_position(*first - 1);
    if (!anchor || !data.populated(g, *anchor)) {
      throw EstimationError("unpopulated anchor cell " + cell_name(group, *first - 1));
    }
    for (std::size_t t = 0; t < nt; ++t) {
      const int time = data.periods()[t];
      if (time < *first) continue;
      if (!data.populated(g, t)) {
        report.diagnostics.push_back("treated cell " + cell_name(group, time) + " has no observations; skipped");
        continue;
      }
      AttCell cell;
      cell.cell = {group, time};
      cell.n_treated = data.cell_rows(g, t).size();
      cell.diff_treated = lambda[g * nt + t] - lambda[g * nt + *anchor];

      double weighted = 0.0;
      double weight_total = 0.0;
      for (std::size_t h = 0; h < data.num_groups(); ++h) {
        if (h == g) continue;
        const auto other = data.first_treated(h);
        if (other && *other <= time) continue;
        if (!data.populated(h, t) || !data.populated(h, *anchor)) continue;
        const double diff = lambda[h * nt + t] - lambda[h * nt + *anchor];
        const double w = options.combination == ControlCombination::Mean
                             ? 1.0
                             : static_cast<double>(data.cell_rows(h, t).size());
        cell.control_groups.insert(data.groups()[h]);
        cell.diff_controls.emplace(data.groups()[h], diff);
        weighted += w * diff;
        weight_total += w;
      }
      if (cell.control_groups.empty()) {
        if (options.skip_cells_without_controls) {
          report.diagnostics.push_back("no valid control for " + cell_name(group, time) + "; cell skipped");
          continue;
        }
        throw EstimationError("no valid control for " + cell_name(group, time));
      }
      cell.theta = cell.diff_treated - weighted / weight_total;
      report.cells.push_back(std::move(cell));
    }
  }
  aggregate(report, options.weighting);
  return report;
}

EstimateReport twfe(const PanelDataset& data, bool interacted, CovariateForm form) {
  EstimateReport report;
  report.estimator_name = interacted ? "twfe-modified" : "twfe";
  report.settings["covariates"] = interacted ? to_string(form) : (form == CovariateForm::None ? "none" : "linear");
  const auto x = build_twfe_design(data, interacted, form);
  const auto fit = ols(x, outcome_vector(data), false);
  note_dropped(report, fit);
  report.overall_att = treatment_coefficient(x, fit);
  return report;
}

EstimateReport imputation(const PanelDataset& data) {
  EstimateReport report;
  report.estimator_name = "imputation";
  const bool panel = data.is_panel();
  report.settings["fixed_effects"] = panel ? "unit" : "group";

  std::vector<std::size_t> untreated;
  std::vector<std::size_t> treated;
  for (std::size_t i = 0; i < data.size(); ++i) (data.treatment(i) ? treated : untreated).push_back(i);
  if (treated.empty()) throw EstimationError("no treated observations");
  if (untreated.empty()) throw EstimationError("no untreated observations");

  // Fixed-effect levels: units for panels, groups otherwise.
  std::vector<std::size_t> level(data.size());
  std::size_t nlevels = 0;
  std::vector<std::string> level_names;
  if (panel) {
    std::map<std::string, std::size_t> ids;
    for (std::size_t i = 0; i < data.size(); ++i) {
      auto [it, inserted] = ids.emplace(*data.observations()[i].unit_id, ids.size());
      if (inserted) level_names.push_back(it->first);
      level[i] = it->second;
    }
    nlevels = ids.size();
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) level[i] = data.group_of(i);
    level_names = data.groups();
    nlevels = data.num_groups();
  }

  std::vector<bool> level_seen(nlevels, false);
  std::vector<bool> period_seen(data.num_periods(), false);
  for (auto i : untreated) {
    level_seen[level[i]] = true;
    period_seen[data.period_of(i)] = true;
  }
  for (auto i : treated) {
    if (!level_seen[level[i]]) {
      throw EstimationError("fixed effect for " + std::string(panel ? "unit " : "group ") + level_names[level[i]] +
                            " not estimable: never observed untreated");
    }
    if (!period_seen[data.period_of(i)]) {
      throw EstimationError("period " + std::to_string(data.observations()[i].time) +
                            " fixed effect not estimable: no untreated observations");
    }
  }

  const std::size_t k = data.num_covariates();
  const auto nt = static_cast<Eigen::Index>(data.num_periods());
  const auto nl = static_cast<Eigen::Index>(nlevels);
  const Eigen::Index p = 1 + (nl - 1) + (nt - 1) + static_cast<Eigen::Index>(k);
  DesignMatrix x;
  x.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(data.size()), p);
  x.column_labels.push_back("(Intercept)");
  for (Eigen::Index l = 1; l < nl; ++l) {
    x.column_labels.push_back((panel ? "U(" : "G(") + level_names[static_cast<std::size_t>(l)] + ")");
  }
  for (Eigen::Index t = 1; t < nt; ++t) {
    x.column_labels.push_back("T(" + std::to_string(data.periods()[static_cast<std::size_t>(t)]) + ")");
  }
  for (const auto& name : data.covariate_names()) x.column_labels.push_back(name);
  x.aliasable.assign(static_cast<std::size_t>(p), false);
  x.row_blocks.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x.values(r, 0) = 1.0;
    const auto l = static_cast<Eigen::Index>(level[i]);
    const auto t = static_cast<Eigen::Index>(data.period_of(i));
    if (l > 0) x.values(r, l) = 1.0;
    if (t > 0) x.values(r, nl + t - 1) = 1.0;
    for (std::size_t c = 0; c < k; ++c) {
      x.values(r, nl + nt - 1 + static_cast<Eigen::Index>(c)) = data.observations()[i].covariates[c];
    }
    x.row_blocks[i] = level[i] * data.num_periods() + data.period_of(i);
  }

  const auto y = outcome_vector(data);
  const auto fit = ols(select_rows(x, untreated), select(y, untreated), false);
  note_dropped(report, fit);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (fit.estimates[static_cast<std::size_t>(j)]) beta(j) = *fit.estimates[static_cast<std::size_t>(j)];
  }

  std::map<std::size_t, std::pair<double, std::size_t>> by_cell;
  for (auto i : treated) {
    const double y0 = x.values.row(static_cast<Eigen::Index>(i)).dot(beta);
    auto& acc = by_cell[data.cell_of(i)];
    acc.first += data.observations()[i].outcome - y0;
    acc.second += 1;
  }
  for (const auto& [cell_id, acc] : by_cell) {
    AttCell cell;
    const auto g = cell_id / data.num_periods();
    const auto t = cell_id % data.num_periods();
    cell.cell = {data.groups()[g], data.periods()[t]};
    cell.n_treated = acc.second;
    cell.theta = acc.first / static_cast<double>(acc.second);
    cell.diff_treated = cell.theta;
    report.cells.push_back(std::move(cell));
  }
  aggregate(report, Weighting::CellSize);
  return report;
}

EstimateReport flex(const PanelDataset& data, bool leads) {
  EstimateReport report;
  report.estimator_name = leads ? "flex-leads" : "flex";
  report.settings["leads"] = leads ? "true" : "false";
  const auto design = build_flex_design(data, leads);
  const auto fit = ols(design.matrix, outcome_vector(data), false);
  note_dropped(report, fit);

  std::map<CellIndex, double> tau;
  for (std::size_t e = 0; e < design.effect_cells.size(); ++e) {
    const auto& est = fit.estimates[e];
    const auto& cell = design.effect_cells[e];
    if (!est) throw EstimationError("treatment-effect dummy tau" + cell_name(cell.group, cell.time) + " aliased");
    tau.emplace(cell, *est);
  }
  for (const auto& cell : design.effect_cells) {
    const auto first = data.schedule().first_treated(cell.group);
    if (cell.time < *first) continue;
    AttCell out;
    out.cell = cell;
    out.n_treated = data.cell_rows(cell).size();
    out.theta = tau.at(cell);
    if (leads) {
      auto base = tau.find({cell.group, *first - 1});
      if (base == tau.end()) {
        throw EstimationError("unpopulated anchor cell " + cell_name(cell.group, *first - 1));
      }
      out.theta -= base->second;
    }
    out.diff_treated = out.theta;
    report.cells.push_back(std::move(out));
  }
  aggregate(report, Weighting::CellSize);
  return report;
}

std::vector<std::pair<std::string, double>> bacon_2x2(const PanelDataset& data, bool interacted) {
  if (data.num_groups() != 3 || data.num_periods() != 3) {
    throw ValidationError("bacon_2x2: layout mismatch (need 3 groups x 3 periods)");
  }
  const auto& periods = data.periods();
  std::optional<std::size_t> e, l, u;
  for (std::size_t g = 0; g < 3; ++g) {
    const auto first = data.first_treated(g);
    if (!first) {
      u = g;
    } else if (*first == periods[1]) {
      e = g;
    } else if (*first == periods[2]) {
      l = g;
    }
  }
  if (!e || !l || !u) {
    throw ValidationError("bacon_2x2: layout mismatch (need groups treated at periods 2 and 3 and one never treated)");
  }

  const auto x = build_twfe_design(data, interacted, interacted ? CovariateForm::TwoWay : CovariateForm::Homogeneous);
  const auto y = outcome_vector(data);
  auto beta = [&](std::size_t g1, std::size_t g2, std::size_t t1, std::size_t t2) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto g = data.group_of(i);
      const auto t = data.period_of(i);
      if ((g == g1 || g == g2) && (t == t1 || t == t2)) rows.push_back(i);
    }
    const auto sub = select_rows(x, rows);
    return treatment_coefficient(sub, ols(sub, select(y, rows), false));
  };
  return {
      {"eU_21", beta(*e, *u, 0, 1)},
      {"lU_32", beta(*l, *u, 1, 2)},
      {"el_21", beta(*e, *l, 0, 1)},
      {"le_32", beta(*l, *e, 1, 2)},
  };
}

}  // namespace didint
