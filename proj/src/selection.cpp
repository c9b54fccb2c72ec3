#include "didint/selection.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "didint/dataset_io.hpp"
#include "didint/svg.hpp"

namespace didint {
namespace {

struct Placebo {
  CellIndex cell;
  // Contrast over cell dummies: (cell column, coefficient).
  std::vector<std::pair<std::size_t, double>> contrast;
  std::set<std::string> controls;
};

std::vector<std::size_t> cell_columns(const PanelDataset& data) {
  std::vector<std::size_t> column(data.num_groups() * data.num_periods(), SIZE_MAX);
  std::size_t c = 0;
  for (std::size_t g = 0; g < data.num_groups(); ++g) {
    for (std::size_t t = 0; t < data.num_periods(); ++t) {
      if (data.populated(g, t)) column[g * data.num_periods() + t] = c++;
    }
  }
  return column;
}

std::vector<Placebo> placebo_cells(const PanelDataset& data, std::vector<std::string>& warnings) {
  const auto column = cell_columns(data);
  const std::size_t nt = data.num_periods();
  std::vector<Placebo> out;
  for (std::size_t g = 0; g < data.num_groups(); ++g) {
    const auto first = data.first_treated(g);
    if (!first) continue;
    const auto anchor = data.period_position(*first - 1);
    if (!anchor || !data.populated(g, *anchor)) {
      warnings.push_back("group " + data.groups()[g] + " has no populated anchor period; no placebos");
      continue;
    }
    for (std::size_t t = 0; t < *anchor; ++t) {
      if (!data.populated(g, t)) continue;
      Placebo p;
      p.cell = {data.groups()[g], data.periods()[t]};
      for (std::size_t h = 0; h < data.num_groups(); ++h) {
        if (h == g) continue;
        const auto other = data.first_treated(h);
        if (other && *other < *first) continue;
        if (!data.populated(h, t) || !data.populated(h, *anchor)) continue;
        p.controls.insert(data.groups()[h]);
      }
      if (p.controls.empty()) {
        warnings.push_back("no untreated comparison for placebo cell (" + p.cell.group + ", " +
                           std::to_string(p.cell.time) + ")");
        continue;
      }
      const double share = 1.0 / static_cast<double>(p.controls.size());
      p.contrast.emplace_back(column[g * nt + t], 1.0);
      p.contrast.emplace_back(column[g * nt + *anchor], -1.0);
      for (const auto& name : p.controls) {
        const auto h = *data.group_position(name);
        p.contrast.emplace_back(column[h * nt + t], -share);
        p.contrast.emplace_back(column[h * nt + *anchor], share);
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

struct PlaceboFit {
  std::vector<Placebo> placebos;
  Eigen::VectorXd values;
  Eigen::MatrixXd cell_covariance;
  std::vector<std::string> warnings;
};

PlaceboFit fit_placebos(const PanelDataset& data, CovariateForm form, bool with_covariance) {
  PlaceboFit out;
  out.placebos = placebo_cells(data, out.warnings);
  if (out.placebos.empty()) return out;
  const auto x = build_didint_design(data, form);
  const auto fit = ols(x, outcome_vector(data), false);
  const std::size_t ncells = data.populated_cells().size();
  out.values.resize(static_cast<Eigen::Index>(out.placebos.size()));
  for (std::size_t p = 0; p < out.placebos.size(); ++p) {
    double v = 0.0;
    for (const auto& [c, w] : out.placebos[p].contrast) v += w * *fit.estimates[c];
    out.values(static_cast<Eigen::Index>(p)) = v;
  }
  if (with_covariance) {
    const auto full = hc1_covariance(x, fit);
    const auto n = static_cast<Eigen::Index>(ncells);
    out.cell_covariance = full.topLeftCorner(n, n);
  }
  return out;
}

Eigen::MatrixXd contrast_matrix(const std::vector<Placebo>& placebos, std::size_t ncells) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(placebos.size()), static_cast<Eigen::Index>(ncells));
  for (std::size_t p = 0; p < placebos.size(); ++p) {
    for (const auto& [col, w] : placebos[p].contrast) c(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(col)) += w;
  }
  return c;
}

}  // namespace

PretrendResult pretrend_test(const PanelDataset& data, CovariateForm form, const PretrendOptions& options) {
  PretrendResult result;
  const bool hc1 = options.covariance == PretrendCovariance::Hc1;
  auto fitted = fit_placebos(data, form, hc1);
  result.warnings = fitted.warnings;
  if (fitted.placebos.empty()) {
    result.testable = false;
    result.verdict = "untestable, assumed plausible";
    result.warnings.push_back("no pre-treatment period before the anchor; parallel pre-trends cannot be tested");
    return result;
  }
  for (std::size_t p = 0; p < fitted.placebos.size(); ++p) {
    AttCell cell;
    cell.cell = fitted.placebos[p].cell;
    cell.theta = fitted.values(static_cast<Eigen::Index>(p));
    cell.control_groups = fitted.placebos[p].controls;
    result.placebos.push_back(std::move(cell));
  }

  Eigen::MatrixXd v;
  if (hc1) {
    const auto c = contrast_matrix(fitted.placebos, data.populated_cells().size());
    v = c * fitted.cell_covariance * c.transpose();
  } else {
    std::map<CellIndex, std::size_t> index;
    for (std::size_t p = 0; p < fitted.placebos.size(); ++p) index.emplace(fitted.placebos[p].cell, p);
    std::vector<Eigen::VectorXd> reps;
    for (const auto& group : data.groups()) {
      try {
        const auto sub = data.without_group(group);
        const auto f = fit_placebos(sub, form, false);
        Eigen::VectorXd r = fitted.values;
        for (std::size_t p = 0; p < f.placebos.size(); ++p) {
          auto it = index.find(f.placebos[p].cell);
          if (it != index.end()) r(static_cast<Eigen::Index>(it->second)) = f.values(static_cast<Eigen::Index>(p));
        }
        reps.push_back(std::move(r));
      } catch (const std::runtime_error& e) {
        result.warnings.push_back("jackknife deletion of " + group + " failed: " + e.what());
      }
    }
    if (reps.size() < 2) throw EstimationError("pre-trend jackknife: fewer than two usable deletions");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(fitted.values.size());
    for (const auto& r : reps) mean += r;
    mean /= static_cast<double>(reps.size());
    v = Eigen::MatrixXd::Zero(fitted.values.size(), fitted.values.size());
    for (const auto& r : reps) v += (r - mean) * (r - mean).transpose();
    const double g = static_cast<double>(reps.size());
    v *= (g - 1.0) / g;
  }

  auto [pinv, rank] = symmetric_pinv(v, 1e-10);
  if (rank == 0) {
    result.testable = false;
    result.verdict = "untestable, assumed plausible";
    result.warnings.push_back("placebo covariance is singular; parallel pre-trends cannot be tested");
    return result;
  }
  result.testable = true;
  result.df = static_cast<std::size_t>(rank);
  result.statistic = fitted.values.dot(pinv * fitted.values);
  boost::math::chi_squared dist(static_cast<double>(rank));
  result.p_value = boost::math::cdf(boost::math::complement(dist, std::max(result.statistic, 0.0)));
  result.verdict = "tested";
  return result;
}

SelectionTrace select_form(const PanelDataset& data, double alpha) {
  SelectionOptions options;
  options.alpha = alpha;
  return select_form(data, options);
}

SelectionTrace select_form(const PanelDataset& data, const SelectionOptions& options) {
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  SelectionTrace trace;
  auto evaluate = [&](CovariateForm form) {
    SelectionStep step;
    step.form = form;
    try {
      const auto r = pretrend_test(data, form, options.pretrend);
      step.statistic = r.statistic;
      step.p_value = r.p_value;
      step.df = r.df;
      step.plausible = !r.testable || r.p_value > options.alpha;
      step.verdict = !r.testable ? r.verdict : (step.plausible ? "plausible" : "implausible");
      for (const auto& w : r.warnings) trace.warnings.push_back(to_string(form) + ": " + w);
    } catch (const std::runtime_error& e) {
      step.plausible = false;
      step.p_value = 0.0;
      step.verdict = std::string("failed: ") + e.what();
    }
    trace.steps.push_back(step);
    return step;
  };

  auto finish = [&](CovariateForm form) {
    trace.chosen = form;
    trace.verdict = to_string(form);
    return trace;
  };

  if (evaluate(CovariateForm::None).plausible) return finish(CovariateForm::None);
  if (data.num_covariates() == 0) {
    trace.warnings.push_back("no covariates available; covariate forms skipped");
    trace.verdict = "No plausible Pre-trends";
    return trace;
  }
  if (evaluate(CovariateForm::Homogeneous).plausible) return finish(CovariateForm::Homogeneous);
  const auto state = evaluate(CovariateForm::StateVarying);
  const auto time = evaluate(CovariateForm::TimeVarying);
  if (state.plausible && time.plausible) {
    return finish(time.p_value > state.p_value ? CovariateForm::TimeVarying : CovariateForm::StateVarying);
  }
  if (state.plausible) return finish(CovariateForm::StateVarying);
  if (time.plausible) return finish(CovariateForm::TimeVarying);
  if (options.include_two_one_way && evaluate(CovariateForm::TwoOneWay).plausible) {
    return finish(CovariateForm::TwoOneWay);
  }
  if (evaluate(CovariateForm::TwoWay).plausible) return finish(CovariateForm::TwoWay);
  trace.verdict = "No plausible Pre-trends";
  return trace;
}

TrendTable trend_table(const PanelDataset& data, CovariateForm form) {
  TrendTable table;
  table.form = form;
  std::vector<double> values;
  if (form == CovariateForm::None || data.num_covariates() == 0) {
    values.reserve(data.size());
    for (const auto& o : data.observations()) values.push_back(o.outcome);
  } else {
    values = residualize(data, form);
  }
  for (std::size_t g = 0; g < data.num_groups(); ++g) {
    for (std::size_t t = 0; t < data.num_periods(); ++t) {
      if (!data.populated(g, t)) continue;
      const auto& rows = data.cell_rows(g, t);
      double s = 0.0;
      for (auto i : rows) s += values[i];
      table.rows.push_back({data.groups()[g], data.periods()[t], s / static_cast<double>(rows.size()), rows.size()});
    }
  }
  return table;
}

std::string trend_csv(const TrendTable& table) {
  std::ostringstream out;
  out << "group,period,mean_residual,n,form\n";
  for (const auto& r : table.rows) {
    out << r.group << ',' << r.period << ',' << format_double(r.mean_residual) << ',' << r.n << ','
        << to_string(table.form) << '\n';
  }
  return out.str();
}

std::string trend_svg(const PanelDataset& data, const TrendTable& table) {
  std::vector<Series> series;
  std::map<std::string, std::size_t> index;
  for (const auto& r : table.rows) {
    auto [it, inserted] = index.emplace(r.group, series.size());
    if (inserted) series.push_back({r.group, {}});
    series[it->second].points.emplace_back(static_cast<double>(r.period), r.mean_residual);
  }
  std::set<int> starts;
  for (std::size_t g = 0; g < data.num_groups(); ++g) {
    if (auto first = data.first_treated(g)) starts.insert(*first);
  }
  ChartOptions options;
  options.title = "Residualized outcome trends (" + to_string(table.form) + ")";
  options.x_label = "period";
  options.y_label = table.form == CovariateForm::None ? "mean outcome" : "mean residual";
  options.rules.assign(starts.begin(), starts.end());
  return line_chart(series, options);
}

void export_trends(const PanelDataset& data, CovariateForm form, const std::string& stem) {
  const auto table = trend_table(data, form);
  std::ofstream csv(stem + ".csv", std::ios::binary);
  if (!csv) throw ValidationError("cannot write " + stem + ".csv");
  csv << trend_csv(table);
  std::ofstream svg(stem + ".svg", std::ios::binary);
  if (!svg) throw ValidationError("cannot write " + stem + ".svg");
  svg << trend_svg(data, table);
  if (!csv || !svg) throw ValidationError("failed writing trend files for " + stem);
}

}  // namespace didint
