#include "didint/design.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace didint {
namespace {

struct ResolvedTerm {
  std::size_t covariate;
  std::optional<std::size_t> gpos;
  std::optional<std::size_t> tpos;
};

ResolvedTerm resolve(const PanelDataset& data, const CovariateTerm& term) {
  ResolvedTerm r{term.covariate, std::nullopt, std::nullopt};
  if (term.group) {
    r.gpos = data.group_position(*term.group);
    if (!r.gpos) throw std::invalid_argument("unknown group in covariate term: " + *term.group);
  }
  if (term.time) {
    r.tpos = data.period_position(*term.time);
    if (!r.tpos) throw std::invalid_argument("unknown period in covariate term");
  }
  return r;
}

void fill_terms(const PanelDataset& data, const std::vector<CovariateTerm>& terms, DesignMatrix& x,
                Eigen::Index first_col) {
  const auto& obs = data.observations();
  for (std::size_t c = 0; c < terms.size(); ++c) {
    const auto rt = resolve(data, terms[c]);
    const Eigen::Index col = first_col + static_cast<Eigen::Index>(c);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      if (rt.gpos && data.group_of(i) != *rt.gpos) continue;
      if (rt.tpos && data.period_of(i) != *rt.tpos) continue;
      x.values(static_cast<Eigen::Index>(i), col) = obs[i].covariates[rt.covariate];
    }
  }
}

std::string cell_text(const std::string& group, int time) {
  return group + "," + std::to_string(time);
}

std::vector<std::size_t> cell_blocks(const PanelDataset& data) {
  std::vector<std::size_t> blocks(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) blocks[i] = data.cell_of(i);
  return blocks;
}

// True when the covariate takes a single value on every row of the cell.
bool constant_in_cell(const PanelDataset& data, std::size_t covariate, std::size_t gpos, std::size_t tpos) {
  const auto& rows = data.cell_rows(gpos, tpos);
  const double first = data.observations()[rows.front()].covariates[covariate];
  return std::all_of(rows.begin(), rows.end(), [&](std::size_t i) {
    return data.observations()[i].covariates[covariate] == first;
  });
}

}  // namespace

std::string to_string(CovariateForm form) {
  switch (form) {
    case CovariateForm::None: return "none";
    case CovariateForm::Homogeneous: return "homogeneous";
    case CovariateForm::StateVarying: return "state-varying";
    case CovariateForm::TimeVarying: return "time-varying";
    case CovariateForm::TwoWay: return "two-way";
    case CovariateForm::TwoOneWay: return "two-one-way";
  }
  return "unknown";
}

CovariateForm parse_form(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return c == '_' ? '-' : static_cast<char>(std::tolower(c));
  });
  if (s == "none") return CovariateForm::None;
  if (s == "homogeneous" || s == "homog") return CovariateForm::Homogeneous;
  if (s == "state-varying" || s == "state" || s == "group" || s == "group-varying") {
    return CovariateForm::StateVarying;
  }
  if (s == "time-varying" || s == "time") return CovariateForm::TimeVarying;
  if (s == "two-way" || s == "twoway") return CovariateForm::TwoWay;
  if (s == "two-one-way" || s == "twooneway" || s == "two-oneway") return CovariateForm::TwoOneWay;
  throw ValidationError("unknown covariate form '" + std::string(text) + "'");
}

std::vector<CovariateTerm> covariate_terms(const PanelDataset& data, CovariateForm form) {
  std::vector<CovariateTerm> terms;
  const std::size_t k = data.num_covariates();
  auto add_state = [&](std::size_t c) {
    for (const auto& g : data.groups()) terms.push_back({c, g, std::nullopt});
  };
  auto add_time = [&](std::size_t c) {
    for (int t : data.periods()) terms.push_back({c, std::nullopt, t});
  };
  for (std::size_t c = 0; c < k; ++c) {
    switch (form) {
      case CovariateForm::None:
        break;
      case CovariateForm::Homogeneous:
        terms.push_back({c, std::nullopt, std::nullopt});
        break;
      case CovariateForm::StateVarying:
        add_state(c);
        break;
      case CovariateForm::TimeVarying:
        add_time(c);
        break;
      case CovariateForm::TwoWay:
        for (const auto& cell : data.populated_cells()) terms.push_back({c, cell.group, cell.time});
        break;
      case CovariateForm::TwoOneWay:
        add_state(c);
        add_time(c);
        break;
    }
  }
  return terms;
}

ExpansionPlan didint_plan(const PanelDataset& data, CovariateForm form) {
  ExpansionPlan plan;
  plan.intersection_dummies = data.populated_cells();
  plan.covariate_terms = covariate_terms(data, form);
  return plan;
}

std::string term_label(const PanelDataset& data, const CovariateTerm& term) {
  std::string label = data.covariate_names().at(term.covariate);
  if (term.group && term.time) return label + ":I(" + cell_text(*term.group, *term.time) + ")";
  if (term.group) return label + ":G(" + *term.group + ")";
  if (term.time) return label + ":T(" + std::to_string(*term.time) + ")";
  return label;
}

double term_value(const PanelDataset& data, const CovariateTerm& term, std::size_t row) {
  const auto& obs = data.observations()[row];
  if (term.group && obs.group != *term.group) return 0.0;
  if (term.time && obs.time != *term.time) return 0.0;
  return obs.covariates.at(term.covariate);
}

Eigen::VectorXd outcome_vector(const PanelDataset& data) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) y(static_cast<Eigen::Index>(i)) = data.observations()[i].outcome;
  return y;
}

DesignMatrix build_didint_design(const PanelDataset& data, CovariateForm form) {
  const auto plan = didint_plan(data, form);
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto ncells = static_cast<Eigen::Index>(plan.intersection_dummies.size());
  const auto p = ncells + static_cast<Eigen::Index>(plan.covariate_terms.size());

  DesignMatrix x;
  x.values = Eigen::MatrixXd::Zero(n, p);
  x.column_labels.reserve(static_cast<std::size_t>(p));
  x.aliasable.assign(static_cast<std::size_t>(p), false);

  std::vector<Eigen::Index> cell_column(data.num_groups() * data.num_periods(), -1);
  for (Eigen::Index c = 0; c < ncells; ++c) {
    const auto& cell = plan.intersection_dummies[static_cast<std::size_t>(c)];
    x.column_labels.push_back("I(" + cell_text(cell.group, cell.time) + ")");
    const auto g = *data.group_position(cell.group);
    const auto t = *data.period_position(cell.time);
    cell_column[g * data.num_periods() + t] = c;
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    x.values(static_cast<Eigen::Index>(i), cell_column[data.cell_of(i)]) = 1.0;
  }
  for (std::size_t c = 0; c < plan.covariate_terms.size(); ++c) {
    const auto& term = plan.covariate_terms[c];
    x.column_labels.push_back(term_label(data, term));
    if (term.group && term.time) {
      x.aliasable[static_cast<std::size_t>(ncells) + c] =
          constant_in_cell(data, term.covariate, *data.group_position(*term.group),
                           *data.period_position(*term.time));
    }
  }
  fill_terms(data, plan.covariate_terms, x, ncells);
  x.row_blocks = cell_blocks(data);
  return x;
}

DesignMatrix build_twfe_design(const PanelDataset& data, bool interacted, CovariateForm form) {
  std::vector<CovariateTerm> terms;
  if (interacted) {
    terms = covariate_terms(data, form);
  } else if (form != CovariateForm::None) {
    terms = covariate_terms(data, CovariateForm::Homogeneous);
  }
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto ng = static_cast<Eigen::Index>(data.num_groups());
  const auto nt = static_cast<Eigen::Index>(data.num_periods());
  const Eigen::Index fixed = (ng - 1) + (nt - 1) + 2;
  const Eigen::Index p = fixed + static_cast<Eigen::Index>(terms.size());

  DesignMatrix x;
  x.values = Eigen::MatrixXd::Zero(n, p);
  x.aliasable.assign(static_cast<std::size_t>(p), false);
  for (Eigen::Index g = 1; g < ng; ++g) x.column_labels.push_back("G(" + data.groups()[static_cast<std::size_t>(g)] + ")");
  for (Eigen::Index t = 1; t < nt; ++t) {
    x.column_labels.push_back("T(" + std::to_string(data.periods()[static_cast<std::size_t>(t)]) + ")");
  }
  x.column_labels.push_back("(Intercept)");
  x.column_labels.push_back("D");
  const Eigen::Index icol = (ng - 1) + (nt - 1);
  const Eigen::Index dcol = icol + 1;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto g = static_cast<Eigen::Index>(data.group_of(i));
    const auto t = static_cast<Eigen::Index>(data.period_of(i));
    if (g > 0) x.values(r, g - 1) = 1.0;
    if (t > 0) x.values(r, (ng - 1) + t - 1) = 1.0;
    x.values(r, icol) = 1.0;
    x.values(r, dcol) = data.treatment(i) ? 1.0 : 0.0;
  }
  for (const auto& term : terms) x.column_labels.push_back(term_label(data, term));
  fill_terms(data, terms, x, fixed);
  x.row_blocks = cell_blocks(data);
  return x;
}

FlexDesign build_flex_design(const PanelDataset& data, bool leads) {
  FlexDesign out;
  for (std::size_t g = 0; g < data.num_groups(); ++g) {
    auto first = data.first_treated(g);
    if (!first) continue;
    for (std::size_t t = 0; t < data.num_periods(); ++t) {
      const int time = data.periods()[t];
      if ((leads || time >= *first) && data.populated(g, t)) out.effect_cells.push_back({data.groups()[g], time});
    }
  }
  if (out.effect_cells.empty()) throw EstimationError("flex: no treated group");

  std::vector<CovariateTerm> terms;
  const std::size_t k = data.num_covariates();
  for (std::size_t c = 0; c < k; ++c) {
    for (const auto& cell : out.effect_cells) terms.push_back({c, cell.group, cell.time});
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (const auto& g : data.groups()) terms.push_back({c, g, std::nullopt});
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (int t : data.periods()) terms.push_back({c, std::nullopt, t});
  }
  for (std::size_t c = 0; c < k; ++c) terms.push_back({c, std::nullopt, std::nullopt});

  const auto n = static_cast<Eigen::Index>(data.size());
  const auto ne = static_cast<Eigen::Index>(out.effect_cells.size());
  const auto nterms = static_cast<Eigen::Index>(terms.size());
  const auto ng = static_cast<Eigen::Index>(data.num_groups());
  const auto nt = static_cast<Eigen::Index>(data.num_periods());
  const Eigen::Index p = ne + nterms + (nt - 1) + (ng - 1) + 1;

  auto& x = out.matrix;
  x.values = Eigen::MatrixXd::Zero(n, p);
  x.aliasable.assign(static_cast<std::size_t>(p), false);
  std::vector<Eigen::Index> effect_column(data.num_groups() * data.num_periods(), -1);
  for (Eigen::Index e = 0; e < ne; ++e) {
    const auto& cell = out.effect_cells[static_cast<std::size_t>(e)];
    x.column_labels.push_back("tau(" + cell_text(cell.group, cell.time) + ")");
    effect_column[*data.group_position(cell.group) * data.num_periods() + *data.period_position(cell.time)] = e;
  }
  for (const auto& term : terms) x.column_labels.push_back(term_label(data, term));
  fill_terms(data, terms, x, ne);
  const Eigen::Index tcol0 = ne + nterms;
  const Eigen::Index gcol0 = tcol0 + (nt - 1);
  const Eigen::Index icol = gcol0 + (ng - 1);
  for (Eigen::Index t = 1; t < nt; ++t) {
    x.column_labels.push_back("T(" + std::to_string(data.periods()[static_cast<std::size_t>(t)]) + ")");
  }
  for (Eigen::Index g = 1; g < ng; ++g) x.column_labels.push_back("G(" + data.groups()[static_cast<std::size_t>(g)] + ")");
  x.column_labels.push_back("(Intercept)");
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto col = effect_column[data.cell_of(i)];
    if (col >= 0) x.values(r, col) = 1.0;
    const auto g = static_cast<Eigen::Index>(data.group_of(i));
    const auto t = static_cast<Eigen::Index>(data.period_of(i));
    if (t > 0) x.values(r, tcol0 + t - 1) = 1.0;
    if (g > 0) x.values(r, gcol0 + g - 1) = 1.0;
    x.values(r, icol) = 1.0;
  }
  x.row_blocks = cell_blocks(data);
  return out;
}

std::vector<double> residualize(const PanelDataset& data, CovariateForm form) {
  if (form == CovariateForm::None) throw std::invalid_argument("residualize: form must not be none");
  if (data.num_covariates() == 0) throw EstimationError("residualize: no covariate columns");
  const auto x = build_didint_design(data, form);
  const auto y = outcome_vector(data);
  const auto fit = ols(x, y, false);
  const auto ncells = static_cast<Eigen::Index>(data.populated_cells().size());
  Eigen::VectorXd net = y;
  for (Eigen::Index j = ncells; j < x.cols(); ++j) {
    const auto& b = fit.estimates[static_cast<std::size_t>(j)];
    if (b) net -= *b * x.values.col(j);
  }
  const double centre = net.mean();
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = net(static_cast<Eigen::Index>(i)) - centre;
  return out;
}

}  // namespace didint
