#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "didint/dataset.hpp"
#include "didint/linalg.hpp"

namespace didint {

enum class CovariateForm { None, Homogeneous, StateVarying, TimeVarying, TwoWay, TwoOneWay };

std::string to_string(CovariateForm form);
// Accepts the names produced by to_string plus a few aliases ("state", "time",
// "twoway", "two-one-way"). Throws ValidationError on anything else.
CovariateForm parse_form(std::string_view text);

// Covariate k interacted with an optional group and/or period indicator.
struct CovariateTerm {
  std::size_t covariate = 0;
  std::optional<std::string> group;
  std::optional<int> time;

  bool operator==(const CovariateTerm&) const = default;
};

struct ExpansionPlan {
  std::vector<CellIndex> intersection_dummies;
  std::vector<std::string> group_dummies;
  std::vector<int> time_dummies;
  std::vector<CovariateTerm> covariate_terms;
};

// Covariate terms for a form, covariate-major. Group scopes cover every group,
// time scopes every period, and two-way scopes every populated cell.
std::vector<CovariateTerm> covariate_terms(const PanelDataset& data, CovariateForm form);
ExpansionPlan didint_plan(const PanelDataset& data, CovariateForm form);

std::string term_label(const PanelDataset& data, const CovariateTerm& term);
double term_value(const PanelDataset& data, const CovariateTerm& term, std::size_t row);

// Cell dummies for every populated cell (no constant) followed by the form's
// covariate terms. Rows are blocked by cell.
DesignMatrix build_didint_design(const PanelDataset& data, CovariateForm form);

// Group dummies and time dummies (first level omitted), intercept, the
// treatment dummy "D", then covariates: plain when interacted is false (none
// for form None), otherwise expanded by `form`.
DesignMatrix build_twfe_design(const PanelDataset& data, bool interacted,
                               CovariateForm form = CovariateForm::TwoWay);

struct FlexDesign {
  DesignMatrix matrix;
  // Cells carrying a treatment-effect dummy; these are the leading columns.
  std::vector<CellIndex> effect_cells;
};

FlexDesign build_flex_design(const PanelDataset& data, bool leads);

// Outcome net of the fitted covariate component of the DID-INT regression
// for `form` (cell dummies included), centred at zero.
std::vector<double> residualize(const PanelDataset& data, CovariateForm form);

Eigen::VectorXd outcome_vector(const PanelDataset& data);

}  // namespace didint
