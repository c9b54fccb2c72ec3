#pragma once

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "didint/dataset.hpp"
#include "didint/design.hpp"

namespace didint {

enum class Weighting { CellSize, Equal };
enum class ControlCombination { Mean, CellSizeWeighted };
enum class Adjustment { None, OutcomeRegression, Ipw, DoublyRobust };

std::string to_string(Weighting w);
std::string to_string(ControlCombination c);
std::string to_string(Adjustment a);
Weighting parse_weighting(const std::string& text);
Adjustment parse_adjustment(const std::string& text);

struct AttCell {
  CellIndex cell;
  double theta = 0.0;
  double weight = 0.0;
  std::size_t n_treated = 0;
  std::set<std::string> control_groups;
  double diff_treated = 0.0;
  std::map<std::string, double> diff_controls;
};

struct EstimateReport {
  std::string estimator_name;
  double overall_att = std::numeric_limits<double>::quiet_NaN();
  std::vector<AttCell> cells;
  std::optional<double> se;
  std::optional<double> p_randomization;
  std::vector<std::string> diagnostics;
  std::map<std::string, std::string> settings;
};

struct DidintOptions {
  CovariateForm form = CovariateForm::None;
  Weighting weighting = Weighting::CellSize;
  ControlCombination combination = ControlCombination::Mean;
  // Drop treated cells that have no usable control instead of failing.
  bool skip_cells_without_controls = false;
};

EstimateReport didint(const PanelDataset& data, CovariateForm form, Weighting weighting = Weighting::CellSize);
EstimateReport didint(const PanelDataset& data, const DidintOptions& options);

// With interacted = false the covariates enter linearly (none for form None);
// with interacted = true they are expanded by `form`.
EstimateReport twfe(const PanelDataset& data, bool interacted, CovariateForm form);

struct CsdidOptions {
  Adjustment adjustment = Adjustment::None;
  double trim_low = 0.01;
  double trim_high = 0.99;
};

EstimateReport csdid(const PanelDataset& data, Adjustment adjustment);
EstimateReport csdid(const PanelDataset& data, const CsdidOptions& options);

EstimateReport imputation(const PanelDataset& data);

EstimateReport flex(const PanelDataset& data, bool leads);

// The four 2x2 TWFE comparisons of the early/late/never three-period layout,
// labelled eU_21, lU_32, el_21, le_32.
std::vector<std::pair<std::string, double>> bacon_2x2(const PanelDataset& data, bool interacted);

// Sets weights from n_treated (or equally) and fills overall_att.
void aggregate(EstimateReport& report, Weighting weighting);

}  // namespace didint
