#pragma once

#include <optional>
#include <string>
#include <vector>

#include "didint/dataset.hpp"
#include "didint/design.hpp"
#include "didint/estimators.hpp"

namespace didint {

enum class PretrendCovariance { Hc1, Jackknife };

struct PretrendOptions {
  PretrendCovariance covariance = PretrendCovariance::Hc1;
};

struct PretrendResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t df = 0;
  bool testable = false;
  std::string verdict;
  // Placebo long differences for pre-treatment cells (anchor excluded).
  std::vector<AttCell> placebos;
  std::vector<std::string> warnings;
};

PretrendResult pretrend_test(const PanelDataset& data, CovariateForm form, const PretrendOptions& options = {});

struct SelectionStep {
  CovariateForm form = CovariateForm::None;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t df = 0;
  std::string verdict;
  bool plausible = false;
};

struct SelectionTrace {
  std::vector<SelectionStep> steps;
  std::optional<CovariateForm> chosen;
  std::string verdict;
  std::vector<std::string> warnings;
};

struct SelectionOptions {
  double alpha = 0.10;
  bool include_two_one_way = true;
  PretrendOptions pretrend;
};

// Ladder: none, homogeneous, {state-varying, time-varying}, two-one-way,
// two-way; stops at the first plausible rung.
SelectionTrace select_form(const PanelDataset& data, double alpha = 0.10);
SelectionTrace select_form(const PanelDataset& data, const SelectionOptions& options);

struct TrendRow {
  std::string group;
  int period = 0;
  double mean_residual = 0.0;
  std::size_t n = 0;
};

struct TrendTable {
  CovariateForm form = CovariateForm::None;
  std::vector<TrendRow> rows;
};

// Cell means of the residualized outcome (raw outcome for form none).
TrendTable trend_table(const PanelDataset& data, CovariateForm form);
std::string trend_csv(const TrendTable& table);
std::string trend_svg(const PanelDataset& data, const TrendTable& table);

// Writes <stem>.csv and <stem>.svg.
void export_trends(const PanelDataset& data, CovariateForm form, const std::string& stem);

}  // namespace didint
