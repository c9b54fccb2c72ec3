#include "didint/estimator_spec.hpp"

#include <sstream>

namespace didint {

EstimatorSpec EstimatorSpec::parse(const std::string& token) {
  EstimatorSpec spec;
  if (token == "twfe") {
    spec.kind = EstimatorKind::Twfe;
    spec.form = CovariateForm::Homogeneous;
  } else if (token == "twfe-nocov") {
    spec.kind = EstimatorKind::Twfe;
  } else if (token == "twfe-mod" || token == "twfe-modified") {
    spec.kind = EstimatorKind::TwfeModified;
    spec.form = CovariateForm::TwoWay;
  } else if (token.rfind("twfe-mod-", 0) == 0) {
    spec.kind = EstimatorKind::TwfeModified;
    spec.form = parse_form(token.substr(9));
  } else if (token == "didint") {
    spec.kind = EstimatorKind::Didint;
  } else if (token.rfind("didint-", 0) == 0) {
    spec.kind = EstimatorKind::Didint;
    spec.form = parse_form(token.substr(7));
  } else if (token == "csdid") {
    spec.kind = EstimatorKind::Csdid;
  } else if (token.rfind("csdid-", 0) == 0) {
    spec.kind = EstimatorKind::Csdid;
    spec.adjustment = parse_adjustment(token.substr(6));
  } else if (token == "imputation") {
    spec.kind = EstimatorKind::Imputation;
  } else if (token == "flex") {
    spec.kind = EstimatorKind::Flex;
  } else if (token == "flex-leads") {
    spec.kind = EstimatorKind::Flex;
    spec.leads = true;
  } else {
    throw ValidationError("unknown estimator '" + token + "'");
  }
  return spec;
}

std::string EstimatorSpec::name() const {
  switch (kind) {
    case EstimatorKind::Didint: return "didint-" + to_string(form);
    case EstimatorKind::Twfe: return form == CovariateForm::None ? "twfe-nocov" : "twfe";
    case EstimatorKind::TwfeModified:
      return form == CovariateForm::TwoWay ? "twfe-mod" : "twfe-mod-" + to_string(form);
    case EstimatorKind::Csdid: {
      switch (adjustment) {
        case Adjustment::None: return "csdid";
        case Adjustment::OutcomeRegression: return "csdid-or";
        case Adjustment::Ipw: return "csdid-ipw";
        case Adjustment::DoublyRobust: return "csdid-dr";
      }
      return "csdid";
    }
    case EstimatorKind::Imputation: return "imputation";
    case EstimatorKind::Flex: return leads ? "flex-leads" : "flex";
  }
  return "unknown";
}

EstimateReport EstimatorSpec::run(const PanelDataset& data) const {
  EstimateReport report;
  switch (kind) {
    case EstimatorKind::Didint: {
      DidintOptions options;
      options.form = form;
      options.weighting = weighting;
      options.combination = combination;
      options.skip_cells_without_controls = skip_cells_without_controls;
      report = didint(data, options);
      break;
    }
    case EstimatorKind::Twfe: report = twfe(data, false, form); break;
    case EstimatorKind::TwfeModified: report = twfe(data, true, form); break;
    case EstimatorKind::Csdid: report = csdid(data, adjustment); break;
    case EstimatorKind::Imputation: report = imputation(data); break;
    case EstimatorKind::Flex: report = flex(data, leads); break;
  }
  report.estimator_name = name();
  return report;
}

std::vector<EstimatorSpec> parse_estimator_list(const std::string& comma_separated) {
  std::vector<EstimatorSpec> out;
  std::stringstream ss(comma_separated);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const auto first = token.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    token = token.substr(first, token.find_last_not_of(" \t") - first + 1);
    out.push_back(EstimatorSpec::parse(token));
  }
  if (out.empty()) throw ValidationError("no estimators listed");
  return out;
}

}  // namespace didint
