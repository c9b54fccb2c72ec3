#pragma once

#include <string>
#include <vector>

#include <json.hpp>
#include "didint/estimators.hpp"
#include "didint/inference.hpp"
#include "didint/selection.hpp"
#include "didint/simulation.hpp"

namespace didint {

using Json = nlohmann::ordered_json;

Json to_json(const EstimateReport& report);
Json to_json(const InferenceResult& result);
Json to_json(const SelectionTrace& trace);
Json to_json(const McSummary& summary);
Json to_json(const std::vector<BiasRow>& rows);

// group,time,theta,weight,n_treated,diff_treated,controls
std::string cells_csv(const EstimateReport& report);
// x,density
std::string kde_csv(const EstimatorSummary& summary);
// degree,gap,<estimator>,<estimator>_mc_se,...
std::string bias_table_csv(const std::vector<BiasRow>& rows);
// Overlaid kernel densities, one polyline per estimator, rule at the true ATT.
std::string density_svg(const McSummary& summary);

// Two-space indented dump followed by a newline.
std::string dump(const Json& j);
void write_text(const std::string& path, const std::string& text);

}  // namespace didint
