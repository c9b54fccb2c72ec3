#pragma once

#include <optional>
#include <string>
#include <vector>

#include "didint/dataset.hpp"

namespace didint {

// Column-name mapping for CSV input. The schedule comes from either a
// per-row treatment-year column or a sidecar `group,first_treated` file; when
// both are given they must agree.
struct CsvSchema {
  std::string group = "group";
  std::string time = "time";
  std::string outcome = "outcome";
  std::vector<std::string> covariates;
  std::optional<std::string> treatment;
  std::optional<std::string> unit;
  std::optional<std::string> schedule_file;
};

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path);

PanelDataset load_csv(const std::string& path, const CsvSchema& schema);
TreatmentSchedule load_schedule_csv(const std::string& path);

// Writes unit (when every row has one), group, time, outcome, covariates and a
// `first_treated` column. Reals use the shortest round-trip representation.
void write_csv(const PanelDataset& data, const std::string& path);
void write_schedule_csv(const TreatmentSchedule& schedule, const std::string& path);

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace didint
