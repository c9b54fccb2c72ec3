#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "didint/errors.hpp"

namespace didint {

struct Observation {
  std::optional<std::string> unit_id;
  std::string group;
  int time = 0;
  double outcome = 0.0;
  std::vector<double> covariates;
};

// One (group, period) combination.
struct CellIndex {
  std::string group;
  int time = 0;

  auto operator<=>(const CellIndex&) const = default;
};

// First treatment period per group; an absent value means never treated.
class TreatmentSchedule {
 public:
  TreatmentSchedule() = default;
  explicit TreatmentSchedule(std::map<std::string, std::optional<int>> first_treated);

  std::optional<int> first_treated(const std::string& group) const;
  bool is_treated(const std::string& group) const { return first_treated(group).has_value(); }
  // Binary treatment dummy: treated group and time >= first treatment period.
  bool treated_at(const std::string& group, int time) const;

  void set(const std::string& group, std::optional<int> first) { first_treated_[group] = first; }
  const std::map<std::string, std::optional<int>>& entries() const { return first_treated_; }

  bool operator==(const TreatmentSchedule&) const = default;

 private:
  std::map<std::string, std::optional<int>> first_treated_;
};

// Immutable, validated panel or repeated cross-section. Groups and periods are
// kept sorted; every observation is indexed into its (group, period) cell.
class PanelDataset {
 public:
  PanelDataset(std::vector<Observation> observations,
               std::vector<std::string> covariate_names,
               TreatmentSchedule schedule);

  const std::vector<Observation>& observations() const { return observations_; }
  const std::vector<std::string>& groups() const { return groups_; }
  const std::vector<int>& periods() const { return periods_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }
  const TreatmentSchedule& schedule() const { return schedule_; }

  std::size_t size() const { return observations_.size(); }
  std::size_t num_groups() const { return groups_.size(); }
  std::size_t num_periods() const { return periods_.size(); }
  std::size_t num_covariates() const { return covariate_names_.size(); }

  std::optional<std::size_t> group_position(const std::string& group) const;
  std::optional<std::size_t> period_position(int time) const;

  // Position of observation i's group / period in groups() / periods().
  std::size_t group_of(std::size_t i) const { return group_pos_[i]; }
  std::size_t period_of(std::size_t i) const { return period_pos_[i]; }
  // Dense cell id: group position * num_periods() + period position.
  std::size_t cell_of(std::size_t i) const { return group_pos_[i] * periods_.size() + period_pos_[i]; }

  bool populated(std::size_t group_pos, std::size_t period_pos) const;
  bool populated(const CellIndex& cell) const;
  const std::vector<std::size_t>& cell_rows(std::size_t group_pos, std::size_t period_pos) const;
  const std::vector<std::size_t>& cell_rows(const CellIndex& cell) const;
  // Populated cells in group-major, period-minor order.
  std::vector<CellIndex> populated_cells() const;

  std::optional<int> first_treated(std::size_t group_pos) const {
    return schedule_.first_treated(groups_[group_pos]);
  }
  bool treatment(std::size_t i) const { return treatment_[i]; }

  // True when unit ids are present on every row and some unit recurs across periods.
  bool is_panel() const;

  PanelDataset with_schedule(TreatmentSchedule schedule) const;
  PanelDataset with_outcomes(const std::vector<double>& outcomes) const;
  PanelDataset without_group(const std::string& group) const;
  PanelDataset restricted(const std::set<std::string>& groups, const std::set<int>& periods) const;

 private:
  void index();

  std::vector<Observation> observations_;
  std::vector<std::string> covariate_names_;
  TreatmentSchedule schedule_;

  std::vector<std::string> groups_;
  std::vector<int> periods_;
  std::vector<std::size_t> group_pos_;
  std::vector<std::size_t> period_pos_;
  std::vector<bool> treatment_;
  std::vector<std::vector<std::size_t>> cells_;
};

double cell_mean(const PanelDataset& data, const CellIndex& cell);

// Groups not yet treated at cell.time (never treated, or first treated later).
// Throws EstimationError when the set is empty.
std::set<std::string> eligible_controls(const PanelDataset& data, const CellIndex& cell);

}  // namespace didint
