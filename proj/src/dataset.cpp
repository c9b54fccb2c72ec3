#include "didint/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace didint {

TreatmentSchedule::TreatmentSchedule(std::map<std::string, std::optional<int>> first_treated)
    : first_treated_(std::move(first_treated)) {}

std::optional<int> TreatmentSchedule::first_treated(const std::string& group) const {
  auto it = first_treated_.find(group);
  if (it == first_treated_.end()) return std::nullopt;
  return it->second;
}

bool TreatmentSchedule::treated_at(const std::string& group, int time) const {
  auto first = first_treated(group);
  return first.has_value() && time >= *first;
}

PanelDataset::PanelDataset(std::vector<Observation> observations,
                           std::vector<std::string> covariate_names,
                           TreatmentSchedule schedule)
    : observations_(std::move(observations)),
      covariate_names_(std::move(covariate_names)),
      schedule_(std::move(schedule)) {
  if (observations_.empty()) throw ValidationError("empty dataset");

  const std::size_t k = covariate_names_.size();
  std::unordered_set<std::string> seen_names;
  for (const auto& name : covariate_names_) {
    if (!seen_names.insert(name).second) throw ValidationError("duplicate covariate name '" + name + "'");
  }
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const auto& obs = observations_[i];
    if (obs.covariates.size() != k) {
      throw ValidationError("observation " + std::to_string(i) + " has " +
                            std::to_string(obs.covariates.size()) + " covariates, expected " +
                            std::to_string(k));
    }
    if (!std::isfinite(obs.outcome)) {
      throw ValidationError("non-finite outcome in observation " + std::to_string(i));
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (!std::isfinite(obs.covariates[c])) {
        throw ValidationError("non-finite value of covariate '" + covariate_names_[c] +
                              "' in observation " + std::to_string(i));
      }
    }
  }
  index();
}

void PanelDataset::index() {
  std::set<std::string> groups;
  std::set<int> periods;
  for (const auto& obs : observations_) {
    groups.insert(obs.group);
    periods.insert(obs.time);
  }
  groups_.assign(groups.begin(), groups.end());
  periods_.assign(periods.begin(), periods.end());

  const int first_period = periods_.front();
  for (const auto& group : groups_) {
    auto first = schedule_.first_treated(group);
    if (first && *first <= first_period) {
      throw ValidationError("no pre-period for group " + group);
    }
  }

  std::unordered_map<std::string, std::size_t> gpos;
  for (std::size_t g = 0; g < groups_.size(); ++g) gpos.emplace(groups_[g], g);
  std::unordered_map<int, std::size_t> tpos;
  for (std::size_t t = 0; t < periods_.size(); ++t) tpos.emplace(periods_[t], t);

  const std::size_t n = observations_.size();
  group_pos_.resize(n);
  period_pos_.resize(n);
  treatment_.resize(n);
  cells_.assign(groups_.size() * periods_.size(), {});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& obs = observations_[i];
    group_pos_[i] = gpos.at(obs.group);
    period_pos_[i] = tpos.at(obs.time);
    treatment_[i] = schedule_.treated_at(obs.group, obs.time);
    cells_[cell_of(i)].push_back(i);
  }
}

std::optional<std::size_t> PanelDataset::group_position(const std::string& group) const {
  auto it = std::lower_bound(groups_.begin(), groups_.end(), group);
  if (it == groups_.end() || *it != group) return std::nullopt;
  return static_cast<std::size_t>(it - groups_.begin());
}

std::optional<std::size_t> PanelDataset::period_position(int time) const {
  auto it = std::lower_bound(periods_.begin(), periods_.end(), time);
  if (it == periods_.end() || *it != time) return std::nullopt;
  return static_cast<std::size_t>(it - periods_.begin());
}

bool PanelDataset::populated(std::size_t group_pos, std::size_t period_pos) const {
  return !cells_[group_pos * periods_.size() + period_pos].empty();
}

bool PanelDataset::populated(const CellIndex& cell) const {
  auto g = group_position(cell.group);
  auto t = period_position(cell.time);
  return g && t && populated(*g, *t);
}

const std::vector<std::size_t>& PanelDataset::cell_rows(std::size_t group_pos,
                                                        std::size_t period_pos) const {
  return cells_[group_pos * periods_.size() + period_pos];
}

const std::vector<std::size_t>& PanelDataset::cell_rows(const CellIndex& cell) const {
  auto g = group_position(cell.group);
  auto t = period_position(cell.time);
  if (!g || !t || !populated(*g, *t)) {
    throw EstimationError("unpopulated cell (" + cell.group + ", " + std::to_string(cell.time) + ")");
  }
  return cell_rows(*g, *t);
}

std::vector<CellIndex> PanelDataset::populated_cells() const {
  std::vector<CellIndex> out;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    for (std::size_t t = 0; t < periods_.size(); ++t) {
      if (populated(g, t)) out.push_back({groups_[g], periods_[t]});
    }
  }
  return out;
}

bool PanelDataset::is_panel() const {
  std::unordered_map<std::string, int> first_seen;
  bool repeated = false;
  for (const auto& obs : observations_) {
    if (!obs.unit_id) return false;
    auto [it, inserted] = first_seen.emplace(*obs.unit_id, obs.time);
    if (!inserted && it->second != obs.time) repeated = true;
  }
  return repeated;
}

PanelDataset PanelDataset::with_schedule(TreatmentSchedule schedule) const {
  return PanelDataset(observations_, covariate_names_, std::move(schedule));
}

PanelDataset PanelDataset::with_outcomes(const std::vector<double>& outcomes) const {
  if (outcomes.size() != observations_.size()) {
    throw std::invalid_argument("with_outcomes: length mismatch");
  }
  auto obs = observations_;
  for (std::size_t i = 0; i < obs.size(); ++i) obs[i].outcome = outcomes[i];
  return PanelDataset(std::move(obs), covariate_names_, schedule_);
}

PanelDataset PanelDataset::without_group(const std::string& group) const {
  std::vector<Observation> kept;
  kept.reserve(observations_.size());
  for (const auto& obs : observations_) {
    if (obs.group != group) kept.push_back(obs);
  }
  auto entries = schedule_.entries();
  entries.erase(group);
  return PanelDataset(std::move(kept), covariate_names_, TreatmentSchedule(std::move(entries)));
}

PanelDataset PanelDataset::restricted(const std::set<std::string>& groups,
                                      const std::set<int>& periods) const {
  std::vector<Observation> kept;
  for (const auto& obs : observations_) {
    if (groups.count(obs.group) && periods.count(obs.time)) kept.push_back(obs);
  }
  std::map<std::string, std::optional<int>> entries;
  for (const auto& [g, first] : schedule_.entries()) {
    if (groups.count(g)) entries.emplace(g, first);
  }
  return PanelDataset(std::move(kept), covariate_names_, TreatmentSchedule(std::move(entries)));
}

double cell_mean(const PanelDataset& data, const CellIndex& cell) {
  const auto& rows = data.cell_rows(cell);
  double sum = 0.0;
  for (auto i : rows) sum += data.observations()[i].outcome;
  return sum / static_cast<double>(rows.size());
}

std::set<std::string> eligible_controls(const PanelDataset& data, const CellIndex& cell) {
  auto first = data.schedule().first_treated(cell.group);
  if (!first || cell.time < *first) {
    throw std::invalid_argument("eligible_controls: (" + cell.group + ", " +
                                std::to_string(cell.time) + ") is not a treated cell");
  }
  std::set<std::string> out;
  for (const auto& g : data.groups()) {
    if (g == cell.group) continue;
    auto other = data.schedule().first_treated(g);
    if (!other || *other > cell.time) out.insert(g);
  }
  if (out.empty()) {
    throw EstimationError("no valid control for (" + cell.group + ", " +
                          std::to_string(cell.time) + ")");
  }
  return out;
}

}  // namespace didint
