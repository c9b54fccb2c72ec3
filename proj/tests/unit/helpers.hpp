#pragma once

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "didint/dataset.hpp"

namespace testing {

using Schedule = std::map<std::string, std::optional<int>>;

inline didint::Observation row(std::string group, int time, double y, std::vector<double> x = {}) {
  return {std::nullopt, std::move(group), time, y, std::move(x)};
}

inline didint::PanelDataset make(std::vector<didint::Observation> rows, Schedule schedule,
                                 std::vector<std::string> covariates = {}) {
  return didint::PanelDataset(std::move(rows), std::move(covariates), didint::TreatmentSchedule(std::move(schedule)));
}

// Groups e (first treated 2), l (3), u (never) over periods 1..3 with `n`
// rows per cell. y = level + 2 t + tau D + noise; x is N(g, 1).
inline didint::PanelDataset elu(double tau, double noise, std::uint64_t seed, std::size_t n = 20, bool with_x = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const std::map<std::string, std::pair<double, std::optional<int>>> groups{
      {"e", {10.0, 2}}, {"l", {20.0, 3}}, {"u", {5.0, std::nullopt}}};
  std::vector<didint::Observation> rows;
  for (const auto& [g, spec] : groups) {
    for (int t = 1; t <= 3; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        const bool d = spec.second && t >= *spec.second;
        std::vector<double> x;
        if (with_x) x.push_back(spec.first / 10.0 + z(rng));
        rows.push_back(row(g, t, spec.first + 2.0 * t + (d ? tau : 0.0) + noise * z(rng), x));
      }
    }
  }
  Schedule s;
  for (const auto& [g, spec] : groups) s[g] = spec.second;
  return make(rows, s, with_x ? std::vector<std::string>{"x"} : std::vector<std::string>{});
}

}  // namespace testing
