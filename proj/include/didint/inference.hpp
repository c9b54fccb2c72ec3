#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "didint/estimator_spec.hpp"

namespace didint {

struct InferenceResult {
  std::string scheme;
  double estimate = 0.0;
  // Delete-one-group jackknife.
  std::optional<double> se_jackknife;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  std::vector<std::string> replicate_groups;
  std::vector<double> replicates;
  // Randomization inference over treatment-timing assignments.
  std::optional<double> p_randomization;
  std::size_t n_permutations = 0;
  bool exhaustive = false;
  std::vector<std::string> diagnostics;
};

// SE = sqrt((G-1)/G * sum (theta_(g) - mean)^2) over the G usable deletions;
// the confidence interval uses a t distribution with G-1 degrees of freedom.
InferenceResult cluster_jackknife(const PanelDataset& data, const EstimatorSpec& spec, double level = 0.95);

// Permutes the observed multiset of first-treatment periods across groups.
// Enumerates every distinct assignment when there are at most n_perm of them
// (p = share with |theta| >= |theta_obs|, observed assignment included);
// otherwise draws n_perm seeded shuffles and p = (1 + count) / (1 + n_perm).
InferenceResult randomization_inference(const PanelDataset& data, const EstimatorSpec& spec, std::size_t n_perm,
                                        std::uint64_t seed);

// Number of distinct assignments of the timing multiset to groups.
double assignment_count(const PanelDataset& data);

// Neumaier-compensated sum.
double compensated_sum(const std::vector<double>& values);

}  // namespace didint
