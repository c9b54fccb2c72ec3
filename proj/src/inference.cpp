#include "didint/inference.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <map>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "didint/parallel.hpp"

namespace didint {
namespace {

constexpr int kNever = INT_MAX;

std::vector<int> timing_vector(const PanelDataset& data) {
  std::vector<int> out;
  for (std::size_t g = 0; g < data.num_groups(); ++g) out.push_back(data.first_treated(g).value_or(kNever));
  return out;
}

TreatmentSchedule schedule_from(const PanelDataset& data, const std::vector<int>& timing) {
  std::map<std::string, std::optional<int>> entries;
  for (std::size_t g = 0; g < timing.size(); ++g) {
    entries.emplace(data.groups()[g], timing[g] == kNever ? std::nullopt : std::optional<int>(timing[g]));
  }
  return TreatmentSchedule(std::move(entries));
}

std::optional<double> try_estimate(const PanelDataset& data, const EstimatorSpec& spec, const std::vector<int>& timing) {
  try {
    return spec.run(data.with_schedule(schedule_from(data, timing))).overall_att;
  } catch (const ValidationError&) {
    return std::nullopt;
  } catch (const EstimationError&) {
    return std::nullopt;
  }
}

}  // namespace

double compensated_sum(const std::vector<double>& values) {
  double sum = 0.0;
  double c = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      c += (sum - t) + v;
    } else {
      c += (v - t) + sum;
    }
    sum = t;
  }
  return sum + c;
}

InferenceResult cluster_jackknife(const PanelDataset& data, const EstimatorSpec& spec, double level) {
  const std::size_t groups = data.num_groups();
  if (groups < 3) throw EstimationError("too few clusters for the jackknife (" + std::to_string(groups) + " groups)");
  InferenceResult out;
  out.scheme = "delete-one-group jackknife, (G-1)/G scaling";
  out.estimate = spec.run(data).overall_att;

  EstimatorSpec lenient = spec;
  lenient.skip_cells_without_controls = true;
  std::vector<std::optional<double>> results(groups);
  std::vector<std::string> errors(groups);
  parallel_for(groups, [&](std::size_t g) {
    try {
      results[g] = lenient.run(data.without_group(data.groups()[g])).overall_att;
    } catch (const std::runtime_error& e) {
      errors[g] = e.what();
    }
  });
  for (std::size_t g = 0; g < groups; ++g) {
    if (results[g]) {
      out.replicate_groups.push_back(data.groups()[g]);
      out.replicates.push_back(*results[g]);
    } else {
      out.diagnostics.push_back("deleting group " + data.groups()[g] + " leaves the estimator infeasible: " + errors[g]);
    }
  }
  const std::size_t used = out.replicates.size();
  if (used < 2) throw EstimationError("jackknife infeasible: fewer than two usable group deletions");

  const double mean = compensated_sum(out.replicates) / static_cast<double>(used);
  std::vector<double> squares;
  squares.reserve(used);
  for (double v : out.replicates) squares.push_back((v - mean) * (v - mean));
  const double g = static_cast<double>(used);
  const double se = std::sqrt((g - 1.0) / g * compensated_sum(squares));
  out.se_jackknife = se;
  boost::math::students_t dist(g - 1.0);
  const double q = boost::math::quantile(dist, 0.5 + level / 2.0);
  out.ci_low = out.estimate - q * se;
  out.ci_high = out.estimate + q * se;
  return out;
}

double assignment_count(const PanelDataset& data) {
  std::map<int, int> counts;
  for (int t : timing_vector(data)) ++counts[t];
  double total = std::lgamma(static_cast<double>(data.num_groups()) + 1.0);
  for (const auto& [t, c] : counts) total -= std::lgamma(static_cast<double>(c) + 1.0);
  return std::round(std::exp(total));
}

InferenceResult randomization_inference(const PanelDataset& data, const EstimatorSpec& spec, std::size_t n_perm,
                                        std::uint64_t seed) {
  if (n_perm < 99) throw std::invalid_argument("randomization inference needs at least 99 permutations");
  const double total = assignment_count(data);
  if (total < 2.0) throw EstimationError("randomization inference: only one possible treatment assignment");

  InferenceResult out;
  out.estimate = spec.run(data).overall_att;
  const double observed = std::abs(out.estimate);
  const double tol = 1e-10 * std::max(1.0, observed);

  std::vector<std::vector<int>> assignments;
  const auto base = timing_vector(data);
  if (total <= static_cast<double>(n_perm)) {
    out.exhaustive = true;
    out.scheme = "exhaustive timing permutation";
    auto perm = base;
    std::sort(perm.begin(), perm.end());
    do {
      assignments.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    out.scheme = "sampled timing permutation";
    std::mt19937_64 rng(seed);
    auto perm = base;
    for (std::size_t r = 0; r < n_perm; ++r) {
      std::shuffle(perm.begin(), perm.end(), rng);
      assignments.push_back(perm);
    }
  }

  std::vector<std::optional<double>> stats(assignments.size());
  parallel_for(assignments.size(), [&](std::size_t r) { stats[r] = try_estimate(data, spec, assignments[r]); });

  std::size_t usable = 0;
  std::size_t extreme = 0;
  for (const auto& s : stats) {
    if (!s) continue;
    ++usable;
    if (std::abs(*s) >= observed - tol) ++extreme;
  }
  if (usable < assignments.size()) {
    out.diagnostics.push_back(std::to_string(assignments.size() - usable) + " assignment(s) not estimable; skipped");
  }
  if (usable == 0) throw EstimationError("randomization inference: no permuted assignment is estimable");
  out.n_permutations = usable;
  if (out.exhaustive) {
    out.p_randomization = static_cast<double>(std::max<std::size_t>(extreme, 1)) / static_cast<double>(usable);
  } else {
    out.p_randomization = (1.0 + static_cast<double>(extreme)) / (1.0 + static_cast<double>(usable));
  }
  return out;
}

}  // namespace didint
