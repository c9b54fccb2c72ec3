#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "didint/dataset.hpp"
#include "didint/design.hpp"
#include "didint/estimator_spec.hpp"

namespace didint {

enum class LawKind { Bernoulli, Normal, Uniform };

// Distribution of one covariate. The location (p, mean, or both bounds of the
// uniform) moves by group_shift[g] + group_drift[g] * (period - first period);
// Bernoulli probabilities are clamped to [0.01, 0.99].
struct CovariateLaw {
  LawKind kind = LawKind::Normal;
  double a = 0.0;  // p | mean | lower bound
  double b = 1.0;  // unused | sd | upper bound
  std::map<std::string, double> group_shift;
  std::map<std::string, double> group_drift;
};

// gamma[group index][period index] for one covariate, tagged with the pattern
// it is meant to follow (homogeneous, state-varying, time-varying, two-way,
// two-one-way).
struct GammaGrid {
  CovariateForm pattern = CovariateForm::Homogeneous;
  std::vector<std::vector<double>> values;
};

struct GroupBaseline {
  double y_init_mean = 0.0;
  double trend = 0.0;
};

struct DgpSpec {
  std::vector<std::string> groups;
  std::vector<int> periods;
  TreatmentSchedule schedule;
  std::vector<std::string> covariate_names;
  std::vector<CovariateLaw> laws;
  std::vector<GammaGrid> gamma;
  std::vector<GroupBaseline> baseline;
  double y_init_sd = 0.0;
  double noise_sd = 1.0;
  double true_att = 0.0;
  std::size_t cell_n = 100;

  // Throws ValidationError describing the first inconsistency.
  void validate() const;
};

GammaGrid constant_grid(std::size_t groups, std::size_t periods, double value);

// Y = y_init_s + trend_s * (t - t0) + sum_k gamma_k[s][t] X_k + tau * D + noise,
// with y_init_s ~ N(y_init_mean_s, y_init_sd) drawn once per group.
PanelDataset generate(const DgpSpec& spec, std::uint64_t seed);

struct Calibration {
  std::vector<GammaGrid> gamma;
  // Classical standard errors laid out like gamma.
  std::vector<std::vector<std::vector<double>>> se;
};

// Fits the pattern's regression (cell dummies plus the pattern's covariate
// terms) and returns the implied gamma grid per covariate.
Calibration calibrate(const PanelDataset& source, CovariateForm pattern);

enum class Violation { None, State, Time, TwoWay };
enum class Degree { VeryLow, Low, Medium, High, VeryHigh };

std::string to_string(Violation v);
std::string to_string(Degree d);
Violation parse_violation(const std::string& text);
const std::vector<Degree>& all_degrees();
// 10, 50, 100, 250, 500.
double degree_gap(Degree d);

// Replaces every gamma grid: constant (none), adjacent-group gap (state),
// adjacent-period gap (time), or base + gap * (s / (S-1)) * (t / (T-1))
// (two-way), so the largest spread equals the gap along both axes.
DgpSpec degree_spec(const DgpSpec& base, Violation violation, Degree degree);

// Five groups s1..s5 observed 2000-2014; s1, s2 first treated in 2004, s3, s4
// in 2009, s5 never. Covariates educ (Bernoulli) and age (Normal) with group
// shifts and drifts; constant gamma; true ATT 0.
DgpSpec staggered_design();

// A pseudo-survey source on the staggered design whose coefficients carry group,
// period and interaction structure, for calibration.
DgpSpec pseudo_survey_design();

struct EstimatorSummary {
  std::string name;
  double mean = 0.0;
  double mc_se = 0.0;
  double sd = 0.0;
  double abs_bias = 0.0;
  std::size_t replicates = 0;
  std::size_t failures = 0;
  std::vector<double> values;
  std::vector<std::string> failure_messages;
  std::vector<double> kde_x;
  std::vector<double> kde_density;
};

struct McSummary {
  double true_att = 0.0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::vector<EstimatorSummary> estimators;

  const EstimatorSummary& at(const std::string& name) const;
};

struct McOptions {
  std::size_t threads = 0;
  std::size_t kde_points = 256;
  double max_failure_rate = 0.05;
};

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t replicate);

McSummary run_mc(const DgpSpec& spec, const std::vector<EstimatorSpec>& estimators, std::size_t reps,
                 std::uint64_t seed, const McOptions& options = {});

struct BiasRow {
  Degree degree = Degree::VeryLow;
  double gap = 0.0;
  std::vector<std::string> estimators;
  std::vector<double> abs_bias;
  std::vector<double> mc_se;
};

std::vector<BiasRow> degree_sweep(const DgpSpec& base, Violation violation,
                                  const std::vector<EstimatorSpec>& estimators, std::size_t reps,
                                  std::uint64_t seed, const McOptions& options = {});

}  // namespace didint
