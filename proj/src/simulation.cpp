#include "didint/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <tuple>

#include "didint/inference.hpp"
#include "didint/linalg.hpp"
#include "didint/parallel.hpp"

namespace didint {
namespace {

double location_offset(const CovariateLaw& law, const std::string& group, double elapsed) {
  double offset = 0.0;
  if (auto it = law.group_shift.find(group); it != law.group_shift.end()) offset += it->second;
  if (auto it = law.group_drift.find(group); it != law.group_drift.end()) offset += it->second * elapsed;
  return offset;
}

void check_pattern(const GammaGrid& grid, const std::string& name) {
  const auto& v = grid.values;
  double scale = 1.0;
  for (const auto& row : v) {
    for (double x : row) scale = std::max(scale, std::abs(x));
  }
  const double tol = 1e-9 * scale;
  const std::size_t s_count = v.size();
  const std::size_t t_count = v.front().size();
  auto fail = [&](const std::string& what) {
    throw ValidationError("gamma grid for '" + name + "' is tagged " + to_string(grid.pattern) + " but " + what);
  };
  for (std::size_t s = 0; s < s_count; ++s) {
    for (std::size_t t = 0; t < t_count; ++t) {
      switch (grid.pattern) {
        case CovariateForm::None:
        case CovariateForm::Homogeneous:
          if (std::abs(v[s][t] - v[0][0]) > tol) fail("values differ");
          break;
        case CovariateForm::StateVarying:
          if (std::abs(v[s][t] - v[s][0]) > tol) fail("values vary over periods");
          break;
        case CovariateForm::TimeVarying:
          if (std::abs(v[s][t] - v[0][t]) > tol) fail("values vary over groups");
          break;
        case CovariateForm::TwoOneWay:
          if (std::abs(v[s][t] - (v[s][0] + v[0][t] - v[0][0])) > tol) fail("values are not additive in group and period");
          break;
        case CovariateForm::TwoWay:
          break;
      }
    }
  }
}

}  // namespace

void DgpSpec::validate() const {
  if (groups.empty()) throw ValidationError("dgp: no groups");
  if (periods.empty()) throw ValidationError("dgp: no periods");
  if (!std::is_sorted(periods.begin(), periods.end()) ||
      std::adjacent_find(periods.begin(), periods.end()) != periods.end()) {
    throw ValidationError("dgp: periods must be strictly increasing");
  }
  const std::size_t k = covariate_names.size();
  if (laws.size() != k) throw ValidationError("dgp: one covariate law per covariate required");
  if (gamma.size() != k) throw ValidationError("dgp: one gamma grid per covariate required");
  if (baseline.size() != groups.size()) throw ValidationError("dgp: one baseline per group required");
  if (!(noise_sd >= 0.0)) throw ValidationError("dgp: noise_sd must be >= 0");
  if (!(y_init_sd >= 0.0)) throw ValidationError("dgp: y_init_sd must be >= 0");
  if (cell_n < 1) throw ValidationError("dgp: cell_n must be >= 1");
  for (const auto& [group, first] : schedule.entries()) {
    if (std::find(groups.begin(), groups.end(), group) == groups.end()) {
      throw ValidationError("dgp: schedule names unknown group " + group);
    }
    if (first && *first <= periods.front()) throw ValidationError("no pre-period for group " + group);
  }
  for (std::size_t c = 0; c < k; ++c) {
    const auto& law = laws[c];
    if (law.kind == LawKind::Bernoulli && !(law.a >= 0.0 && law.a <= 1.0)) {
      throw ValidationError("dgp: Bernoulli p for '" + covariate_names[c] + "' outside [0, 1]");
    }
    if (law.kind == LawKind::Normal && !(law.b >= 0.0)) {
      throw ValidationError("dgp: negative sd for '" + covariate_names[c] + "'");
    }
    if (law.kind == LawKind::Uniform && !(law.a <= law.b)) {
      throw ValidationError("dgp: uniform bounds reversed for '" + covariate_names[c] + "'");
    }
    const auto& grid = gamma[c];
    if (grid.values.size() != groups.size()) throw ValidationError("dgp: gamma grid for '" + covariate_names[c] + "' has wrong group count");
    for (const auto& row : grid.values) {
      if (row.size() != periods.size()) throw ValidationError("dgp: gamma grid for '" + covariate_names[c] + "' has wrong period count");
      for (double v : row) {
        if (!std::isfinite(v)) throw ValidationError("dgp: non-finite gamma for '" + covariate_names[c] + "'");
      }
    }
    check_pattern(grid, covariate_names[c]);
  }
}

GammaGrid constant_grid(std::size_t groups, std::size_t periods, double value) {
  GammaGrid g;
  g.pattern = CovariateForm::Homogeneous;
  g.values.assign(groups, std::vector<double>(periods, value));
  return g;
}

PanelDataset generate(const DgpSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const std::size_t k = spec.covariate_names.size();
  const int t0 = spec.periods.front();
  std::vector<Observation> observations;
  observations.reserve(spec.groups.size() * spec.periods.size() * spec.cell_n);
  for (std::size_t s = 0; s < spec.groups.size(); ++s) {
    const std::string& group = spec.groups[s];
    const auto first = spec.schedule.first_treated(group);
    const double y_init = spec.baseline[s].y_init_mean + spec.y_init_sd * normal(rng);
    for (std::size_t t = 0; t < spec.periods.size(); ++t) {
      const int time = spec.periods[t];
      const double elapsed = static_cast<double>(time - t0);
      const bool treated = first && time >= *first;
      for (std::size_t i = 0; i < spec.cell_n; ++i) {
        Observation obs;
        obs.group = group;
        obs.time = time;
        obs.covariates.resize(k);
        double y = y_init + spec.baseline[s].trend * elapsed;
        for (std::size_t c = 0; c < k; ++c) {
          const auto& law = spec.laws[c];
          const double shift = location_offset(law, group, elapsed);
          double x = 0.0;
          switch (law.kind) {
            case LawKind::Bernoulli:
              x = uniform(rng) < std::clamp(law.a + shift, 0.01, 0.99) ? 1.0 : 0.0;
              break;
            case LawKind::Normal:
              x = law.a + shift + law.b * normal(rng);
              break;
            case LawKind::Uniform:
              x = law.a + shift + (law.b - law.a) * uniform(rng);
              break;
          }
          obs.covariates[c] = x;
          y += spec.gamma[c].values[s][t] * x;
        }
        if (treated) y += spec.true_att;
        y += spec.noise_sd * normal(rng);
        obs.outcome = y;
        observations.push_back(std::move(obs));
      }
    }
  }
  return PanelDataset(std::move(observations), spec.covariate_names, spec.schedule);
}

Calibration calibrate(const PanelDataset& source, CovariateForm pattern) {
  if (pattern == CovariateForm::None) throw std::invalid_argument("calibrate: pattern must name a covariate form");
  const std::size_t k = source.num_covariates();
  if (k == 0) throw ValidationError("calibrate: source has no covariates");
  if (pattern == CovariateForm::TwoWay) {
    for (const auto& cell : source.populated_cells()) {
      const auto n = source.cell_rows(cell).size();
      if (n < k + 1) {
        throw EstimationError("calibrate: cell (" + cell.group + ", " + std::to_string(cell.time) + ") has " +
                              std::to_string(n) + " observations, fewer than K+1 = " + std::to_string(k + 1));
      }
    }
  }
  const auto x = build_didint_design(source, pattern);
  const auto fit = ols(x, outcome_vector(source), false);
  Eigen::MatrixXd cov;
  if (static_cast<Eigen::Index>(source.size()) > fit.rank) cov = classical_covariance(fit);

  std::vector<Eigen::Index> position(static_cast<std::size_t>(x.cols()), -1);
  for (Eigen::Index c = 0; c < fit.rank; ++c) position[static_cast<std::size_t>(fit.retained[c])] = c;
  auto variance = [&](std::size_t j1, std::size_t j2) {
    if (cov.size() == 0 || position[j1] < 0 || position[j2] < 0) return 0.0;
    return cov(position[j1], position[j2]);
  };

  const std::size_t ns = source.num_groups();
  const std::size_t nt = source.num_periods();
  const std::size_t ncells = source.populated_cells().size();
  const auto terms = covariate_terms(source, pattern);

  // Column of each term keyed by (covariate, group pos or -1, period pos or -1).
  std::map<std::tuple<std::size_t, long, long>, std::size_t> column;
  for (std::size_t c = 0; c < terms.size(); ++c) {
    const long g = terms[c].group ? static_cast<long>(*source.group_position(*terms[c].group)) : -1;
    const long t = terms[c].time ? static_cast<long>(*source.period_position(*terms[c].time)) : -1;
    column.emplace(std::make_tuple(terms[c].covariate, g, t), ncells + c);
  }
  auto coef = [&](std::size_t j) {
    const auto& e = fit.estimates[j];
    return e ? *e : 0.0;
  };

  Calibration out;
  for (std::size_t c = 0; c < k; ++c) {
    GammaGrid grid;
    grid.pattern = pattern;
    grid.values.assign(ns, std::vector<double>(nt, 0.0));
    std::vector<std::vector<double>> se(ns, std::vector<double>(nt, 0.0));
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t t = 0; t < nt; ++t) {
        std::vector<std::size_t> cols;
        auto add = [&](long g, long p) {
          auto it = column.find({c, g, p});
          if (it != column.end()) cols.push_back(it->second);
        };
        switch (pattern) {
          case CovariateForm::Homogeneous: add(-1, -1); break;
          case CovariateForm::StateVarying: add(static_cast<long>(s), -1); break;
          case CovariateForm::TimeVarying: add(-1, static_cast<long>(t)); break;
          case CovariateForm::TwoWay: add(static_cast<long>(s), static_cast<long>(t)); break;
          case CovariateForm::TwoOneWay:
            add(static_cast<long>(s), -1);
            add(-1, static_cast<long>(t));
            break;
          case CovariateForm::None: break;
        }
        double value = 0.0;
        double var = 0.0;
        for (auto j1 : cols) {
          value += coef(j1);
          for (auto j2 : cols) var += variance(j1, j2);
        }
        grid.values[s][t] = value;
        se[s][t] = std::sqrt(std::max(var, 0.0));
      }
    }
    out.gamma.push_back(std::move(grid));
    out.se.push_back(std::move(se));
  }
  return out;
}

std::string to_string(Violation v) {
  switch (v) {
    case Violation::None: return "none";
    case Violation::State: return "state";
    case Violation::Time: return "time";
    case Violation::TwoWay: return "two-way";
  }
  return "unknown";
}

std::string to_string(Degree d) {
  switch (d) {
    case Degree::VeryLow: return "very-low";
    case Degree::Low: return "low";
    case Degree::Medium: return "medium";
    case Degree::High: return "high";
    case Degree::VeryHigh: return "very-high";
  }
  return "unknown";
}

Violation parse_violation(const std::string& text) {
  if (text == "none") return Violation::None;
  if (text == "state") return Violation::State;
  if (text == "time") return Violation::Time;
  if (text == "two-way" || text == "twoway") return Violation::TwoWay;
  throw ValidationError("unknown violation '" + text + "' (expected state, time, two-way or none)");
}

const std::vector<Degree>& all_degrees() {
  static const std::vector<Degree> degrees{Degree::VeryLow, Degree::Low, Degree::Medium, Degree::High,
                                           Degree::VeryHigh};
  return degrees;
}

double degree_gap(Degree d) {
  switch (d) {
    case Degree::VeryLow: return 10.0;
    case Degree::Low: return 50.0;
    case Degree::Medium: return 100.0;
    case Degree::High: return 250.0;
    case Degree::VeryHigh: return 500.0;
  }
  return 0.0;
}

DgpSpec degree_spec(const DgpSpec& base, Violation violation, Degree degree) {
  base.validate();
  DgpSpec out = base;
  const double gap = degree_gap(degree);
  const std::size_t ns = base.groups.size();
  const std::size_t nt = base.periods.size();
  for (auto& grid : out.gamma) {
    const double g0 = grid.values.at(0).at(0);
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t t = 0; t < nt; ++t) {
        const double fs = ns > 1 ? static_cast<double>(s) / static_cast<double>(ns - 1) : 0.0;
        const double ft = nt > 1 ? static_cast<double>(t) / static_cast<double>(nt - 1) : 0.0;
        switch (violation) {
          case Violation::None: grid.values[s][t] = g0; break;
          case Violation::State: grid.values[s][t] = g0 + gap * static_cast<double>(s); break;
          case Violation::Time: grid.values[s][t] = g0 + gap * static_cast<double>(t); break;
          case Violation::TwoWay: grid.values[s][t] = g0 + gap * fs * ft; break;
        }
      }
    }
    switch (violation) {
      case Violation::None: grid.pattern = CovariateForm::Homogeneous; break;
      case Violation::State: grid.pattern = CovariateForm::StateVarying; break;
      case Violation::Time: grid.pattern = CovariateForm::TimeVarying; break;
      case Violation::TwoWay: grid.pattern = CovariateForm::TwoWay; break;
    }
  }
  return out;
}

DgpSpec staggered_design() {
  DgpSpec spec;
  spec.groups = {"s1", "s2", "s3", "s4", "s5"};
  for (int year = 2000; year <= 2014; ++year) spec.periods.push_back(year);
  spec.schedule = TreatmentSchedule({{"s1", 2004}, {"s2", 2004}, {"s3", 2009}, {"s4", 2009}, {"s5", std::nullopt}});
  spec.covariate_names = {"educ", "age"};

  CovariateLaw educ;
  educ.kind = LawKind::Bernoulli;
  educ.a = 0.30;
  educ.group_shift = {{"s1", 0.00}, {"s2", 0.08}, {"s3", 0.16}, {"s4", 0.24}, {"s5", 0.12}};
  educ.group_drift = {{"s1", 0.010}, {"s2", 0.004}, {"s3", -0.004}, {"s4", 0.012}, {"s5", 0.0}};
  CovariateLaw age;
  age.kind = LawKind::Normal;
  age.a = 40.0;
  age.b = 10.0;
  age.group_shift = {{"s1", -2.0}, {"s2", 0.0}, {"s3", 2.0}, {"s4", 1.0}, {"s5", -1.0}};
  age.group_drift = {{"s1", 0.30}, {"s2", 0.10}, {"s3", -0.20}, {"s4", 0.20}, {"s5", 0.0}};
  spec.laws = {educ, age};

  const std::size_t ns = spec.groups.size();
  const std::size_t nt = spec.periods.size();
  spec.gamma = {constant_grid(ns, nt, 150.0), constant_grid(ns, nt, 8.0)};
  spec.baseline = {{500.0, 5.0}, {600.0, 5.0}, {700.0, 5.0}, {800.0, 5.0}, {900.0, 5.0}};
  spec.y_init_sd = 0.0;
  spec.noise_sd = 10.0;
  spec.true_att = 0.0;
  spec.cell_n = 100;
  return spec;
}

DgpSpec pseudo_survey_design() {
  DgpSpec spec = staggered_design();
  const std::size_t ns = spec.groups.size();
  const std::size_t nt = spec.periods.size();
  const double educ_group[] = {-40.0, -10.0, 0.0, 20.0, 50.0};
  const double age_group[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  GammaGrid educ;
  GammaGrid age;
  educ.pattern = CovariateForm::TwoWay;
  age.pattern = CovariateForm::TwoWay;
  educ.values.assign(ns, std::vector<double>(nt));
  age.values.assign(ns, std::vector<double>(nt));
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t t = 0; t < nt; ++t) {
      const double ds = static_cast<double>(s);
      const double dt = static_cast<double>(t) - 7.0;
      educ.values[s][t] = 150.0 + educ_group[s] + 3.0 * dt + 25.0 * std::cos(1.3 * ds + 0.7 * dt);
      age.values[s][t] = 8.0 + age_group[s] + 0.1 * dt + 0.8 * std::sin(0.9 * ds + 0.5 * dt);
    }
  }
  spec.gamma = {educ, age};
  spec.cell_n = 200;
  return spec;
}

const EstimatorSummary& McSummary::at(const std::string& name) const {
  for (const auto& e : estimators) {
    if (e.name == name) return e;
  }
  throw std::out_of_range("no Monte Carlo summary for estimator " + name);
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t replicate) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(replicate >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

McSummary run_mc(const DgpSpec& spec, const std::vector<EstimatorSpec>& estimators, std::size_t reps,
                 std::uint64_t seed, const McOptions& options) {
  if (reps < 2) throw std::invalid_argument("run_mc: need at least two replicates");
  if (estimators.empty()) throw std::invalid_argument("run_mc: no estimators");
  spec.validate();

  const std::size_t ne = estimators.size();
  std::vector<std::vector<std::optional<double>>> values(ne, std::vector<std::optional<double>>(reps));
  std::vector<std::vector<std::string>> errors(ne, std::vector<std::string>(reps));
  parallel_for(
      reps,
      [&](std::size_t r) {
        const auto data = generate(spec, replicate_seed(seed, r));
        for (std::size_t e = 0; e < ne; ++e) {
          try {
            values[e][r] = estimators[e].run(data).overall_att;
          } catch (const std::runtime_error& ex) {
            errors[e][r] = ex.what();
          }
        }
      },
      options.threads);

  McSummary summary;
  summary.true_att = spec.true_att;
  summary.reps = reps;
  summary.seed = seed;
  for (std::size_t e = 0; e < ne; ++e) {
    EstimatorSummary s;
    s.name = estimators[e].name();
    for (std::size_t r = 0; r < reps; ++r) {
      if (values[e][r]) {
        s.values.push_back(*values[e][r]);
      } else {
        ++s.failures;
        if (s.failure_messages.size() < 5) s.failure_messages.push_back("replicate " + std::to_string(r) + ": " + errors[e][r]);
      }
    }
    if (static_cast<double>(s.failures) > options.max_failure_rate * static_cast<double>(reps) || s.values.size() < 2) {
      std::string msg = "estimator " + s.name + " failed in " + std::to_string(s.failures) + " of " +
                        std::to_string(reps) + " replicates";
      if (!s.failure_messages.empty()) msg += "; first failure: " + s.failure_messages.front();
      throw EstimationError(msg);
    }
    s.replicates = s.values.size();
    const double n = static_cast<double>(s.replicates);
    s.mean = compensated_sum(s.values) / n;
    std::vector<double> sq;
    sq.reserve(s.values.size());
    for (double v : s.values) sq.push_back((v - s.mean) * (v - s.mean));
    s.sd = std::sqrt(compensated_sum(sq) / (n - 1.0));
    s.mc_se = s.sd / std::sqrt(n);
    s.abs_bias = std::abs(s.mean - spec.true_att);
    if (s.sd > 0.0 && options.kde_points >= 2) {
      s.kde_x = kde_grid(s.values, options.kde_points);
      s.kde_density = kde(s.values, s.kde_x);
    }
    summary.estimators.push_back(std::move(s));
  }
  return summary;
}

std::vector<BiasRow> degree_sweep(const DgpSpec& base, Violation violation,
                                  const std::vector<EstimatorSpec>& estimators, std::size_t reps,
                                  std::uint64_t seed, const McOptions& options) {
  std::vector<BiasRow> rows;
  for (auto degree : all_degrees()) {
    const auto mc = run_mc(degree_spec(base, violation, degree), estimators, reps, seed, options);
    BiasRow row;
    row.degree = degree;
    row.gap = degree_gap(degree);
    for (const auto& e : mc.estimators) {
      row.estimators.push_back(e.name);
      row.abs_bias.push_back(e.abs_bias);
      row.mc_se.push_back(e.mc_se);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace didint
