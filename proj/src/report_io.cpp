#include "didint/report_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "didint/dataset_io.hpp"
#include "didint/svg.hpp"

namespace didint {
namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <typename T>
Json optional_number(const std::optional<T>& v) {
  return v ? number(static_cast<double>(*v)) : Json(nullptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Json to_json(const EstimateReport& report) {
  Json j;
  j["estimator"] = report.estimator_name;
  j["overall_att"] = number(report.overall_att);
  j["se"] = optional_number(report.se);
  j["p_randomization"] = optional_number(report.p_randomization);
  Json settings = Json::object();
  for (const auto& [k, v] : report.settings) settings[k] = v;
  j["settings"] = settings;
  Json cells = Json::array();
  for (const auto& c : report.cells) {
    Json cell;
    cell["group"] = c.cell.group;
    cell["time"] = c.cell.time;
    cell["theta"] = number(c.theta);
    cell["weight"] = number(c.weight);
    cell["n_treated"] = c.n_treated;
    cell["diff_treated"] = number(c.diff_treated);
    Json controls = Json::object();
    for (const auto& [g, d] : c.diff_controls) controls[g] = number(d);
    cell["diff_controls"] = controls;
    cell["controls"] = Json(std::vector<std::string>(c.control_groups.begin(), c.control_groups.end()));
    cells.push_back(cell);
  }
  j["cells"] = cells;
  j["diagnostics"] = report.diagnostics;
  return j;
}

Json to_json(const InferenceResult& result) {
  Json j;
  j["scheme"] = result.scheme;
  j["estimate"] = number(result.estimate);
  if (result.se_jackknife || !result.replicates.empty()) {
    j["se_jackknife"] = optional_number(result.se_jackknife);
    j["ci_low"] = optional_number(result.ci_low);
    j["ci_high"] = optional_number(result.ci_high);
    Json reps = Json::array();
    for (std::size_t i = 0; i < result.replicates.size(); ++i) {
      reps.push_back({{"dropped_group", i < result.replicate_groups.size() ? result.replicate_groups[i] : ""},
                      {"estimate", number(result.replicates[i])}});
    }
    j["replicates"] = reps;
  }
  if (result.p_randomization) {
    j["p_randomization"] = number(*result.p_randomization);
    j["n_permutations"] = result.n_permutations;
    j["exhaustive"] = result.exhaustive;
  }
  j["diagnostics"] = result.diagnostics;
  return j;
}

Json to_json(const SelectionTrace& trace) {
  Json j;
  j["chosen"] = trace.chosen ? Json(to_string(*trace.chosen)) : Json(nullptr);
  j["verdict"] = trace.verdict;
  j["no_plausible_pretrends"] = !trace.chosen.has_value();
  Json steps = Json::array();
  for (const auto& s : trace.steps) {
    steps.push_back({{"form", to_string(s.form)},
                     {"statistic", number(s.statistic)},
                     {"df", s.df},
                     {"p_value", number(s.p_value)},
                     {"plausible", s.plausible},
                     {"verdict", s.verdict}});
  }
  j["steps"] = steps;
  j["warnings"] = trace.warnings;
  return j;
}

Json to_json(const McSummary& summary) {
  Json j;
  j["true_att"] = number(summary.true_att);
  j["reps"] = summary.reps;
  j["seed"] = summary.seed;
  Json ests = Json::array();
  for (const auto& e : summary.estimators) {
    Json row;
    row["estimator"] = e.name;
    row["mean"] = number(e.mean);
    row["mc_se"] = number(e.mc_se);
    row["sd"] = number(e.sd);
    row["abs_bias"] = number(e.abs_bias);
    row["replicates"] = e.replicates;
    row["failures"] = e.failures;
    row["failure_messages"] = e.failure_messages;
    Json values = Json::array();
    for (double v : e.values) values.push_back(number(v));
    row["values"] = values;
    ests.push_back(row);
  }
  j["estimators"] = ests;
  return j;
}

Json to_json(const std::vector<BiasRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    Json row;
    row["degree"] = to_string(r.degree);
    row["gap"] = r.gap;
    Json ests = Json::object();
    for (std::size_t i = 0; i < r.estimators.size(); ++i) {
      ests[r.estimators[i]] = {{"abs_bias", number(r.abs_bias[i])}, {"mc_se", number(r.mc_se[i])}};
    }
    row["estimators"] = ests;
    out.push_back(row);
  }
  return out;
}

std::string cells_csv(const EstimateReport& report) {
  std::ostringstream out;
  out << "group,time,theta,weight,n_treated,diff_treated,controls\n";
  for (const auto& c : report.cells) {
    std::string controls;
    for (const auto& g : c.control_groups) controls += (controls.empty() ? "" : ";") + g;
    out << csv_field(c.cell.group) << ',' << c.cell.time << ',' << format_double(c.theta) << ','
        << format_double(c.weight) << ',' << c.n_treated << ',' << format_double(c.diff_treated) << ','
        << csv_field(controls) << '\n';
  }
  return out.str();
}

std::string kde_csv(const EstimatorSummary& summary) {
  std::ostringstream out;
  out << "x,density\n";
  for (std::size_t i = 0; i < summary.kde_x.size(); ++i) {
    out << format_double(summary.kde_x[i]) << ',' << format_double(summary.kde_density[i]) << '\n';
  }
  return out.str();
}

std::string bias_table_csv(const std::vector<BiasRow>& rows) {
  std::ostringstream out;
  out << "degree,gap";
  if (!rows.empty()) {
    for (const auto& e : rows.front().estimators) out << ',' << csv_field(e) << ',' << csv_field(e + "_mc_se");
  }
  out << '\n';
  for (const auto& r : rows) {
    out << to_string(r.degree) << ',' << format_double(r.gap);
    for (std::size_t i = 0; i < r.estimators.size(); ++i) {
      out << ',' << format_double(r.abs_bias[i]) << ',' << format_double(r.mc_se[i]);
    }
    out << '\n';
  }
  return out.str();
}

std::string density_svg(const McSummary& summary) {
  std::vector<Series> series;
  for (const auto& e : summary.estimators) {
    Series s;
    s.name = e.name;
    for (std::size_t i = 0; i < e.kde_x.size(); ++i) s.points.emplace_back(e.kde_x[i], e.kde_density[i]);
    series.push_back(std::move(s));
  }
  ChartOptions opt;
  opt.title = "Monte Carlo densities of the overall ATT (" + std::to_string(summary.reps) + " replicates)";
  opt.x_label = "estimated ATT";
  opt.y_label = "density";
  opt.rules = {summary.true_att};
  return line_chart(series, opt);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
  if (!out) throw ValidationError("failed writing " + path);
}

}  // namespace didint
