#include "didint/dgp_config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "didint/dataset_io.hpp"

namespace didint {
namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& text, const std::string& key) {
  double v = 0.0;
  const auto t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ValidationError("config: '" + key + "' expects a number, got '" + text + "'");
  }
  return v;
}

long to_int(const std::string& text, const std::string& key) {
  long v = 0;
  const auto t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ValidationError("config: '" + key + "' expects an integer, got '" + text + "'");
  }
  return v;
}

std::vector<int> parse_periods(const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split(text)) {
    const auto dots = item.find("..");
    if (dots != std::string::npos) {
      const long lo = to_int(item.substr(0, dots), "design.periods");
      const long hi = to_int(item.substr(dots + 2), "design.periods");
      for (long p = lo; p <= hi; ++p) out.push_back(static_cast<int>(p));
    } else {
      out.push_back(static_cast<int>(to_int(item, "design.periods")));
    }
  }
  return out;
}

std::map<std::string, double> parse_map(const std::string& text, const std::string& key) {
  std::map<std::string, double> out;
  for (const auto& item : split(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ValidationError("config: '" + key + "' entries must be group:value");
    out[trim(item.substr(0, colon))] = to_double(item.substr(colon + 1), key);
  }
  return out;
}

const pt::ptree& section(const pt::ptree& tree, const std::string& name) {
  const auto it = tree.find(name);
  if (it == tree.not_found()) throw ValidationError("config: missing section [" + name + "]");
  return it->second;
}

std::optional<std::string> lookup(const pt::ptree& sec, const std::string& key) {
  const auto it = sec.find(key);
  if (it == sec.not_found()) return std::nullopt;
  return it->second.data();
}

std::string required(const pt::ptree& sec, const std::string& sec_name, const std::string& key) {
  const auto v = lookup(sec, key);
  if (!v) throw ValidationError("config: missing key '" + key + "' in [" + sec_name + "]");
  return *v;
}

void reject_unknown(const pt::ptree& sec, const std::string& sec_name, const std::set<std::string>& known) {
  for (const auto& [key, value] : sec) {
    if (!known.count(key)) throw ValidationError("config: unknown key '" + key + "' in [" + sec_name + "]");
  }
}

std::string law_name(LawKind k) {
  switch (k) {
    case LawKind::Bernoulli: return "bernoulli";
    case LawKind::Normal: return "normal";
    case LawKind::Uniform: return "uniform";
  }
  return "normal";
}

template <typename Range, typename F>
std::string join(const Range& items, F&& f) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ", ";
    out += f(item);
  }
  return out;
}

}  // namespace

DgpSpec parse_dgp_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError("config: line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [name, sec] : tree) {
    if (sec.empty() && !sec.data().empty()) throw ValidationError("config: key '" + name + "' outside any section");
    if (name != "design" && name != "schedule" && name != "baseline" && name.rfind("covariate:", 0) != 0 &&
        name.rfind("gamma:", 0) != 0) {
      throw ValidationError("config: unknown section [" + name + "]");
    }
  }

  DgpSpec spec;
  const auto& design = section(tree, "design");
  reject_unknown(design, "design", {"groups", "periods", "covariates", "cell_n", "noise_sd", "y_init_sd", "true_att"});
  spec.groups = split(required(design, "design", "groups"));
  spec.periods = parse_periods(required(design, "design", "periods"));
  spec.covariate_names = split(lookup(design, "covariates").value_or(""));
  if (auto v = lookup(design, "cell_n")) {
    const long n = to_int(*v, "design.cell_n");
    if (n < 1) throw ValidationError("config: design.cell_n must be >= 1");
    spec.cell_n = static_cast<std::size_t>(n);
  }
  if (auto v = lookup(design, "noise_sd")) spec.noise_sd = to_double(*v, "design.noise_sd");
  if (auto v = lookup(design, "y_init_sd")) spec.y_init_sd = to_double(*v, "design.y_init_sd");
  if (auto v = lookup(design, "true_att")) spec.true_att = to_double(*v, "design.true_att");

  const std::set<std::string> known_groups(spec.groups.begin(), spec.groups.end());
  auto check_group = [&](const std::string& g, const std::string& where) {
    if (!known_groups.count(g)) throw ValidationError("config: unknown group '" + g + "' in [" + where + "]");
  };

  std::map<std::string, std::optional<int>> schedule;
  for (const auto& g : spec.groups) schedule[g] = std::nullopt;
  for (const auto& [g, node] : section(tree, "schedule")) {
    check_group(g, "schedule");
    const auto v = trim(node.data());
    schedule[g] = v == "never" ? std::nullopt : std::optional<int>(static_cast<int>(to_int(v, "schedule." + g)));
  }
  spec.schedule = TreatmentSchedule(schedule);

  const auto& baseline = section(tree, "baseline");
  for (const auto& [g, node] : baseline) check_group(g, "baseline");
  for (const auto& g : spec.groups) {
    const auto parts = split(required(baseline, "baseline", g));
    if (parts.empty() || parts.size() > 2) throw ValidationError("config: baseline." + g + " expects 'mean' or 'mean, trend'");
    GroupBaseline b;
    b.y_init_mean = to_double(parts[0], "baseline." + g);
    if (parts.size() == 2) b.trend = to_double(parts[1], "baseline." + g);
    spec.baseline.push_back(b);
  }

  for (const auto& name : spec.covariate_names) {
    const std::string cov_name = "covariate:" + name;
    const auto& cov = section(tree, cov_name);
    reject_unknown(cov, cov_name, {"law", "a", "b", "shift", "drift"});
    CovariateLaw law;
    const auto kind = required(cov, cov_name, "law");
    if (kind == "bernoulli") {
      law.kind = LawKind::Bernoulli;
    } else if (kind == "normal") {
      law.kind = LawKind::Normal;
    } else if (kind == "uniform") {
      law.kind = LawKind::Uniform;
    } else {
      throw ValidationError("config: " + cov_name + ".law must be bernoulli, normal or uniform");
    }
    law.a = to_double(required(cov, cov_name, "a"), cov_name + ".a");
    if (law.kind != LawKind::Bernoulli) law.b = to_double(required(cov, cov_name, "b"), cov_name + ".b");
    law.group_shift = parse_map(lookup(cov, "shift").value_or(""), cov_name + ".shift");
    law.group_drift = parse_map(lookup(cov, "drift").value_or(""), cov_name + ".drift");
    for (const auto& [g, v] : law.group_shift) check_group(g, cov_name);
    for (const auto& [g, v] : law.group_drift) check_group(g, cov_name);
    spec.laws.push_back(law);

    const std::string gamma_name = "gamma:" + name;
    const auto& gsec = section(tree, gamma_name);
    GammaGrid grid;
    grid.pattern = parse_form(lookup(gsec, "pattern").value_or("homogeneous"));
    if (auto v = lookup(gsec, "value")) {
      grid.values.assign(spec.groups.size(), std::vector<double>(spec.periods.size(), to_double(*v, gamma_name + ".value")));
      reject_unknown(gsec, gamma_name, {"pattern", "value"});
    } else {
      for (const auto& [g, node] : gsec) {
        if (g != "pattern") check_group(g, gamma_name);
      }
      for (const auto& g : spec.groups) {
        std::vector<double> row;
        for (const auto& item : split(required(gsec, gamma_name, g))) row.push_back(to_double(item, gamma_name + "." + g));
        if (row.size() != spec.periods.size()) {
          throw ValidationError("config: " + gamma_name + "." + g + " needs one value per period (" +
                                std::to_string(spec.periods.size()) + ")");
        }
        grid.values.push_back(std::move(row));
      }
    }
    spec.gamma.push_back(std::move(grid));
  }
  for (const auto& [name, sec] : tree) {
    const auto colon = name.find(':');
    if (colon == std::string::npos) continue;
    const auto cov = name.substr(colon + 1);
    if (std::find(spec.covariate_names.begin(), spec.covariate_names.end(), cov) == spec.covariate_names.end()) {
      throw ValidationError("config: section [" + name + "] names an undeclared covariate");
    }
  }
  spec.validate();
  return spec;
}

DgpSpec load_dgp_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dgp_config(ss.str());
}

std::string format_dgp_config(const DgpSpec& spec) {
  std::ostringstream out;
  out << "[design]\n";
  out << "groups = " << join(spec.groups, [](const std::string& g) { return g; }) << "\n";
  out << "periods = " << join(spec.periods, [](int p) { return std::to_string(p); }) << "\n";
  out << "covariates = " << join(spec.covariate_names, [](const std::string& c) { return c; }) << "\n";
  out << "cell_n = " << spec.cell_n << "\n";
  out << "noise_sd = " << format_double(spec.noise_sd) << "\n";
  out << "y_init_sd = " << format_double(spec.y_init_sd) << "\n";
  out << "true_att = " << format_double(spec.true_att) << "\n";

  out << "\n[schedule]\n";
  for (const auto& g : spec.groups) {
    const auto first = spec.schedule.first_treated(g);
    out << g << " = " << (first ? std::to_string(*first) : "never") << "\n";
  }
  out << "\n[baseline]\n";
  for (std::size_t s = 0; s < spec.groups.size(); ++s) {
    out << spec.groups[s] << " = " << format_double(spec.baseline[s].y_init_mean) << ", "
        << format_double(spec.baseline[s].trend) << "\n";
  }
  auto pairs = [](const std::map<std::string, double>& m) {
    return join(m, [](const auto& kv) { return kv.first + ":" + format_double(kv.second); });
  };
  for (std::size_t c = 0; c < spec.covariate_names.size(); ++c) {
    const auto& law = spec.laws[c];
    out << "\n[covariate:" << spec.covariate_names[c] << "]\n";
    out << "law = " << law_name(law.kind) << "\n";
    out << "a = " << format_double(law.a) << "\n";
    if (law.kind != LawKind::Bernoulli) out << "b = " << format_double(law.b) << "\n";
    if (!law.group_shift.empty()) out << "shift = " << pairs(law.group_shift) << "\n";
    if (!law.group_drift.empty()) out << "drift = " << pairs(law.group_drift) << "\n";

    const auto& grid = spec.gamma[c];
    out << "\n[gamma:" << spec.covariate_names[c] << "]\n";
    out << "pattern = " << to_string(grid.pattern) << "\n";
    for (std::size_t s = 0; s < spec.groups.size(); ++s) {
      out << spec.groups[s] << " = " << join(grid.values[s], [](double v) { return format_double(v); }) << "\n";
    }
  }
  return out.str();
}

void save_dgp_config(const DgpSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << format_dgp_config(spec);
}

}  // namespace didint
