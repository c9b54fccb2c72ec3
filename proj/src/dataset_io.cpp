#include "didint/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace didint {
namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_record(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ValidationError("unterminated quote on line " + std::to_string(line_no));
  fields.push_back(was_quoted ? cur : trim(cur));
  return fields;
}

double parse_real(const std::string& text, const std::string& column, std::size_t line_no) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ValidationError("non-numeric value '" + text + "' in column '" + column + "' on line " +
                          std::to_string(line_no));
  }
  return value;
}

int parse_period(const std::string& text, const std::string& column, std::size_t line_no) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (!text.empty() && ec == std::errc() && ptr == text.data() + text.size()) return value;
  double real = 0.0;
  try {
    real = parse_real(text, column, line_no);
  } catch (const ValidationError&) {
    throw ValidationError("non-integer time label '" + text + "' in column '" + column +
                          "' on line " + std::to_string(line_no));
  }
  if (real != std::floor(real) || std::abs(real) > std::numeric_limits<int>::max()) {
    throw ValidationError("non-integer time label '" + text + "' in column '" + column +
                          "' on line " + std::to_string(line_no));
  }
  return static_cast<int>(real);
}

std::optional<int> parse_first_treated(const std::string& text, const std::string& column,
                                       std::size_t line_no) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower.empty() || lower == "never" || lower == "na" || lower == "inf" || lower == ".") {
    return std::nullopt;
  }
  return parse_period(text, column, line_no);
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                         const std::string& path) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ValidationError("missing column '" + name + "' in " + path);
  return static_cast<std::size_t>(it - header.begin());
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos && trim(s) == s) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::string pending;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!pending.empty()) {
      pending += "\n" + line;
    } else {
      pending = line;
    }
    if (std::count(pending.begin(), pending.end(), '"') % 2 == 1) continue;
    if (trim(pending).empty()) {
      pending.clear();
      continue;
    }
    rows.push_back(split_record(pending, line_no));
    pending.clear();
  }
  if (!pending.empty()) rows.push_back(split_record(pending, line_no));
  return rows;
}

TreatmentSchedule load_schedule_csv(const std::string& path) {
  auto rows = read_csv_rows(path);
  if (rows.empty()) throw ValidationError("empty schedule file " + path);
  const auto& header = rows.front();
  auto gcol = column_index(header, "group", path);
  auto tcol = column_index(header, "first_treated", path);
  std::map<std::string, std::optional<int>> entries;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw ValidationError("row " + std::to_string(r + 1) + " of " + path + " has " +
                            std::to_string(row.size()) + " fields, expected " +
                            std::to_string(header.size()));
    }
    auto first = parse_first_treated(row[tcol], "first_treated", r + 1);
    auto [it, inserted] = entries.emplace(row[gcol], first);
    if (!inserted && it->second != first) {
      throw ValidationError("conflicting schedule entries for group " + row[gcol]);
    }
  }
  return TreatmentSchedule(std::move(entries));
}

PanelDataset load_csv(const std::string& path, const CsvSchema& schema) {
  if (!schema.treatment && !schema.schedule_file) {
    throw ValidationError("no treatment column or schedule file given");
  }
  auto rows = read_csv_rows(path);
  if (rows.empty()) throw ValidationError("empty file " + path);
  if (rows.size() == 1) throw ValidationError("no data rows in " + path);
  const auto& header = rows.front();

  const auto gcol = column_index(header, schema.group, path);
  const auto tcol = column_index(header, schema.time, path);
  const auto ycol = column_index(header, schema.outcome, path);
  std::vector<std::size_t> xcols;
  for (const auto& name : schema.covariates) xcols.push_back(column_index(header, name, path));
  std::optional<std::size_t> dcol;
  if (schema.treatment) dcol = column_index(header, *schema.treatment, path);
  std::optional<std::size_t> ucol;
  if (schema.unit) ucol = column_index(header, *schema.unit, path);

  std::vector<Observation> observations;
  observations.reserve(rows.size() - 1);
  std::map<std::string, std::optional<int>> from_column;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t line_no = r + 1;
    if (row.size() != header.size()) {
      throw ValidationError("line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                            " fields, expected " + std::to_string(header.size()));
    }
    Observation obs;
    obs.group = row[gcol];
    if (obs.group.empty()) throw ValidationError("empty group label on line " + std::to_string(line_no));
    obs.time = parse_period(row[tcol], schema.time, line_no);
    obs.outcome = parse_real(row[ycol], schema.outcome, line_no);
    obs.covariates.reserve(xcols.size());
    for (std::size_t c = 0; c < xcols.size(); ++c) {
      obs.covariates.push_back(parse_real(row[xcols[c]], schema.covariates[c], line_no));
    }
    if (ucol) obs.unit_id = row[*ucol];
    if (dcol) {
      auto first = parse_first_treated(row[*dcol], *schema.treatment, line_no);
      auto [it, inserted] = from_column.emplace(obs.group, first);
      if (!inserted && it->second != first) {
        throw ValidationError("treatment year not constant within group " + obs.group);
      }
    }
    observations.push_back(std::move(obs));
  }

  TreatmentSchedule schedule;
  if (schema.schedule_file) {
    schedule = load_schedule_csv(*schema.schedule_file);
    if (dcol) {
      for (const auto& [group, first] : from_column) {
        if (schedule.first_treated(group) != first) {
          throw ValidationError("treatment column and schedule file disagree for group " + group);
        }
      }
    }
  } else {
    schedule = TreatmentSchedule(std::move(from_column));
  }
  return PanelDataset(std::move(observations), schema.covariates, std::move(schedule));
}

void write_csv(const PanelDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  const auto& obs = data.observations();
  const bool with_unit = std::all_of(obs.begin(), obs.end(), [](const auto& o) { return o.unit_id.has_value(); });
  if (with_unit) out << "unit,";
  out << "group,time,outcome";
  for (const auto& name : data.covariate_names()) out << ',' << quote_if_needed(name);
  out << ",first_treated\n";
  for (const auto& o : obs) {
    if (with_unit) out << quote_if_needed(*o.unit_id) << ',';
    out << quote_if_needed(o.group) << ',' << o.time << ',' << format_double(o.outcome);
    for (double x : o.covariates) out << ',' << format_double(x);
    auto first = data.schedule().first_treated(o.group);
    out << ',' << (first ? std::to_string(*first) : std::string("never")) << '\n';
  }
  if (!out) throw ValidationError("failed writing " + path);
}

void write_schedule_csv(const TreatmentSchedule& schedule, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << "group,first_treated\n";
  for (const auto& [group, first] : schedule.entries()) {
    out << quote_if_needed(group) << ',' << (first ? std::to_string(*first) : std::string("never")) << '\n';
  }
}

}  // namespace didint
