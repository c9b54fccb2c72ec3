#pragma once

#include <string>
#include <utility>
#include <vector>

namespace didint {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 720;
  int height = 440;
  // Dashed vertical rules at these x positions.
  std::vector<double> rules;
};

// Static SVG line chart: one polyline per series, axes with ticks and a legend.
std::string line_chart(const std::vector<Series>& series, const ChartOptions& options);

std::string xml_escape(const std::string& text);

}  // namespace didint
