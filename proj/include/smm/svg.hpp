#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "smm/telemetry.hpp"

namespace smm {

// One chart series; NaN y-values are gaps (the point is skipped, the series
// still renders as a single polyline).
struct ChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  double y_min = 0.0;
  double y_max = 1.0;  // rate charts pin the y-axis to [0,1]
  int width = 960;
  int height = 540;
};

// Standalone SVG document: inline styling only, axes, tick labels, legend,
// exactly one polyline per series. Throws InputError on empty input.
std::string render_line_chart(const std::vector<ChartSeries>& series, const ChartOptions& options);

// Four-panel overlay of per-answer distributions, one panel per quarter of
// the run's step range. Requires at least 4 snapshots.
std::string render_distribution_quarters(const std::vector<SnapshotRow>& snapshots,
                                         long long total_steps, const std::string& title);

void write_svg(const std::string& svg, const std::filesystem::path& path);

}  // namespace smm
