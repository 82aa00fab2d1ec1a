#include "smm/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace smm {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

// Fixed two-decimal coordinates keep the output byte-stable.
std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string escape_xml(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, y0, x1, y1;  // plot rectangle in SVG coordinates (y0 = top)
  double xmin, xmax, ymin, ymax;

  double px(double x) const {
    const double span = xmax > xmin ? xmax - xmin : 1.0;
    return x0 + (x - xmin) / span * (x1 - x0);
  }
  double py(double y) const {
    const double span = ymax > ymin ? ymax - ymin : 1.0;
    return y1 - (y - ymin) / span * (y1 - y0);
  }
};

void append_axes(std::string& svg, const Frame& f, const std::string& x_label,
                 const std::string& y_label, int x_ticks, int y_ticks, double font) {
  svg += "<line x1=\"" + coord(f.x0) + "\" y1=\"" + coord(f.y1) + "\" x2=\"" + coord(f.x1) +
         "\" y2=\"" + coord(f.y1) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + coord(f.x0) + "\" y1=\"" + coord(f.y0) + "\" x2=\"" + coord(f.x0) +
         "\" y2=\"" + coord(f.y1) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= x_ticks; ++i) {
    const double xv = f.xmin + (f.xmax - f.xmin) * i / x_ticks;
    const double x = f.px(xv);
    svg += "<line x1=\"" + coord(x) + "\" y1=\"" + coord(f.y1) + "\" x2=\"" + coord(x) +
           "\" y2=\"" + coord(f.y1 + 4) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + coord(x) + "\" y=\"" + coord(f.y1 + 6 + font) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"" + tick_text(font) +
           "\" fill=\"#333333\">" + escape_xml(tick_text(xv)) + "</text>\n";
  }
  for (int i = 0; i <= y_ticks; ++i) {
    const double yv = f.ymin + (f.ymax - f.ymin) * i / y_ticks;
    const double y = f.py(yv);
    svg += "<line x1=\"" + coord(f.x0 - 4) + "\" y1=\"" + coord(y) + "\" x2=\"" + coord(f.x0) +
           "\" y2=\"" + coord(y) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + coord(f.x0) + "\" y1=\"" + coord(y) + "\" x2=\"" + coord(f.x1) +
           "\" y2=\"" + coord(y) + "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
    svg += "<text x=\"" + coord(f.x0 - 8) + "\" y=\"" + coord(y + font * 0.35) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"" + tick_text(font) +
           "\" fill=\"#333333\">" + escape_xml(tick_text(yv)) + "</text>\n";
  }
  if (!x_label.empty()) {
    svg += "<text x=\"" + coord((f.x0 + f.x1) / 2) + "\" y=\"" + coord(f.y1 + 14 + 2 * font) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"" + tick_text(font) +
           "\" fill=\"#333333\">" + escape_xml(x_label) + "</text>\n";
  }
  if (!y_label.empty()) {
    const double x = f.x0 - 40;
    const double y = (f.y0 + f.y1) / 2;
    svg += "<text x=\"" + coord(x) + "\" y=\"" + coord(y) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"" + tick_text(font) +
           "\" fill=\"#333333\" transform=\"rotate(-90 " + coord(x) + " " + coord(y) + ")\">" +
           escape_xml(y_label) + "</text>\n";
  }
}

std::string polyline_points(const ChartSeries& s, const Frame& f) {
  std::string pts;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (std::isnan(s.y[i]) || std::isnan(s.x[i])) {
      continue;
    }
    if (!pts.empty()) {
      pts += ' ';
    }
    pts += coord(f.px(s.x[i])) + "," + coord(f.py(std::clamp(s.y[i], f.ymin, f.ymax)));
  }
  return pts;
}

}  // namespace

std::string render_line_chart(const std::vector<ChartSeries>& series, const ChartOptions& opt) {
  if (series.empty()) {
    throw InputError("render_line_chart needs at least one series");
  }
  double xmin = 0.0, xmax = 1.0;
  bool have_x = false;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) {
      throw InputError("series \"" + s.label + "\" has mismatched x/y lengths");
    }
    if (s.x.size() < 2) {
      throw InputError("series \"" + s.label + "\" needs at least two points");
    }
    for (double x : s.x) {
      if (std::isnan(x)) {
        continue;
      }
      xmin = have_x ? std::min(xmin, x) : x;
      xmax = have_x ? std::max(xmax, x) : x;
      have_x = true;
    }
  }

  Frame f;
  f.x0 = 64;
  f.y0 = 40;
  f.x1 = opt.width - 24;
  f.y1 = opt.height - 56;
  f.xmin = xmin;
  f.xmax = xmax;
  f.ymin = opt.y_min;
  f.ymax = opt.y_max;

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opt.width) +
         "\" height=\"" + std::to_string(opt.height) + "\" viewBox=\"0 0 " +
         std::to_string(opt.width) + " " + std::to_string(opt.height) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(opt.width) + "\" height=\"" +
         std::to_string(opt.height) + "\" fill=\"#ffffff\"/>\n";
  if (!opt.title.empty()) {
    svg += "<text x=\"" + coord((f.x0 + f.x1) / 2) +
           "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\" "
           "fill=\"#111111\">" +
           escape_xml(opt.title) + "</text>\n";
  }
  append_axes(svg, f, opt.x_label, opt.y_label, 5, 4, 12);

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % kPaletteSize];
    svg += "<polyline fill=\"none\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"1.5\" points=\"" + polyline_points(series[i], f) + "\"/>\n";
  }

  // Legend, top-right of the plot area.
  double ly = f.y0 + 10;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % kPaletteSize];
    const double lx = f.x1 - 170;
    svg += "<line x1=\"" + coord(lx) + "\" y1=\"" + coord(ly) + "\" x2=\"" + coord(lx + 24) +
           "\" y2=\"" + coord(ly) + "\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + coord(lx + 30) + "\" y=\"" + coord(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\">" +
           escape_xml(series[i].label) + "</text>\n";
    ly += 18;
  }

  svg += "</svg>\n";
  return svg;
}

std::string render_distribution_quarters(const std::vector<SnapshotRow>& snapshots,
                                         long long total_steps, const std::string& title) {
  if (snapshots.size() < 4) {
    throw InputError("render_distribution_quarters needs at least 4 snapshots, got " +
                     std::to_string(snapshots.size()));
  }
  const int width = 1000;
  const int height = 720;
  const double panel_w = 440;
  const double panel_h = 280;

  // Quarters partition the run's step range, not the snapshot list.
  std::vector<std::vector<const SnapshotRow*>> quarters(4);
  for (const auto& snap : snapshots) {
    const long long q =
        std::clamp<long long>(snap.step * 4 / std::max<long long>(total_steps, 1), 0, 3);
    quarters[static_cast<std::size_t>(q)].push_back(&snap);
  }

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) +
         " " + std::to_string(height) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" fill=\"#ffffff\"/>\n";
  svg +=
      "<text x=\"500\" y=\"26\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      "font-size=\"16\" fill=\"#111111\">" +
      escape_xml(title) + "</text>\n";

  for (int q = 0; q < 4; ++q) {
    const double ox = 48 + (q % 2) * (panel_w + 60);
    const double oy = 56 + (q / 2) * (panel_h + 60);
    Frame f;
    f.x0 = ox;
    f.y0 = oy;
    f.x1 = ox + panel_w;
    f.y1 = oy + panel_h;
    f.xmin = 1;
    f.xmax = kNumTokens;
    f.ymin = 0;
    f.ymax = 1;

    const long long lo = total_steps * q / 4;
    const long long hi = total_steps * (q + 1) / 4;
    svg += "<text x=\"" + coord(ox + panel_w / 2) + "\" y=\"" + coord(oy - 8) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "fill=\"#111111\">Quarter " +
           std::to_string(q + 1) + " (steps " + std::to_string(lo) + "-" + std::to_string(hi) +
           ")</text>\n";
    append_axes(svg, f, "answer", q % 2 == 0 ? "probability" : "", 9, 4, 10);

    const auto& group = quarters[static_cast<std::size_t>(q)];
    for (std::size_t i = 0; i < group.size(); ++i) {
      // Later snapshots within a quarter draw darker.
      const double opacity = group.size() > 1
                                 ? 0.25 + 0.75 * static_cast<double>(i) /
                                              static_cast<double>(group.size() - 1)
                                 : 1.0;
      std::string pts;
      for (int token = 1; token <= kNumTokens; ++token) {
        if (!pts.empty()) {
          pts += ' ';
        }
        pts += coord(f.px(token)) + "," + coord(f.py(group[i]->dist.prob_of(token)));
      }
      svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-opacity=\"" + coord(opacity) +
             "\" stroke-width=\"1.2\" points=\"" + pts + "\"/>\n";
    }
  }

  svg += "</svg>\n";
  return svg;
}

void write_svg(const std::string& svg, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open SVG output: " + path.string());
  }
  out << svg;
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

}  // namespace smm
