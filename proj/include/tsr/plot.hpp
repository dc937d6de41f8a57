#pragma once

// Self-contained SVG charts of tsr CSV tables: one panel for the
// coincidence-like columns, one for the per-detector columns. Columns with a
// matching "sigma_<name>" column get error bars.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "tsr/errors.hpp"
#include "tsr/io.hpp"

namespace tsr::plot {

struct Series {
  std::string name;
  std::vector<double> y;
  std::vector<double> sigma;  // empty: no error bars
};

struct Panel {
  std::string title;
  std::vector<Series> series;
};

inline bool is_detector_column(const std::string& c) {
  auto numbered = [&](std::string_view prefix) {
    if (c.size() <= prefix.size() || c.compare(0, prefix.size(), prefix) != 0) return false;
    return std::all_of(c.begin() + static_cast<std::ptrdiff_t>(prefix.size()), c.end(),
                       [](char ch) { return ch >= '0' && ch <= '9'; });
  };
  return numbered("s") || numbered("p") || numbered("overlay_s");
}

/// Splits a table into panels by column role.
inline std::vector<Panel> panels_for(const io::Table& t) {
  if (t.find("phi_rad") < 0) throw ConfigError("plot: table has no phi_rad column");
  Panel top{"coincidences", {}}, bottom{"singles", {}};
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    const auto& c = t.columns[i];
    if (c == "phi_rad" || c.rfind("sigma_", 0) == 0 || c == "abs_diff") continue;
    Series s{c, t.column(i), {}};
    if (const auto si = t.find("sigma_" + c); si >= 0) s.sigma = t.column(static_cast<std::size_t>(si));
    (is_detector_column(c) ? bottom : top).series.push_back(std::move(s));
  }
  std::vector<Panel> out;
  if (!top.series.empty()) out.push_back(std::move(top));
  if (!bottom.series.empty()) out.push_back(std::move(bottom));
  return out;
}

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

inline std::string render_svg(const io::Table& t, const std::string& title = {}) {
  if (t.rows.empty()) throw ConfigError("plot: table has no data rows");
  const auto x = t.column(t.require("phi_rad"));
  const auto panels = panels_for(t);
  if (panels.empty()) throw ConfigError("plot: nothing to plot");

  constexpr double width = 720, panel_h = 260, left = 70, right = 150, top_margin = 40, gap = 50;
  const double plot_w = width - left - right;
  const double height = top_margin + panels.size() * (panel_h + gap);
  double xmin = *std::min_element(x.begin(), x.end()), xmax = *std::max_element(x.begin(), x.end());
  if (xmax == xmin) xmax = xmin + 1.0;
  constexpr double deg = 180.0 / 3.14159265358979323846;

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
       "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt(width / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
       escape(title.empty() ? t.kind : title) + "</text>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    const double y0 = top_margin + p * (panel_h + gap);
    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (const auto& ser : panel.series)
      for (std::size_t i = 0; i < ser.y.size(); ++i) {
        const double e = ser.sigma.empty() ? 0.0 : ser.sigma[i];
        ymin = std::min(ymin, ser.y[i] - e);
        ymax = std::max(ymax, ser.y[i] + e);
      }
    ymin = std::min(ymin, 0.0);
    if (ymax <= ymin) ymax = ymin + 1.0;
    const double pad = 0.05 * (ymax - ymin);
    ymax += pad;
    auto px = [&](double v) { return left + (v - xmin) / (xmax - xmin) * plot_w; };
    auto py = [&](double v) { return y0 + panel_h - (v - ymin) / (ymax - ymin) * panel_h; };

    s += "<g class=\"panel\" id=\"panel-" + std::to_string(p + 1) + "\">\n";
    s += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(plot_w) + "\" height=\"" +
         fmt(panel_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fmt(left) + "\" y=\"" + fmt(y0 - 6) + "\">" + escape(panel.title) + "</text>\n";
    for (int k = 0; k <= 4; ++k) {
      const double xv = xmin + (xmax - xmin) * k / 4.0, yv = ymin + (ymax - ymin) * k / 4.0;
      s += "<text x=\"" + fmt(px(xv)) + "\" y=\"" + fmt(y0 + panel_h + 14) + "\" text-anchor=\"middle\">" +
           fmt(xv * deg) + "</text>\n";
      char lab[32];
      std::snprintf(lab, sizeof lab, "%.3g", yv);
      s += "<text x=\"" + fmt(left - 4) + "\" y=\"" + fmt(py(yv) + 4) + "\" text-anchor=\"end\">" + lab +
           "</text>\n";
    }
    s += "<text x=\"" + fmt(left + plot_w / 2) + "\" y=\"" + fmt(y0 + panel_h + 30) +
         "\" text-anchor=\"middle\">phase (deg)</text>\n";

    for (std::size_t k = 0; k < panel.series.size(); ++k) {
      const auto& ser = panel.series[k];
      const char* color = kPalette[k % std::size(kPalette)];
      s += "<g class=\"series\" id=\"series-" + escape(ser.name) + "\" stroke=\"" + color + "\" fill=\"" + color +
           "\">\n<polyline fill=\"none\" stroke-width=\"1.2\" points=\"";
      for (std::size_t i = 0; i < x.size(); ++i) s += (i ? " " : "") + fmt(px(x[i])) + "," + fmt(py(ser.y[i]));
      s += "\"/>\n";
      if (!ser.sigma.empty()) {
        s += "<g class=\"errorbars\">";
        for (std::size_t i = 0; i < x.size(); ++i) {
          s += "<line x1=\"" + fmt(px(x[i])) + "\" x2=\"" + fmt(px(x[i])) + "\" y1=\"" +
               fmt(py(ser.y[i] - ser.sigma[i])) + "\" y2=\"" + fmt(py(ser.y[i] + ser.sigma[i])) + "\"/>";
          s += "<circle cx=\"" + fmt(px(x[i])) + "\" cy=\"" + fmt(py(ser.y[i])) + "\" r=\"1.8\"/>";
        }
        s += "</g>\n";
      }
      s += "</g>\n";
      const double ly = y0 + 12 + 14 * static_cast<double>(k);
      s += "<text x=\"" + fmt(left + plot_w + 10) + "\" y=\"" + fmt(ly) + "\" fill=\"" + color + "\">" +
           escape(ser.name) + "</text>\n";
    }
    s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace tsr::plot
