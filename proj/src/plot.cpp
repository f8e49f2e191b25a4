#include "flipguard/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "flipguard/error.hpp"

namespace flipguard {

namespace {

std::string fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// "Nice" upper bound for the y axis: 1, 2, 2.5 or 5 times a power of ten.
double nice_ceiling(double v) {
  if (v <= 0.0) return 1.0;
  const double base = std::pow(10.0, std::floor(std::log10(v)));
  for (double step : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (step * base >= v) return step * base;
  }
  return 10.0 * base;
}

const char* series_colour(const Condition& c, std::size_t variant) {
  static const char* kPalette[] = {"#1f77b4", "#2ca02c", "#9467bd", "#8c564b",
                                   "#e377c2", "#17becf", "#bcbd22", "#ff7f0e"};
  switch (c.kind) {
    case ConditionKind::kClean: return "#7f7f7f";
    case ConditionKind::kUndefended: return "#d62728";
    case ConditionKind::kDefended:
      return c.swept == SweepParameter::kNone ? "#1f77b4" : kPalette[variant % 8];
  }
  return "#000000";
}

}  // namespace

std::string render_error_plot(const std::vector<SummaryRow>& summary, const PlotOptions& options) {
  if (summary.empty()) throw DataError("plot: no data");

  std::set<std::string> datasets;
  for (const auto& s : summary) datasets.insert(s.dataset);
  const bool label_dataset = datasets.size() > 1;

  // Series in summary order, which aggregate() already sorts.
  std::vector<std::pair<std::string, std::vector<const SummaryRow*>>> series;
  std::map<std::string, std::size_t> index;
  for (const auto& s : summary) {
    const std::string key = (label_dataset ? s.dataset + " " : "") + s.condition.name();
    auto [it, inserted] = index.emplace(key, series.size());
    if (inserted) series.push_back({key, {}});
    series[it->second].second.push_back(&s);
  }

  double x_max = 0.0;
  double y_max = 0.0;
  for (const auto& s : summary) {
    x_max = std::max(x_max, s.fraction * 100.0);
    y_max = std::max(y_max, s.mean_error);
  }
  if (x_max <= 0.0) x_max = 1.0;
  y_max = nice_ceiling(y_max * 1.05);

  const double left = 70, right = 170, top = 40, bottom = 55;
  const double plot_w = options.width - left - right;
  const double plot_h = options.height - top - bottom;
  auto sx = [&](double pct) { return left + pct / x_max * plot_w; };
  auto sy = [&](double err) { return top + plot_h - err / y_max * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(options.width) +
         "\" height=\"" + std::to_string(options.height) + "\" viewBox=\"0 0 " +
         std::to_string(options.width) + " " + std::to_string(options.height) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    svg += "<text x=\"" + fixed(left + plot_w / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
           escape_xml(options.title) + "</text>\n";
  }

  // Axes and ticks.
  svg += "<g stroke=\"#333\" stroke-width=\"1\">\n";
  svg += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(top + plot_h) + "\" x2=\"" +
         fixed(left + plot_w) + "\" y2=\"" + fixed(top + plot_h) + "\"/>\n";
  svg += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(left) +
         "\" y2=\"" + fixed(top + plot_h) + "\"/>\n";
  constexpr int kTicks = 5;
  for (int t = 0; t <= kTicks; ++t) {
    const double x = sx(x_max * t / kTicks);
    const double y = sy(y_max * t / kTicks);
    svg += "<line x1=\"" + fixed(x) + "\" y1=\"" + fixed(top + plot_h) + "\" x2=\"" + fixed(x) +
           "\" y2=\"" + fixed(top + plot_h + 5) + "\"/>\n";
    svg += "<line x1=\"" + fixed(left - 5) + "\" y1=\"" + fixed(y) + "\" x2=\"" + fixed(left) +
           "\" y2=\"" + fixed(y) + "\"/>\n";
  }
  svg += "</g>\n";
  for (int t = 0; t <= kTicks; ++t) {
    svg += "<text x=\"" + fixed(sx(x_max * t / kTicks)) + "\" y=\"" + fixed(top + plot_h + 18) +
           "\" text-anchor=\"middle\">" + fixed(x_max * t / kTicks, 1) + "</text>\n";
    svg += "<text x=\"" + fixed(left - 8) + "\" y=\"" + fixed(sy(y_max * t / kTicks) + 4) +
           "\" text-anchor=\"end\">" + fixed(y_max * t / kTicks, 3) + "</text>\n";
  }
  svg += "<text x=\"" + fixed(left + plot_w / 2) + "\" y=\"" + fixed(options.height - 12.0) +
         "\" text-anchor=\"middle\">Poisoning points (%)</text>\n";
  svg += "<text transform=\"translate(18 " + fixed(top + plot_h / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">Average test classification error</text>\n";

  // Series and legend.
  std::size_t variant = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& [name, points] = series[i];
    const auto& cond = points.front()->condition;
    const char* colour = series_colour(cond, cond.swept == SweepParameter::kNone ? 0 : variant++);
    const bool dashed = cond.kind == ConditionKind::kClean;
    std::string coords;
    for (const auto* p : points) {
      if (!coords.empty()) coords += ' ';
      coords += fixed(sx(p->fraction * 100.0)) + "," + fixed(sy(p->mean_error));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"2\"" +
           (dashed ? " stroke-dasharray=\"6 4\"" : "") + " points=\"" + coords + "\"/>\n";
    for (const auto* p : points) {
      svg += "<circle cx=\"" + fixed(sx(p->fraction * 100.0)) + "\" cy=\"" +
             fixed(sy(p->mean_error)) + "\" r=\"3\" fill=\"" + colour + "\"/>\n";
    }
    const double ly = top + 10 + 18.0 * static_cast<double>(i);
    const double lx = left + plot_w + 15;
    svg += "<line x1=\"" + fixed(lx) + "\" y1=\"" + fixed(ly) + "\" x2=\"" + fixed(lx + 20) +
           "\" y2=\"" + fixed(ly) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"" +
           (dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
    svg += "<text x=\"" + fixed(lx + 26) + "\" y=\"" + fixed(ly + 4) + "\">" + escape_xml(name) +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace flipguard
