#pragma once

#include <string>
#include <vector>

#include "flipguard/experiments.hpp"

namespace flipguard {

struct PlotOptions {
  std::string title;
  int width = 640;
  int height = 420;
};

/// Static SVG line chart of mean test error against poison percentage, one
/// <polyline> per (dataset, condition) series. Undefended is drawn red and
/// defended blue; the clean baseline is a dashed grey line.
std::string render_error_plot(const std::vector<SummaryRow>& summary, const PlotOptions& options = {});

}  // namespace flipguard
