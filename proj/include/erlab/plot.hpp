#pragma once

#include <string>
#include <vector>

namespace erlab {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Static line chart. Empty axis labels fall back to "x" and the first series name.
struct Figure {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  std::vector<Series> series;
};

/// SVG 1.1 text; identical figures give identical bytes. Non-finite points are
/// skipped. Throws ValidationError when there is no series or a series has no points.
std::string render_svg(const Figure& fig);
void emit_plot(const Figure& fig, const std::string& path);

}  // namespace erlab
