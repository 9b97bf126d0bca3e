#pragma once

#include "safeloop/ellipsoid.hpp"

#include <string>
#include <vector>

namespace safeloop::cli {

struct PlotEllipse {
  std::string label;
  Ellipsoid set;
};

struct PlotSpec {
  std::string title;
  std::string x_label = "x1";
  std::string y_label = "x2";
  std::vector<PlotEllipse> ellipses;  // drawn in order; the first is styled as the safe set
  int points = 720;                   // boundary samples per ellipse
};

/// Equal-aspect SVG with one closed polyline per ellipse, axes with ticks
/// and labels, and a legend. Identical input gives identical bytes.
std::string render_svg(const PlotSpec& spec);

}  // namespace safeloop::cli
