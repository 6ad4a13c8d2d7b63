#pragma once

#include <string>
#include <vector>

#include "ddimlab/tensor.hpp"

namespace ddimlab {

/// Minimal SVG 1.1 emitter over a data-space viewport (y up). Primitives
/// only; no plotting dependency.
class SvgCanvas {
 public:
  SvgCanvas(double xmin, double xmax, double ymin, double ymax, int px_width = 640, int px_height = 640,
            bool timestamp = false);

  void circle(double x, double y, double radius_px, const std::string& color, double opacity = 1.0);
  void line(double x1, double y1, double x2, double y2, const std::string& color, double width_px = 1.0,
            double opacity = 1.0);
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color, double width_px = 1.5);
  /// Axis-aligned cell in data coordinates, for heatmaps.
  void cell(double x, double y, double w, double h, const std::string& color);
  void text(double x, double y, const std::string& s, int font_px = 12, const std::string& color = "black");

  void scatter(const Tensor& pts, double radius_px, const std::string& color, double opacity = 1.0);

  void save(const std::string& path) const;
  std::string str() const;

 private:
  double sx(double x) const;
  double sy(double y) const;
  double xmin_, xmax_, ymin_, ymax_;
  int w_, h_;
  bool timestamp_;
  std::string body_;
};

/// color ramp for heatmaps: 0 maps to white, 1 to a deep blue.
std::string heat_color(double v);

}  // namespace ddimlab
