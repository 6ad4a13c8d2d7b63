#include "ddimlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ddimlab {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << std::fixed << x;
  return os.str();
}

}  // namespace

SvgCanvas::SvgCanvas(double xmin, double xmax, double ymin, double ymax, int px_width, int px_height, bool timestamp)
    : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax), w_(px_width), h_(px_height), timestamp_(timestamp) {
  if (!(xmax > xmin && ymax > ymin)) throw std::invalid_argument("SvgCanvas: degenerate viewport");
}

double SvgCanvas::sx(double x) const { return (x - xmin_) / (xmax_ - xmin_) * w_; }
double SvgCanvas::sy(double y) const { return h_ - (y - ymin_) / (ymax_ - ymin_) * h_; }

void SvgCanvas::circle(double x, double y, double radius_px, const std::string& color, double opacity) {
  std::ostringstream os;
  os << "<circle cx=\"" << fmt(sx(x)) << "\" cy=\"" << fmt(sy(y)) << "\" r=\"" << fmt(radius_px) << "\" fill=\""
     << color << "\"";
  if (opacity < 1.0) os << " fill-opacity=\"" << fmt(opacity) << "\"";
  os << "/>\n";
  body_ += os.str();
}

void SvgCanvas::line(double x1, double y1, double x2, double y2, const std::string& color, double width_px,
                     double opacity) {
  std::ostringstream os;
  os << "<line x1=\"" << fmt(sx(x1)) << "\" y1=\"" << fmt(sy(y1)) << "\" x2=\"" << fmt(sx(x2)) << "\" y2=\""
     << fmt(sy(y2)) << "\" stroke=\"" << color << "\" stroke-width=\"" << fmt(width_px) << "\"";
  if (opacity < 1.0) os << " stroke-opacity=\"" << fmt(opacity) << "\"";
  os << "/>\n";
  body_ += os.str();
}

void SvgCanvas::polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                         double width_px) {
  std::ostringstream os;
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << fmt(width_px) << "\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    os << (i ? " " : "") << fmt(sx(pts[i].first)) << "," << fmt(sy(pts[i].second));
  }
  os << "\"/>\n";
  body_ += os.str();
}

void SvgCanvas::cell(double x, double y, double w, double h, const std::string& color) {
  std::ostringstream os;
  os << "<rect x=\"" << fmt(sx(x)) << "\" y=\"" << fmt(sy(y + h)) << "\" width=\"" << fmt(w / (xmax_ - xmin_) * w_)
     << "\" height=\"" << fmt(h / (ymax_ - ymin_) * h_) << "\" fill=\"" << color << "\"/>\n";
  body_ += os.str();
}

void SvgCanvas::text(double x, double y, const std::string& s, int font_px, const std::string& color) {
  std::ostringstream os;
  os << "<text x=\"" << fmt(sx(x)) << "\" y=\"" << fmt(sy(y)) << "\" font-size=\"" << font_px << "\" fill=\"" << color
     << "\" font-family=\"sans-serif\">" << s << "</text>\n";
  body_ += os.str();
}

void SvgCanvas::scatter(const Tensor& pts, double radius_px, const std::string& color, double opacity) {
  for (int i = 0; i < pts.rows(); ++i) circle(pts.at(i, 0), pts.at(i, 1), radius_px, color, opacity);
}

std::string SvgCanvas::str() const {
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (timestamp_) {
    const std::time_t now = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof(buf), "%Y-%m-%d %H:%M:%S", std::gmtime(&now));
    os << "<!-- generated " << buf << " -->\n";
  }
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << w_ << "\" height=\"" << h_
     << "\" viewBox=\"0 0 " << w_ << " " << h_ << "\">\n";
  os << "<rect width=\"" << w_ << "\" height=\"" << h_ << "\" fill=\"white\"/>\n";
  os << body_;
  os << "</svg>\n";
  return os.str();
}

void SvgCanvas::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << str();
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string heat_color(double v) {
  v = std::clamp(v, 0.0, 1.0);
  // white (low) toward a deep blue (high)
  const int r = static_cast<int>(std::lround(255.0 * (1.0 - v * 0.92)));
  const int g = static_cast<int>(std::lround(255.0 * (1.0 - v * 0.72)));
  const int b = static_cast<int>(std::lround(255.0 * (1.0 - v * 0.25)));
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace ddimlab
