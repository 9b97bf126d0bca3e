#include "safeloop/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace safeloop::cli {
namespace {

constexpr double kWidth = 640.0, kHeight = 640.0;
constexpr double kLeft = 80.0, kRight = 24.0, kTop = 48.0, kBottom = 64.0;

const char* const kColors[] = {"#1b1b1b", "#d1495b", "#00798c", "#edae49", "#66a182", "#8d6a9f"};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double nice_step(double range) {
  const double raw = range / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

// Enough decimals to resolve the tick step.
std::string tick_label(double v, double step) {
  if (std::abs(v) < 1e-9 * step) v = 0.0;
  const int decimals = std::max(0, -static_cast<int>(std::floor(std::log10(step) + 1e-9)));
  char f[16];
  std::snprintf(f, sizeof f, "%%.%df", decimals);
  return fmt(f, v);
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  std::vector<std::vector<Vector>> curves;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& e : spec.ellipses) {
    curves.push_back(boundary_points(e.set, spec.points));
    for (const auto& p : curves.back()) {
      xmin = std::min(xmin, p(0));
      xmax = std::max(xmax, p(0));
      ymin = std::min(ymin, p(1));
      ymax = std::max(ymax, p(1));
    }
  }
  if (curves.empty()) xmin = ymin = -1.0, xmax = ymax = 1.0;
  // equal aspect: square data window around the union of the curves
  const double half = 0.55 * std::max({xmax - xmin, ymax - ymin, 1e-12});
  const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
  xmin = cx - half, xmax = cx + half, ymin = cy - half, ymax = cy + half;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * ph; };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\" font-family=\"sans-serif\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    o << "<text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" << escape(spec.title)
      << "</text>\n";

  const double step = nice_step(xmax - xmin);
  std::vector<double> xt, yt;
  for (long k = static_cast<long>(std::ceil(xmin / step)); k * step <= xmax; ++k) xt.push_back(k * step);
  for (long k = static_cast<long>(std::ceil(ymin / step)); k * step <= ymax; ++k) yt.push_back(k * step);
  o << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  for (double t : xt)
    o << "<line x1=\"" << fmt("%.3f", sx(t)) << "\" y1=\"" << kTop << "\" x2=\"" << fmt("%.3f", sx(t)) << "\" y2=\""
      << kTop + ph << "\"/>\n";
  for (double t : yt)
    o << "<line x1=\"" << kLeft << "\" y1=\"" << fmt("%.3f", sy(t)) << "\" x2=\"" << kLeft + pw << "\" y2=\""
      << fmt("%.3f", sy(t)) << "\"/>\n";
  o << "</g>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  o << "<g font-size=\"12\">\n";
  for (double t : xt)
    o << "<text x=\"" << fmt("%.3f", sx(t)) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
      << tick_label(t, step) << "</text>\n";
  for (double t : yt)
    o << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt("%.3f", sy(t) + 4) << "\" text-anchor=\"end\">"
      << tick_label(t, step) << "</text>\n";
  o << "</g>\n";
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 18 << "\" text-anchor=\"middle\" font-size=\"14\">"
    << escape(spec.x_label) << "</text>\n";
  o << "<text x=\"20\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 20 "
    << kTop + ph / 2 << ")\">" << escape(spec.y_label) << "</text>\n";

  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << (i == 0 ? "2.5" : "2") << "\"";
    if (i == 0) o << " stroke-dasharray=\"8 4\"";
    o << " points=\"";
    for (std::size_t k = 0; k <= curves[i].size(); ++k) {
      const Vector& p = curves[i][k % curves[i].size()];
      if (k) o << ' ';
      o << fmt("%.3f", sx(p(0))) << ',' << fmt("%.3f", sy(p(1)));
    }
    o << "\"/>\n";
  }

  o << "<g font-size=\"12\">\n";
  const double lx = kLeft + 12, ly = kTop + 12;
  std::size_t longest = 0;
  for (const auto& e : spec.ellipses) longest = std::max(longest, e.label.size());
  o << "<rect x=\"" << lx << "\" y=\"" << ly << "\" width=\"" << 52 + 7 * longest << "\" height=\"" << 20 * curves.size() + 8
    << "\" fill=\"white\" fill-opacity=\"0.85\" stroke=\"#999999\"/>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const double y = ly + 16 + 20 * static_cast<double>(i);
    o << "<line x1=\"" << lx + 8 << "\" y1=\"" << y - 4 << "\" x2=\"" << lx + 36 << "\" y2=\"" << y - 4 << "\" stroke=\""
      << kColors[i % std::size(kColors)] << "\" stroke-width=\"2\"" << (i == 0 ? " stroke-dasharray=\"8 4\"" : "")
      << "/>\n";
    o << "<text x=\"" << lx + 44 << "\" y=\"" << y << "\">" << escape(spec.ellipses[i].label) << "</text>\n";
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

}  // namespace safeloop::cli
