#include "snapfit/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "snapfit/errors.hpp"

namespace snapfit::plot {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 60;
constexpr int kMarginRight = 150;  // room for the legend
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

std::string color_for(std::size_t i) {
  // Evenly spaced hues.
  const double hue = std::fmod(360.0 * static_cast<double>(i) * 0.618034, 360.0);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "hsl(%.0f,70%%,40%%)", hue);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

std::string profiles_to_svg(const std::vector<oracle::ForceProfile>& profiles,
                            const std::string& title) {
  if (profiles.empty()) throw UsageError("plot: no profiles to draw");

  double y_min = profiles.front().force.front();
  double y_max = y_min;
  for (const auto& p : profiles) {
    for (double f : p.force) {
      y_min = std::min(y_min, f);
      y_max = std::max(y_max, f);
    }
  }
  if (y_max == y_min) y_max = y_min + 1.0;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double x) { return kMarginLeft + x * plot_w; };
  auto sy = [&](double y) {
    return kMarginTop + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kMarginLeft << "\" y=\"24\" font-family=\"sans-serif\""
      << " font-size=\"16\">" << title << "</text>\n";

  // Axes.
  out << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(y_min) << "\" x2=\""
      << sx(1) << "\" y2=\"" << sy(y_min) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(y_min) << "\" x2=\""
      << sx(0) << "\" y2=\"" << sy(y_max) << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << sx(0.5) << "\" y=\"" << kHeight - 14
      << "\" font-family=\"sans-serif\" font-size=\"12\""
      << " text-anchor=\"middle\">displacement</text>\n";
  for (double tick : {y_min, 0.5 * (y_min + y_max), y_max}) {
    out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << sy(tick) + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\""
        << " text-anchor=\"end\">" << fmt(tick) << "</text>\n";
  }

  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const oracle::ForceProfile& p = profiles[i];
    out << "<polyline fill=\"none\" stroke=\"" << color_for(i)
        << "\" stroke-width=\"1\" points=\"";
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (k) out << ' ';
      out << fmt(sx(p.displacement[k])) << ',' << fmt(sy(p.force[k]));
    }
    out << "\"/>\n";
  }

  // Legend.
  const double lx = kWidth - kMarginRight + 12;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const double ly = kMarginTop + 16.0 * static_cast<double>(i);
    out << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 18
        << "\" y2=\"" << ly << "\" stroke=\"" << color_for(i)
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << lx + 24 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << profiles[i].run_id << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace snapfit::plot
