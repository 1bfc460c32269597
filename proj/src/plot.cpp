#include "robustcov/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "robustcov/errors.hpp"

namespace robustcov {
namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(int decade) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::pow(10.0, decade));
  return buf;
}

}  // namespace

void write_loglog_svg(std::ostream& out, const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw InvalidParameter("series coordinates differ in length");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
      xmin = std::min(xmin, std::log10(s.x[i]));
      xmax = std::max(xmax, std::log10(s.x[i]));
      ymin = std::min(ymin, std::log10(s.y[i]));
      ymax = std::max(ymax, std::log10(s.y[i]));
    }
  }
  if (!std::isfinite(xmin)) xmin = xmax = ymin = ymax = 0.0;
  const int x0 = static_cast<int>(std::floor(xmin)), x1 = std::max(x0 + 1, static_cast<int>(std::ceil(xmax)));
  const int y0 = static_cast<int>(std::floor(ymin)), y1 = std::max(y0 + 1, static_cast<int>(std::ceil(ymax)));
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double lx) { return kLeft + (lx - x0) / (x1 - x0) * pw; };
  auto py = [&](double ly) { return kTop + ph - (ly - y0) / (y1 - y0) * ph; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int d = x0; d <= x1; ++d) {
    out << "<line x1=\"" << num(px(d)) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(px(d)) << "\" y2=\""
        << num(kTop + ph) << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << num(px(d)) << "\" y=\"" << num(kTop + ph + 16) << "\" text-anchor=\"middle\">"
        << tick_label(d) << "</text>\n";
  }
  for (int d = y0; d <= y1; ++d) {
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py(d)) << "\" x2=\"" << num(kLeft + pw) << "\" y2=\""
        << num(py(d)) << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(d) + 4) << "\" text-anchor=\"end\">" << tick_label(d)
        << "</text>\n";
  }
  out << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 12) << "\" text-anchor=\"middle\">"
      << escape(xlabel) << "</text>\n";
  out << "<text transform=\"translate(18," << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(ylabel) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
      out << (first ? "" : " ") << num(px(std::log10(s.x[i]))) << ',' << num(py(std::log10(s.y[i])));
      first = false;
    }
    out << "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(k);
    out << "<line x1=\"" << num(kLeft + pw + 10) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(kLeft + pw + 30)
        << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << num(kLeft + pw + 34) << "\" y=\"" << num(ly) << "\">" << escape(s.name) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace robustcov
