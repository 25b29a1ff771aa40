#include "gransformer/svg.hpp"

#include <algorithm>
#include <cstdio>

#include "gransformer/common.hpp"

namespace gransformer {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 360.0;
constexpr double kLeft = 45.0;
constexpr double kRight = 15.0;
constexpr double kTop = 35.0;
constexpr double kBottom = 30.0;

const char* kColorA = "#4477aa";
const char* kColorB = "#ee6677";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string rect(double x, double y, double w, double h, const char* fill) {
  return "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
         "\" height=\"" + num(h) + "\" fill=\"" + fill + "\"/>\n";
}

std::string line(double x1, double y1, double x2, double y2) {
  return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" +
         num(x2) + "\" y2=\"" + num(y2) +
         "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
}

std::string text(double x, double y, const std::string& s) {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) +
         "\" font-family=\"sans-serif\" font-size=\"12\">" + s + "</text>\n";
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string svg_bar_chart(const std::string& title,
                          const std::vector<double>& series_a,
                          const std::string& label_a,
                          const std::vector<double>& series_b,
                          const std::string& label_b) {
  if (series_a.empty() || series_b.empty()) {
    throw data_error("bar chart: empty series");
  }
  const size_t bins = std::max(series_a.size(), series_b.size());
  double peak = 0.0;
  for (double v : series_a) peak = std::max(peak, v);
  for (double v : series_b) peak = std::max(peak, v);
  if (peak <= 0.0) peak = 1.0;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double group = plot_w / static_cast<double>(bins);
  const double bar = group * 0.4;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
         "\" height=\"" + num(kHeight) + "\">\n";
  out += text(kLeft, kTop - 15.0, escape(title));

  for (size_t i = 0; i < bins; ++i) {
    const double base_x = kLeft + group * static_cast<double>(i);
    const double va = i < series_a.size() ? series_a[i] : 0.0;
    const double vb = i < series_b.size() ? series_b[i] : 0.0;
    const double ha = va / peak * plot_h;
    const double hb = vb / peak * plot_h;
    if (ha > 0.0) {
      out += rect(base_x + group * 0.1, kTop + plot_h - ha, bar, ha, kColorA);
    }
    if (hb > 0.0) {
      out += rect(base_x + group * 0.5, kTop + plot_h - hb, bar, hb, kColorB);
    }
  }

  out += line(kLeft, kTop, kLeft, kTop + plot_h);
  out += line(kLeft, kTop + plot_h, kLeft + plot_w, kTop + plot_h);
  out += text(kLeft - 38.0, kTop + 10.0, num(peak));
  out += text(kLeft - 38.0, kTop + plot_h, "0");

  const double legend_x = kWidth - kRight - 180.0;
  out += rect(legend_x, kTop - 24.0, 10.0, 10.0, kColorA);
  out += text(legend_x + 14.0, kTop - 15.0, escape(label_a));
  out += rect(legend_x + 90.0, kTop - 24.0, 10.0, 10.0, kColorB);
  out += text(legend_x + 104.0, kTop - 15.0, escape(label_b));

  out += "</svg>\n";
  return out;
}

}  // namespace gransformer
