#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cmf::svg {

struct Series {
  std::string label;
  std::vector<double> y;           // NaN marks a gap
  std::string color = "#1f77b4";
  double stroke_width = 1.2;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> x;  // shared by every series
  std::vector<Series> series;
  std::optional<double> y_min, y_max;  // autoscaled from the series when unset
  std::vector<std::string> comments;   // written as an XML comment block
  int width = 900;
  int height = 360;
  std::size_t max_points = 1500;  // per series after decimation
};

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return colors[i % 6];
}

namespace detail {

inline std::string f(double v, const char* spec = "%.2f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string escape(const std::string& s) {
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

// Keeps the min and max of each bucket in time order so spikes survive.
inline std::vector<std::size_t> decimate(const std::vector<double>& y, std::size_t max_points) {
  std::vector<std::size_t> idx;
  const std::size_t n = y.size();
  if (n <= max_points || max_points < 4) {
    for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
    return idx;
  }
  const std::size_t buckets = max_points / 2;
  for (std::size_t b = 0; b < buckets; ++b) {
    const std::size_t lo = b * n / buckets, hi = (b + 1) * n / buckets;
    std::size_t imin = lo, imax = lo;
    std::optional<std::size_t> gap;
    for (std::size_t i = lo; i < hi; ++i) {
      if (std::isnan(y[i])) {
        if (!gap) gap = i;
        continue;
      }
      if (std::isnan(y[imin]) || y[i] < y[imin]) imin = i;
      if (std::isnan(y[imax]) || y[i] > y[imax]) imax = i;
    }
    if (gap) idx.push_back(*gap);
    if (!std::isnan(y[imin])) {
      idx.push_back(std::min(imin, imax));
      if (imax != imin) idx.push_back(std::max(imin, imax));
    }
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

inline double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

}  // namespace detail

/// Static line chart; output depends only on the inputs.
inline std::string render(const Chart& c) {
  const double left = 70, right = 150, top = 30, bottom = 45;
  const double pw = c.width - left - right, ph = c.height - top - bottom;

  double x0 = c.x.empty() ? 0.0 : c.x.front(), x1 = c.x.empty() ? 1.0 : c.x.back();
  if (!(x1 > x0)) x1 = x0 + 1.0;
  double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
  for (const auto& s : c.series)
    for (double v : s.y)
      if (std::isfinite(v)) {
        y0 = std::min(y0, v);
        y1 = std::max(y1, v);
      }
  if (!std::isfinite(y0)) y0 = 0.0, y1 = 1.0;
  if (c.y_min) y0 = *c.y_min;
  if (c.y_max) y1 = *c.y_max;
  if (!(y1 > y0)) {
    const double pad = std::max(1e-9, std::abs(y0) * 0.05);
    y0 -= pad;
    y1 += pad;
  }
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (y1 - std::clamp(y, y0, y1)) / (y1 - y0) * ph; };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!c.comments.empty()) {
    os << "<!--\n";
    for (const auto& line : c.comments) {
      std::string safe = line;
      for (std::size_t p; (p = safe.find("--")) != std::string::npos;) safe.replace(p, 2, "- -");
      os << "  " << safe << '\n';
    }
    os << "-->\n";
  }
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << c.width << "\" height=\"" << c.height
     << "\" viewBox=\"0 0 " << c.width << ' ' << c.height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << detail::f(left + pw / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
     << detail::escape(c.title) << "</text>\n";

  // grid and tick labels
  os << "<g stroke=\"#e0e0e0\" stroke-width=\"1\">\n";
  const double xs = detail::nice_step(x1 - x0, 8), ys = detail::nice_step(y1 - y0, 6);
  std::ostringstream labels;
  for (double t = std::ceil(x0 / xs) * xs; t <= x1 + 1e-9 * xs; t += xs) {
    os << "<line x1=\"" << detail::f(px(t)) << "\" y1=\"" << top << "\" x2=\"" << detail::f(px(t)) << "\" y2=\""
       << top + ph << "\"/>\n";
    labels << "<text x=\"" << detail::f(px(t)) << "\" y=\"" << detail::f(top + ph + 14)
           << "\" text-anchor=\"middle\">" << detail::f(std::abs(t) < 1e-12 * xs ? 0.0 : t, "%g") << "</text>\n";
  }
  for (double t = std::ceil(y0 / ys) * ys; t <= y1 + 1e-9 * ys; t += ys) {
    os << "<line x1=\"" << left << "\" y1=\"" << detail::f(py(t)) << "\" x2=\"" << left + pw << "\" y2=\""
       << detail::f(py(t)) << "\"/>\n";
    labels << "<text x=\"" << left - 6 << "\" y=\"" << detail::f(py(t) + 4) << "\" text-anchor=\"end\">"
           << detail::f(std::abs(t) < 1e-12 * ys ? 0.0 : t, "%g") << "</text>\n";
  }
  os << "</g>\n" << labels.str();
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  os << "<text x=\"" << detail::f(left + pw / 2) << "\" y=\"" << c.height - 8 << "\" text-anchor=\"middle\">"
     << detail::escape(c.x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << detail::f(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << detail::escape(c.y_label) << "</text>\n";

  for (std::size_t k = 0; k < c.series.size(); ++k) {
    const auto& s = c.series[k];
    const std::size_t n = std::min(s.y.size(), c.x.size());
    std::vector<double> y(s.y.begin(), s.y.begin() + static_cast<long>(n));
    std::string path;
    bool pen_down = false;
    for (std::size_t i : detail::decimate(y, c.max_points)) {
      if (!std::isfinite(y[i])) {
        pen_down = false;
        continue;
      }
      path += pen_down ? " L" : " M";
      path += detail::f(px(c.x[i])) + ' ' + detail::f(py(y[i]));
      pen_down = true;
    }
    if (!path.empty())
      os << "<path d=\"" << path.substr(1) << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\""
         << detail::f(s.stroke_width, "%.1f") << "\" stroke-linejoin=\"round\"/>\n";
    const double ly = top + 12 + 16.0 * static_cast<double>(k);
    os << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << detail::f(ly) << "\" x2=\"" << left + pw + 30 << "\" y2=\""
       << detail::f(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw + 35 << "\" y=\"" << detail::f(ly + 4) << "\">" << detail::escape(s.label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace cmf::svg
