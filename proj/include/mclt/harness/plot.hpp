#ifndef MCLT_HARNESS_PLOT_HPP
#define MCLT_HARNESS_PLOT_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mclt/errors.hpp"
#include "mclt/harness/report.hpp"
#include "mclt/numeric/stats.hpp"

namespace mclt::harness {

struct PlotInfo {
  bool loglog = false;
  LinearFit fit;                          // in plotted coordinates
  std::optional<double> reference_slope;  // guide line through the first point
  std::size_t points = 0;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

inline std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

inline std::string tick_label(double v, bool log) {
  char b[32];
  if (log) std::snprintf(b, sizeof b, "%g", std::pow(10.0, v));
  else std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

/// Ticks at integer decades (log axes) or at a 1-2-5 step (linear axes).
inline std::vector<double> ticks(double lo, double hi, bool log) {
  std::vector<double> t;
  if (log) {
    for (double d = std::ceil(lo - 1e-9); d <= hi + 1e-9; d += 1.0) t.push_back(d);
    if (t.size() >= 2) return t;
    t.clear();
  }
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(v);
  return t;
}

}  // namespace detail

/// Metrics whose scaling law is a power law in the sweep variable get log-log
/// axes whenever every plotted value is positive.
inline bool is_scaling_metric(const std::string& metric) {
  for (const char* key : {"ks", "variance", "bound", "bracket", "skewness", "kurtosis", "error"})
    if (metric.find(key) != std::string::npos) return true;
  return false;
}

/// Self-contained SVG of `metric` against the sweep column with the least
/// squares line; KS plots of iid_rate also get a slope −1/2 guide.
inline std::string render_svg(const RunReport& rep, const std::string& metric, PlotInfo* info = nullptr) {
  if (rep.columns.empty() || rep.rows.empty()) throw ArgumentError("emit_plot: empty report");
  const int yc = rep.column(metric);
  if (yc <= 0) {
    std::string all;
    for (std::size_t i = 1; i < rep.columns.size(); ++i) all += (all.empty() ? "" : ", ") + rep.columns[i];
    throw ArgumentError("emit_plot: unknown metric '" + metric + "' (available: " + all + ")");
  }
  const std::string& xname = rep.columns[0];
  std::vector<double> xs, ys;
  for (const auto& r : rep.rows) {
    const double x = r.values[0], y = r.values[yc];
    if (r.error.empty() && std::isfinite(x) && std::isfinite(y)) {
      xs.push_back(x);
      ys.push_back(metric == "skewness" || metric == "excess_kurtosis" ? std::abs(y) : y);
    }
  }
  if (xs.empty()) throw ArgumentError("emit_plot: metric '" + metric + "' has no finite values");

  PlotInfo pi;
  pi.points = xs.size();
  pi.loglog = is_scaling_metric(metric) &&
              std::all_of(xs.begin(), xs.end(), [](double v) { return v > 0.0; }) &&
              std::all_of(ys.begin(), ys.end(), [](double v) { return v > 0.0; });
  std::vector<double> px = xs, py = ys;
  if (pi.loglog) {
    for (auto& v : px) v = std::log10(v);
    for (auto& v : py) v = std::log10(v);
  }
  const bool fitted = px.size() >= 2;
  if (fitted) pi.fit = linear_fit(px, py);
  if (pi.loglog && rep.kind == "iid_rate" && metric.find("ks") != std::string::npos) pi.reference_slope = -0.5;

  auto [xmin_it, xmax_it] = std::minmax_element(px.begin(), px.end());
  auto [ymin_it, ymax_it] = std::minmax_element(py.begin(), py.end());
  double x0 = *xmin_it, x1 = *xmax_it, y0 = *ymin_it, y1 = *ymax_it;
  auto pad = [](double& a, double& b) {
    const double span = b - a;
    const double p = span > 0.0 ? 0.08 * span : std::max(0.5, 0.1 * std::abs(a));
    a -= p;
    b += p;
  };
  pad(x0, x1);
  pad(y0, y1);

  constexpr double W = 720, H = 480, L = 80, R = 30, T = 50, B = 60;
  auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  using detail::num;
  using detail::xml_escape;

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) + "\" viewBox=\"0 0 " +
       num(W) + " " + num(H) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(W / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
       xml_escape(rep.kind + ": " + metric + " vs " + xname + (pi.loglog ? " (log-log)" : "")) + "</text>\n";
  // frame and ticks
  s += "<rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(W - L - R) + "\" height=\"" + num(H - T - B) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : detail::ticks(x0, x1, pi.loglog)) {
    s += "<line x1=\"" + num(sx(t)) + "\" y1=\"" + num(H - B) + "\" x2=\"" + num(sx(t)) + "\" y2=\"" + num(T) +
         "\" stroke=\"#ddd\"/>\n";
    s += "<text x=\"" + num(sx(t)) + "\" y=\"" + num(H - B + 16) + "\" text-anchor=\"middle\">" +
         detail::tick_label(t, pi.loglog) + "</text>\n";
  }
  for (double t : detail::ticks(y0, y1, pi.loglog)) {
    s += "<line x1=\"" + num(L) + "\" y1=\"" + num(sy(t)) + "\" x2=\"" + num(W - R) + "\" y2=\"" + num(sy(t)) +
         "\" stroke=\"#ddd\"/>\n";
    s += "<text x=\"" + num(L - 6) + "\" y=\"" + num(sy(t) + 4) + "\" text-anchor=\"end\">" +
         detail::tick_label(t, pi.loglog) + "</text>\n";
  }
  s += "<text x=\"" + num((L + W - R) / 2) + "\" y=\"" + num(H - 18) + "\" text-anchor=\"middle\">" +
       xml_escape(xname) + "</text>\n";
  s += "<text x=\"18\" y=\"" + num((T + H - B) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       num((T + H - B) / 2) + ")\">" + xml_escape(metric) + "</text>\n";

  s += "<g clip-path=\"url(#frame)\">\n";
  s += "<clipPath id=\"frame\"><rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(W - L - R) +
       "\" height=\"" + num(H - T - B) + "\"/></clipPath>\n";
  if (fitted) {
    const double a = pi.fit.intercept, b = pi.fit.slope;
    s += "<line class=\"fit\" x1=\"" + num(sx(x0)) + "\" y1=\"" + num(sy(a + b * x0)) + "\" x2=\"" + num(sx(x1)) +
         "\" y2=\"" + num(sy(a + b * x1)) + "\" stroke=\"#c0392b\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n";
  }
  if (pi.reference_slope) {
    const double b = *pi.reference_slope, a = py.front() - b * px.front();
    s += "<line class=\"reference\" x1=\"" + num(sx(x0)) + "\" y1=\"" + num(sy(a + b * x0)) + "\" x2=\"" +
         num(sx(x1)) + "\" y2=\"" + num(sy(a + b * x1)) +
         "\" stroke=\"#7f8c8d\" stroke-width=\"1\" stroke-dasharray=\"2 3\"/>\n";
  }
  std::string pts;
  for (std::size_t i = 0; i < px.size(); ++i) pts += num(sx(px[i])) + "," + num(sy(py[i])) + " ";
  s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"#2c3e50\"/>\n";
  for (std::size_t i = 0; i < px.size(); ++i)
    s += "<circle cx=\"" + num(sx(px[i])) + "\" cy=\"" + num(sy(py[i])) + "\" r=\"3.5\" fill=\"#2c3e50\"/>\n";
  s += "</g>\n";

  // legend
  double ly = T + 16;
  auto legend = [&](const std::string& text, const std::string& dash, const std::string& color) {
    s += "<line x1=\"" + num(W - R - 230) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(W - R - 200) + "\" y2=\"" +
         num(ly - 4) + "\" stroke=\"" + color + "\" stroke-dasharray=\"" + dash + "\"/>\n";
    s += "<text x=\"" + num(W - R - 194) + "\" y=\"" + num(ly) + "\">" + xml_escape(text) + "</text>\n";
    ly += 16;
  };
  if (fitted) {
    char b[64];
    std::snprintf(b, sizeof b, "fit: slope %.3f (R² %.3f)", pi.fit.slope, pi.fit.r_squared);
    legend(b, "6 4", "#c0392b");
  }
  if (pi.reference_slope) legend("reference slope -1/2", "2 3", "#7f8c8d");
  s += "</svg>\n";
  if (info) *info = pi;
  return s;
}

inline PlotInfo emit_plot(const RunReport& rep, const std::string& metric, const std::filesystem::path& path) {
  PlotInfo info;
  const std::string svg = render_svg(rep, metric, &info);
  write_atomically(path, svg);
  return info;
}

}  // namespace mclt::harness

#endif  // MCLT_HARNESS_PLOT_HPP
