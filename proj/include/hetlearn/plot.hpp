// Copyright 2026 The hetlearn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HETLEARN_PLOT_HPP_
#define HETLEARN_PLOT_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hetlearn/errors.hpp"
#include "hetlearn/export.hpp"
#include "hetlearn/sim_harness.hpp"

namespace hetlearn {

struct PlotOptions {
  bool log_x = false;
  int width = 860;
  int height = 520;
  std::string title;
};

namespace detail {

struct Series {
  int agent = 1;
  std::optional<int> state;
  std::vector<double> k, mean, std;
  std::optional<double> lo, hi;
};

inline std::string SeriesLabel(const Series& s, const std::array<std::string, 2>& labels) {
  std::string out = "Agent " + std::to_string(s.agent);
  const std::string& tag = labels[s.agent - 1];
  if (!tag.empty()) out += " (" + tag + ")";
  if (s.state) out += ", state " + std::to_string(*s.state + 1);
  return out;
}

inline std::string Num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

inline std::string TickLabel(double x) {
  char buf[32];
  if (std::abs(x) >= 1e4 || (x != 0.0 && std::abs(x) < 1e-3)) {
    std::snprintf(buf, sizeof(buf), "%.0e", x);
  } else {
    std::snprintf(buf, sizeof(buf), "%.4g", x);
  }
  return buf;
}

inline std::string Escape(const std::string& s) {
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

}  // namespace detail

// Mean value estimate per (agent, state) against the stage, with a shaded
// +/- one standard deviation band and dotted horizontal bound lines.
inline std::string RenderPlotSvg(const Aggregate& agg, const PlotOptions& opt = {}) {
  if (agg.rows.empty()) throw StructuralError("cannot plot an empty aggregate");
  std::map<std::pair<int, int>, detail::Series> by_key;
  for (const auto& r : agg.rows) {
    auto& s = by_key[{r.state.value_or(-1), r.agent}];
    s.agent = r.agent;
    s.state = r.state;
    s.k.push_back(static_cast<double>(r.k));
    s.mean.push_back(r.v_est_mean);
    s.std.push_back(r.v_est_std.value_or(0.0));
    if (r.bound_lo) s.lo = r.bound_lo;
    if (r.bound_hi) s.hi = r.bound_hi;
  }
  std::vector<detail::Series> series;
  for (auto& [key, s] : by_key) series.push_back(std::move(s));

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.k.size(); ++i) {
      x_min = std::min(x_min, s.k[i]);
      x_max = std::max(x_max, s.k[i]);
      y_min = std::min(y_min, s.mean[i] - s.std[i]);
      y_max = std::max(y_max, s.mean[i] + s.std[i]);
    }
    if (s.lo) y_min = std::min(y_min, *s.lo);
    if (s.hi) y_max = std::max(y_max, *s.hi);
  }
  if (y_max - y_min < 1e-12) {
    y_min -= 0.5;
    y_max += 0.5;
  }
  const double pad = 0.05 * (y_max - y_min);
  y_min -= pad;
  y_max += pad;
  const bool log_x = opt.log_x && x_min > 0.0;
  auto tx = [&](double x) { return log_x ? std::log10(x) : x; };
  const double x_lo = tx(x_min);
  const double x_hi = x_max > x_min ? tx(x_max) : x_lo + 1.0;

  const double left = 70, right = 250, top = 40, bottom = 50;
  const double pw = opt.width - left - right;
  const double ph = opt.height - top - bottom;
  auto px = [&](double x) { return left + (tx(x) - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return top + (y_max - y) / (y_max - y_min) * ph; };

  static constexpr std::array<const char*, 8> kColors = {
      "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opt.width) +
         "\" height=\"" + std::to_string(opt.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const std::string title = opt.title.empty() ? agg.name : opt.title;
  if (!title.empty()) {
    svg += "<text x=\"" + detail::Num(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
           detail::Escape(title) + "</text>\n";
  }
  svg += "<rect x=\"" + detail::Num(left) + "\" y=\"" + detail::Num(top) + "\" width=\"" +
         detail::Num(pw) + "\" height=\"" + detail::Num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double yv = y_min + (y_max - y_min) * t / 5.0;
    svg += "<text x=\"" + detail::Num(left - 6) + "\" y=\"" + detail::Num(py(yv) + 4) +
           "\" text-anchor=\"end\">" + detail::TickLabel(yv) + "</text>\n";
    const double xv_t = x_lo + (x_hi - x_lo) * t / 5.0;
    const double xv = log_x ? std::pow(10.0, xv_t) : xv_t;
    svg += "<text x=\"" + detail::Num(px(xv)) + "\" y=\"" + detail::Num(top + ph + 18) +
           "\" text-anchor=\"middle\">" + detail::TickLabel(xv) + "</text>\n";
  }
  svg += "<text x=\"" + detail::Num(left + pw / 2) + "\" y=\"" + detail::Num(opt.height - 10.0) +
         "\" text-anchor=\"middle\">stage k" + std::string(log_x ? " (log scale)" : "") + "</text>\n";
  svg += "<text transform=\"translate(18," + detail::Num(top + ph / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">value estimate</text>\n";

  for (std::size_t n = 0; n < series.size(); ++n) {
    const auto& s = series[n];
    const std::string color = kColors[n % kColors.size()];
    std::string band, line;
    for (std::size_t i = 0; i < s.k.size(); ++i) {
      band += detail::Num(px(s.k[i])) + "," + detail::Num(py(s.mean[i] + s.std[i])) + " ";
      line += detail::Num(px(s.k[i])) + "," + detail::Num(py(s.mean[i])) + " ";
    }
    for (std::size_t i = s.k.size(); i-- > 0;) {
      band += detail::Num(px(s.k[i])) + "," + detail::Num(py(s.mean[i] - s.std[i])) + " ";
    }
    svg += "<polygon class=\"std-band\" points=\"" + band + "\" fill=\"" + color +
           "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
    svg += "<polyline class=\"mean\" points=\"" + line + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.6\"/>\n";
    for (const auto& b : {s.lo, s.hi}) {
      if (!b) continue;
      svg += "<line class=\"bound\" x1=\"" + detail::Num(left) + "\" x2=\"" + detail::Num(left + pw) +
             "\" y1=\"" + detail::Num(py(*b)) + "\" y2=\"" + detail::Num(py(*b)) + "\" stroke=\"" +
             color + "\" stroke-dasharray=\"2,3\"/>\n";
    }
    const double ly = top + 14 + 20.0 * static_cast<double>(n);
    const double lx = left + pw + 14;
    svg += "<line x1=\"" + detail::Num(lx) + "\" x2=\"" + detail::Num(lx + 24) + "\" y1=\"" +
           detail::Num(ly) + "\" y2=\"" + detail::Num(ly) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text class=\"legend\" x=\"" + detail::Num(lx + 30) + "\" y=\"" + detail::Num(ly + 4) + "\">" +
           detail::Escape(detail::SeriesLabel(s, agg.labels)) + "</text>\n";
  }
  const double note_y = top + 14 + 20.0 * static_cast<double>(series.size()) + 10;
  svg += "<text x=\"" + detail::Num(left + pw + 14) + "\" y=\"" + detail::Num(note_y) +
         "\" fill=\"#555\">dotted: bounds; shaded: &#177;1 std</text>\n";
  svg += "</svg>\n";
  return svg;
}

inline void RenderPlot(const Aggregate& agg, const std::string& path, const PlotOptions& opt = {}) {
  const std::string svg = RenderPlotSvg(agg, opt);
  auto out = detail::OpenForWrite(path);
  out << svg;
  detail::FinishWrite(out, path);
}

}  // namespace hetlearn

#endif  // HETLEARN_PLOT_HPP_
