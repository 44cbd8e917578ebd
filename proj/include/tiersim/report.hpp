#pragma once

// Reporting: shuffle density scatter as CSV/JSON plus a self-contained
// SVG (log-log size vs IOPS with the break-even line). Hand-rolled SVG
// keeps outputs byte-deterministic and dependency-free.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"
#include "tiersim/econ.hpp"
#include "tiersim/trace.hpp"
#include "tiersim/workload.hpp"

namespace tiersim {

struct ScatterSummary {
  CostModel model;
  double crossover = 0.0;
  std::vector<ScatterPoint> points;
  double above_fraction = 0.0;
};

inline ScatterSummary summarize_scatter(const Trace& trace, const CostModel& model) {
  validate(model);
  ScatterSummary s;
  s.model = model;
  s.crossover = crossover_density(model);
  s.points = density_scatter(trace);
  if (!s.points.empty()) {
    std::size_t above = 0;
    for (const auto& p : s.points)
      if (p.density() > s.crossover) ++above;
    s.above_fraction = static_cast<double>(above) / static_cast<double>(s.points.size());
  }
  return s;
}

namespace svgdetail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string shortnum(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace svgdetail

// Log-log scatter of (size TB, avg IOPS), one circle per shuffle-stage
// instance and exactly one break-even line (class "crossover").
inline std::string scatter_svg(const ScatterSummary& s) {
  constexpr double kW = 720, kH = 540;
  constexpr double kL = 70, kR = 20, kT = 20, kB = 50;

  // data bounds in log10 space, padded to whole decades
  double lo_x = -1, hi_x = 1, lo_y = -1, hi_y = 3;
  if (!s.points.empty()) {
    lo_x = 1e300;
    hi_x = -1e300;
    lo_y = 1e300;
    hi_y = -1e300;
    for (const auto& p : s.points) {
      const double lx = std::log10(std::max(p.size_tb, 1e-9));
      const double ly = std::log10(std::max(p.avg_iops, 1e-3));
      lo_x = std::min(lo_x, lx);
      hi_x = std::max(hi_x, lx);
      lo_y = std::min(lo_y, ly);
      hi_y = std::max(hi_y, ly);
    }
  }
  // the break-even line must be visible across the x span
  lo_y = std::min(lo_y, std::log10(s.crossover) + lo_x);
  hi_y = std::max(hi_y, std::log10(s.crossover) + hi_x);
  lo_x = std::floor(lo_x);
  hi_x = std::ceil(hi_x + 1e-9);
  lo_y = std::floor(lo_y);
  hi_y = std::ceil(hi_y + 1e-9);
  if (hi_x - lo_x < 1) hi_x = lo_x + 1;
  if (hi_y - lo_y < 1) hi_y = lo_y + 1;

  const auto px = [&](double lx) { return kL + (lx - lo_x) / (hi_x - lo_x) * (kW - kL - kR); };
  const auto py = [&](double ly) { return kH - kB - (ly - lo_y) / (hi_y - lo_y) * (kH - kT - kB); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"540\" "
         "viewBox=\"0 0 720 540\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"720\" height=\"540\" fill=\"white\"/>\n";

  using svgdetail::num;
  // decade grid and tick labels
  for (double d = lo_x; d <= hi_x + 1e-9; d += 1.0) {
    const double x = px(d);
    svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(kT) + "\" x2=\"" + num(x) + "\" y2=\"" +
           num(kH - kB) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + num(x) + "\" y=\"" + num(kH - kB + 18) +
           "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#444444\">1e" +
           svgdetail::shortnum(d) + "</text>\n";
  }
  for (double d = lo_y; d <= hi_y + 1e-9; d += 1.0) {
    const double y = py(d);
    svg += "<line x1=\"" + num(kL) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kW - kR) +
           "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + num(kL - 8) + "\" y=\"" + num(y + 4) +
           "\" font-size=\"12\" text-anchor=\"end\" fill=\"#444444\">1e" +
           svgdetail::shortnum(d) + "</text>\n";
  }
  svg += "<text x=\"" + num((kL + kW - kR) / 2) + "\" y=\"" + num(kH - 12) +
         "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#222222\">size (TB)</text>\n";
  svg += "<text x=\"16\" y=\"" + num((kT + kH - kB) / 2) +
         "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#222222\" transform=\"rotate(-90 16 " +
         num((kT + kH - kB) / 2) + ")\">avg IOPS</text>\n";

  // break-even: iops = crossover * size is straight in log-log
  const double lc = std::log10(s.crossover);
  svg += "<line class=\"crossover\" x1=\"" + num(px(lo_x)) + "\" y1=\"" + num(py(lc + lo_x)) +
         "\" x2=\"" + num(px(hi_x)) + "\" y2=\"" + num(py(lc + hi_x)) +
         "\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
  svg += "<text x=\"" + num(kW - kR - 4) + "\" y=\"" + num(py(lc + hi_x) - 6) +
         "\" font-size=\"12\" text-anchor=\"end\" fill=\"#d62728\">" +
         svgdetail::shortnum(s.crossover) + " IOPS/TB</text>\n";

  for (const auto& p : s.points) {
    const double lx = std::log10(std::max(p.size_tb, 1e-9));
    const double ly = std::log10(std::max(p.avg_iops, 1e-3));
    svg += "<circle class=\"pt\" cx=\"" + num(px(lx)) + "\" cy=\"" + num(py(ly)) +
           "\" r=\"2.5\" fill=\"#1f77b4\" fill-opacity=\"0.55\"/>\n";
  }

  svg += "</svg>\n";
  return svg;
}

inline std::string scatter_csv(const ScatterSummary& s) {
  std::string out = "size_tb,avg_iops,iops_per_tb,above_crossover\n";
  for (const auto& p : s.points) {
    out += svgdetail::shortnum(p.size_tb);
    out += ',';
    out += svgdetail::shortnum(p.avg_iops);
    out += ',';
    out += svgdetail::shortnum(p.density());
    out += ',';
    out += p.density() > s.crossover ? '1' : '0';
    out += '\n';
  }
  return out;
}

inline ojson scatter_json(const ScatterSummary& s) {
  ojson points = ojson::array();
  for (const auto& p : s.points)
    points.push_back(ojson{{"size_tb", p.size_tb},
                           {"avg_iops", p.avg_iops},
                           {"iops_per_tb", p.density()}});
  return ojson{{"cost_model", to_json(s.model)},
               {"crossover_iops_per_tb", s.crossover},
               {"shuffle_count", s.points.size()},
               {"above_crossover_fraction", s.above_fraction},
               {"points", std::move(points)}};
}

}  // namespace tiersim
