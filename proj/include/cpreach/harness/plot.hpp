#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpreach/dynamics/trajectory.hpp"
#include "cpreach/error.hpp"
#include "cpreach/harness/artifacts.hpp"

namespace cpreach {

/// One state component over time: flowpipe envelope and, when samples are
/// given, their per-step min / mean / max.
struct PlotSeries {
  Eigen::Index component = 0;
  double dt = 0.0;
  Eigen::VectorXd lower, upper;
  std::optional<Eigen::VectorXd> sample_min, sample_mean, sample_max;

  Eigen::Index steps() const { return lower.size(); }
};

inline PlotSeries plot_series(const FlowpipeDocument& fp, const TrajectoryDataset* samples, Eigen::Index component,
                              double dt = 0.0) {
  require(component >= 0 && component < fp.n, ErrorKind::Config,
          "plot component " + std::to_string(component) + " is outside [0, " + std::to_string(fp.n) + ")");
  PlotSeries s;
  s.component = component;
  s.dt = dt;
  s.lower.resize(fp.K + 1);
  s.upper.resize(fp.K + 1);
  for (Eigen::Index k = 0; k <= fp.K; ++k) {
    s.lower[k] = fp.bounds.lower(k * fp.n + component);
    s.upper[k] = fp.bounds.upper(k * fp.n + component);
  }
  if (samples && samples->size() > 0) {
    require(samples->n == fp.n && samples->K == fp.K, ErrorKind::ShapeMismatch,
            "sample trajectories do not match the flowpipe shape");
    Eigen::VectorXd mn(fp.K + 1), mean(fp.K + 1), mx(fp.K + 1);
    for (Eigen::Index k = 0; k <= fp.K; ++k) {
      const auto col = samples->rows.col(k * fp.n + component);
      mn[k] = col.minCoeff();
      mx[k] = col.maxCoeff();
      mean[k] = col.mean();
    }
    s.sample_min = std::move(mn);
    s.sample_mean = std::move(mean);
    s.sample_max = std::move(mx);
  }
  return s;
}

/// Columns: step, lower, upper, sample_min, sample_mean, sample_max; sample
/// columns are empty without samples.
inline std::string plot_csv(const PlotSeries& s) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "step,lower,upper,sample_min,sample_mean,sample_max\n";
  for (Eigen::Index k = 0; k < s.steps(); ++k) {
    out << k << ',' << s.lower[k] << ',' << s.upper[k] << ',';
    if (s.sample_min) out << (*s.sample_min)[k] << ',' << (*s.sample_mean)[k] << ',' << (*s.sample_max)[k];
    else out << ",,";
    out << '\n';
  }
  return out.str();
}

/// Self-contained SVG: flowpipe bounds as black lines, sampled min-max band
/// shaded green, sample mean in blue.
inline std::string plot_svg(const PlotSeries& s, const std::string& title) {
  constexpr double width = 640, height = 400, left = 70, right = 20, top = 40, bottom = 50;
  double ymin = s.lower.minCoeff(), ymax = s.upper.maxCoeff();
  if (s.sample_min) {
    ymin = std::min(ymin, s.sample_min->minCoeff());
    ymax = std::max(ymax, s.sample_max->maxCoeff());
  }
  if (!(ymax > ymin)) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  const double last = static_cast<double>(std::max<Eigen::Index>(1, s.steps() - 1));
  auto px = [&](Eigen::Index k) { return left + (width - left - right) * static_cast<double>(k) / last; };
  auto py = [&](double y) { return top + (height - top - bottom) * (ymax - y) / (ymax - ymin); };

  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  auto points = [&](const Eigen::VectorXd& v) {
    std::ostringstream p;
    p << std::fixed << std::setprecision(2);
    for (Eigen::Index k = 0; k < v.size(); ++k) p << (k ? " " : "") << px(k) << ',' << py(v[k]);
    return p.str();
  };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << title << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right << "\" height=\""
      << height - top - bottom << "\" fill=\"none\" stroke=\"#888\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double y = ymin + (ymax - ymin) * t / 4.0;
    std::ostringstream label;
    label << std::setprecision(4) << y;
    out << "<text x=\"" << left - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << label.str() << "</text>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const auto k = static_cast<Eigen::Index>(std::lround(last * t / 4.0));
    std::ostringstream label;
    if (s.dt > 0) label << std::setprecision(4) << s.dt * static_cast<double>(k);
    else label << k;
    out << "<text x=\"" << px(k) << "\" y=\"" << height - bottom + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << label.str() << "</text>\n";
  }
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << (s.dt > 0 ? "time" : "step")
      << "</text>\n";
  if (s.sample_min) {
    Eigen::VectorXd rev = s.sample_min->reverse();
    std::ostringstream band;
    band << std::fixed << std::setprecision(2) << points(*s.sample_max);
    for (Eigen::Index k = 0; k < rev.size(); ++k) band << ' ' << px(rev.size() - 1 - k) << ',' << py(rev[k]);
    out << "<polygon points=\"" << band.str() << "\" fill=\"#7fc97f\" fill-opacity=\"0.6\" stroke=\"none\"/>\n";
    out << "<polyline points=\"" << points(*s.sample_mean) << "\" fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1.5\"/>\n";
  }
  out << "<polyline points=\"" << points(s.lower) << "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
  out << "<polyline points=\"" << points(s.upper) << "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace cpreach
