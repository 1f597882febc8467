#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace matchbandits {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> err;
};

/// Reads a round,series,mean,stderr file into one series per distinct name, in
/// order of first appearance.
std::vector<PlotSeries> read_curves_csv(const std::filesystem::path& file);

/// Polyline plot with a shaded band of +-err around each mean. At most 600 points
/// per series are drawn (evenly strided, last point always kept).
std::string render_svg(const std::vector<PlotSeries>& series, const std::string& title, const std::string& y_label);

void plot_curves_file(const std::filesystem::path& csv, const std::filesystem::path& svg, const std::string& title,
                      const std::string& y_label);

/// One series (by name) from each labelled curves file, drawn on shared axes.
void plot_overlay(const std::vector<std::pair<std::string, std::filesystem::path>>& files, const std::string& series,
                  const std::filesystem::path& svg, const std::string& title, const std::string& y_label);

}  // namespace matchbandits
