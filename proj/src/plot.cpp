#include "matchbandits/plot.hpp"

#include "matchbandits/format.hpp"
#include "matchbandits/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace matchbandits {

namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 440;
constexpr double kLeft = 80;
constexpr double kRight = 150;
constexpr double kTop = 40;
constexpr double kBottom = 50;
constexpr std::size_t kMaxPoints = 600;

constexpr std::array<const char*, 10> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(s);
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

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::vector<std::size_t> stride_indices(std::size_t n) {
  std::vector<std::size_t> idx;
  if (n == 0) return idx;
  const std::size_t stride = (n + kMaxPoints - 1) / kMaxPoints;
  for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

}  // namespace

std::vector<PlotSeries> read_curves_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot read " + file.string());
  std::string line;
  if (!std::getline(in, line) || line != "round,series,mean,stderr") {
    throw Error(file.string() + ": expected header round,series,mean,stderr");
  }
  std::vector<PlotSeries> out;
  std::map<std::string, std::size_t> index;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string round, name, mean, err;
    if (!std::getline(ss, round, ',') || !std::getline(ss, name, ',') || !std::getline(ss, mean, ',') ||
        !std::getline(ss, err)) {
      throw Error(file.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    auto [it, fresh] = index.try_emplace(name, out.size());
    if (fresh) out.push_back({name, {}, {}, {}});
    auto& s = out[it->second];
    try {
      s.x.push_back(parse_double(round));
      s.mean.push_back(parse_double(mean));
      s.err.push_back(parse_double(err));
    } catch (const std::exception&) {
      throw Error(file.string() + ":" + std::to_string(line_no) + ": bad number");
    }
  }
  return out;
}

std::string render_svg(const std::vector<PlotSeries>& series, const std::string& title, const std::string& y_label) {
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 0.0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.mean[i])) continue;
      const double e = std::isfinite(s.err[i]) ? s.err[i] : 0.0;
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.mean[i] - e);
      y_max = std::max(y_max, s.mean[i] + e);
    }
  }
  if (y_max - y_min < 1e-12) y_max = y_min + 1.0;
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const auto sx = [&](double x) { return kLeft + pw * x / x_max; };
  const auto sy = [&](double y) { return kTop + ph * (1.0 - (y - y_min) / (y_max - y_min)); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << fixed(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
    << "</text>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << fixed(pw) << "\" height=\"" << fixed(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x_max * k / 4.0;
    const double yv = y_min + (y_max - y_min) * k / 4.0;
    o << "<text x=\"" << fixed(sx(xv)) << "\" y=\"" << fixed(kTop + ph + 18) << "\" text-anchor=\"middle\">"
      << tick_label(xv) << "</text>\n";
    o << "<text x=\"" << fixed(kLeft - 6) << "\" y=\"" << fixed(sy(yv) + 4) << "\" text-anchor=\"end\">"
      << tick_label(yv) << "</text>\n";
    o << "<line x1=\"" << fixed(kLeft) << "\" x2=\"" << fixed(kLeft + pw) << "\" y1=\"" << fixed(sy(yv)) << "\" y2=\""
      << fixed(sy(yv)) << "\" stroke=\"#dddddd\"/>\n";
  }
  o << "<text x=\"" << fixed(kLeft + pw / 2) << "\" y=\"" << fixed(kHeight - 10) << "\" text-anchor=\"middle\">round</text>\n";
  o << "<text transform=\"translate(18," << fixed(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& cur = series[s];
    const char* color = kColors[s % kColors.size()];
    std::vector<std::size_t> idx;
    for (std::size_t i : stride_indices(cur.x.size())) {
      if (std::isfinite(cur.mean[i])) idx.push_back(i);
    }
    if (idx.empty()) continue;
    std::ostringstream band;
    for (std::size_t i : idx) {
      const double e = std::isfinite(cur.err[i]) ? cur.err[i] : 0.0;
      band << fixed(sx(cur.x[i])) << ',' << fixed(sy(cur.mean[i] + e)) << ' ';
    }
    for (auto it = idx.rbegin(); it != idx.rend(); ++it) {
      const double e = std::isfinite(cur.err[*it]) ? cur.err[*it] : 0.0;
      band << fixed(sx(cur.x[*it])) << ',' << fixed(sy(cur.mean[*it] - e)) << ' ';
    }
    o << "<polygon points=\"" << band.str() << "\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i : idx) o << fixed(sx(cur.x[i])) << ',' << fixed(sy(cur.mean[i])) << ' ';
    o << "\"/>\n";
    const double ly = kTop + 14 + 18.0 * static_cast<double>(s);
    o << "<line x1=\"" << fixed(kLeft + pw + 10) << "\" x2=\"" << fixed(kLeft + pw + 30) << "\" y1=\"" << fixed(ly)
      << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << fixed(kLeft + pw + 36) << "\" y=\"" << fixed(ly + 4) << "\">" << escape(cur.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void plot_curves_file(const std::filesystem::path& csv, const std::filesystem::path& svg, const std::string& title,
                      const std::string& y_label) {
  const auto series = read_curves_csv(csv);
  std::ofstream out(svg, std::ios::binary);
  if (!out) throw Error("cannot write " + svg.string());
  out << render_svg(series, title, y_label);
}

void plot_overlay(const std::vector<std::pair<std::string, std::filesystem::path>>& files, const std::string& series,
                  const std::filesystem::path& svg, const std::string& title, const std::string& y_label) {
  std::vector<PlotSeries> picked;
  for (const auto& [label, file] : files) {
    for (auto& s : read_curves_csv(file)) {
      if (s.name == series) {
        s.name = label;
        picked.push_back(std::move(s));
      }
    }
  }
  std::ofstream out(svg, std::ios::binary);
  if (!out) throw Error("cannot write " + svg.string());
  out << render_svg(picked, title, y_label);
}

}  // namespace matchbandits
