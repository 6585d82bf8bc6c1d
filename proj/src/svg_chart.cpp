#include "privtuner/svg_chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

namespace privtuner::svg {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 78;
constexpr int kMarginRight = 24;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 56;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
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

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range span(const std::vector<Series>& series, bool use_y) {
  Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Series& s : series) {
    const std::vector<double>& v = use_y ? s.y : s.x;
    for (double val : v) {
      r.lo = std::min(r.lo, val);
      r.hi = std::max(r.hi, val);
    }
  }
  if (!(r.lo < r.hi)) {
    const double pad = std::max(1.0, std::fabs(r.lo)) * 0.05;
    r.lo -= pad;
    r.hi += pad;
  }
  return r;
}

}  // namespace

void line_chart(const std::string& title, const std::string& x_label,
                const std::string& y_label, const std::vector<Series>& series,
                std::ostream& out) {
  bool any = false;
  for (const Series& s : series) any = any || !s.x.empty();
  if (!any) throw io::ConfigError("svg: no data points to plot");

  const Range xr = span(series, false);
  const Range yr = span(series, true);
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto px = [&](double x) { return kMarginLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
  auto py = [&](double y) { return kMarginTop + (yr.hi - y) / (yr.hi - yr.lo) * plot_h; };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight
      << "\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << xml_escape(title) << "</text>\n";

  // frame and gridlines with tick labels
  out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << num(plot_w)
      << "\" height=\"" << num(plot_h) << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  const int ticks = 5;
  for (int t = 0; t <= ticks; ++t) {
    const double fx = xr.lo + (xr.hi - xr.lo) * t / ticks;
    const double fy = yr.lo + (yr.hi - yr.lo) * t / ticks;
    out << "<line x1=\"" << num(px(fx)) << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
        << num(px(fx)) << "\" y2=\"" << kMarginTop + plot_h + 5
        << "\" stroke=\"#333333\"/>\n";
    out << "<text x=\"" << num(px(fx)) << "\" y=\"" << kMarginTop + plot_h + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(fx)
        << "</text>\n";
    out << "<line x1=\"" << kMarginLeft - 5 << "\" y1=\"" << num(py(fy)) << "\" x2=\""
        << kMarginLeft << "\" y2=\"" << num(py(fy)) << "\" stroke=\"#333333\"/>\n";
    out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << num(py(fy) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(fy)
        << "</text>\n";
  }
  out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << xml_escape(x_label) << "</text>\n";
  out << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 18 "
      << kMarginTop + plot_h / 2 << ")\">" << xml_escape(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof kPalette / sizeof kPalette[0])];
    if (!series[s].x.empty()) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < series[s].x.size(); ++i) {
        if (i) out << " ";
        out << num(px(series[s].x[i])) << "," << num(py(series[s].y[i]));
      }
      out << "\"/>\n";
      for (std::size_t i = 0; i < series[s].x.size(); ++i)
        out << "<circle cx=\"" << num(px(series[s].x[i])) << "\" cy=\""
            << num(py(series[s].y[i])) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    // legend row
    const double ly = kMarginTop + 10 + 16.0 * static_cast<double>(s);
    out << "<line x1=\"" << kMarginLeft + 10 << "\" y1=\"" << num(ly) << "\" x2=\""
        << kMarginLeft + 34 << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kMarginLeft + 40 << "\" y=\"" << num(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(series[s].name)
        << "</text>\n";
  }
  out << "</svg>\n";
}

namespace {

struct Metric {
  const char* name;
  const char* label;
};

const Metric kMetrics[] = {{"energy", "total energy (J)"},
                           {"privacy", "weighted privacy level (bits)"},
                           {"objective", "objective value"}};

double metric_value(const sweep::SweepRow& row, const std::string& metric) {
  if (metric == "energy") return *row.energy;
  if (metric == "privacy") return *row.privacy;
  return *row.objective;
}

}  // namespace

std::vector<std::string> render_plots(const std::vector<sweep::SweepRow>& rows,
                                      const std::string& out_dir, const std::string& stem) {
  if (rows.empty()) throw io::ConfigError("svg: no data rows");
  std::filesystem::create_directories(out_dir);

  std::vector<std::string> written;
  for (const Metric& metric : kMetrics) {
    // allocator -> value -> (sum, count), ordered for stable output
    std::map<std::string, std::map<double, std::pair<double, int>>> grouped;
    for (const sweep::SweepRow& row : rows) {
      if (!row.ok()) continue;
      auto& cell = grouped[row.allocator][row.value];
      cell.first += metric_value(row, metric.name);
      cell.second += 1;
    }
    std::vector<Series> series;
    for (const auto& [allocator, points] : grouped) {
      Series s;
      s.name = allocator;
      for (const auto& [x, sum_count] : points) {
        s.x.push_back(x);
        s.y.push_back(sum_count.first / sum_count.second);
      }
      series.push_back(std::move(s));
    }
    if (series.empty()) throw io::ConfigError("svg: no feasible rows to plot");

    const std::string name = stem + "_" + metric.name + ".svg";
    const std::filesystem::path path = std::filesystem::path(out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io::ConfigError("svg: cannot write " + path.string());
    line_chart(std::string(metric.name) + " vs " + rows.front().parameter,
               rows.front().parameter, metric.label, series, out);
    written.push_back(name);
  }
  return written;
}

std::vector<std::string> render_plots_csv(const std::string& csv_path,
                                          const std::string& out_dir) {
  const sweep::ParsedSweep parsed = sweep::read_rows_csv_file(csv_path);
  std::string stem = std::filesystem::path(csv_path).stem().string();
  if (stem.empty()) stem = "sweep";
  return render_plots(parsed.rows, out_dir, stem);
}

}  // namespace privtuner::svg
