#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "privtuner/sweep.hpp"

namespace privtuner::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Static SVG 1.1 line chart. Output bytes depend only on the inputs.
void line_chart(const std::string& title, const std::string& x_label,
                const std::string& y_label, const std::vector<Series>& series,
                std::ostream& out);

// One chart per metric (energy, privacy, objective) from sweep rows; series
// are allocators, values averaged over repetitions, infeasible points
// skipped. Returns the file names written into out_dir. Throws
// io::ConfigError when the rows contain no plottable data.
std::vector<std::string> render_plots(const std::vector<sweep::SweepRow>& rows,
                                      const std::string& out_dir, const std::string& stem);

// Convenience wrapper reading a sweep CSV.
std::vector<std::string> render_plots_csv(const std::string& csv_path,
                                          const std::string& out_dir);

}  // namespace privtuner::svg
