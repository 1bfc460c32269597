#pragma once

// Minimal log-log line plots as standalone SVG.

#include <iosfwd>
#include <string>
#include <vector>

namespace robustcov {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Points with a non-positive coordinate are dropped. Axes span the decades
/// covering the remaining points.
void write_loglog_svg(std::ostream& out, const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series);

}  // namespace robustcov
