#pragma once

// Flat-file output: matrix text, CSV tables and simple SVG charts.

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace explore {

/// Header "rows cols", then one whitespace-separated line per row.
void write_matrix_text(std::ostream& os, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_text(std::istream& is);

/// Shortest round-trippable-enough representation (%.10g); "nan" / "inf".
std::string format_number(double v, int precision = 10);

/// Writes a header on construction; every row must match its width.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::vector<std::string> header);

  void row(const std::vector<std::string>& cells);
  std::size_t width() const { return header_.size(); }

 private:
  std::ostream& os_;
  std::vector<std::string> header_;
};

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line chart with labeled axes and a legend, one polyline per series.
void write_line_plot_svg(std::ostream& os, const std::string& title, const std::string& x_label,
                         const std::string& y_label, const std::vector<PlotSeries>& series);

/// Grid heatmap. `cells[i]` is the (row, col) of `values[i]`; other cells are
/// drawn as walls. Linear color scale from light (minimum) to dark (maximum).
void write_heatmap_svg(std::ostream& os, const std::string& title, int rows, int cols,
                       const std::vector<std::pair<int, int>>& cells, const std::vector<double>& values);

}  // namespace explore
