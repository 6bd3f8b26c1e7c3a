#include "explore/io.hpp"

#include "explore/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace explore {

void write_matrix_text(std::ostream& os, const Eigen::MatrixXd& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? " " : "") << format_number(m(r, c), 17);
    os << '\n';
  }
}

Eigen::MatrixXd read_matrix_text(std::istream& is) {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  if (!(is >> rows >> cols) || rows < 0 || cols < 0) throw ShapeError("read_matrix_text: bad header");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::string token;
      if (!(is >> token)) throw ShapeError("read_matrix_text: truncated data");
      m(r, c) = std::stod(token);
    }
  }
  return m;
}

std::string format_number(double v, int precision) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

CsvWriter::CsvWriter(std::ostream& os, std::vector<std::string> header) : os_(os), header_(std::move(header)) {
  row(header_);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size()) throw ShapeError("CsvWriter: row width does not match the header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string& c = cells[i];
    if (i) os_ << ',';
    if (c.find_first_of(",\"\n") != std::string::npos) {
      os_ << '"';
      for (char ch : c) {
        if (ch == '"') os_ << '"';
        os_ << ch;
      }
      os_ << '"';
    } else {
      os_ << c;
    }
  }
  os_ << '\n';
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

void write_line_plot_svg(std::ostream& os, const std::string& title, const std::string& x_label,
                         const std::string& y_label, const std::vector<PlotSeries>& series) {
  const double width = 640;
  const double height = 420;
  const double left = 70;
  const double right = 170;
  const double top = 40;
  const double bottom = 60;
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_min = x_min;
  double y_max = -x_min;
  for (const PlotSeries& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  if (!std::isfinite(x_min)) {
    x_min = y_min = 0.0;
    x_max = y_max = 1.0;
  }
  if (x_max - x_min < 1e-12) x_max = x_min + 1.0;
  if (y_max - y_min < 1e-12) {
    y_min -= 0.5;
    y_max += 0.5;
  }
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * pw; };
  auto py = [&](double y) { return top + ph - (y - y_min) / (y_max - y_min) * ph; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title)
     << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x_min + (x_max - x_min) * k / 4.0;
    const double yv = y_min + (y_max - y_min) * k / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
       << format_number(xv, 3) << "</text>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << format_number(yv, 3)
       << "</text>\n";
    os << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << py(yv) << "\" y2=\"" << py(yv)
       << "\" stroke=\"#dddddd\"/>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 18 << "\" text-anchor=\"middle\">"
     << escape_xml(x_label) << "</text>\n";
  os << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape_xml(y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const PlotSeries& s = series[k];
    const char* color = kPalette[k % (sizeof kPalette / sizeof kPalette[0])];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    os << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 36 << "\" y1=\"" << ly << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\">" << escape_xml(s.name) << "</text>\n";
  }
  os << "</svg>\n";
}

void write_heatmap_svg(std::ostream& os, const std::string& title, int rows, int cols,
                       const std::vector<std::pair<int, int>>& cells, const std::vector<double>& values) {
  if (cells.size() != values.size()) throw ShapeError("write_heatmap_svg: cells and values differ in length");
  const double cell = 28;
  const double top = 36;
  const double width = cols * cell + 20;
  const double height = rows * cell + top + 40;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi - lo > 1e-300 ? hi - lo : 1.0;
  // Light (#f7fbff) at the minimum to dark (#08306b) at the maximum.
  auto color = [&](double v) {
    const double t = values.empty() ? 0.0 : std::clamp((v - lo) / span, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(247 + (8 - 247) * t));
    const int g = static_cast<int>(std::lround(251 + (48 - 251) * t));
    const int b = static_cast<int>(std::lround(255 + (107 - 255) * t));
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return std::string(buf);
  };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title)
     << "</text>\n";
  std::vector<std::vector<int>> index(rows, std::vector<int>(cols, -1));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto [r, c] = cells[i];
    if (r >= 0 && r < rows && c >= 0 && c < cols) index[r][c] = static_cast<int>(i);
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int i = index[r][c];
      os << "<rect x=\"" << 10 + c * cell << "\" y=\"" << top + r * cell << "\" width=\"" << cell << "\" height=\""
         << cell << "\" fill=\"" << (i < 0 ? std::string("#555555") : color(values[i]))
         << "\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
    }
  }
  os << "<text x=\"10\" y=\"" << height - 14 << "\">min " << format_number(lo, 3) << "  max "
     << format_number(hi, 3) << "</text>\n";
  os << "</svg>\n";
}

}  // namespace explore
