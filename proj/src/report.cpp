#include "condot/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace condot {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 48.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

void header(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(kWidth, 0) << "\" height=\""
     << fixed(kHeight, 0) << "\" viewBox=\"0 0 " << fixed(kWidth, 0) << ' ' << fixed(kHeight, 0)
     << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << fixed(kWidth / 2, 1) << "\" y=\"24\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"14\">" << escape(title) << "</text>\n";
  os << "<rect x=\"" << fixed(kMargin, 1) << "\" y=\"" << fixed(kMargin, 1) << "\" width=\""
     << fixed(kWidth - 2 * kMargin, 1) << "\" height=\"" << fixed(kHeight - 2 * kMargin, 1)
     << "\" fill=\"none\" stroke=\"#888\"/>\n";
}

void axis_labels(std::ostringstream& os, const Range& x, const Range& y) {
  const double bottom = kHeight - kMargin;
  os << "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"#444\">\n";
  os << "<text x=\"" << fixed(kMargin, 1) << "\" y=\"" << fixed(bottom + 14, 1) << "\">"
     << fixed(x.lo, 3) << "</text>\n";
  os << "<text x=\"" << fixed(kWidth - kMargin, 1) << "\" y=\"" << fixed(bottom + 14, 1)
     << "\" text-anchor=\"end\">" << fixed(x.hi, 3) << "</text>\n";
  os << "<text x=\"" << fixed(kMargin - 4, 1) << "\" y=\"" << fixed(bottom, 1)
     << "\" text-anchor=\"end\">" << fixed(y.lo, 3) << "</text>\n";
  os << "<text x=\"" << fixed(kMargin - 4, 1) << "\" y=\"" << fixed(kMargin + 8, 1)
     << "\" text-anchor=\"end\">" << fixed(y.hi, 3) << "</text>\n";
  os << "</g>\n";
}

void legend(std::ostringstream& os, const std::vector<std::string>& names) {
  for (std::size_t k = 0; k < names.size(); ++k) {
    const double y = kMargin + 14.0 + 14.0 * static_cast<double>(k);
    os << "<text x=\"" << fixed(kWidth - kMargin - 6, 1) << "\" y=\"" << fixed(y, 1)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
       << kPalette[k % 6] << "\">" << escape(names[k]) << "</text>\n";
  }
}

}  // namespace

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  std::string s = buf;
  if (s == "-0" || s.find_first_not_of("-0.") == std::string::npos) {
    if (!s.empty() && s[0] == '-') s.erase(0, 1);
  }
  return s;
}

std::string loss_curve_svg(const std::vector<HistoryRow>& rows, const std::string& title) {
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  Range x, y;
  for (const auto& r : rows) {
    series[r.loss].emplace_back(static_cast<double>(r.step), r.value);
    x.add(static_cast<double>(r.step));
    y.add(r.value);
  }
  x.pad();
  y.pad();
  std::ostringstream os;
  header(os, title);
  std::vector<std::string> names;
  std::size_t k = 0;
  for (const auto& [name, pts] : series) {
    names.push_back(name);
    os << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << kPalette[k % 6] << "\" points=\"";
    bool first = true;
    for (const auto& [sx, sy] : pts) {
      if (!std::isfinite(sy)) continue;
      if (!first) os << ' ';
      first = false;
      os << fixed(x.map(sx, kMargin, kWidth - kMargin), 2) << ','
         << fixed(y.map(sy, kHeight - kMargin, kMargin), 2);
    }
    os << "\"/>\n";
    ++k;
  }
  axis_labels(os, x, y);
  legend(os, names);
  os << "</svg>\n";
  return os.str();
}

std::string scatter_svg(const Matrix& source, const Matrix& target, const Matrix& predicted,
                        const std::string& title) {
  if (source.cols() != 2 || target.cols() != 2 || predicted.cols() != 2) {
    throw Error(Errc::ShapeMismatch, "scatter plots need two-dimensional samples");
  }
  Range x, y;
  for (const Matrix* m : {&source, &target, &predicted}) {
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      x.add((*m)(i, 0));
      y.add((*m)(i, 1));
    }
  }
  x.pad();
  y.pad();
  std::ostringstream os;
  header(os, title);
  const std::vector<std::pair<std::string, const Matrix*>> sets{
      {"source", &source}, {"target", &target}, {"predicted", &predicted}};
  std::vector<std::string> names;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    names.push_back(sets[k].first);
    os << "<g fill=\"" << kPalette[k] << "\" fill-opacity=\"0.5\">\n";
    const Matrix& m = *sets[k].second;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, 0)) || !std::isfinite(m(i, 1))) continue;
      os << "<circle cx=\"" << fixed(x.map(m(i, 0), kMargin, kWidth - kMargin), 2) << "\" cy=\""
         << fixed(y.map(m(i, 1), kHeight - kMargin, kMargin), 2) << "\" r=\"2\"/>\n";
    }
    os << "</g>\n";
  }
  axis_labels(os, x, y);
  legend(os, names);
  os << "</svg>\n";
  return os.str();
}

std::string markdown_table(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    os << '|';
    for (const auto& c : cells) os << ' ' << c << " |";
    os << '\n';
  };
  line(header);
  os << '|';
  for (std::size_t k = 0; k < header.size(); ++k) os << " --- |";
  os << '\n';
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw Error(Errc::ShapeMismatch, "table row has the wrong width");
    line(r);
  }
  return os.str();
}

}  // namespace condot
