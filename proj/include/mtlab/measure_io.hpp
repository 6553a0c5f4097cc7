#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mtlab/measure.hpp"

namespace mtlab {

// Plain-text measure table:
//
//   # mtlab-measure
//   # dims <D>
//   # dx <dx_1> ... <dx_D>
//   # dt <dt>
//   <J_1> ... <J_D> <weight>
//
// Weights are printed with 17 significant digits so tables round-trip exactly.

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <int D>
void write_measure_table(std::ostream& os, const DiscreteMeasure<D>& mu) {
  os << "# mtlab-measure\n# dims " << D << "\n# dx";
  for (int i = 0; i < D; ++i) os << ' ' << format_double(mu.grid().dx(i));
  os << "\n# dt " << format_double(mu.grid().dt()) << '\n';
  for (const auto& [j, w] : mu.weights()) {
    for (int i = 0; i < D; ++i) os << j[i] << ' ';
    os << format_double(w) << '\n';
  }
}

/// Header fields of a measure table, read before the dimension is known.
struct MeasureTableHeader {
  int dims = 0;
  std::vector<double> dx;
  double dt = 0.0;
};

namespace detail {

inline MeasureTableHeader parse_header(std::istream& is, std::vector<std::string>& rows) {
  MeasureTableHeader h;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] != '#') {
      rows.push_back(line);
      continue;
    }
    std::istringstream ls(line.substr(1));
    std::string key;
    ls >> key;
    if (key == "dims") {
      ls >> h.dims;
    } else if (key == "dx") {
      double v;
      while (ls >> v) h.dx.push_back(v);
    } else if (key == "dt") {
      ls >> h.dt;
    }
  }
  if (h.dims < 1) throw IoError("measure table: missing or invalid '# dims' header");
  if (static_cast<int>(h.dx.size()) != h.dims) throw IoError("measure table: '# dx' must list one width per axis");
  if (!(h.dt > 0.0)) throw IoError("measure table: missing or invalid '# dt' header");
  return h;
}

}  // namespace detail

/// Reads the whole table; the caller dispatches on header.dims.
struct MeasureTable {
  MeasureTableHeader header;
  std::vector<std::string> rows;

  template <int D>
  [[nodiscard]] DiscreteMeasure<D> as() const {
    if (header.dims != D) throw DimensionError("measure table has dimension " + std::to_string(header.dims));
    Point<D> dx{};
    for (int i = 0; i < D; ++i) dx[i] = header.dx[i];
    CartesianGrid<D> grid(dx, header.dt);
    typename DiscreteMeasure<D>::Weights w;
    for (const auto& row : rows) {
      std::istringstream ls(row);
      Index<D> j{};
      double weight = 0.0;
      for (int i = 0; i < D; ++i) {
        if (!(ls >> j[i])) throw IoError("measure table: malformed row '" + row + "'");
      }
      if (!(ls >> weight)) throw IoError("measure table: malformed row '" + row + "'");
      // Coinciding support points are merged.
      w[j] += weight;
    }
    return DiscreteMeasure<D>(grid, std::move(w));
  }
};

inline MeasureTable read_measure_table(std::istream& is) {
  MeasureTable t;
  t.header = detail::parse_header(is, t.rows);
  return t;
}

}  // namespace mtlab
