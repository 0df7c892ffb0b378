#pragma once

// Artifact files: CSV tables (header row, ',' delimiter, 17 significant
// digits), grid maps, trajectories and gnuplot scripts.
//
// Point columns per kind:
//   euclidean   x0 .. x{L-1}
//   circle      theta
//   sphere      x, y, z
//   hyperbolic  x0, x1, x2        (x0 is the time-like coordinate)
//   spider      ray, radial
//   product     base columns, then e0 .. e{m-1}

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hmflow/error.hpp"
#include "hmflow/grid.hpp"
#include "hmflow/target.hpp"

namespace hmflow::io {

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : path_(path), out_(path) {
    require(static_cast<bool>(out_), ErrorCode::io_error, "cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
    columns_ = header.size();
  }

  void row(const std::vector<double>& cells) {
    require(cells.size() == columns_, ErrorCode::shape_mismatch, "csv row width differs from the header");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << fmt(cells[i]);
    out_ << '\n';
  }

  /// Mixed text and number cells, already formatted.
  void text_row(const std::vector<std::string>& cells) {
    require(cells.size() == columns_, ErrorCode::shape_mismatch, "csv row width differs from the header");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

  void close() {
    out_.close();
    require(!out_.fail(), ErrorCode::io_error, "failed writing " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_ = 0;
};

inline std::vector<std::string> point_columns(const TargetKind& kind) {
  switch (kind.tag) {
    case TargetTag::euclidean: {
      std::vector<std::string> h;
      for (int c = 0; c < kind.dim; ++c) h.push_back("x" + std::to_string(c));
      return h;
    }
    case TargetTag::flat_circle: return {"theta"};
    case TargetTag::sphere2: return {"x", "y", "z"};
    case TargetTag::hyperbolic2: return {"x0", "x1", "x2"};
    case TargetTag::spider: return {"ray", "radial"};
    case TargetTag::product: {
      std::vector<std::string> h = point_columns(*kind.base);
      for (int c = 0; c < kind.dim; ++c) h.push_back("e" + std::to_string(c));
      return h;
    }
  }
  return {};
}

inline void append_point(std::vector<double>& row, const TargetKind& kind, const TargetPoint& p) {
  if (kind.tag == TargetTag::spider || (kind.tag == TargetTag::product && kind.base->tag == TargetTag::spider))
    row.push_back(p.ray);
  for (int c = 0; c < kind.coord_count(); ++c) row.push_back(p.x[c]);
}

inline TargetPoint parse_point(const TargetKind& kind, const double* cells) {
  TargetPoint p;
  const bool spider = kind.tag == TargetTag::spider || (kind.tag == TargetTag::product && kind.base->tag == TargetTag::spider);
  if (spider) p.ray = static_cast<int>(*cells++);
  for (int c = 0; c < kind.coord_count(); ++c) p.x[c] = cells[c];
  return p;
}

inline std::vector<std::string> index_columns(const GridDomain& d) {
  return d.dim == 1 ? std::vector<std::string>{"idx"} : std::vector<std::string>{"idx", "idx2"};
}

inline void append_index(std::vector<double>& row, const GridDomain& d, int node) {
  row.push_back(d.i1(node));
  if (d.dim == 2) row.push_back(d.i2(node));
}

/// One row per node: idx[, idx2], then the point columns.
inline void write_grid_map(const std::filesystem::path& path, const GridMap& u) {
  std::vector<std::string> header = index_columns(u.domain);
  for (auto& c : point_columns(u.kind)) header.push_back(c);
  CsvWriter w(path, header);
  for (int i = 0; i < u.size(); ++i) {
    std::vector<double> row;
    append_index(row, u.domain, i);
    append_point(row, u.kind, u[i]);
    w.row(row);
  }
  w.close();
}

/// <dir>/level_KKKKK.csv for every level plus <dir>/index.csv (k, t, file).
inline std::vector<std::string> write_trajectory(const std::filesystem::path& dir, const Trajectory& traj) {
  check_trajectory(traj);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::io_error, "cannot create " + dir.string());
  std::vector<std::string> files;
  std::ofstream index(dir / "index.csv");
  require(static_cast<bool>(index), ErrorCode::io_error, "cannot write " + (dir / "index.csv").string());
  index << "k,t,file\n";
  for (int k = 0; k <= traj.K(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "level_%05d.csv", k);
    write_grid_map(dir / name, traj.maps[k]);
    index << k << ',' << fmt(traj.time(k)) << ',' << name << '\n';
    files.push_back(name);
  }
  files.push_back("index.csv");
  index.close();
  require(!index.fail(), ErrorCode::io_error, "failed writing " + (dir / "index.csv").string());
  return files;
}

/// Reads a file written by write_grid_map. Rows may come in any order; every
/// node must appear once and each point must lie on the target.
inline GridMap read_grid_map(const std::filesystem::path& path, const GridDomain& d, const TargetKind& kind) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io_error, "cannot read " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::io_error, path.string() + ": empty file");
  const std::size_t width = index_columns(d).size() + point_columns(kind).size();
  std::vector<TargetPoint> v(d.size());
  std::vector<char> seen(d.size(), 0);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    try {
      while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
    } catch (const std::exception&) {
      fail(ErrorCode::io_error, where + ": not a number");
    }
    require(cells.size() == width, ErrorCode::io_error, where + ": expected " + std::to_string(width) + " columns");
    const int i1 = static_cast<int>(cells[0]);
    const int i2 = d.dim == 2 ? static_cast<int>(cells[1]) : 0;
    require(i1 >= 0 && i1 < d.n1 && i2 >= 0 && i2 < d.n2, ErrorCode::io_error, where + ": index outside the grid");
    const int node = d.index(i1, i2);
    require(!seen[node], ErrorCode::io_error, where + ": repeated node");
    seen[node] = 1;
    const TargetPoint p = parse_point(kind, cells.data() + d.dim);
    require(is_valid(kind, p), ErrorCode::io_error, where + ": point is not on the target");
    v[node] = canonicalize(kind, p);
  }
  for (int i = 0; i < d.size(); ++i)
    require(seen[i], ErrorCode::io_error, path.string() + ": node " + std::to_string(i) + " missing");
  return GridMap(d, kind, std::move(v));
}

struct PlotPanel {
  std::string file;  // csv file name relative to the script
  std::string x, y;  // column names
  std::string title;
  bool logscale = false;
};

/// A gnuplot script drawing each panel to <file stem>_<y>.png next to the CSVs.
inline void write_plot_script(const std::filesystem::path& path, const std::vector<PlotPanel>& panels) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::io_error, "cannot write " + path.string());
  out << "# gnuplot " << path.filename().string() << "\n"
      << "set datafile separator ','\n"
      << "set key autotitle columnhead\n"
      << "set terminal pngcairo size 800,500\n";
  for (const PlotPanel& p : panels) {
    const std::string stem = std::filesystem::path(p.file).stem().string() + "_" + p.y;
    out << "\nset output '" << stem << ".png'\n"
        << "set title '" << p.title << "'\n"
        << "set xlabel '" << p.x << "'\n"
        << "set ylabel '" << p.y << "'\n"
        << (p.logscale ? "set logscale xy\n" : "unset logscale\n")
        << "plot '" << p.file << "' using '" << p.x << "':'" << p.y << "' with linespoints\n";
  }
  out << "\nunset output\n";
  require(!out.fail(), ErrorCode::io_error, "failed writing " + path.string());
}

}  // namespace hmflow::io
