#ifndef JOULEHEAT_IO_HPP
#define JOULEHEAT_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "jouleheat/core.hpp"
#include "jouleheat/mesh.hpp"

namespace jouleheat {

/// RFC-4180 CSV writer: comma-separated fields, CRLF records, deterministic
/// "%.12g" number formatting.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot open '" + path + "' for writing");
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << escape(fields[i]);
    }
    out_ << "\r\n";
  }

  static std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
  }
  static std::string num(int v) { return std::to_string(v); }

 private:
  static std::string escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += "\"\"";
      else q += c;
    }
    q += "\"";
    return q;
  }

  std::ofstream out_;
};

/// VTK legacy ASCII (version 3.0) unstructured-grid writer, cell type 10.
inline void write_vtk(const std::string& path, const Mesh& mesh,
                      const std::vector<std::pair<std::string, const std::vector<double>*>>&
                          point_scalars = {},
                      const std::vector<std::pair<std::string, const std::vector<double>*>>&
                          cell_scalars = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  char buf[128];
  out << "# vtk DataFile Version 3.0\n";
  out << "jouleheat output\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.vertex_count() << " double\n";
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "%.12g %.12g %.12g\n", v.x, v.y, v.z);
    out << buf;
  }
  out << "CELLS " << mesh.cell_count() << " " << 5 * mesh.cell_count() << "\n";
  for (const auto& t : mesh.cells) {
    std::snprintf(buf, sizeof buf, "4 %d %d %d %d\n", t[0], t[1], t[2], t[3]);
    out << buf;
  }
  out << "CELL_TYPES " << mesh.cell_count() << "\n";
  for (int c = 0; c < mesh.cell_count(); ++c) out << "10\n";

  if (!point_scalars.empty()) {
    out << "POINT_DATA " << mesh.vertex_count() << "\n";
    for (const auto& [name, values] : point_scalars) {
      if (static_cast<int>(values->size()) != mesh.vertex_count())
        throw ConfigError("point scalar '" + name + "' does not match the mesh");
      out << "SCALARS " << name << " double 1\n";
      out << "LOOKUP_TABLE default\n";
      for (double v : *values) {
        std::snprintf(buf, sizeof buf, "%.12g\n", v);
        out << buf;
      }
    }
  }
  if (!cell_scalars.empty()) {
    out << "CELL_DATA " << mesh.cell_count() << "\n";
    for (const auto& [name, values] : cell_scalars) {
      if (static_cast<int>(values->size()) != mesh.cell_count())
        throw ConfigError("cell scalar '" + name + "' does not match the mesh");
      out << "SCALARS " << name << " double 1\n";
      out << "LOOKUP_TABLE default\n";
      for (double v : *values) {
        std::snprintf(buf, sizeof buf, "%.12g\n", v);
        out << buf;
      }
    }
  }
}

/// Line-oriented key=value run summary.
class SummaryWriter {
 public:
  explicit SummaryWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot open '" + path + "' for writing");
  }
  void kv(const std::string& key, const std::string& value) { out_ << key << "=" << value << "\n"; }
  void kv(const std::string& key, double value) { kv(key, CsvWriter::num(value)); }
  void kv(const std::string& key, int value) { out_ << key << "=" << value << "\n"; }

 private:
  std::ofstream out_;
};

inline void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

/// Mesh summary as one CSV row (with header): counts, h, volume.
inline void write_mesh_summary(const std::string& path, const std::string& geometry, int k,
                               const Mesh& mesh) {
  CsvWriter csv(path);
  csv.row({"geometry", "k", "vertices", "cells", "boundary_facets", "h_max", "volume"});
  csv.row({geometry, CsvWriter::num(k), CsvWriter::num(mesh.vertex_count()),
           CsvWriter::num(mesh.cell_count()), CsvWriter::num(static_cast<int>(mesh.boundary_facets.size())),
           CsvWriter::num(mesh.max_diameter()), CsvWriter::num(mesh.total_volume())});
}

}  // namespace jouleheat

#endif
