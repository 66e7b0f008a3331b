#include "anisomesh/mesh_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aniso {

namespace {

[[noreturn]] void parse_error(const std::string& path, int line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

// Token reader that tracks line numbers for error reporting.
class TokenReader {
 public:
  TokenReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw std::runtime_error("cannot open " + path);
  }

  bool next(std::string& tok) {
    while (true) {
      if (pos_ >= line_.size()) {
        if (!std::getline(in_, line_)) return false;
        ++lineno_;
        pos_ = 0;
        continue;
      }
      while (pos_ < line_.size() && std::isspace((unsigned char)line_[pos_])) ++pos_;
      if (pos_ >= line_.size()) continue;
      if (line_[pos_] == '#') {  // comment to end of line
        pos_ = line_.size();
        continue;
      }
      size_t start = pos_;
      while (pos_ < line_.size() && !std::isspace((unsigned char)line_[pos_])) ++pos_;
      tok = line_.substr(start, pos_ - start);
      return true;
    }
  }

  long expect_int() {
    std::string tok;
    if (!next(tok)) parse_error(path_, lineno_, "unexpected end of file, expected integer");
    try {
      size_t used = 0;
      long v = std::stol(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      parse_error(path_, lineno_, "expected integer, got '" + tok + "'");
    }
  }

  double expect_double() {
    std::string tok;
    if (!next(tok)) parse_error(path_, lineno_, "unexpected end of file, expected number");
    try {
      size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      parse_error(path_, lineno_, "expected number, got '" + tok + "'");
    }
  }

  int lineno() const { return lineno_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::string line_;
  size_t pos_ = 0;
  int lineno_ = 0;
};

void write_double(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

SimplicialMesh read_medit(const std::string& path) {
  TokenReader r(path);
  SimplicialMesh mesh;
  mesh.dim = 0;
  bool saw_end = false;

  std::string kw;
  while (!saw_end && r.next(kw)) {
    if (kw == "MeshVersionFormatted") {
      r.expect_int();
    } else if (kw == "Dimension") {
      long d = r.expect_int();
      if (d != 2 && d != 3) parse_error(path, r.lineno(), "unsupported dimension");
      mesh.dim = (int)d;
    } else if (kw == "Vertices") {
      if (mesh.dim == 0) parse_error(path, r.lineno(), "Vertices before Dimension");
      long n = r.expect_int();
      mesh.coords.reserve(n);
      for (long i = 0; i < n; ++i) {
        Vec3 p;
        for (int k = 0; k < mesh.dim; ++k) p[k] = r.expect_double();
        r.expect_int();  // vertex reference, unused
        mesh.coords.push_back(p);
      }
    } else if (kw == "Triangles") {
      long n = r.expect_int();
      for (long i = 0; i < n; ++i) {
        int a = (int)r.expect_int() - 1, b = (int)r.expect_int() - 1, c = (int)r.expect_int() - 1;
        int ref = (int)r.expect_int();
        if (mesh.dim == 2) {
          mesh.cells.insert(mesh.cells.end(), {a, b, c});
        } else {
          mesh.bfacets.insert(mesh.bfacets.end(), {a, b, c});
          mesh.bmarkers.push_back(ref);
        }
      }
    } else if (kw == "Tetrahedra") {
      if (mesh.dim != 3) parse_error(path, r.lineno(), "Tetrahedra section in a 2D file");
      long n = r.expect_int();
      for (long i = 0; i < n; ++i) {
        for (int k = 0; k < 4; ++k) mesh.cells.push_back((int)r.expect_int() - 1);
        r.expect_int();
      }
    } else if (kw == "Edges") {
      long n = r.expect_int();
      for (long i = 0; i < n; ++i) {
        int a = (int)r.expect_int() - 1, b = (int)r.expect_int() - 1;
        int ref = (int)r.expect_int();
        if (mesh.dim == 2) {
          mesh.bfacets.insert(mesh.bfacets.end(), {a, b});
          mesh.bmarkers.push_back(ref);
        }
      }
    } else if (kw == "Corners" || kw == "RequiredVertices") {
      long n = r.expect_int();
      for (long i = 0; i < n; ++i) r.expect_int();
    } else if (kw == "End") {
      saw_end = true;
    } else {
      parse_error(path, r.lineno(), "unknown section keyword '" + kw + "'");
    }
  }

  if (mesh.dim == 0) parse_error(path, r.lineno(), "missing Dimension section");
  if (mesh.coords.empty()) parse_error(path, r.lineno(), "missing Vertices section");
  for (int idx : mesh.cells)
    if (idx < 0 || idx >= mesh.vertex_count())
      throw std::runtime_error(path + ": cell vertex index out of range");
  for (int idx : mesh.bfacets)
    if (idx < 0 || idx >= mesh.vertex_count())
      throw std::runtime_error(path + ": boundary vertex index out of range");

  mesh.gids.resize(mesh.vertex_count());
  for (int v = 0; v < mesh.vertex_count(); ++v) mesh.gids[v] = v;
  mesh.orient_cells();
  if (mesh.bmarkers.empty()) mesh.derive_boundary();
  mesh.derive_vertex_flags();
  mesh.validate();
  return mesh;
}

void write_medit(const SimplicialMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "MeshVersionFormatted 2\n\nDimension " << mesh.dim << "\n\n";

  out << "Vertices\n" << mesh.vertex_count() << "\n";
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    for (int k = 0; k < mesh.dim; ++k) {
      write_double(out, mesh.coords[v][k]);
      out << ' ';
    }
    out << "0\n";
  }

  if (mesh.dim == 2) {
    out << "\nTriangles\n" << mesh.cell_count() << "\n";
    for (int c = 0; c < mesh.cell_count(); ++c) {
      auto k = mesh.cell(c);
      out << k[0] + 1 << ' ' << k[1] + 1 << ' ' << k[2] + 1 << " 0\n";
    }
    out << "\nEdges\n" << mesh.bfacet_count() << "\n";
    for (int f = 0; f < mesh.bfacet_count(); ++f) {
      auto e = mesh.bfacet(f);
      out << e[0] + 1 << ' ' << e[1] + 1 << ' ' << mesh.bmarkers[f] << "\n";
    }
  } else {
    out << "\nTetrahedra\n" << mesh.cell_count() << "\n";
    for (int c = 0; c < mesh.cell_count(); ++c) {
      auto k = mesh.cell(c);
      out << k[0] + 1 << ' ' << k[1] + 1 << ' ' << k[2] + 1 << ' ' << k[3] + 1 << " 0\n";
    }
    out << "\nTriangles\n" << mesh.bfacet_count() << "\n";
    for (int f = 0; f < mesh.bfacet_count(); ++f) {
      auto t = mesh.bfacet(f);
      out << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << ' ' << mesh.bmarkers[f] << "\n";
    }
  }
  out << "\nEnd\n";
  if (!out) throw std::runtime_error("write failed for " + path);
}

MetricField read_sol(const std::string& path, const SimplicialMesh& mesh) {
  TokenReader r(path);
  MetricField field;
  field.dim = mesh.dim;
  bool got_values = false;

  std::string kw;
  while (r.next(kw)) {
    if (kw == "MeshVersionFormatted") {
      r.expect_int();
    } else if (kw == "Dimension") {
      long d = r.expect_int();
      if (d != mesh.dim) parse_error(path, r.lineno(), "solution dimension does not match mesh");
    } else if (kw == "SolAtVertices") {
      long n = r.expect_int();
      if (n != mesh.vertex_count())
        parse_error(path, r.lineno(),
                    "solution has " + std::to_string(n) + " vertices, mesh has " +
                        std::to_string(mesh.vertex_count()));
      long nfields = r.expect_int();
      if (nfields != 1) parse_error(path, r.lineno(), "expected exactly one field");
      long type = r.expect_int();
      if (type != 3) parse_error(path, r.lineno(), "expected a symmetric tensor field (type 3)");
      const int entries = mesh.dim * (mesh.dim + 1) / 2;
      field.values.reserve(n);
      std::vector<double> buf(entries);
      for (long i = 0; i < n; ++i) {
        for (int k = 0; k < entries; ++k) buf[k] = r.expect_double();
        field.values.push_back(MetricTensor::from_lower(mesh.dim, buf));
      }
      got_values = true;
    } else if (kw == "End") {
      break;
    } else {
      parse_error(path, r.lineno(), "unknown section keyword '" + kw + "'");
    }
  }
  if (!got_values) parse_error(path, r.lineno(), "missing SolAtVertices section");
  return field;
}

void write_sol(const MetricField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "MeshVersionFormatted 2\n\nDimension " << field.dim << "\n\nSolAtVertices\n"
      << field.size() << "\n1 3\n";
  for (const auto& m : field.values) {
    bool first = true;
    for (double v : m.lower()) {
      if (!first) out << ' ';
      write_double(out, v);
      first = false;
    }
    out << "\n";
  }
  out << "\nEnd\n";
  if (!out) throw std::runtime_error("write failed for " + path);
}

void write_vtk(const SimplicialMesh& mesh, const std::string& path, const VtkPointData& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const int n = mesh.vertex_count(), nc = mesh.cell_count(), nv = mesh.dim + 1;

  out << "# vtk DataFile Version 2.0\nanisomesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << n << " double\n";
  for (const auto& p : mesh.coords) {
    write_double(out, p[0]);
    out << ' ';
    write_double(out, p[1]);
    out << ' ';
    write_double(out, p[2]);
    out << "\n";
  }
  out << "CELLS " << nc << ' ' << nc * (nv + 1) << "\n";
  for (int c = 0; c < nc; ++c) {
    auto k = mesh.cell(c);
    out << nv;
    for (int i = 0; i < nv; ++i) out << ' ' << k[i];
    out << "\n";
  }
  out << "CELL_TYPES " << nc << "\n";
  for (int c = 0; c < nc; ++c) out << (mesh.dim == 2 ? 5 : 10) << "\n";

  if (!data.scalars.empty() || !data.vectors.empty() || !data.tensors.empty()) {
    out << "POINT_DATA " << n << "\n";
    for (const auto& [name, f] : data.scalars) {
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : f->values) {
        write_double(out, v);
        out << "\n";
      }
    }
    for (const auto& [name, f] : data.vectors) {
      out << "VECTORS " << name << " double\n";
      for (const auto& v : f->values) {
        write_double(out, v[0]);
        out << ' ';
        write_double(out, v[1]);
        out << ' ';
        write_double(out, v[2]);
        out << "\n";
      }
    }
    for (const auto& [name, f] : data.tensors) {
      out << "TENSORS " << name << " double\n";
      for (const auto& m : f->values) {
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) {
            write_double(out, (i < m.dim() && j < m.dim()) ? m(i, j) : 0.0);
            if (j < 2) out << ' ';
          }
          out << "\n";
        }
        out << "\n";
      }
    }
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string stats_csv_row(const MeshStatistics& s) {
  std::ostringstream os;
  os << s.element_count << ',' << s.vertex_count << ',' << s.ar_max << ',' << s.ar_mean << ','
     << s.ar_std << ',' << s.frac_ar_gt2 << ',' << s.measure_min << ',' << s.measure_max;
  return os.str();
}

void write_stats_csv(const MeshStatistics& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << kStatsCsvHeader << "\n" << stats_csv_row(s) << "\n";
}

}  // namespace aniso
