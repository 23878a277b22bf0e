#include <cstdio>
#include <fstream>
#include <sstream>

#include "elcont/geometry.hpp"
#include "elcont/solution_io.hpp"

namespace elcont {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
  os << "elcont-mesh v1\n";
  os << "np " << mesh.np() << "\n";
  os << "nt " << mesh.nt() << "\n";
  for (const auto& p : mesh.points)
    os << format_double(p.x1) << " " << format_double(p.x2) << "\n";
  for (const auto& t : mesh.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
  os << "nb " << mesh.boundary_edges.size() << "\n";
  for (const auto& e : mesh.boundary_edges) os << e[0] << " " << e[1] << "\n";
}

namespace {

std::string next_line(std::istream& is, const char* what) {
  std::string line;
  if (!std::getline(is, line)) throw Error(std::string("mesh read: truncated file (") + what + ")");
  return line;
}

int read_counted(std::istream& is, const char* tag) {
  std::istringstream ls(next_line(is, tag));
  std::string key;
  long long n = -1;
  ls >> key >> n;
  if (key != tag || n < 0)
    throw Error(std::string("mesh read: expected '") + tag + " <count>' line");
  return static_cast<int>(n);
}

}  // namespace

Mesh read_mesh(std::istream& is) {
  std::string header = next_line(is, "header");
  if (header != "elcont-mesh v1" && header != "elcont-solution v1")
    throw Error("mesh read: unknown header '" + header + "'");
  Mesh m;
  int np = read_counted(is, "np");
  int nt = read_counted(is, "nt");
  m.points.resize(np);
  for (int i = 0; i < np; ++i) {
    std::istringstream ls(next_line(is, "point"));
    if (!(ls >> m.points[i].x1 >> m.points[i].x2))
      throw Error("mesh read: malformed point line");
  }
  m.triangles.resize(nt);
  for (int i = 0; i < nt; ++i) {
    std::istringstream ls(next_line(is, "triangle"));
    if (!(ls >> m.triangles[i][0] >> m.triangles[i][1] >> m.triangles[i][2]))
      throw Error("mesh read: malformed triangle line");
  }
  int nb = read_counted(is, "nb");
  m.boundary_edges.resize(nb);
  for (int i = 0; i < nb; ++i) {
    std::istringstream ls(next_line(is, "boundary edge"));
    if (!(ls >> m.boundary_edges[i][0] >> m.boundary_edges[i][1]))
      throw Error("mesh read: malformed boundary edge line");
  }
  m.on_boundary.assign(np, 0);
  for (const auto& e : m.boundary_edges) {
    if (e[0] < 0 || e[0] >= np || e[1] < 0 || e[1] >= np)
      throw Error("mesh read: boundary edge index out of range");
    m.on_boundary[e[0]] = 1;
    m.on_boundary[e[1]] = 1;
  }
  m.validate();
  return m;
}

void save_mesh(const std::string& path, const Mesh& mesh) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_mesh(os, mesh);
}

Mesh load_mesh(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_mesh(is);
}

void write_solution(std::ostream& os, const Mesh& mesh, double mu,
                    const std::vector<double>& values) {
  if (static_cast<int>(values.size()) != mesh.np())
    throw Error("solution write: value count does not match mesh");
  os << "elcont-solution v1\n";
  os << "np " << mesh.np() << "\n";
  os << "nt " << mesh.nt() << "\n";
  for (const auto& p : mesh.points)
    os << format_double(p.x1) << " " << format_double(p.x2) << "\n";
  for (const auto& t : mesh.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
  os << "nb " << mesh.boundary_edges.size() << "\n";
  for (const auto& e : mesh.boundary_edges) os << e[0] << " " << e[1] << "\n";
  os << "mu " << format_double(mu) << "\n";
  for (double v : values) os << format_double(v) << "\n";
}

Solution read_solution(std::istream& is) {
  // The mesh block reuses the mesh reader, which accepts either header; peek
  // at the header first to insist on the solution variant.
  auto pos = is.tellg();
  std::string header = next_line(is, "header");
  if (header != "elcont-solution v1")
    throw Error("solution read: unknown header '" + header + "'");
  is.seekg(pos);
  Solution s;
  s.mesh = read_mesh(is);
  std::istringstream mu_line(next_line(is, "mu"));
  std::string key;
  if (!(mu_line >> key >> s.mu) || key != "mu")
    throw Error("solution read: expected 'mu <value>' line");
  s.values.resize(s.mesh.np());
  for (int i = 0; i < s.mesh.np(); ++i) {
    std::istringstream ls(next_line(is, "value"));
    if (!(ls >> s.values[i])) throw Error("solution read: malformed value line");
  }
  return s;
}

void save_solution(const std::string& path, const Mesh& mesh, double mu,
                   const std::vector<double>& values) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_solution(os, mesh, mu, values);
}

Solution load_solution(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_solution(is);
}

}  // namespace elcont
