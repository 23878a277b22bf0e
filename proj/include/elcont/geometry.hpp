#pragma once

// Polygonal domains, conforming triangulations, red-green refinement and
// nodal-field transfer between meshes.

#include <array>
#include <cmath>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "elcont/error.hpp"

namespace elcont {

struct Point2 {
  double x1 = 0.0;
  double x2 = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x1, s * a.x2}; }
inline double dot(Point2 a, Point2 b) { return a.x1 * b.x1 + a.x2 * b.x2; }
inline double norm(Point2 a) { return std::sqrt(dot(a, a)); }
/// Twice the signed area of triangle (a,b,c); > 0 for counterclockwise order.
double orient2(Point2 a, Point2 b, Point2 c);

/// Simple polygon with counterclockwise-ordered vertices.
struct PolygonDomain {
  std::vector<Point2> vertices;
  std::string name = "polygon";

  double area() const;  // shoelace formula; positive for CCW
  bool contains(Point2 p) const;
  /// Distance from p to the polygon boundary (unsigned).
  double boundary_distance(Point2 p) const;
  /// Throws Error if fewer than 3 vertices, zero area, wrong orientation
  /// or self-intersecting.
  void validate() const;

  /// Axis-aligned rectangle (x1_min,x2_min)-(x1_max,x2_max).
  static PolygonDomain rectangle(double x1_min, double x2_min, double x1_max,
                                 double x2_max, std::string name = "rectangle");
  /// Square (-half, half)^2.
  static PolygonDomain square(double half, std::string name = "square");

  /// True if the polygon is an axis-aligned rectangle (4 vertices).
  bool is_axis_aligned_rectangle() const;
};

/// Conforming triangle mesh. Triangles are counterclockwise index triples;
/// boundary edges are oriented so the domain lies on their left.
struct Mesh {
  std::vector<Point2> points;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 2>> boundary_edges;
  std::vector<char> on_boundary;  // per point

  int np() const { return static_cast<int>(points.size()); }
  int nt() const { return static_cast<int>(triangles.size()); }

  double triangle_area(int t) const;
  double longest_edge(int t) const;
  double total_area() const;

  /// Per-triangle neighbor indices across edge opposite to local vertex k
  /// (-1 on the boundary).
  std::vector<std::array<int, 3>> neighbors() const;

  /// Checks positive areas, conforming connectivity (interior edges shared by
  /// exactly two triangles, boundary edges by one), boundary flags and, if
  /// expected_area >= 0, that triangle areas sum to it within 1e-10*area.
  void validate(double expected_area = -1.0) const;
};

struct RefinementMarks {
  std::vector<int> marked;  // triangle indices
};

/// Triangulates the polygon with all edge lengths <= 1.05*hmax. Deterministic
/// for a given (domain, hmax). Existing polygon vertices appear verbatim.
Mesh triangulate(const PolygonDomain& domain, double hmax);

struct RefineResult {
  Mesh mesh;
  std::vector<int> parent;  // new triangle -> originating old triangle
};

/// Red-green refinement: marked triangles are quadrisected, neighbors get a
/// conforming closure. Old points keep their indices; old point coordinates
/// are unchanged. Throws Error on an empty or out-of-range mark set.
RefineResult refine(const Mesh& mesh, const RefinementMarks& marks);

/// Point location and interpolation with a walk-from-last-hit strategy.
class Locator {
 public:
  explicit Locator(const Mesh& mesh);
  /// Containing triangle of x, or -1 if x lies outside the mesh by more than
  /// snap_tol (points within snap_tol of a triangle are snapped onto it).
  int locate(Point2 x, double snap_tol = 1e-9);
  /// Barycentric coordinates of x in triangle t (clamped to [0,1] and
  /// renormalized when x was snapped).
  std::array<double, 3> barycentric(int t, Point2 x) const;

 private:
  const Mesh& mesh_;
  std::vector<std::array<int, 3>> nbr_;
  int last_ = 0;
};

/// P1 interpolation of nodal values at x. Throws Error when x lies outside
/// the mesh by more than the snap tolerance.
double interpolate(const Mesh& mesh, std::span<const double> values, Point2 x);

/// Interpolates a nodal field from one mesh onto the nodes of another.
/// Nodes of mesh_to must lie inside mesh_from (snap tolerance 1e-9).
std::vector<double> transfer(const Mesh& mesh_from, std::span<const double> values,
                             const Mesh& mesh_to);

// --- mesh text format ------------------------------------------------------

/// Writes the "elcont-mesh v1" text format (round-trips bit-exactly).
void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);
void save_mesh(const std::string& path, const Mesh& mesh);
Mesh load_mesh(const std::string& path);

/// Formats a double with enough digits to round-trip exactly.
std::string format_double(double v);

}  // namespace elcont
