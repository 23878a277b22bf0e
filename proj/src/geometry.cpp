#include "elcont/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace elcont {

double orient2(Point2 a, Point2 b, Point2 c) {
  return (b.x1 - a.x1) * (c.x2 - a.x2) - (b.x2 - a.x2) * (c.x1 - a.x1);
}

// --- PolygonDomain ---------------------------------------------------------

double PolygonDomain::area() const {
  double s = 0.0;
  const int n = static_cast<int>(vertices.size());
  for (int i = 0; i < n; ++i) {
    const Point2& p = vertices[i];
    const Point2& q = vertices[(i + 1) % n];
    s += p.x1 * q.x2 - q.x1 * p.x2;
  }
  return 0.5 * s;
}

bool PolygonDomain::contains(Point2 p) const {
  // Even-odd rule with a horizontal ray; boundary points count as inside.
  const int n = static_cast<int>(vertices.size());
  if (boundary_distance(p) < 1e-12) return true;
  bool inside = false;
  for (int i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = vertices[i];
    const Point2& b = vertices[j];
    if ((a.x2 > p.x2) != (b.x2 > p.x2)) {
      double xint = a.x1 + (p.x2 - a.x2) / (b.x2 - a.x2) * (b.x1 - a.x1);
      if (p.x1 < xint) inside = !inside;
    }
  }
  return inside;
}

static double segment_distance(Point2 p, Point2 a, Point2 b) {
  Point2 d = b - a;
  double len2 = dot(d, d);
  double t = len2 > 0 ? std::clamp(dot(p - a, d) / len2, 0.0, 1.0) : 0.0;
  Point2 c = a + t * d;
  return norm(p - c);
}

double PolygonDomain::boundary_distance(Point2 p) const {
  double best = std::numeric_limits<double>::max();
  const int n = static_cast<int>(vertices.size());
  for (int i = 0; i < n; ++i)
    best = std::min(best, segment_distance(p, vertices[i], vertices[(i + 1) % n]));
  return best;
}

static bool segments_properly_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
  double d1 = orient2(c, d, a), d2 = orient2(c, d, b);
  double d3 = orient2(a, b, c), d4 = orient2(a, b, d);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

void PolygonDomain::validate() const {
  const int n = static_cast<int>(vertices.size());
  if (n < 3) throw Error("polygon '" + name + "': fewer than 3 vertices");
  double diam = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) diam = std::max(diam, norm(vertices[i] - vertices[j]));
  for (int i = 0; i < n; ++i) {
    if (norm(vertices[i] - vertices[(i + 1) % n]) < 1e-14 * diam)
      throw Error("polygon '" + name + "': duplicate consecutive vertices");
  }
  double a = area();
  if (a < 0) throw Error("polygon '" + name + "': clockwise orientation (require CCW)");
  if (a < 1e-14 * diam * diam)
    throw Error("polygon '" + name + "': degenerate (zero area)");
  // Self-intersection: any two non-adjacent edges crossing properly.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_properly_intersect(vertices[i], vertices[(i + 1) % n],
                                      vertices[j], vertices[(j + 1) % n]))
        throw Error("polygon '" + name + "': self-intersecting boundary");
    }
  }
}

PolygonDomain PolygonDomain::rectangle(double x1_min, double x2_min, double x1_max,
                                       double x2_max, std::string name) {
  PolygonDomain d;
  d.vertices = {{x1_min, x2_min}, {x1_max, x2_min}, {x1_max, x2_max}, {x1_min, x2_max}};
  d.name = std::move(name);
  return d;
}

PolygonDomain PolygonDomain::square(double half, std::string name) {
  return rectangle(-half, -half, half, half, std::move(name));
}

bool PolygonDomain::is_axis_aligned_rectangle() const {
  if (vertices.size() != 4) return false;
  for (int i = 0; i < 4; ++i) {
    Point2 e = vertices[(i + 1) % 4] - vertices[i];
    if (std::abs(e.x1) > 1e-14 && std::abs(e.x2) > 1e-14) return false;
  }
  return std::abs(area()) > 0;
}

// --- Mesh ------------------------------------------------------------------

double Mesh::triangle_area(int t) const {
  const auto& tr = triangles[t];
  return 0.5 * orient2(points[tr[0]], points[tr[1]], points[tr[2]]);
}

double Mesh::longest_edge(int t) const {
  const auto& tr = triangles[t];
  double h = 0.0;
  for (int k = 0; k < 3; ++k)
    h = std::max(h, norm(points[tr[k]] - points[tr[(k + 1) % 3]]));
  return h;
}

double Mesh::total_area() const {
  double s = 0.0;
  for (int t = 0; t < nt(); ++t) s += triangle_area(t);
  return s;
}

namespace {
// Undirected edge key with a < b.
inline std::pair<int, int> edge_key(int a, int b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}
}  // namespace

std::vector<std::array<int, 3>> Mesh::neighbors() const {
  std::vector<std::array<int, 3>> nbr(nt(), {-1, -1, -1});
  std::map<std::pair<int, int>, std::pair<int, int>> first;  // edge -> (tri, local)
  for (int t = 0; t < nt(); ++t) {
    for (int k = 0; k < 3; ++k) {
      // Edge opposite local vertex k.
      auto key = edge_key(triangles[t][(k + 1) % 3], triangles[t][(k + 2) % 3]);
      auto it = first.find(key);
      if (it == first.end()) {
        first.emplace(key, std::pair{t, k});
      } else {
        nbr[t][k] = it->second.first;
        nbr[it->second.first][it->second.second] = t;
        first.erase(it);
      }
    }
  }
  return nbr;
}

void Mesh::validate(double expected_area) const {
  if (static_cast<int>(on_boundary.size()) != np())
    throw Error("mesh: boundary flag size mismatch");
  double total = 0.0;
  for (int t = 0; t < nt(); ++t) {
    const auto& tr = triangles[t];
    for (int k = 0; k < 3; ++k) {
      if (tr[k] < 0 || tr[k] >= np()) throw Error("mesh: triangle index out of range");
      if (tr[k] == tr[(k + 1) % 3]) throw Error("mesh: degenerate triangle");
    }
    double a = triangle_area(t);
    if (a <= 0) throw Error("mesh: non-positive triangle area");
    total += a;
  }
  // Edge-to-triangle incidence.
  std::map<std::pair<int, int>, int> count;
  for (const auto& tr : triangles)
    for (int k = 0; k < 3; ++k) ++count[edge_key(tr[k], tr[(k + 1) % 3])];
  std::set<std::pair<int, int>> bset;
  for (const auto& e : boundary_edges) bset.insert(edge_key(e[0], e[1]));
  for (const auto& [e, c] : count) {
    bool on_bd = bset.count(e) > 0;
    if (on_bd && c != 1)
      throw Error("mesh: boundary edge shared by " + std::to_string(c) + " triangles");
    if (!on_bd && c != 2)
      throw Error("mesh: interior edge shared by " + std::to_string(c) + " triangles");
  }
  for (const auto& e : boundary_edges)
    if (!on_boundary[e[0]] || !on_boundary[e[1]])
      throw Error("mesh: boundary edge endpoint not flagged as boundary");
  if (expected_area >= 0 && std::abs(total - expected_area) > 1e-10 * expected_area)
    throw Error("mesh: triangle areas do not sum to the domain area");
}

// --- structured rectangle triangulation ------------------------------------

namespace {

// Delaunay refiners with quality bounds (Triangle, initmesh) deliver mean
// edge lengths well below the hmax ceiling; sizing the lattice at 3/4 of the
// bound reproduces that resolution for a given hmax instead of sitting at the
// coarsest conforming mesh.
constexpr double kEdgeTarget = 0.75;

// Criss-cross pattern: every grid cell is split into four triangles through
// its center. For a square with an equal cell count per side the mesh is
// invariant under the full symmetry group of the square, which downstream
// symmetry checks rely on.
Mesh structured_rectangle(const PolygonDomain& dom, double hmax) {
  double x1_min = dom.vertices[0].x1, x1_max = x1_min, x2_min = dom.vertices[0].x2,
         x2_max = x2_min;
  for (const auto& v : dom.vertices) {
    x1_min = std::min(x1_min, v.x1);
    x1_max = std::max(x1_max, v.x1);
    x2_min = std::min(x2_min, v.x2);
    x2_max = std::max(x2_max, v.x2);
  }
  const double lx = x1_max - x1_min, ly = x2_max - x2_min;

  Mesh m;
  if (hmax >= std::hypot(lx, ly)) {
    // Degenerate coarse case: two triangles over the four corners.
    m.points = {{x1_min, x2_min}, {x1_max, x2_min}, {x1_max, x2_max}, {x1_min, x2_max}};
    m.triangles = {{0, 1, 2}, {0, 2, 3}};
    m.boundary_edges = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    m.on_boundary.assign(4, 1);
    return m;
  }

  const double target = kEdgeTarget * hmax;
  const int nx = static_cast<int>(std::ceil(lx / target - 1e-12));
  const int ny = static_cast<int>(std::ceil(ly / target - 1e-12));
  const double gx = lx / nx, gy = ly / ny;

  auto grid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.points.push_back({x1_min + i * gx, x2_min + j * gy});
  const int c0 = static_cast<int>(m.points.size());
  auto center = [&](int i, int j) { return c0 + j * nx + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      m.points.push_back({x1_min + (i + 0.5) * gx, x2_min + (j + 0.5) * gy});

  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      int bl = grid(i, j), br = grid(i + 1, j), tr = grid(i + 1, j + 1),
          tl = grid(i, j + 1), c = center(i, j);
      m.triangles.push_back({bl, br, c});
      m.triangles.push_back({br, tr, c});
      m.triangles.push_back({tr, tl, c});
      m.triangles.push_back({tl, bl, c});
    }
  }

  m.on_boundary.assign(m.points.size(), 0);
  for (int i = 0; i < nx; ++i) m.boundary_edges.push_back({grid(i, 0), grid(i + 1, 0)});
  for (int j = 0; j < ny; ++j)
    m.boundary_edges.push_back({grid(nx, j), grid(nx, j + 1)});
  for (int i = nx; i > 0; --i)
    m.boundary_edges.push_back({grid(i, ny), grid(i - 1, ny)});
  for (int j = ny; j > 0; --j) m.boundary_edges.push_back({grid(0, j), grid(0, j - 1)});
  for (const auto& e : m.boundary_edges) {
    m.on_boundary[e[0]] = 1;
    m.on_boundary[e[1]] = 1;
  }
  return m;
}

// --- Bowyer-Watson Delaunay for general polygons ---------------------------

struct DelaunayTri {
  std::array<int, 3> v;
  bool alive = true;
};

// Strict in-circumcircle test for CCW triangle (a,b,c); tolerance relative to
// the magnitude of the determinant terms.
bool in_circle(Point2 a, Point2 b, Point2 c, Point2 d) {
  double ax = a.x1 - d.x1, ay = a.x2 - d.x2;
  double bx = b.x1 - d.x1, by = b.x2 - d.x2;
  double cx = c.x1 - d.x1, cy = c.x2 - d.x2;
  double a2 = ax * ax + ay * ay, b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
  double det = ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx);
  double mag = std::abs(ax * by * c2) + std::abs(ay * b2 * cx) + std::abs(a2 * bx * cy) +
               std::abs(ax * b2 * cy) + std::abs(ay * bx * c2) + std::abs(a2 * by * cx);
  return det > 1e-12 * mag;
}

// Incremental Bowyer-Watson over a fixed point list. O(n * nt) triangle scans;
// fine for the few-thousand-point meshes this project builds.
std::vector<std::array<int, 3>> delaunay(const std::vector<Point2>& pts) {
  double lo1 = pts[0].x1, hi1 = lo1, lo2 = pts[0].x2, hi2 = lo2;
  for (const auto& p : pts) {
    lo1 = std::min(lo1, p.x1);
    hi1 = std::max(hi1, p.x1);
    lo2 = std::min(lo2, p.x2);
    hi2 = std::max(hi2, p.x2);
  }
  double cx = 0.5 * (lo1 + hi1), cy = 0.5 * (lo2 + hi2);
  double r = std::max({hi1 - lo1, hi2 - lo2, 1e-9}) * 64.0;

  std::vector<Point2> p = pts;
  const int n = static_cast<int>(pts.size());
  p.push_back({cx - 2 * r, cy - r});
  p.push_back({cx + 2 * r, cy - r});
  p.push_back({cx, cy + 2 * r});

  std::vector<DelaunayTri> tris;
  tris.push_back({{n, n + 1, n + 2}, true});

  std::vector<int> bad;
  for (int ip = 0; ip < n; ++ip) {
    bad.clear();
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
      if (!tris[t].alive) continue;
      const auto& v = tris[t].v;
      if (in_circle(p[v[0]], p[v[1]], p[v[2]], p[ip])) bad.push_back(t);
    }
    if (bad.empty()) {
      // Point exactly on a shared circumcircle boundary or duplicate; nudge the
      // test by locating the containing triangle directly.
      for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
        if (!tris[t].alive) continue;
        const auto& v = tris[t].v;
        double s0 = orient2(p[v[0]], p[v[1]], p[ip]);
        double s1 = orient2(p[v[1]], p[v[2]], p[ip]);
        double s2 = orient2(p[v[2]], p[v[0]], p[ip]);
        if (s0 >= 0 && s1 >= 0 && s2 >= 0) {
          bad.push_back(t);
          break;
        }
      }
      if (bad.empty()) throw Error("triangulate: point insertion failed (degenerate input)");
    }
    // Cavity boundary: edges of bad triangles not shared by two bad triangles.
    std::map<std::pair<int, int>, std::array<int, 2>> edges;  // key -> oriented edge
    for (int t : bad) {
      const auto& v = tris[t].v;
      for (int k = 0; k < 3; ++k) {
        int a = v[k], b = v[(k + 1) % 3];
        auto key = edge_key(a, b);
        auto it = edges.find(key);
        if (it == edges.end())
          edges.emplace(key, std::array{a, b});
        else
          edges.erase(it);
      }
      tris[t].alive = false;
    }
    for (const auto& [key, e] : edges) {
      (void)key;
      tris.push_back({{e[0], e[1], ip}, true});
    }
  }

  std::vector<std::array<int, 3>> out;
  for (const auto& t : tris) {
    if (!t.alive) continue;
    if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
    out.push_back(t.v);
  }
  return out;
}

// Deterministic tiny jitter used to break cocircular lattice degeneracies.
double hash_jitter(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return (static_cast<double>(k % 20011) / 20011.0) - 0.5;  // in (-0.5, 0.5)
}

Mesh unstructured_polygon(const PolygonDomain& dom, double hmax) {
  const double target = kEdgeTarget * hmax;
  // Boundary chain: polygon vertices plus equal subdivisions of each edge.
  std::vector<Point2> pts;
  std::vector<int> chain;  // indices of boundary chain in order
  const int nv = static_cast<int>(dom.vertices.size());
  for (int i = 0; i < nv; ++i) {
    Point2 a = dom.vertices[i], b = dom.vertices[(i + 1) % nv];
    double len = norm(b - a);
    int nseg = std::max(1, static_cast<int>(std::ceil(len / target - 1e-12)));
    for (int s = 0; s < nseg; ++s) {
      double t = static_cast<double>(s) / nseg;
      pts.push_back(a + t * (b - a));
      chain.push_back(static_cast<int>(pts.size()) - 1);
    }
  }
  const int nb = static_cast<int>(pts.size());

  // Interior points: hexagonal lattice with a deterministic sub-permille
  // jitter, kept away from the boundary by a protection radius.
  const double d = 0.90 * target;
  const double dy = d * std::sqrt(3.0) / 2.0;
  const double margin = 0.50 * d;
  double lo1 = dom.vertices[0].x1, hi1 = lo1, lo2 = dom.vertices[0].x2, hi2 = lo2;
  for (const auto& v : dom.vertices) {
    lo1 = std::min(lo1, v.x1);
    hi1 = std::max(hi1, v.x1);
    lo2 = std::min(lo2, v.x2);
    hi2 = std::max(hi2, v.x2);
  }
  int row = 0;
  for (double y = lo2 + 0.5 * dy; y < hi2; y += dy, ++row) {
    double x0 = lo1 + (row % 2 == 0 ? 0.5 * d : d);
    int col = 0;
    for (double x = x0; x < hi1; x += d, ++col) {
      std::uint64_t key = static_cast<std::uint64_t>(row) * 1000003ULL + col;
      Point2 p{x + 2e-3 * d * hash_jitter(key), y + 2e-3 * d * hash_jitter(key ^ 0x9e37ULL)};
      if (!dom.contains(p)) continue;
      if (dom.boundary_distance(p) < margin) continue;
      pts.push_back(p);
    }
  }

  // Triangulate, clip to the polygon, then repair over-long interior edges by
  // midpoint insertion until the edge bound holds.
  const double bound = 1.05 * target;
  std::vector<std::array<int, 3>> tris;
  for (int round = 0; round < 12; ++round) {
    tris = delaunay(pts);
    std::erase_if(tris, [&](const std::array<int, 3>& t) {
      Point2 c = (1.0 / 3.0) * (pts[t[0]] + pts[t[1]] + pts[t[2]]);
      return !dom.contains(c);
    });
    std::vector<Point2> extra;
    std::set<std::pair<int, int>> seen;
    for (const auto& t : tris) {
      for (int k = 0; k < 3; ++k) {
        int a = t[k], b = t[(k + 1) % 3];
        auto key = edge_key(a, b);
        if (!seen.insert(key).second) continue;
        if (norm(pts[a] - pts[b]) > bound) {
          Point2 mid = 0.5 * (pts[a] + pts[b]);
          if (dom.contains(mid) && dom.boundary_distance(mid) > 0.25 * margin)
            extra.push_back(mid);
        }
      }
    }
    if (extra.empty()) break;
    pts.insert(pts.end(), extra.begin(), extra.end());
  }

  Mesh m;
  m.points = pts;
  m.triangles = tris;
  m.on_boundary.assign(pts.size(), 0);
  for (int i = 0; i < nb; ++i) m.on_boundary[i] = 1;
  for (int i = 0; i < nb; ++i) m.boundary_edges.push_back({chain[i], chain[(i + 1) % nb]});

  // Conformity: every boundary chain segment must appear as a triangle edge.
  std::set<std::pair<int, int>> mesh_edges;
  for (const auto& t : m.triangles)
    for (int k = 0; k < 3; ++k) mesh_edges.insert(edge_key(t[k], t[(k + 1) % 3]));
  for (const auto& e : m.boundary_edges)
    if (!mesh_edges.count(edge_key(e[0], e[1])))
      throw Error("triangulate: boundary segment lost during triangulation");
  return m;
}

}  // namespace

Mesh triangulate(const PolygonDomain& domain, double hmax) {
  domain.validate();
  if (!(hmax > 0)) throw Error("triangulate: hmax must be positive");
  Mesh m = domain.is_axis_aligned_rectangle() ? structured_rectangle(domain, hmax)
                                              : unstructured_polygon(domain, hmax);
  m.validate(domain.area());
  const double bound = 1.05 * hmax + 1e-12;
  for (int t = 0; t < m.nt(); ++t)
    if (m.longest_edge(t) > bound) throw Error("triangulate: edge bound violated");
  return m;
}

// --- red-green refinement --------------------------------------------------

RefineResult refine(const Mesh& mesh, const RefinementMarks& marks) {
  if (marks.marked.empty()) throw Error("refine: empty mark set");
  std::vector<char> red(mesh.nt(), 0);
  for (int t : marks.marked) {
    if (t < 0 || t >= mesh.nt()) throw Error("refine: mark out of range");
    red[t] = 1;
  }

  // Split edges of red triangles; propagate: a triangle with 2+ split edges
  // becomes red itself (closure), one split edge makes it green.
  std::set<std::pair<int, int>> split;
  bool changed = true;
  while (changed) {
    changed = false;
    split.clear();
    for (int t = 0; t < mesh.nt(); ++t) {
      if (!red[t]) continue;
      for (int k = 0; k < 3; ++k)
        split.insert(edge_key(mesh.triangles[t][k], mesh.triangles[t][(k + 1) % 3]));
    }
    for (int t = 0; t < mesh.nt(); ++t) {
      if (red[t]) continue;
      int ns = 0;
      for (int k = 0; k < 3; ++k)
        if (split.count(edge_key(mesh.triangles[t][k], mesh.triangles[t][(k + 1) % 3]))) ++ns;
      if (ns >= 2) {
        red[t] = 1;
        changed = true;
      }
    }
  }

  RefineResult res;
  res.mesh.points = mesh.points;  // old points keep indices and coordinates
  std::map<std::pair<int, int>, int> midpoint;
  auto mid_index = [&](int a, int b) {
    auto key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    res.mesh.points.push_back(0.5 * (mesh.points[a] + mesh.points[b]));
    int idx = static_cast<int>(res.mesh.points.size()) - 1;
    midpoint.emplace(key, idx);
    return idx;
  };

  std::set<std::pair<int, int>> bset;
  for (const auto& e : mesh.boundary_edges) bset.insert(edge_key(e[0], e[1]));

  for (int t = 0; t < mesh.nt(); ++t) {
    const auto& tr = mesh.triangles[t];
    if (red[t]) {
      int m01 = mid_index(tr[0], tr[1]);
      int m12 = mid_index(tr[1], tr[2]);
      int m20 = mid_index(tr[2], tr[0]);
      for (auto child : {std::array{tr[0], m01, m20}, std::array{m01, tr[1], m12},
                         std::array{m20, m12, tr[2]}, std::array{m01, m12, m20}}) {
        res.mesh.triangles.push_back(child);
        res.parent.push_back(t);
      }
    } else {
      int which = -1;
      for (int k = 0; k < 3; ++k)
        if (split.count(edge_key(tr[k], tr[(k + 1) % 3]))) which = k;
      if (which < 0) {
        res.mesh.triangles.push_back(tr);
        res.parent.push_back(t);
      } else {
        // Green bisection through the split edge's midpoint.
        int a = tr[which], b = tr[(which + 1) % 3], c = tr[(which + 2) % 3];
        int mab = mid_index(a, b);
        res.mesh.triangles.push_back({a, mab, c});
        res.parent.push_back(t);
        res.mesh.triangles.push_back({mab, b, c});
        res.parent.push_back(t);
      }
    }
  }

  // Boundary edges: original segments, split where a midpoint was inserted.
  for (const auto& e : mesh.boundary_edges) {
    auto it = midpoint.find(edge_key(e[0], e[1]));
    if (it == midpoint.end()) {
      res.mesh.boundary_edges.push_back(e);
    } else {
      res.mesh.boundary_edges.push_back({e[0], it->second});
      res.mesh.boundary_edges.push_back({it->second, e[1]});
    }
  }
  res.mesh.on_boundary.assign(res.mesh.points.size(), 0);
  for (const auto& e : res.mesh.boundary_edges) {
    res.mesh.on_boundary[e[0]] = 1;
    res.mesh.on_boundary[e[1]] = 1;
  }
  res.mesh.validate();
  return res;
}

// --- point location and transfer -------------------------------------------

Locator::Locator(const Mesh& mesh) : mesh_(mesh), nbr_(mesh.neighbors()) {}

std::array<double, 3> Locator::barycentric(int t, Point2 x) const {
  const auto& tr = mesh_.triangles[t];
  double a2 = orient2(mesh_.points[tr[0]], mesh_.points[tr[1]], mesh_.points[tr[2]]);
  std::array<double, 3> l{orient2(mesh_.points[tr[1]], mesh_.points[tr[2]], x) / a2,
                          orient2(mesh_.points[tr[2]], mesh_.points[tr[0]], x) / a2,
                          orient2(mesh_.points[tr[0]], mesh_.points[tr[1]], x) / a2};
  double s = 0.0;
  for (auto& v : l) {
    v = std::max(v, 0.0);
    s += v;
  }
  for (auto& v : l) v /= s;
  return l;
}

int Locator::locate(Point2 x, double snap_tol) {
  // Walk: repeatedly cross the edge with the most negative barycentric value.
  int t = last_;
  for (int step = 0; step < 2 * mesh_.nt() + 8; ++step) {
    const auto& tr = mesh_.triangles[t];
    double a2 = orient2(mesh_.points[tr[0]], mesh_.points[tr[1]], mesh_.points[tr[2]]);
    double l0 = orient2(mesh_.points[tr[1]], mesh_.points[tr[2]], x) / a2;
    double l1 = orient2(mesh_.points[tr[2]], mesh_.points[tr[0]], x) / a2;
    double l2 = orient2(mesh_.points[tr[0]], mesh_.points[tr[1]], x) / a2;
    double lmin = std::min({l0, l1, l2});
    if (lmin >= -1e-12) {
      last_ = t;
      return t;
    }
    int k = (l0 == lmin) ? 0 : (l1 == lmin) ? 1 : 2;
    int next = nbr_[t][k];
    if (next < 0) break;  // hit the boundary; fall through to brute force
    t = next;
  }
  // Brute force with snap tolerance (relative barycentric slack ~ tol / h).
  int best = -1;
  double best_def = std::numeric_limits<double>::max();
  for (int tt = 0; tt < mesh_.nt(); ++tt) {
    const auto& tr = mesh_.triangles[tt];
    double a2 = orient2(mesh_.points[tr[0]], mesh_.points[tr[1]], mesh_.points[tr[2]]);
    double l0 = orient2(mesh_.points[tr[1]], mesh_.points[tr[2]], x) / a2;
    double l1 = orient2(mesh_.points[tr[2]], mesh_.points[tr[0]], x) / a2;
    double l2 = orient2(mesh_.points[tr[0]], mesh_.points[tr[1]], x) / a2;
    double deficit = -std::min({l0, l1, l2, 0.0});
    if (deficit < best_def) {
      best_def = deficit;
      best = tt;
    }
    if (deficit == 0.0) break;
  }
  if (best >= 0) {
    double h = mesh_.longest_edge(best);
    if (best_def * h <= snap_tol + 1e-15) {
      last_ = best;
      return best;
    }
  }
  return -1;
}

double interpolate(const Mesh& mesh, std::span<const double> values, Point2 x) {
  if (static_cast<int>(values.size()) != mesh.np())
    throw Error("interpolate: value vector length mismatch");
  Locator loc(mesh);
  int t = loc.locate(x);
  if (t < 0) throw Error("interpolate: point outside mesh");
  auto l = loc.barycentric(t, x);
  const auto& tr = mesh.triangles[t];
  return l[0] * values[tr[0]] + l[1] * values[tr[1]] + l[2] * values[tr[2]];
}

std::vector<double> transfer(const Mesh& mesh_from, std::span<const double> values,
                             const Mesh& mesh_to) {
  if (static_cast<int>(values.size()) != mesh_from.np())
    throw Error("transfer: value vector length mismatch");
  Locator loc(mesh_from);
  std::vector<double> out(mesh_to.np());
  for (int i = 0; i < mesh_to.np(); ++i) {
    int t = loc.locate(mesh_to.points[i]);
    if (t < 0) throw Error("transfer: target node outside source mesh");
    auto l = loc.barycentric(t, mesh_to.points[i]);
    const auto& tr = mesh_from.triangles[t];
    out[i] = l[0] * values[tr[0]] + l[1] * values[tr[1]] + l[2] * values[tr[2]];
  }
  return out;
}

}  // namespace elcont
